//! Closed forms for the first and second moments of Z^{α,β}(η) over the
//! random gadget, their d-regular (MWW) counterparts, and the binomial
//! perturbation estimate. All exact, in big rationals.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gadgets::GadgetSpec;

pub fn binom(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * BigUint::from((n - i) as u64) / BigUint::from((i + 1) as u64);
    }
    r
}

fn falling(n: i64, k: i64) -> BigUint {
    if k < 0 || n < k {
        return BigUint::zero();
    }
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from((n - i) as u64))
}

fn rat(x: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn qbinom(n1: i64, k1: i64, n2: i64, k2: i64) -> BigRational {
    let den = binom(n2, k2);
    if den.is_zero() {
        return BigRational::zero();
    }
    BigRational::new(binom(n1, k1).into(), den.into())
}

/// αn as an integer; domain error if it is not one or lies outside [0, n].
pub fn scaled_count(n: usize, x: &BigRational, what: &str) -> Result<usize> {
    let v = x * BigRational::from_integer(BigInt::from(n));
    if !v.is_integer() {
        return Err(Error::domain(format!("{what}·n = {v} is not an integer")));
    }
    let k = v.to_integer();
    if k < BigInt::zero() || k > BigInt::from(n) {
        return Err(Error::domain(format!("{what}·n = {k} outside [0, {n}]")));
    }
    Ok(k.to_usize().expect("small"))
}

fn lambda_pow(lambda: &BigRational, k: usize) -> BigRational {
    num_traits::pow(lambda.clone(), k)
}

/// Probability that a uniform perfect matching between two sides of size
/// `nn` maps an `a`-set away from a `b`-set: C(nn-b, a)/C(nn, a).
pub fn avoid_probability(nn: usize, a: usize, b: usize) -> BigRational {
    qbinom(nn as i64 - b as i64, a as i64, nn as i64, a as i64)
}

/// Probability that one uniform perfect matching keeps two configurations
/// independent at once. Plus side: two a-sets overlapping in g; minus side:
/// two b-sets overlapping in dl.
pub fn pair_avoid_probability(nn: usize, a: usize, g: usize, b: usize, dl: usize) -> BigRational {
    if g > a || dl > b || 2 * a - g > nn || 2 * b - dl > nn {
        return BigRational::zero();
    }
    let (nn, a, g, b, dl) = (nn as i64, a as i64, g as i64, b as i64, dl as i64);
    let neither = nn - 2 * b + dl;
    let only = b - dl;
    // plus vertices in both sets go to `neither`
    let both = falling(neither, g);
    if both.is_zero() {
        return BigRational::zero();
    }
    let mut count = BigUint::zero();
    for eps in 0..=(a - g) {
        // eps of the first-only vertices land in `neither`, the rest in the
        // second-only minus vertices; second-only plus vertices then go to
        // first-only minus vertices or what is left of `neither`
        let t = binom(a - g, eps)
            * falling(neither - g, eps)
            * falling(only, a - g - eps)
            * falling(only + neither - g - eps, a - g);
        count += t;
    }
    let rest = falling(nn - 2 * a + g, nn - 2 * a + g);
    let total = falling(nn, nn);
    BigRational::new((both * count * rest).into(), total.into())
}

fn check_lambda(lambda: &BigRational) -> Result<()> {
    if lambda < &BigRational::zero() {
        return Err(Error::domain("fugacity must be nonnegative"));
    }
    Ok(())
}

/// E Z^{α,β}(η) for the gadget G̃ with side size n and |U±| = m'.
pub fn expected_z(
    spec: &GadgetSpec,
    alpha: &BigRational,
    beta: &BigRational,
    eta: (usize, usize),
    lambda: &BigRational,
) -> Result<BigRational> {
    check_lambda(lambda)?;
    let (n, mp, d) = (spec.n, spec.m_prime, spec.d as usize);
    let a = scaled_count(n, alpha, "alpha")?;
    let b = scaled_count(n, beta, "beta")?;
    let (ep, em) = eta;
    if ep > mp || em > mp {
        return Err(Error::domain(format!("eta counts ({ep}, {em}) exceed m' = {mp}")));
    }
    let lead = lambda_pow(lambda, a + b + ep + em) * rat(binom(n as i64, a as i64) * binom(n as i64, b as i64));
    let side = num_traits::pow(avoid_probability(n + mp, a + ep, b + em), d - 1);
    Ok(lead * side * avoid_probability(n, a, b))
}

/// E Z^{α,β} for d independent perfect matchings on two sides of size n.
pub fn expected_z_mww(n: usize, d: u32, alpha: &BigRational, beta: &BigRational, lambda: &BigRational) -> Result<BigRational> {
    check_lambda(lambda)?;
    let a = scaled_count(n, alpha, "alpha")?;
    let b = scaled_count(n, beta, "beta")?;
    let lead = lambda_pow(lambda, a + b) * rat(binom(n as i64, a as i64) * binom(n as i64, b as i64));
    Ok(lead * num_traits::pow(avoid_probability(n, a, b), d as usize))
}

fn pair_count(n: usize, a: usize, g: usize) -> BigUint {
    binom(n as i64, a as i64) * binom(a as i64, g as i64) * binom(n as i64 - a as i64, a as i64 - g as i64)
}

/// E (Z^{α,β}(η))², summed exactly over the overlaps (γn, δn).
pub fn expected_z2(
    spec: &GadgetSpec,
    alpha: &BigRational,
    beta: &BigRational,
    eta: (usize, usize),
    lambda: &BigRational,
) -> Result<BigRational> {
    check_lambda(lambda)?;
    let (n, mp, d) = (spec.n, spec.m_prime, spec.d as usize);
    let a = scaled_count(n, alpha, "alpha")?;
    let b = scaled_count(n, beta, "beta")?;
    let (ep, em) = eta;
    if ep > mp || em > mp {
        return Err(Error::domain(format!("eta counts ({ep}, {em}) exceed m' = {mp}")));
    }
    let mut sum = BigRational::zero();
    for g in 0..=a {
        for dl in 0..=b {
            let pairs = pair_count(n, a, g) * pair_count(n, b, dl);
            if pairs.is_zero() {
                continue;
            }
            let side = pair_avoid_probability(n + mp, a + ep, g + ep, b + em, dl + em);
            if side.is_zero() {
                continue;
            }
            sum += rat(pairs) * num_traits::pow(side, d - 1) * pair_avoid_probability(n, a, g, b, dl);
        }
    }
    Ok(lambda_pow(lambda, 2 * (a + b + ep + em)) * sum)
}

/// E (Z^{α,β})² for d independent perfect matchings.
pub fn expected_z2_mww(n: usize, d: u32, alpha: &BigRational, beta: &BigRational, lambda: &BigRational) -> Result<BigRational> {
    check_lambda(lambda)?;
    let a = scaled_count(n, alpha, "alpha")?;
    let b = scaled_count(n, beta, "beta")?;
    let mut sum = BigRational::zero();
    for g in 0..=a {
        for dl in 0..=b {
            let pairs = pair_count(n, a, g) * pair_count(n, b, dl);
            if !pairs.is_zero() {
                sum += rat(pairs) * num_traits::pow(pair_avoid_probability(n, a, g, b, dl), d as usize);
            }
        }
    }
    Ok(lambda_pow(lambda, 2 * (a + b)) * sum)
}

/// C* = ((1-α)(1-β)/(1-α-β))^{m'}.
pub fn c_star(alpha: f64, beta: f64, m_prime: usize) -> f64 {
    ((1.0 - alpha) * (1.0 - beta) / (1.0 - alpha - beta)).powi(m_prime as i32)
}

/// Limit of E Z^{α,β}(η) / E Z^{α,β}_MWW:
/// C*^{d-1} (λ((1-α-β)/(1-β))^{d-1})^{η-} (λ((1-α-β)/(1-α))^{d-1})^{η+}.
/// Each of the d-1 matchings over the enlarged sides contributes one C*.
pub fn first_moment_ratio_prediction(alpha: f64, beta: f64, eta: (usize, usize), d: u32, lambda: f64, m_prime: usize) -> f64 {
    let s = 1.0 - alpha - beta;
    let e = d as i32 - 1;
    c_star(alpha, beta, m_prime).powi(e)
        * (lambda * (s / (1.0 - beta)).powi(e)).powi(eta.1 as i32)
        * (lambda * (s / (1.0 - alpha)).powi(e)).powi(eta.0 as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinomialPerturbation {
    /// C(a+x, b+y)/C(a, b).
    pub exact: BigRational,
    /// (a/(a-b))^x ((a-b)/b)^y.
    pub approx: f64,
    /// exact/approx - 1.
    pub rel_error: f64,
    /// (x²+y²)/min(b, a-b), the scale of the error term.
    pub scale: f64,
}

pub fn binomial_perturb_check(a: u64, b: u64, x: i64, y: i64) -> Result<BinomialPerturbation> {
    if !(0 < b && b < a) {
        return Err(Error::domain(format!("need 0 < b < a, got a={a}, b={b}")));
    }
    let m = b.min(a - b) as f64;
    let s = (x * x + y * y) as f64;
    if s > m {
        return Err(Error::domain(format!("x²+y² = {s} exceeds min(b, a-b) = {m}")));
    }
    let (ai, bi) = (a as i64, b as i64);
    let exact = qbinom(ai + x, bi + y, ai, bi);
    let (af, bf) = (a as f64, b as f64);
    let approx = (af / (af - bf)).powi(x as i32) * ((af - bf) / bf).powi(y as i32);
    let ef = exact.to_f64().unwrap_or(f64::NAN);
    Ok(BinomialPerturbation { exact, approx, rel_error: ef / approx - 1.0, scale: s / m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn falling_and_binom() {
        assert_eq!(binom(5, 2), BigUint::from(10u32));
        assert_eq!(binom(5, 6), BigUint::zero());
        assert_eq!(falling(5, 5), BigUint::from(120u32));
        assert_eq!(falling(3, 4), BigUint::zero());
    }

    #[test]
    fn pair_reduces_to_single_when_identical() {
        // two identical configurations: overlap = full size
        for (nn, a, b) in [(6, 2, 1), (7, 3, 2), (5, 0, 3)] {
            assert_eq!(pair_avoid_probability(nn, a, a, b, b), avoid_probability(nn, a, b));
        }
    }
}
