//! Fixed points of the hardcore tree recursions.
//!
//! `q±` are root densities on the (d-1)-ary tree under the two alternating
//! boundary conditions, `p±` the corresponding densities on the d-regular
//! tree, `p*` the symmetric density.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

pub mod precise;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub d: u32,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(d: u32, lambda: f64) -> Result<Self> {
        if d < 3 {
            return Err(Error::domain(format!("degree bound d = {d} < 3")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!("fugacity {lambda} must be positive and finite")));
        }
        Ok(ModelParams { d, lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeFixedPoints {
    pub d: u32,
    pub lambda: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_star: f64,
    pub q_plus: f64,
    pub q_minus: f64,
    pub lambda_c: f64,
    /// Alternating-iteration steps taken (two-step count).
    pub iterations: usize,
    /// Final two-step residual |F(F(q+)) - q+|.
    pub residual: f64,
}

impl TreeFixedPoints {
    pub fn params(&self) -> ModelParams {
        ModelParams { d: self.d, lambda: self.lambda }
    }

    /// q for the given sign (+1 or -1).
    pub fn q(&self, sign: i8) -> f64 {
        if sign >= 0 { self.q_plus } else { self.q_minus }
    }

    pub fn p(&self, sign: i8) -> f64 {
        if sign >= 0 { self.p_plus } else { self.p_minus }
    }
}

/// λ_c(d) = (d-1)^(d-1) / (d-2)^d as an exact rational.
pub fn critical_fugacity_exact(d: u32) -> Result<BigRational> {
    if d < 3 {
        return Err(Error::domain(format!("degree bound d = {d} < 3")));
    }
    let num = num_traits::pow(BigInt::from(d - 1), (d - 1) as usize);
    let den = num_traits::pow(BigInt::from(d - 2), d as usize);
    Ok(BigRational::new(num, den))
}

pub fn critical_fugacity(d: u32) -> Result<f64> {
    let r = critical_fugacity_exact(d)?;
    r.to_f64().ok_or_else(|| Error::domain("λ_c not representable"))
}

/// h(x) = (1-x)[1 - (x/(λ(1-x)))^(1/d)].
pub fn h_map(x: f64, params: ModelParams) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("h_map needs 0 < x < 1, got {x}")));
    }
    let r = x / (params.lambda * (1.0 - x));
    Ok((1.0 - x) * (1.0 - r.powf(1.0 / params.d as f64)))
}

/// One step of the (d-1)-ary tree recursion: q ↦ λ(1-q)^(d-1) / (1 + λ(1-q)^(d-1)).
#[inline]
pub fn tree_step(q: f64, params: ModelParams) -> f64 {
    let t = params.lambda * (1.0 - q).powi(params.d as i32 - 1);
    t / (1.0 + t)
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// After this many plain steps a bracketed bisection takes over (slow
    /// convergence near λ_c).
    pub polish_after: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: 1_000_000, polish_after: 20_000 }
    }
}

pub fn solve_fixed_points(params: ModelParams, tol: f64) -> Result<TreeFixedPoints> {
    solve_fixed_points_with(params, SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_fixed_points_with(params: ModelParams, opts: SolverOptions) -> Result<TreeFixedPoints> {
    let params = ModelParams::new(params.d, params.lambda)?;
    if !(opts.tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let two = |q: f64| tree_step(tree_step(q, params), params);

    // symmetric root of the one-step map, lower bracket for q+
    let q_sym = bisect(|q| tree_step(q, params) - q, 0.0, 1.0);

    let mut q = 1.0_f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut handed_over = false;
    while iterations < opts.max_iter {
        let next = two(q);
        residual = (next - q).abs();
        q = next;
        iterations += 1;
        if residual < opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.polish_after {
            handed_over = true;
            break;
        }
    }
    if !converged && !handed_over {
        return Err(Error::Convergence { iterations, residual });
    }
    // Even iterates decrease to q+ from above and T(x) > x exactly on (q*, q+),
    // so a sign bisection on [q*, q] polishes the iterate (and rescues the
    // algebraically slow regime around λ_c).
    let hi = if converged { (q + 1e3 * residual + 1e-15).min(1.0) } else { q.max(q_sym) };
    if two(hi) - hi <= 0.0 {
        q = bisect(|x| two(x) - x, q_sym, hi);
    }
    residual = (two(q) - q).abs();
    if !(residual < opts.tol) || !q.is_finite() {
        return Err(Error::Convergence { iterations, residual });
    }
    let q_plus = q;
    let q_minus = tree_step(q_plus, params);
    let denom = 1.0 - q_plus * q_minus;
    let p_plus = q_plus * (1.0 - q_minus) / denom;
    let p_minus = q_minus * (1.0 - q_plus) / denom;
    let p_star = bisect(|x| h_map(x, params).unwrap_or(f64::NAN) - x, 0.0, 1.0);
    Ok(TreeFixedPoints {
        d: params.d,
        lambda: params.lambda,
        p_plus,
        p_minus,
        p_star,
        q_plus,
        q_minus,
        lambda_c: critical_fugacity(params.d)?,
        iterations,
        residual,
    })
}

/// Root of a decreasing function on (lo, hi) by bisection to machine precision.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 { lo = mid } else { hi = mid }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraConditions {
    /// (d-1) q+ q-
    pub product: f64,
    pub product_ok: bool,
    /// 1 - (d-1) q+ q-
    pub product_margin: f64,
    pub q_plus_ok: bool,
    /// 3/5 - q+
    pub q_plus_margin: f64,
}

pub fn check_extra_conditions(fp: &TreeFixedPoints, d: u32) -> ExtraConditions {
    let product = (d as f64 - 1.0) * fp.q_plus * fp.q_minus;
    ExtraConditions {
        product,
        product_ok: product < 1.0,
        product_margin: 1.0 - product,
        q_plus_ok: fp.q_plus < 0.6,
        q_plus_margin: 0.6 - fp.q_plus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// h(p+) - p-
    pub h_plus: f64,
    /// h(p-) - p+
    pub h_minus: f64,
    /// q±/(1-q±) - λ(1-q∓)^(d-1), the larger in magnitude
    pub tree_relation: f64,
    /// q± - p±/(1-p∓), the larger in magnitude
    pub pq_relation: f64,
}

pub fn residuals(fp: &TreeFixedPoints) -> Result<Residuals> {
    let params = fp.params();
    let h_plus = h_map(fp.p_plus, params)? - fp.p_minus;
    let h_minus = h_map(fp.p_minus, params)? - fp.p_plus;
    let rel = |a: f64, b: f64| a / (1.0 - a) - fp.lambda * (1.0 - b).powi(fp.d as i32 - 1);
    let t1 = rel(fp.q_plus, fp.q_minus);
    let t2 = rel(fp.q_minus, fp.q_plus);
    let s1 = fp.q_plus - fp.p_plus / (1.0 - fp.p_minus);
    let s2 = fp.q_minus - fp.p_minus / (1.0 - fp.p_plus);
    let bigger = |a: f64, b: f64| if a.abs() >= b.abs() { a } else { b };
    Ok(Residuals { h_plus, h_minus, tree_relation: bigger(t1, t2), pq_relation: bigger(s1, s2) })
}
