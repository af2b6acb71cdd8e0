//! First- and second-moment exponents and the scalar functions around them.
//!
//! Everything is written through `L(x) = x ln x` (with `L(0) = 0`):
//! `H1(x, y) = L(y) - L(x) - L(y - x)` and `H(x) = H1(x, 1)`.
//! The second-moment exponent then collapses to
//!
//! ```text
//! f = 2(α+β) ln λ + f1(α,γ) + f2(β,δ) + d·B
//! f1 = -L(γ) - 2L(α-γ) - L(1-2α+γ)
//! B  = L(1-2β+δ) + L(β-δ) + L(α-γ) + L(1-2α+γ) - L(ε) - L(A) - L(α-γ-ε) - L(B')
//!      + L(1-β-γ-ε) - L(1-α-β-ε)
//! A  = 1-2β+δ-γ-ε,   B' = β-δ-α+γ+ε
//! ```
//!
//! Derivatives below are taken from this form.

use crate::error::{Error, Result};
use crate::treegibbs::ModelParams;

/// Arguments within this distance below zero are treated as boundary zeros.
const SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyPair {
    pub alpha: f64,
    pub beta: f64,
}

impl OccupancyPair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta <= 1.0) {
            return Err(Error::domain(format!("({alpha}, {beta}) is outside T")));
        }
        Ok(OccupancyPair { alpha, beta })
    }

    pub fn swapped(self) -> Self {
        OccupancyPair { alpha: self.beta, beta: self.alpha }
    }

    /// The product-overlap point (α², β², α(1-α-β)).
    pub fn star(self) -> OverlapPoint {
        let OccupancyPair { alpha: a, beta: b } = self;
        OverlapPoint { gamma: a * a, delta: b * b, epsilon: a * (1.0 - a - b) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapPoint {
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl OverlapPoint {
    pub fn new(gamma: f64, delta: f64, epsilon: f64) -> Self {
        OverlapPoint { gamma, delta, epsilon }
    }
}

fn arg(x: f64, what: &str) -> Result<f64> {
    if x.is_nan() || x < -SLACK {
        Err(Error::domain(format!("{what} = {x} is negative")))
    } else {
        Ok(x.max(0.0))
    }
}

/// x ln x with the 0 ln 0 = 0 convention.
#[inline]
fn xlogx(x: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * x.ln() }
}

fn l(x: f64, what: &str) -> Result<f64> {
    Ok(xlogx(arg(x, what)?))
}

/// H1(x, y) = -x(ln x - ln y) + (x - y)(ln(y - x) - ln y).
pub fn entropy_h1(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0) || x > y {
        return Err(Error::domain(format!("H1 needs 0 <= x <= y, got ({x}, {y})")));
    }
    Ok(xlogx(y) - xlogx(x) - xlogx(y - x))
}

/// Binary entropy H(x) = H1(x, 1).
pub fn binary_entropy(x: f64) -> Result<f64> {
    entropy_h1(x, 1.0)
}

/// Φ1(α,β) = (α+β) ln λ - L(α) - L(β) - d L(1-α-β) + (d-1)(L(1-α) + L(1-β)).
pub fn phi1(pt: OccupancyPair, params: ModelParams) -> Result<f64> {
    let OccupancyPair { alpha: a, beta: b } = OccupancyPair::new(pt.alpha, pt.beta)?;
    let d = params.d as f64;
    Ok((a + b) * params.lambda.ln() - xlogx(a) - xlogx(b) - d * xlogx(1.0 - a - b)
        + (d - 1.0) * (xlogx(1.0 - a) + xlogx(1.0 - b)))
}

/// f1(α, γ) = H(α) + H1(γ, α) + H1(α-γ, 1-α).
pub fn f1(alpha: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma <= alpha) {
        return Err(Error::domain(format!("need 0 <= γ <= α, got γ = {gamma}, α = {alpha}")));
    }
    Ok(-l(gamma, "γ")? - 2.0 * l(alpha - gamma, "α-γ")? - l(1.0 - 2.0 * alpha + gamma, "1-2α+γ")?)
}

/// f2(β, δ) = H(β) + H1(δ, β) + H1(β-δ, 1-β).
pub fn f2(beta: f64, delta: f64) -> Result<f64> {
    f1(beta, delta).map_err(|_| {
        Error::domain(format!("need 0 <= δ <= β, got δ = {delta}, β = {beta}"))
    })
}

/// The d-bracket of f.
fn bracket(pt: OccupancyPair, ov: OverlapPoint) -> Result<f64> {
    let OccupancyPair { alpha: a, beta: b } = pt;
    let OverlapPoint { gamma: g, delta: dl, epsilon: e } = ov;
    Ok(l(1.0 - 2.0 * b + dl, "1-2β+δ")? + l(b - dl, "β-δ")? + l(a - g, "α-γ")?
        + l(1.0 - 2.0 * a + g, "1-2α+γ")?
        - l(e, "ε")?
        - l(1.0 - 2.0 * b + dl - g - e, "1-2β+δ-γ-ε")?
        - l(a - g - e, "α-γ-ε")?
        - l(b - dl - a + g + e, "β-δ-α+γ+ε")?
        + l(1.0 - b - g - e, "1-β-γ-ε")?
        - l(1.0 - a - b - e, "1-α-β-ε")?)
}

/// Second-moment exponent f(α,β,γ,δ,ε).
pub fn second_moment_f(pt: OccupancyPair, ov: OverlapPoint, params: ModelParams) -> Result<f64> {
    let pt = OccupancyPair::new(pt.alpha, pt.beta)?;
    let lam = 2.0 * (pt.alpha + pt.beta) * params.lambda.ln();
    Ok(lam + f1(pt.alpha, ov.gamma)? + f2(pt.beta, ov.delta)? + params.d as f64 * bracket(pt, ov)?)
}

fn radicand(pt: OccupancyPair, gamma: f64, delta: f64) -> f64 {
    let s = 1.0 - pt.alpha - pt.beta;
    s * s + 4.0 * (pt.alpha - gamma) * (pt.beta - delta)
}

/// ε̂ = ½[1 + α - β - 2γ - sqrt((1-α-β)² + 4(α-γ)(β-δ))].
pub fn epsilon_hat(pt: OccupancyPair, gamma: f64, delta: f64) -> Result<f64> {
    let r = radicand(pt, gamma, delta);
    if !(r >= 0.0) {
        return Err(Error::domain(format!("negative radicand {r} in ε̂")));
    }
    Ok(0.5 * (1.0 + pt.alpha - pt.beta - 2.0 * gamma - r.sqrt()))
}

/// ĝ(γ, δ) = f(α, β, γ, δ, ε̂).
pub fn ghat(pt: OccupancyPair, gamma: f64, delta: f64, params: ModelParams) -> Result<f64> {
    let e = epsilon_hat(pt, gamma, delta)?;
    second_moment_f(pt, OverlapPoint::new(gamma, delta, e), params)
}

/// (f1(α,γ), f2(β,δ)); f* = f1 + f2.
pub fn fstar_split(pt: OccupancyPair, gamma: f64, delta: f64) -> Result<(f64, f64)> {
    Ok((f1(pt.alpha, gamma)?, f2(pt.beta, delta)?))
}

/// τ^{α,β}.
pub fn tau(pt: OccupancyPair, d: u32) -> Result<f64> {
    let OccupancyPair { alpha: a, beta: b } = pt;
    let d = d as f64;
    let s = 1.0 - a - b;
    let ab = a * b;
    let factors = [s - ab, s + 2.0 * ab, s, s + d * ab, s - (d - 2.0) * ab];
    if let Some(bad) = factors.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::domain(format!("nonpositive factor {bad} in τ")));
    }
    let num = factors[0].powf(d);
    let den = (factors[1] * factors[2]).powf((d - 1.0) / 2.0) * (factors[3] * factors[4]).sqrt();
    Ok(num / den)
}

/// ∂f/∂ε; zero at ε = ε̂.
pub fn df_depsilon(pt: OccupancyPair, ov: OverlapPoint, d: u32) -> Result<f64> {
    let t = Terms::new(pt, ov)?;
    Ok(d as f64
        * (-t.e.ln() + t.a_.ln() + t.amg_e.ln() - t.b_.ln() - t.c.ln() + t.one_mab_e.ln()))
}

/// Second partials of f and first partials of ε̂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondPartials {
    pub gg: f64,
    pub ge: f64,
    pub dd: f64,
    pub de: f64,
    pub gd: f64,
    pub ee: f64,
    /// ∂ε̂/∂γ = -1 + (β-δ)/S
    pub eps_hat_g: f64,
    /// ∂ε̂/∂δ = (α-γ)/S
    pub eps_hat_d: f64,
}

struct Terms {
    g: f64,
    dl: f64,
    e: f64,
    amg: f64,
    bmd: f64,
    one_2a_g: f64,
    one_2b_d: f64,
    a_: f64,
    amg_e: f64,
    b_: f64,
    c: f64,
    one_mab_e: f64,
    s: f64,
}

impl Terms {
    fn new(pt: OccupancyPair, ov: OverlapPoint) -> Result<Self> {
        let OccupancyPair { alpha: a, beta: b } = pt;
        let OverlapPoint { gamma: g, delta: dl, epsilon: e } = ov;
        let t = Terms {
            g,
            dl,
            e,
            amg: a - g,
            bmd: b - dl,
            one_2a_g: 1.0 - 2.0 * a + g,
            one_2b_d: 1.0 - 2.0 * b + dl,
            a_: 1.0 - 2.0 * b + dl - g - e,
            amg_e: a - g - e,
            b_: b - dl - a + g + e,
            c: 1.0 - b - g - e,
            one_mab_e: 1.0 - a - b - e,
            s: radicand(pt, g, dl).sqrt(),
        };
        let all = [
            t.g, t.dl, t.e, t.amg, t.bmd, t.one_2a_g, t.one_2b_d, t.a_, t.amg_e, t.b_, t.c,
            t.one_mab_e,
        ];
        if all.iter().any(|&x| !(x > 0.0)) || !(t.s > 0.0) {
            return Err(Error::domain("partials need a strictly interior point"));
        }
        Ok(t)
    }
}

pub fn partials_f(pt: OccupancyPair, ov: OverlapPoint, d: u32) -> Result<SecondPartials> {
    let t = Terms::new(pt, ov)?;
    let d = d as f64;
    let gg = -1.0 / t.g + (d - 2.0) / t.amg + (d - 1.0) / t.one_2a_g - d / t.a_ - d / t.amg_e
        - d / t.b_
        + d / t.c;
    let ge = d * (-1.0 / t.a_ - 1.0 / t.amg_e - 1.0 / t.b_ + 1.0 / t.c);
    let dd = -1.0 / t.dl + (d - 2.0) / t.bmd + (d - 1.0) / t.one_2b_d - d / t.a_ - d / t.b_;
    let de = d / t.a_ + d / t.b_;
    let ee = d
        * (-1.0 / t.e - 1.0 / t.a_ - 1.0 / t.amg_e - 1.0 / t.b_ + 1.0 / t.c - 1.0 / t.one_mab_e);
    Ok(SecondPartials {
        gg,
        ge,
        dd,
        de,
        gd: de,
        ee,
        eps_hat_g: -1.0 + t.bmd / t.s,
        eps_hat_d: t.amg / t.s,
    })
}

fn partials_at_hat(pt: OccupancyPair, gamma: f64, delta: f64, d: u32) -> Result<SecondPartials> {
    let e = epsilon_hat(pt, gamma, delta)?;
    partials_f(pt, OverlapPoint::new(gamma, delta, e), d)
}

/// det D²ĝ = (f_γγ + ε̂_γ f_γε)(f_δδ + ε̂_δ f_δε) - (f_γδ + ε̂_γ f_δε)².
pub fn hessian_det_ghat(pt: OccupancyPair, gamma: f64, delta: f64, d: u32) -> Result<f64> {
    let p = partials_at_hat(pt, gamma, delta, d)?;
    Ok(hessian_det_from(&p))
}

pub fn hessian_det_from(p: &SecondPartials) -> f64 {
    let (a, b, c) = hessian_entries(p);
    a * b - c * c
}

/// (ĝ_γγ, ĝ_δδ, ĝ_γδ) from the composition formula.
pub fn hessian_entries(p: &SecondPartials) -> (f64, f64, f64) {
    (p.gg + p.eps_hat_g * p.ge, p.dd + p.eps_hat_d * p.de, p.gd + p.eps_hat_g * p.de)
}

/// h1 = f_δδ + ε̂_δ f_δε at ε = ε̂.
pub fn h1_bound(pt: OccupancyPair, gamma: f64, delta: f64, d: u32) -> Result<f64> {
    let p = partials_at_hat(pt, gamma, delta, d)?;
    Ok(p.dd + p.eps_hat_d * p.de)
}

/// Clamp used for the two singular terms of Ψ.
pub const PSI_CLAMP: f64 = 1.0 / 10000.0;

/// Coefficient left on 1/(α-γ) after absorbing the α-γ-ε̂ singularity:
/// (d-2) - 5d/6.
pub fn psi_singular_coefficient(d: u32) -> f64 {
    (d as f64 - 12.0) / 6.0
}

fn psi_checks(pt: OccupancyPair, gamma: f64, delta: f64, d: u32) -> Result<()> {
    if d >= 12 {
        return Err(Error::domain("the Ψ bound needs d < 12"));
    }
    if !(gamma >= 0.0 && gamma <= pt.alpha && delta > 0.0 && delta < pt.beta) {
        return Err(Error::domain("Ψ needs 0 <= γ <= α and 0 < δ < β"));
    }
    Ok(())
}

/// Ψ: the upper bound on ĝ_γγ with the singular terms replaced by clamped ones.
pub fn psi_upper(pt: OccupancyPair, gamma: f64, delta: f64, d: u32) -> Result<f64> {
    psi_checks(pt, gamma, delta, d)?;
    let OccupancyPair { alpha: a, beta: b } = pt;
    let s = radicand(pt, gamma, delta).sqrt();
    let e = epsilon_hat(pt, gamma, delta)?;
    let df = d as f64;
    let big_a = 1.0 - 2.0 * b + delta - gamma - e;
    let big_b = b - delta - (a - gamma - e);
    let c = 1.0 - b - gamma - e;
    let eg = -1.0 + (b - delta) / s;
    Ok(-df / big_a + (df - 1.0) / (1.0 - 2.0 * a + gamma) - df / big_b + df / c
        + psi_singular_coefficient(d) / PSI_CLAMP.max(a - gamma)
        - 1.0 / PSI_CLAMP.max(gamma)
        + eg * (-df / big_a - df / big_b + df / c))
}

/// Φ = Ψ·h1 - (f_γδ + ε̂_γ f_δε)², the lower-bound surrogate for det D²ĝ.
pub fn phi_cert(pt: OccupancyPair, gamma: f64, delta: f64, d: u32) -> Result<f64> {
    let psi = psi_upper(pt, gamma, delta, d)?;
    let OccupancyPair { alpha: a, beta: b } = pt;
    let s = radicand(pt, gamma, delta).sqrt();
    let e = epsilon_hat(pt, gamma, delta)?;
    let df = d as f64;
    let big_a = 1.0 - 2.0 * b + delta - gamma - e;
    let big_b = b - delta - (a - gamma - e);
    let de = df / big_a + df / big_b;
    let dd = -1.0 / delta + (df - 2.0) / (b - delta) + (df - 1.0) / (1.0 - 2.0 * b + delta)
        - df / big_a
        - df / big_b;
    let h1 = dd + (a - gamma) / s * de;
    let cross = de + (-1.0 + (b - delta) / s) * de;
    Ok(psi * h1 - cross * cross)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p6() -> ModelParams {
        ModelParams::new(6, 1.0).unwrap()
    }

    #[test]
    fn entropy_basics() {
        assert!((binary_entropy(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy_h1(0.0, 0.3).unwrap(), 0.0);
        assert!(entropy_h1(-0.1, 0.3).is_err());
        assert!(entropy_h1(0.4, 0.3).is_err());
    }

    #[test]
    fn star_identity_point() {
        let pt = OccupancyPair::new(0.1, 0.2).unwrap();
        let f = second_moment_f(pt, pt.star(), p6()).unwrap();
        assert!((f - 2.0 * phi1(pt, p6()).unwrap()).abs() < 1e-12);
        assert!((epsilon_hat(pt, 0.01, 0.04).unwrap() - 0.07).abs() < 1e-15);
    }

    #[test]
    fn origin() {
        let pt = OccupancyPair::new(0.0, 0.0).unwrap();
        let f = second_moment_f(pt, OverlapPoint::new(0.0, 0.0, 0.0), p6()).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(tau(pt, 6).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_det() {
        let p = SecondPartials {
            gg: -3.0,
            ge: 0.0,
            dd: -5.0,
            de: 0.0,
            gd: 0.0,
            ee: -1.0,
            eps_hat_g: 0.3,
            eps_hat_d: 0.2,
        };
        assert_eq!(hessian_det_from(&p), 15.0);
    }
}
