//! The certified expressions, written once over [`IvNum`].
//!
//! Independent of the double-precision code in `moments`. The subtractions
//! that involve ε̂ are rewritten so that γ cancels symbolically:
//!
//! ```text
//! A  = 1-2β+δ-γ-ε̂  = ½(1-α-3β+2δ+S)
//! B' = β-δ-α+γ+ε̂   = ½(1-α+β-2δ-S)
//! C  = 1-β-γ-ε̂     = ½(1-α-β+S)
//! α-γ-ε̂            = ½(S-(1-α-β))
//! 1-α-β-ε̂          = ½(1-3α-β+2γ+S)
//! ```

use super::dual::IvNum;
use super::interval::Interval;
use crate::error::Result;

/// Clamp for the singular terms of Ψ. Any positive value keeps Ψ an upper bound.
pub const CLAMP: f64 = 1e-4;

/// (d-2) - 5d/6 = (d-12)/6, enclosed.
fn singular_coefficient(d: u32) -> Interval {
    Interval::ratio(d as f64 - 12.0, 6.0)
}

pub(crate) struct Core<T> {
    pub s: T,
    pub ab1: T,
    pub amg: T,
    pub bmd: T,
    pub a_: T,
    pub b_: T,
    pub c_: T,
}

pub(crate) fn core<T: IvNum>(a: T, b: T, g: T, dl: T) -> Result<Core<T>> {
    let one = T::num(1.0);
    let half = T::num(0.5);
    let ab1 = one - a - b;
    let amg = a - g;
    let bmd = b - dl;
    let s = (ab1 * ab1 + T::num(4.0) * amg * bmd).sqrt()?;
    let a_ = half * (one - a - T::num(3.0) * b + T::num(2.0) * dl + s);
    let b_ = half * (one - a + b - T::num(2.0) * dl - s);
    let c_ = half * (ab1 + s);
    Ok(Core { s, ab1, amg, bmd, a_, b_, c_ })
}

/// f_δε = f_γδ = d/A + d/B'.
fn de<T: IvNum>(c: &Core<T>, d: u32) -> Result<T> {
    let df = T::num(d as f64);
    Ok(df * (c.a_.recip()? + c.b_.recip()?))
}

fn h1_core<T: IvNum>(c: &Core<T>, b: T, dl: T, d: u32, de: T) -> Result<T> {
    let one = T::num(1.0);
    let df = d as f64;
    Ok(-dl.recip()? + T::num(df - 2.0) * c.bmd.recip()?
        + T::num(df - 1.0) * (one - T::num(2.0) * b + dl).recip()?
        + de * (c.amg.div(c.s)? - one))
}

fn psi_core<T: IvNum>(c: &Core<T>, a: T, g: T, d: u32) -> Result<T> {
    let one = T::num(1.0);
    let df = T::num(d as f64);
    let tail = df * (c.c_.recip()? - c.a_.recip()? - c.b_.recip()?);
    Ok(T::num(d as f64 - 1.0) * (one - T::num(2.0) * a + g).recip()?
        + T::cst(singular_coefficient(d)) * c.amg.max_const(CLAMP).recip()?
        - g.max_const(CLAMP).recip()?
        + c.bmd.div(c.s)? * tail)
}

/// (h1, Φ) with shared subexpressions.
pub fn h1_phi<T: IvNum>(a: T, b: T, g: T, dl: T, d: u32) -> Result<(T, T)> {
    let c = core(a, b, g, dl)?;
    let de = de(&c, d)?;
    let h1 = h1_core(&c, b, dl, d, de)?;
    let psi = psi_core(&c, a, g, d)?;
    let cross = c.bmd.div(c.s)? * de;
    Ok((h1, psi * h1 - cross * cross))
}

pub fn h1<T: IvNum>(a: T, b: T, g: T, dl: T, d: u32) -> Result<T> {
    let c = core(a, b, g, dl)?;
    let de = de(&c, d)?;
    h1_core(&c, b, dl, d, de)
}

pub fn psi<T: IvNum>(a: T, b: T, g: T, dl: T, d: u32) -> Result<T> {
    let c = core(a, b, g, dl)?;
    psi_core(&c, a, g, d)
}

pub fn phi<T: IvNum>(a: T, b: T, g: T, dl: T, d: u32) -> Result<T> {
    Ok(h1_phi(a, b, g, dl, d)?.1)
}

fn l(x: Interval) -> Result<Interval> {
    x.xlogx()
}

/// f1(α, γ) = -L(γ) - 2L(α-γ) - L(1-2α+γ).
pub fn f1(a: Interval, g: Interval) -> Result<Interval> {
    let one = Interval::point(1.0);
    let two = Interval::point(2.0);
    Ok(-l(g)? - two * l(a - g)? - l(one - two * a + g)?)
}

/// ĝ(γ, δ) = f(α, β, γ, δ, ε̂) at λ = 1.
pub fn ghat_lambda1(a: Interval, b: Interval, g: Interval, dl: Interval, d: u32) -> Result<Interval> {
    let c = core(a, b, g, dl)?;
    let one = Interval::point(1.0);
    let two = Interval::point(2.0);
    let half = Interval::point(0.5);
    let eps = half * (one + a - b - two * g - c.s);
    let amg_e = half * (c.s - c.ab1);
    let one_ab_e = half * (one - Interval::point(3.0) * a - b + two * g + c.s);
    let bracket = l(one - two * b + dl)? + l(c.bmd)? + l(c.amg)? + l(one - two * a + g)?
        - l(eps)?
        - l(c.a_)?
        - l(amg_e)?
        - l(c.b_)?
        + l(c.c_)?
        - l(one_ab_e)?;
    Ok(f1(a, g)? + f1(b, dl)? + Interval::point(d as f64) * bracket)
}

/// Entries (ĝ_γγ, ĝ_δδ, ĝ_γδ) of the reduced Hessian, unclamped.
pub fn hessian_ghat(a: Interval, b: Interval, g: Interval, dl: Interval, d: u32) -> Result<[Interval; 3]> {
    let c = core(a, b, g, dl)?;
    let one = Interval::point(1.0);
    let two = Interval::point(2.0);
    let df = Interval::point(d as f64);
    let amg_e = Interval::point(0.5) * (c.s - c.ab1);
    let ra = c.a_.recip()?;
    let rb = c.b_.recip()?;
    let rc = c.c_.recip()?;
    let re = amg_e.recip()?;
    let fgg = -g.recip()? + Interval::point(d as f64 - 2.0) * c.amg.recip()?
        + Interval::point(d as f64 - 1.0) * (one - two * a + g).recip()?
        + df * (rc - ra - re - rb);
    let fge = df * (rc - ra - re - rb);
    let eg = c.bmd.div(c.s)? - one;
    let de = df * (ra + rb);
    let gg = fgg + eg * fge;
    let dd = h1_core(&c, b, dl, d, de)?;
    let gd = de + eg * de;
    Ok([gg, dd, gd])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::dual::Dual2;
    use crate::moments::{self, OccupancyPair};

    #[test]
    fn point_enclosure() {
        let (a, b, g, dl) = (0.035, 0.408, 0.01, 0.2);
        let pt = OccupancyPair::new(a, b).unwrap();
        let p = |x: f64| Interval::around(x);
        let h = h1(p(a), p(b), p(g), p(dl), 6).unwrap();
        let hv = moments::h1_bound(pt, g, dl, 6).unwrap();
        assert!(h.contains(hv), "{h:?} vs {hv}");
        let f = phi(p(a), p(b), p(g), p(dl), 6).unwrap();
        let fv = moments::phi_cert(pt, g, dl, 6).unwrap();
        assert!(f.contains(fv), "{f:?} vs {fv}");
    }

    #[test]
    fn dual_value_matches_natural() {
        let (a, b) = (Interval::around(0.035), Interval::around(0.408));
        let g = Interval::new(0.01, 0.011).unwrap();
        let dl = Interval::new(0.2, 0.21).unwrap();
        let n = h1(a, b, g, dl, 6).unwrap();
        let dv = h1(Dual2::cst(a), Dual2::cst(b), Dual2::var(g, 0), Dual2::var(dl, 1), 6).unwrap();
        assert_eq!(n, dv.v);
    }
}
