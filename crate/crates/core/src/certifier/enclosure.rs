//! Rigorous enclosure of (q+, q-) by a Krawczyk test on
//! G(u, v) = (u - F(v), v - F(u)), F(x) = 1/(1 + 1/(λ(1-x)^(d-1))).

use super::interval::Interval;
use crate::error::{Error, Result};
use crate::treegibbs::TreeFixedPoints;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointEnclosure {
    pub q_plus: Interval,
    pub q_minus: Interval,
    pub p_plus: Interval,
    pub p_minus: Interval,
    /// Radius of the box in which uniqueness was verified.
    pub radius: f64,
}

fn big_f(x: Interval, lam: Interval, d: u32) -> Result<Interval> {
    let one = Interval::point(1.0);
    let t = lam * (one - x).powi(d - 1);
    (one + t.recip()?).recip()
}

/// F'(x) = -(d-1) t / ((1+t)^2 (1-x)).
fn big_f_prime(x: Interval, lam: Interval, d: u32) -> Result<Interval> {
    let one = Interval::point(1.0);
    let omx = one - x;
    let t = lam * omx.powi(d - 1);
    let opt = one + t;
    Ok(-(Interval::point((d - 1) as f64) * t.div(opt * opt * omx)?))
}

/// Verify existence and uniqueness of the alternating fixed point near the
/// double-precision solution and return tight enclosures of q± and p±.
pub fn enclose_fixed_points(fp: &TreeFixedPoints) -> Result<FixedPointEnclosure> {
    let d = fp.d;
    let lam = Interval::point(fp.lambda);
    let (u0, v0) = (fp.q_plus, fp.q_minus);
    if (u0 - v0).abs() < 1e-6 {
        return Err(Error::domain("q+ and q- coincide; no isolated alternating fixed point"));
    }
    let y = [Interval::point(u0), Interval::point(v0)];
    let g_y = [y[0] - big_f(y[1], lam, d)?, y[1] - big_f(y[0], lam, d)?];

    // floating-point preconditioner: inverse of J(y) = [[1, -a], [-b, 1]]
    let a = -(fp.lambda * (d - 1) as f64 * (1.0 - v0).powi(d as i32 - 2))
        / (1.0 + fp.lambda * (1.0 - v0).powi(d as i32 - 1)).powi(2);
    let b = -(fp.lambda * (d - 1) as f64 * (1.0 - u0).powi(d as i32 - 2))
        / (1.0 + fp.lambda * (1.0 - u0).powi(d as i32 - 1)).powi(2);
    let det = 1.0 - a * b;
    let yinv = [[1.0 / det, a / det], [b / det, 1.0 / det]].map(|r| r.map(Interval::point));

    let mut r = 1e-12_f64.max(1e3 * fp.residual);
    for _ in 0..12 {
        let x = [y[0].inflate(r), y[1].inflate(r)];
        let jx = [
            [Interval::point(1.0), -big_f_prime(x[1], lam, d)?],
            [-big_f_prime(x[0], lam, d)?, Interval::point(1.0)],
        ];
        let mut k = [Interval::ZERO; 2];
        for i in 0..2 {
            let yg = yinv[i][0] * g_y[0] + yinv[i][1] * g_y[1];
            let mut acc = y[i] - yg;
            for j in 0..2 {
                // (I - Y J(X))_{ij}
                let yj = yinv[i][0] * jx[0][j] + yinv[i][1] * jx[1][j];
                let m = if i == j { Interval::point(1.0) - yj } else { -yj };
                acc = acc + m * (x[j] - y[j]);
            }
            k[i] = acc;
        }
        if x[0].interior_contains(k[0]) && x[1].interior_contains(k[1]) {
            let qp = k[0].intersect(x[0]).expect("nested");
            let qm = k[1].intersect(x[1]).expect("nested");
            let one = Interval::point(1.0);
            let den = one - qp * qm;
            let p_plus = (qp * (one - qm)).div(den)?;
            let p_minus = (qm * (one - qp)).div(den)?;
            return Ok(FixedPointEnclosure { q_plus: qp, q_minus: qm, p_plus, p_minus, radius: r });
        }
        r *= 8.0;
    }
    Err(Error::Convergence { iterations: 12, residual: fp.residual })
}
