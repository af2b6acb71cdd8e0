//! Arbitrary-precision re-evaluation of the tree quantities (cross-check path).

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

struct Ctx {
    p: usize,
    cc: Consts,
}

impl Ctx {
    fn new(bits: usize) -> Result<Self> {
        if bits < 64 {
            return Err(Error::domain("precision must be at least 64 bits"));
        }
        let cc = Consts::new().map_err(|e| Error::Resource(format!("{e:?}")))?;
        Ok(Ctx { p: bits, cc })
    }

    fn num(&mut self, s: &str) -> Result<BigFloat> {
        let x = BigFloat::parse(s, Radix::Dec, self.p, RM, &mut self.cc);
        if x.is_nan() {
            return Err(Error::Input(format!("cannot parse number {s:?}")));
        }
        Ok(x)
    }

    fn int(&self, n: u32) -> BigFloat {
        BigFloat::from_u32(n, self.p)
    }

    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }
    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }
    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }
    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }
    fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, self.p, RM)
    }
    fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }
    fn pow(&mut self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.pow(b, self.p, RM, &mut self.cc)
    }

    fn text(&mut self, x: &BigFloat) -> Result<String> {
        x.format(Radix::Dec, RM, &mut self.cc).map_err(|e| Error::Resource(format!("{e:?}")))
    }
}

fn to_f64(s: &str) -> f64 {
    s.parse::<f64>().unwrap_or(f64::NAN)
}

/// h(x) at `bits` of precision; x and λ given as decimal strings.
pub fn h_map_precise(x: &str, d: u32, lambda: &str, bits: usize) -> Result<String> {
    let mut c = Ctx::new(bits)?;
    let x = c.num(x)?;
    let lam = c.num(lambda)?;
    let one = c.int(1);
    let omx = c.sub(&one, &x);
    if !x.is_positive() || !omx.is_positive() {
        return Err(Error::domain("h_map needs 0 < x < 1"));
    }
    let r = c.div(&x, &c.mul(&lam, &omx));
    let e = c.div(&one, &c.int(d));
    let root = c.pow(&r, &e);
    let h = c.mul(&omx, &c.sub(&one, &root));
    c.text(&h)
}

/// H1(x, y) = -x log(x/y) + (x-y) log((y-x)/y) at high precision, 0 < x < y.
pub fn entropy_h1_precise(x: &str, y: &str, bits: usize) -> Result<String> {
    let mut c = Ctx::new(bits)?;
    let x = c.num(x)?;
    let y = c.num(y)?;
    let ymx = c.sub(&y, &x);
    if !x.is_positive() || !ymx.is_positive() {
        return Err(Error::domain("need 0 < x < y"));
    }
    let a = c.ln(&c.div(&x, &y));
    let b = c.ln(&c.div(&ymx, &y));
    let t1 = c.mul(&x, &a).neg();
    let t2 = c.mul(&c.sub(&x, &y), &b);
    let v = c.add(&t1, &t2);
    c.text(&v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreciseFixedPoints {
    pub bits: usize,
    pub q_plus: String,
    pub q_minus: String,
    pub p_plus: String,
    pub p_minus: String,
    pub p_star: String,
}

impl PreciseFixedPoints {
    pub fn as_f64(&self) -> [f64; 5] {
        [
            to_f64(&self.q_plus),
            to_f64(&self.q_minus),
            to_f64(&self.p_plus),
            to_f64(&self.p_minus),
            to_f64(&self.p_star),
        ]
    }
}

/// Newton refinement of (q+, q-) and q* starting from the double-precision
/// solution. Only meaningful in the non-uniqueness regime (simple roots).
pub fn fixed_points_precise(
    d: u32,
    lambda: &str,
    start: (f64, f64, f64),
    bits: usize,
) -> Result<PreciseFixedPoints> {
    if d < 3 {
        return Err(Error::domain("d < 3"));
    }
    let mut c = Ctx::new(bits)?;
    let lam = c.num(lambda)?;
    let one = c.int(1);
    let dm1 = c.int(d - 1);

    // F(x) and F'(x)
    let eval = |c: &Ctx, x: &BigFloat| -> (BigFloat, BigFloat) {
        let omx = c.sub(&one, x);
        let t = c.mul(&lam, &c.powi(&omx, (d - 1) as usize));
        let opt = c.add(&one, &t);
        let f = c.div(&t, &opt);
        let fp = c.div(&c.mul(&dm1, &t), &c.mul(&c.mul(&opt, &opt), &omx)).neg();
        (f, fp)
    };

    let mut u = BigFloat::from_f64(start.0, bits);
    let mut v = BigFloat::from_f64(start.1, bits);
    let steps = 2 + (bits as f64 / 40.0).log2().ceil() as usize + 2;
    for _ in 0..steps {
        let (fv, dfv) = eval(&c, &v);
        let (fu, dfu) = eval(&c, &u);
        let g1 = c.sub(&u, &fv);
        let g2 = c.sub(&v, &fu);
        let det = c.sub(&one, &c.mul(&dfu, &dfv));
        let du = c.div(&c.add(&g1, &c.mul(&dfv, &g2)), &det).neg();
        let dv = c.add(&g2.neg(), &c.mul(&dfu, &du));
        u = c.add(&u, &du);
        v = c.add(&v, &dv);
    }
    let mut s = BigFloat::from_f64(start.2, bits);
    for _ in 0..steps {
        let (fs, dfs) = eval(&c, &s);
        let g = c.sub(&s, &fs);
        let dg = c.sub(&one, &dfs);
        s = c.sub(&s, &c.div(&g, &dg));
    }
    if u.is_nan() || v.is_nan() || s.is_nan() {
        return Err(Error::Convergence { iterations: steps, residual: f64::NAN });
    }
    let den = c.sub(&one, &c.mul(&u, &v));
    let p_plus = c.div(&c.mul(&u, &c.sub(&one, &v)), &den);
    let p_minus = c.div(&c.mul(&v, &c.sub(&one, &u)), &den);
    let p_star = c.div(&s, &c.add(&one, &s));
    Ok(PreciseFixedPoints {
        bits,
        q_plus: c.text(&u)?,
        q_minus: c.text(&v)?,
        p_plus: c.text(&p_plus)?,
        p_minus: c.text(&p_minus)?,
        p_star: c.text(&p_star)?,
    })
}

/// Parse a decimal string produced by this module back into f64.
pub fn decimal_to_f64(s: &str) -> f64 {
    to_f64(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_values() {
        // h(1/2) vanishes exactly at λ = 1
        let v = decimal_to_f64(&h_map_precise("0.5", 6, "1", 256).unwrap());
        assert!(v.abs() < 1e-60);
        // mpmath, 40 digits
        let s = h_map_precise("0.25", 6, "1", 256).unwrap();
        assert!((decimal_to_f64(&s) - 0.12548761675829676).abs() < 1e-16);
    }

    #[test]
    fn newton_matches_frozen() {
        let fp = fixed_points_precise(6, "1", (0.4233, 0.0599, 0.2), 256).unwrap();
        let [qp, qm, pp, pm, _] = fp.as_f64();
        assert!((qp - 0.4233354013658456).abs() < 1e-15);
        assert!((qm - 0.0599471739287496).abs() < 1e-15);
        assert!((pp - 0.408319884853137284).abs() < 1e-15);
        assert!((pm - 0.035469550772891586).abs() < 1e-15);
        assert!(fp.p_plus.starts_with("4.0831988485313728"), "{}", fp.p_plus);
    }
}
