//! Closed real intervals with outward rounding.
//!
//! Two rounding paths. `Directed` recovers the exact rounding error of
//! `+ - * / sqrt` with error-free transforms (TwoSum, FMA residuals) and moves
//! an endpoint only when the rounded result is on the wrong side, i.e. it
//! reproduces what round-down/round-up hardware modes would return. `Nudge`
//! blindly steps every endpoint one ulp outward. `ln` goes through libm,
//! which is not correctly rounded, so it is widened by two ulps in both modes.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    #[default]
    Directed,
    Nudge,
}

thread_local! {
    static MODE: Cell<Rounding> = const { Cell::new(Rounding::Directed) };
}

/// Set the rounding path for the current thread; returns the previous one.
pub fn set_rounding(mode: Rounding) -> Rounding {
    MODE.with(|m| m.replace(mode))
}

pub fn rounding() -> Rounding {
    MODE.with(|m| m.get())
}

// below this magnitude FMA residuals may underflow; fall back to nudging
const TINY: f64 = 1e-290;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn settle(r: f64, err_sign: f64, up: bool) -> f64 {
    if !r.is_finite() {
        return r;
    }
    match rounding() {
        Rounding::Nudge => {
            if up { r.next_up() } else { r.next_down() }
        }
        Rounding::Directed => {
            if r != 0.0 && r.abs() < TINY {
                return if up { r.next_up() } else { r.next_down() };
            }
            if up && err_sign > 0.0 {
                r.next_up()
            } else if !up && err_sign < 0.0 {
                r.next_down()
            } else {
                r
            }
        }
    }
}

#[inline]
fn add_r(a: f64, b: f64, up: bool) -> f64 {
    let (s, e) = two_sum(a, b);
    settle(s, e, up)
}

#[inline]
fn mul_r(a: f64, b: f64, up: bool) -> f64 {
    let p = a * b;
    if a == 0.0 || b == 0.0 {
        return p;
    }
    let e = a.mul_add(b, -p);
    settle(p, e, up)
}

#[inline]
fn div_r(a: f64, b: f64, up: bool) -> f64 {
    let q = a / b;
    if a == 0.0 {
        return q;
    }
    // a - q*b exactly; the true quotient is q + r/b
    let r = (-q).mul_add(b, a);
    settle(q, r * b.signum(), up)
}

#[inline]
fn sqrt_r(x: f64, up: bool) -> f64 {
    let s = x.sqrt();
    if x == 0.0 {
        return 0.0;
    }
    let r = (-s).mul_add(s, x);
    settle(s, r, up)
}

#[inline]
fn ln_r(x: f64, up: bool) -> f64 {
    let l = x.ln();
    if up { l.next_up().next_up() } else { l.next_down().next_down() }
}

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::IntervalDomain(format!("bad endpoints [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// The point widened by one ulp on each side.
    pub fn around(x: f64) -> Self {
        Interval { lo: x.next_down(), hi: x.next_up() }
    }

    /// Enclosure of the rational p/q.
    pub fn ratio(p: f64, q: f64) -> Self {
        Interval { lo: div_r(p, q, false), hi: div_r(p, q, true) }
    }

    pub fn lo(self) -> f64 {
        self.lo
    }
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn mid(self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(self, o: Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    /// `o` lies strictly inside `self`.
    pub fn interior_contains(self, o: Interval) -> bool {
        self.lo < o.lo && o.hi < self.hi
    }

    pub fn hull(self, o: Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn intersect(self, o: Interval) -> Option<Interval> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Split at the midpoint.
    pub fn bisect(self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval { lo: self.lo, hi: m }, Interval { lo: m, hi: self.hi })
    }

    /// `self` widened by `r` on both sides, outward rounded.
    pub fn inflate(self, r: f64) -> Interval {
        Interval { lo: add_r(self.lo, -r, false), hi: add_r(self.hi, r, true) }
    }

    pub fn recip(self) -> Result<Interval> {
        if self.lo <= 0.0 && self.hi >= 0.0 {
            return Err(Error::IntervalDomain(format!("1/x with 0 in {self:?}")));
        }
        Ok(Interval { lo: div_r(1.0, self.hi, false), hi: div_r(1.0, self.lo, true) })
    }

    pub fn div(self, o: Interval) -> Result<Interval> {
        if o.lo <= 0.0 && o.hi >= 0.0 {
            return Err(Error::IntervalDomain(format!("division by {o:?} containing 0")));
        }
        let c = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = c.iter().map(|&(a, b)| div_r(a, b, false)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| div_r(a, b, true)).fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval { lo, hi })
    }

    pub fn sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::IntervalDomain(format!("sqrt of {self:?}")));
        }
        Ok(Interval { lo: sqrt_r(self.lo, false), hi: sqrt_r(self.hi, true) })
    }

    pub fn ln(self) -> Result<Interval> {
        if !(self.lo > 0.0) {
            return Err(Error::IntervalDomain(format!("ln of {self:?}")));
        }
        Ok(Interval { lo: ln_r(self.lo, false), hi: ln_r(self.hi, true) })
    }

    /// Nonnegative integer power.
    pub fn powi(self, n: u32) -> Interval {
        if n == 0 {
            return Interval::point(1.0);
        }
        let pow_dir = |x: f64, up: bool| {
            // x >= 0: every partial product is monotone in the same direction
            let mut r = x;
            for _ in 1..n {
                r = mul_r(r, x, up);
            }
            r
        };
        if self.lo >= 0.0 {
            Interval { lo: pow_dir(self.lo, false), hi: pow_dir(self.hi, true) }
        } else if self.hi <= 0.0 {
            let m = Interval { lo: -self.hi, hi: -self.lo }.powi(n);
            if n % 2 == 0 { m } else { -m }
        } else if n % 2 == 0 {
            Interval { lo: 0.0, hi: pow_dir(self.lo.abs().max(self.hi), true) }
        } else {
            Interval { lo: -pow_dir(-self.lo, true), hi: pow_dir(self.hi, true) }
        }
    }

    /// max(c, x) for a constant c.
    pub fn max_const(self, c: f64) -> Interval {
        Interval { lo: self.lo.max(c), hi: self.hi.max(c) }
    }

    pub fn scale(self, c: f64) -> Interval {
        self * Interval::point(c)
    }

    /// x ln x, 0 ln 0 = 0.
    pub fn xlogx(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::IntervalDomain(format!("x ln x of {self:?}")));
        }
        if self.lo == 0.0 {
            if self.hi == 0.0 {
                return Ok(Interval::point(0.0));
            }
            // decreasing on [0, 1/e], minimum -1/e
            let end = Interval::point(self.hi) * Interval::point(self.hi).ln()?;
            let lo = if self.hi >= 0.36787944117144233 { -0.36787944117144245 } else { end.lo };
            return Ok(Interval { lo, hi: end.hi.max(0.0) });
        }
        Ok(self * self.ln()?)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: add_r(self.lo, o.lo, false), hi: add_r(self.hi, o.hi, true) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: add_r(self.lo, -o.hi, false), hi: add_r(self.hi, -o.lo, true) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = c.iter().map(|&(a, b)| mul_r(a, b, false)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| mul_r(a, b, true)).fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
}
