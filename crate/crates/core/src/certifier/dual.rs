//! Forward-mode derivatives over intervals in two variables, used for the
//! mean-value (centered) enclosure of a function on a box.

use std::ops::{Add, Mul, Neg, Sub};

use super::interval::Interval;
use crate::error::Result;

/// Scalar type the certified expressions are generic over.
pub trait IvNum:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn cst(x: Interval) -> Self;
    fn recip(self) -> Result<Self>;
    fn sqrt(self) -> Result<Self>;
    fn ln(self) -> Result<Self>;
    fn max_const(self, c: f64) -> Self;
    fn value(self) -> Interval;

    fn num(c: f64) -> Self {
        Self::cst(Interval::point(c))
    }

    fn div(self, o: Self) -> Result<Self> {
        Ok(self * o.recip()?)
    }
}

impl IvNum for Interval {
    fn cst(x: Interval) -> Self {
        x
    }
    fn recip(self) -> Result<Self> {
        Interval::recip(self)
    }
    fn sqrt(self) -> Result<Self> {
        Interval::sqrt(self)
    }
    fn ln(self) -> Result<Self> {
        Interval::ln(self)
    }
    fn max_const(self, c: f64) -> Self {
        Interval::max_const(self, c)
    }
    fn value(self) -> Interval {
        self
    }
    fn div(self, o: Self) -> Result<Self> {
        Interval::div(self, o)
    }
}

/// Value and gradient (with respect to two seeded variables), all enclosed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: Interval,
    pub g: [Interval; 2],
}

const ZERO: Interval = Interval::ZERO;

impl Dual2 {
    /// Independent variable number `k` (0 or 1) ranging over `x`.
    pub fn var(x: Interval, k: usize) -> Self {
        let mut g = [ZERO; 2];
        g[k] = Interval::point(1.0);
        Dual2 { v: x, g }
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v + o.v, g: [self.g[0] + o.g[0], self.g[1] + o.g[1]] }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Dual2 { v: self.v - o.v, g: [self.g[0] - o.g[0], self.g[1] - o.g[1]] }
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 { v: -self.v, g: [-self.g[0], -self.g[1]] }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        let g = |k: usize| self.g[k] * o.v + self.v * o.g[k];
        Dual2 { v: self.v * o.v, g: [g(0), g(1)] }
    }
}

impl IvNum for Dual2 {
    fn cst(x: Interval) -> Self {
        Dual2 { v: x, g: [ZERO; 2] }
    }

    fn recip(self) -> Result<Self> {
        let r = self.v.recip()?;
        let r2 = r * r;
        Ok(Dual2 { v: r, g: [-(self.g[0] * r2), -(self.g[1] * r2)] })
    }

    fn sqrt(self) -> Result<Self> {
        let s = self.v.sqrt()?;
        let inv = (s + s).recip()?;
        Ok(Dual2 { v: s, g: [self.g[0] * inv, self.g[1] * inv] })
    }

    fn ln(self) -> Result<Self> {
        let inv = self.v.recip()?;
        Ok(Dual2 { v: self.v.ln()?, g: [self.g[0] * inv, self.g[1] * inv] })
    }

    fn max_const(self, c: f64) -> Self {
        if self.v.lo() > c {
            self
        } else if self.v.hi() < c {
            Dual2::cst(Interval::point(c))
        } else {
            // kink inside: any one-sided derivative, hull with zero
            Dual2 { v: self.v.max_const(c), g: [self.g[0].hull(ZERO), self.g[1].hull(ZERO)] }
        }
    }

    fn value(self) -> Interval {
        self.v
    }
}
