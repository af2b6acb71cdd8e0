//! Deletion recursion Z(S) = Z(S-v) + λ Z(S-N[v]) over vertex bitsets, with
//! component factorisation and a memo keyed by connected components.
//!
//! With λ = p/q everything is kept integral by working with
//! Ẑ(S) = q^{|S|} Z(S), which satisfies
//! Ẑ(S) = q Ẑ(S-v) + p q^{deg_S(v)} Ẑ(S-N[v]).

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gadgets::{Graph, Label};

pub type Set = u128;
pub const MAX_VERTICES: usize = 128;

/// What an occupied vertex contributes to a counting weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    None,
    Plus,
    Minus,
}

impl Mark {
    pub fn of(l: Label) -> Mark {
        match l {
            Label::WPlus => Mark::Plus,
            Label::WMinus => Mark::Minus,
            _ => Mark::None,
        }
    }
}

/// Commutative semiring of partition-function values with a marker for
/// occupied W± vertices.
pub trait Weight: Clone + Send + Sync {
    fn unit() -> Self;
    fn null() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, c: &BigUint) -> Self;
    fn mark(&self, m: Mark) -> Self;
    fn is_zero(&self) -> bool;
}

impl Weight for BigUint {
    fn unit() -> Self {
        BigUint::one()
    }
    fn null() -> Self {
        BigUint::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: &BigUint) -> Self {
        self * c
    }
    fn mark(&self, _: Mark) -> Self {
        self.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Laurent series in t, t counting #W+ - #W- occupied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSeries {
    /// Exponent of coef[0].
    pub lo: i64,
    pub coef: Vec<BigUint>,
}

impl PhaseSeries {
    pub fn hi(&self) -> i64 {
        self.lo + self.coef.len() as i64 - 1
    }

    pub fn at(&self, e: i64) -> BigUint {
        if e < self.lo || e > self.hi() {
            BigUint::zero()
        } else {
            self.coef[(e - self.lo) as usize].clone()
        }
    }

    /// (Σ_{e≥0}, Σ_{e<0}): the plus and minus phase parts, ties to plus.
    pub fn split(&self) -> (BigUint, BigUint) {
        let mut plus = BigUint::zero();
        let mut minus = BigUint::zero();
        for (i, c) in self.coef.iter().enumerate() {
            if self.lo + i as i64 >= 0 {
                plus += c;
            } else {
                minus += c;
            }
        }
        (plus, minus)
    }

    pub fn total(&self) -> BigUint {
        self.coef.iter().sum()
    }
}

impl Weight for PhaseSeries {
    fn unit() -> Self {
        PhaseSeries { lo: 0, coef: vec![BigUint::one()] }
    }
    fn null() -> Self {
        PhaseSeries { lo: 0, coef: vec![BigUint::zero()] }
    }
    fn add(&self, o: &Self) -> Self {
        let lo = self.lo.min(o.lo);
        let hi = self.hi().max(o.hi());
        let coef = (lo..=hi).map(|e| self.at(e) + o.at(e)).collect();
        PhaseSeries { lo, coef }
    }
    fn mul(&self, o: &Self) -> Self {
        let mut coef = vec![BigUint::zero(); self.coef.len() + o.coef.len() - 1];
        for (i, a) in self.coef.iter().enumerate() {
            if Zero::is_zero(a) {
                continue;
            }
            for (j, b) in o.coef.iter().enumerate() {
                if !Zero::is_zero(b) {
                    coef[i + j] += a * b;
                }
            }
        }
        PhaseSeries { lo: self.lo + o.lo, coef }
    }
    fn scale(&self, c: &BigUint) -> Self {
        PhaseSeries { lo: self.lo, coef: self.coef.iter().map(|x| x * c).collect() }
    }
    fn mark(&self, m: Mark) -> Self {
        let shift = match m {
            Mark::None => 0,
            Mark::Plus => 1,
            Mark::Minus => -1,
        };
        PhaseSeries { lo: self.lo + shift, coef: self.coef.clone() }
    }
    fn is_zero(&self) -> bool {
        self.coef.iter().all(Zero::is_zero)
    }
}

/// Bivariate polynomial: coef[a][b] counts configurations with a occupied
/// W+ and b occupied W- vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountGrid {
    pub coef: Vec<Vec<BigUint>>,
}

impl CountGrid {
    pub fn at(&self, a: usize, b: usize) -> BigUint {
        self.coef.get(a).and_then(|r| r.get(b)).cloned().unwrap_or_default()
    }

    fn dims(&self) -> (usize, usize) {
        (self.coef.len(), self.coef.first().map_or(0, Vec::len))
    }

    fn sized(r: usize, c: usize) -> Self {
        CountGrid { coef: vec![vec![BigUint::zero(); c]; r] }
    }

    pub fn total(&self) -> BigUint {
        self.coef.iter().flatten().sum()
    }

    /// (Σ_{a≥b}, Σ_{a<b}).
    pub fn split(&self) -> (BigUint, BigUint) {
        let mut plus = BigUint::zero();
        let mut minus = BigUint::zero();
        for (a, row) in self.coef.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                if a >= b {
                    plus += c;
                } else {
                    minus += c;
                }
            }
        }
        (plus, minus)
    }
}

impl Weight for CountGrid {
    fn unit() -> Self {
        CountGrid { coef: vec![vec![BigUint::one()]] }
    }
    fn null() -> Self {
        CountGrid { coef: vec![vec![BigUint::zero()]] }
    }
    fn add(&self, o: &Self) -> Self {
        let (r1, c1) = self.dims();
        let (r2, c2) = o.dims();
        let mut out = CountGrid::sized(r1.max(r2), c1.max(c2));
        for (src, (r, c)) in [(self, (r1, c1)), (o, (r2, c2))] {
            for a in 0..r {
                for b in 0..c {
                    out.coef[a][b] += &src.coef[a][b];
                }
            }
        }
        out
    }
    fn mul(&self, o: &Self) -> Self {
        let (r1, c1) = self.dims();
        let (r2, c2) = o.dims();
        let mut out = CountGrid::sized(r1 + r2 - 1, c1 + c2 - 1);
        for a in 0..r1 {
            for b in 0..c1 {
                let x = &self.coef[a][b];
                if Zero::is_zero(x) {
                    continue;
                }
                for a2 in 0..r2 {
                    for b2 in 0..c2 {
                        let y = &o.coef[a2][b2];
                        if !Zero::is_zero(y) {
                            out.coef[a + a2][b + b2] += x * y;
                        }
                    }
                }
            }
        }
        out
    }
    fn scale(&self, c: &BigUint) -> Self {
        CountGrid { coef: self.coef.iter().map(|r| r.iter().map(|x| x * c).collect()).collect() }
    }
    fn mark(&self, m: Mark) -> Self {
        let (r, c) = self.dims();
        match m {
            Mark::None => self.clone(),
            Mark::Plus => {
                let mut out = CountGrid::sized(r + 1, c);
                for a in 0..r {
                    out.coef[a + 1] = self.coef[a].clone();
                }
                out
            }
            Mark::Minus => {
                let mut out = CountGrid::sized(r, c + 1);
                for a in 0..r {
                    for b in 0..c {
                        out.coef[a][b + 1] = self.coef[a][b].clone();
                    }
                }
                out
            }
        }
    }
    fn is_zero(&self) -> bool {
        self.coef.iter().flatten().all(Zero::is_zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElimOptions {
    /// Stop memoising beyond this many entries.
    pub memo_cap: usize,
    /// Resource error after this many recursive calls.
    pub max_calls: u64,
}

impl Default for ElimOptions {
    fn default() -> Self {
        ElimOptions { memo_cap: 1 << 24, max_calls: 2_000_000_000 }
    }
}

/// λ = p/q with p, q coprime, λ ≥ 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fugacity {
    pub p: BigUint,
    pub q: BigUint,
}

impl Fugacity {
    pub fn new(lambda: &BigRational) -> Result<Self> {
        if lambda.is_negative() {
            return Err(Error::domain("fugacity must be nonnegative"));
        }
        let l = lambda.reduced();
        Ok(Fugacity {
            p: l.numer().to_biguint().expect("nonnegative"),
            q: l.denom().to_biguint().expect("positive"),
        })
    }

    pub fn integer(k: u64) -> Self {
        Fugacity { p: BigUint::from(k), q: BigUint::one() }
    }

    pub fn as_rational(&self) -> BigRational {
        BigRational::new(self.p.clone().into(), self.q.clone().into())
    }

    /// q^k.
    pub fn qpow(&self, k: usize) -> BigUint {
        num_traits::pow(self.q.clone(), k)
    }
}

/// Convert a homogenised value on `n` vertices back to Z.
pub fn dehomogenise(v: &BigUint, lam: &Fugacity, n: usize) -> BigRational {
    BigRational::new(v.clone().into(), lam.qpow(n).into())
}

pub(crate) fn bits(s: Set) -> impl Iterator<Item = usize> {
    let mut s = s;
    std::iter::from_fn(move || {
        if s == 0 {
            None
        } else {
            let i = s.trailing_zeros() as usize;
            s &= s - 1;
            Some(i)
        }
    })
}

pub(crate) fn adjacency_masks(g: &Graph) -> Result<Vec<Set>> {
    if g.len() > MAX_VERTICES {
        return Err(Error::Resource(format!(
            "exact elimination supports at most {MAX_VERTICES} vertices, got {}",
            g.len()
        )));
    }
    Ok((0..g.len()).map(|v| g.neighbors(v).iter().fold(0, |m, &u| m | (1u128 << u))).collect())
}

pub struct Eliminator<W: Weight> {
    adj: Vec<Set>,
    marks: Vec<Mark>,
    lam: Fugacity,
    qpow: Vec<BigUint>,
    memo: HashMap<Set, W>,
    opts: ElimOptions,
    calls: u64,
}

impl<W: Weight> Eliminator<W> {
    pub fn new(g: &Graph, lam: &Fugacity, opts: ElimOptions) -> Result<Self> {
        let adj = adjacency_masks(g)?;
        let marks = (0..g.len()).map(|v| Mark::of(g.label(v))).collect();
        let qpow = (0..=g.len()).map(|k| lam.qpow(k)).collect();
        Ok(Eliminator { adj, marks, lam: lam.clone(), qpow, memo: HashMap::new(), opts, calls: 0 })
    }

    pub fn full(&self) -> Set {
        if self.adj.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.adj.len()) - 1
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Connected components of S.
    pub fn components(&self, s: Set) -> Vec<Set> {
        let mut rest = s;
        let mut out = vec![];
        while rest != 0 {
            let mut comp = rest & rest.wrapping_neg();
            let mut frontier = comp;
            while frontier != 0 {
                let mut next = 0;
                for v in bits(frontier) {
                    next |= self.adj[v];
                }
                next &= s & !comp;
                comp |= next;
                frontier = next;
            }
            out.push(comp);
            rest &= !comp;
        }
        out
    }

    /// Homogenised partition function of the subgraph induced by S.
    pub fn z(&mut self, s: Set) -> Result<W> {
        if s == 0 {
            return Ok(W::unit());
        }
        let comps = self.components(s);
        let mut acc = W::unit();
        for c in comps {
            let v = self.z_connected(c)?;
            acc = acc.mul(&v);
        }
        Ok(acc)
    }

    fn z_connected(&mut self, s: Set) -> Result<W> {
        if let Some(v) = self.memo.get(&s) {
            return Ok(v.clone());
        }
        self.calls += 1;
        if self.calls > self.opts.max_calls {
            return Err(Error::Resource(format!("elimination exceeded {} calls", self.opts.max_calls)));
        }
        let v = bits(s).max_by_key(|&v| ((self.adj[v] & s).count_ones(), std::cmp::Reverse(v))).expect("nonempty");
        let deg = (self.adj[v] & s).count_ones() as usize;
        let out = self.z(s & !(1u128 << v))?.scale(&self.lam.q);
        let inn = self.z(s & !(1u128 << v) & !self.adj[v])?;
        let c = &self.lam.p * &self.qpow[deg];
        let r = out.add(&inn.mark(self.marks[v]).scale(&c));
        if self.memo.len() < self.opts.memo_cap {
            self.memo.insert(s, r.clone());
        }
        Ok(r)
    }
}

/// Vertices pinned to occupied or vacant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pinning {
    pub occupied: Vec<usize>,
    pub vacant: Vec<usize>,
}

impl Pinning {
    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty() && self.vacant.is_empty()
    }
}

/// Homogenised Ẑ over all vertices with the pinning applied, or None if the
/// pinned occupied vertices are not independent. The pinned vertices are
/// weighted like free ones, so values for different pinnings share the
/// denominator q^{|V|}.
pub fn pinned<W: Weight>(el: &mut Eliminator<W>, pin: &Pinning) -> Result<Option<W>> {
    let n = el.adj.len();
    let mut occ: Set = 0;
    for &v in &pin.occupied {
        if v >= n {
            return Err(Error::Input(format!("pinned vertex {v} out of range")));
        }
        occ |= 1u128 << v;
    }
    let mut vac: Set = 0;
    for &v in &pin.vacant {
        if v >= n {
            return Err(Error::Input(format!("pinned vertex {v} out of range")));
        }
        vac |= 1u128 << v;
    }
    if occ & vac != 0 {
        return Err(Error::Input("vertex pinned both occupied and vacant".into()));
    }
    let mut blocked: Set = 0;
    for v in bits(occ) {
        if el.adj[v] & occ != 0 {
            return Ok(None);
        }
        blocked |= el.adj[v];
    }
    let rest = el.full() & !occ & !blocked & !vac;
    let mut w = el.z(rest)?;
    for v in bits(occ) {
        w = w.mark(el.marks[v]).scale(&el.lam.p);
    }
    let removed = n - rest.count_ones() as usize - occ.count_ones() as usize;
    Ok(Some(w.scale(&el.qpow[removed])))
}

/// Ẑ of the whole graph, components in parallel (each with its own memo).
pub fn homogenised<W: Weight>(g: &Graph, lam: &Fugacity, opts: ElimOptions) -> Result<W> {
    let root = Eliminator::<W>::new(g, lam, opts)?;
    let comps = root.components(root.full());
    if comps.len() <= 1 {
        let mut el = root;
        let f = el.full();
        return el.z(f);
    }
    let parts: Vec<Result<W>> = comps
        .par_iter()
        .map(|&c| {
            let mut el = Eliminator::<W>::new(g, lam, opts)?;
            el.z(c)
        })
        .collect();
    let mut acc = W::unit();
    for p in parts {
        acc = acc.mul(&p?);
    }
    Ok(acc)
}
