//! Broadcast processes with alternating kernels on the (d-1)-ary tree, the
//! posterior recursion, and Monte Carlo estimates of how fast the posterior
//! forgets the root.
//!
//! A vertex v of a tree rooted with sign s has type t = s(-1)^{|v|}; its
//! children are drawn with M^{-t}. The conditional law of the posterior at a
//! vertex given its own spin depends only on (height, type, spin), which is
//! what the tables and the sampler are keyed by.

use std::str::FromStr;

use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::treegibbs::TreeFixedPoints;

/// Root density of the broadcast: p^s gives the projection of μ^s (the ξ̃
/// model), q^s gives μ̂^s (the ξ model).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    P,
    Q,
}

impl FromStr for Prior {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p" => Ok(Prior::P),
            "q" => Ok(Prior::Q),
            _ => Err(format!("unknown prior {s:?} (p|q)")),
        }
    }
}

fn check_sign(s: i8) -> Result<()> {
    if s == 1 || s == -1 {
        Ok(())
    } else {
        Err(Error::domain(format!("sign must be +1 or -1, got {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastKernel {
    pub q_plus: f64,
    pub q_minus: f64,
}

impl BroadcastKernel {
    pub fn new(q_plus: f64, q_minus: f64) -> Result<Self> {
        for q in [q_plus, q_minus] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::domain(format!("kernel density {q} outside [0, 1]")));
            }
        }
        Ok(BroadcastKernel { q_plus, q_minus })
    }

    pub fn from_fixed_points(fp: &TreeFixedPoints) -> Self {
        BroadcastKernel { q_plus: fp.q_plus, q_minus: fp.q_minus }
    }

    pub fn q(&self, t: i8) -> f64 {
        if t > 0 {
            self.q_plus
        } else {
            self.q_minus
        }
    }

    /// M^t = [[1-q^t, q^t], [1, 0]], rows indexed by the parent spin.
    pub fn matrix(&self, t: i8) -> [[f64; 2]; 2] {
        let q = self.q(t);
        [[1.0 - q, q], [1.0, 0.0]]
    }

    /// P(child occupied | parent spin) for a child of type `child_type`.
    pub fn child_density(&self, parent_occupied: bool, child_type: i8) -> f64 {
        if parent_occupied {
            0.0
        } else {
            self.q(child_type)
        }
    }
}

/// Spins of a complete (d-1)-ary tree, level by level; the children of
/// vertex i on level k are i·b .. i·b+b on level k+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastSample {
    pub sign: i8,
    pub prior: Prior,
    pub levels: Vec<Vec<bool>>,
}

impl BroadcastSample {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn root(&self) -> bool {
        self.levels[0][0]
    }

    pub fn leaves(&self) -> &[bool] {
        self.levels.last().expect("root level")
    }

    pub fn level_density(&self, k: usize) -> f64 {
        let l = &self.levels[k];
        l.iter().filter(|&&x| x).count() as f64 / l.len() as f64
    }
}

pub const MAX_SAMPLE_VERTICES: usize = 1 << 24;

pub fn root_density(fp: &TreeFixedPoints, s: i8, prior: Prior) -> f64 {
    match prior {
        Prior::P => fp.p(s),
        Prior::Q => fp.q(s),
    }
}

pub fn broadcast_sample(fp: &TreeFixedPoints, d: u32, depth: usize, s: i8, prior: Prior, seed: u64) -> Result<BroadcastSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    broadcast_sample_with(fp, d, depth, s, prior, &mut rng)
}

pub fn broadcast_sample_with<R: Rng>(
    fp: &TreeFixedPoints,
    d: u32,
    depth: usize,
    s: i8,
    prior: Prior,
    rng: &mut R,
) -> Result<BroadcastSample> {
    check_sign(s)?;
    if d < 3 {
        return Err(Error::domain(format!("d must be >= 3, got {d}")));
    }
    if depth < 1 {
        return Err(Error::domain("depth must be at least 1"));
    }
    let b = d as usize - 1;
    let leaves = b.checked_pow(depth as u32).filter(|&n| n <= MAX_SAMPLE_VERTICES);
    if leaves.is_none() {
        return Err(Error::Resource(format!("a depth-{depth} tree with branching {b} exceeds {MAX_SAMPLE_VERTICES} leaves")));
    }
    let kernel = BroadcastKernel::from_fixed_points(fp);
    let mut levels = vec![vec![rng.gen::<f64>() < root_density(fp, s, prior)]];
    let mut t = s;
    for _ in 0..depth {
        t = -t;
        let prev = levels.last().expect("nonempty");
        let next: Vec<bool> = prev
            .iter()
            .flat_map(|&occ| std::iter::repeat(occ).take(b))
            .map(|occ| !occ && rng.gen::<f64>() < kernel.child_density(occ, t))
            .collect();
        levels.push(next);
    }
    Ok(BroadcastSample { sign: s, prior, levels })
}

/// Posterior at the root from values at depth ℓ (b^ℓ of them, 0/1
/// indicators or probabilities), by X = λΠ(1-X_i)/(1+λΠ(1-X_i)) applied
/// level by level. This is the posterior of the q-prior model; it needs no
/// prior because the (d-1)-ary root has no outside neighbour.
pub fn posterior_root<T: Num + Clone>(leaves: &[T], b: usize, lambda: &T) -> Result<T> {
    if b == 0 {
        return Err(Error::domain("branching must be positive"));
    }
    let mut cur: Vec<T> = leaves.to_vec();
    while cur.len() > 1 {
        if cur.len() % b != 0 {
            return Err(Error::Input(format!("{} leaves is not a power of {b}", leaves.len())));
        }
        cur = cur
            .chunks(b)
            .map(|ch| {
                let prod = ch.iter().fold(T::one(), |acc, x| acc * (T::one() - x.clone()));
                let w = lambda.clone() * prod;
                w.clone() / (T::one() + w)
            })
            .collect();
    }
    if cur.len() != 1 || (b > 1 && !is_power(leaves.len(), b)) {
        return Err(Error::Input(format!("{} leaves is not a power of {b}", leaves.len())));
    }
    Ok(cur.pop().expect("one value"))
}

fn is_power(mut n: usize, b: usize) -> bool {
    while n > 1 && n % b == 0 {
        n /= b;
    }
    n == 1
}

/// Posterior under the p-prior from the q-prior posterior of the same
/// leaves: odds are multiplied by [p/(1-p)] / [q/(1-q)].
pub fn tilde_from_q<T: Num + Clone>(x: &T, p: &T, q: &T) -> T {
    let one = T::one();
    let a = x.clone() * p.clone() * (one.clone() - q.clone());
    let c = (one.clone() - x.clone()) * q.clone() * (one - p.clone());
    a.clone() / (a + c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorValue {
    pub x: f64,
    pub level: usize,
    pub sign: i8,
}

/// X at the root of a sampled tree from its leaves.
pub fn posterior_of_sample(sample: &BroadcastSample, d: u32, lambda: f64) -> Result<PosteriorValue> {
    let leaves: Vec<f64> = sample.leaves().iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
    Ok(PosteriorValue { x: posterior_root(&leaves, d as usize - 1, &lambda)?, level: sample.depth(), sign: sample.sign })
}

/// Discrete law of X at a vertex given (height, type, spin).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Atoms {
    pub x: Vec<f64>,
    pub prob: Vec<f64>,
    cdf: Vec<f64>,
}

impl Atoms {
    fn from_pairs(mut v: Vec<(f64, f64)>) -> Self {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut x: Vec<f64> = vec![];
        let mut prob: Vec<f64> = vec![];
        for (xi, pi) in v {
            if pi == 0.0 {
                continue;
            }
            if x.last() == Some(&xi) {
                *prob.last_mut().expect("nonempty") += pi;
            } else {
                x.push(xi);
                prob.push(pi);
            }
        }
        let mut acc = 0.0;
        let cdf = prob
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Atoms { x, prob, cdf }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.prob).map(|(&x, &p)| p * f(x)).sum()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u = rng.gen::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        let i = self.cdf.partition_point(|&c| c <= u).min(self.x.len() - 1);
        self.x[i]
    }
}

/// Multisets enumerated per table level are capped here.
pub const MAX_TABLE_MULTISETS: u64 = 200_000;

fn multisets(k: u64, b: u64) -> u64 {
    // C(k+b-1, b)
    let mut r: u64 = 1;
    for i in 0..b {
        r = r.saturating_mul(k + i) / (i + 1);
    }
    r
}

fn ti(t: i8) -> usize {
    (t < 0) as usize
}

/// Exact conditional laws of X for heights 0..=height, plus a sampler for
/// greater heights that recurses down to the tables.
#[derive(Debug, Clone)]
pub struct PosteriorTables {
    pub b: usize,
    pub lambda: f64,
    pub kernel: BroadcastKernel,
    /// tables[h][type index][spin]
    tables: Vec<[[Atoms; 2]; 2]>,
}

impl PosteriorTables {
    /// Tables up to the largest height whose enumeration stays under
    /// MAX_TABLE_MULTISETS, but not above `max_height`.
    pub fn new(kernel: BroadcastKernel, d: u32, lambda: f64, max_height: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::domain(format!("d must be >= 3, got {d}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain("fugacity must be positive"));
        }
        let b = d as usize - 1;
        let leaf = |x: f64| Atoms::from_pairs(vec![(x, 1.0)]);
        let mut tables = vec![[[leaf(0.0), leaf(1.0)], [leaf(0.0), leaf(1.0)]]];
        while tables.len() <= max_height {
            let prev = tables.last().expect("nonempty");
            let k = (0..2).map(|c| prev[c][0].len() + prev[c][1].len()).max().unwrap_or(0) as u64;
            if multisets(k, b as u64) > MAX_TABLE_MULTISETS {
                break;
            }
            let mut next: [[Atoms; 2]; 2] = Default::default();
            for t in [1i8, -1] {
                for spin in [false, true] {
                    let c = kernel.child_density(spin, -t);
                    let child = &prev[ti(-t)];
                    let mut atoms: Vec<(f64, f64)> = vec![];
                    for (x, p) in child[0].x.iter().zip(&child[0].prob) {
                        atoms.push((*x, (1.0 - c) * p));
                    }
                    for (x, p) in child[1].x.iter().zip(&child[1].prob) {
                        atoms.push((*x, c * p));
                    }
                    atoms.retain(|a| a.1 > 0.0);
                    next[ti(t)][spin as usize] = Atoms::from_pairs(combine(&atoms, b, lambda));
                }
            }
            tables.push(next);
        }
        Ok(PosteriorTables { b, lambda, kernel, tables })
    }

    pub fn height(&self) -> usize {
        self.tables.len() - 1
    }

    pub fn atoms(&self, h: usize, t: i8, spin: bool) -> Option<&Atoms> {
        self.tables.get(h).map(|row| &row[ti(t)][spin as usize])
    }

    /// One draw of X at a vertex of height h, type t and given spin.
    pub fn draw<R: Rng>(&self, h: usize, t: i8, spin: bool, rng: &mut R) -> f64 {
        if h < self.tables.len() {
            return self.tables[h][ti(t)][spin as usize].draw(rng);
        }
        let c = self.kernel.child_density(spin, -t);
        let mut prod = 1.0;
        for _ in 0..self.b {
            let cs = c > 0.0 && rng.gen::<f64>() < c;
            prod *= 1.0 - self.draw(h - 1, -t, cs, rng);
        }
        let w = self.lambda * prod;
        w / (1.0 + w)
    }

    /// Table draws per sample at height h.
    pub fn cost(&self, h: usize) -> u64 {
        let top = self.height();
        if h <= top {
            1
        } else {
            (self.b as u64).saturating_pow((h - top) as u32)
        }
    }
}

/// Law of λP/(1+λP), P = Π(1 - x_i), for b iid children with the given atoms.
fn combine(atoms: &[(f64, f64)], b: usize, lambda: f64) -> Vec<(f64, f64)> {
    let mut out = vec![];
    let mut counts = vec![0usize; atoms.len()];
    fn rec(
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        atoms: &[(f64, f64)],
        b: usize,
        lambda: f64,
        out: &mut Vec<(f64, f64)>,
    ) {
        if i == atoms.len() - 1 {
            counts[i] = left;
            let mut prod = 1.0;
            let mut prob = factorial(b);
            for (j, &k) in counts.iter().enumerate() {
                prod *= (1.0 - atoms[j].0).powi(k as i32);
                prob *= atoms[j].1.powi(k as i32) / factorial(k);
            }
            let w = lambda * prod;
            out.push((w / (1.0 + w), prob));
            return;
        }
        for k in 0..=left {
            counts[i] = k;
            rec(i + 1, left - k, counts, atoms, b, lambda, out);
        }
        counts[i] = 0;
    }
    if !atoms.is_empty() {
        rec(0, b, &mut counts, atoms, b, lambda, &mut out);
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[derive(Debug, Clone, Copy, Default)]
struct Moment {
    sum: f64,
    sumsq: f64,
}

impl Moment {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.sumsq += v * v;
    }

    fn merge(&mut self, o: &Moment) {
        self.sum += o.sum;
        self.sumsq += o.sumsq;
    }

    fn mean(&self, n: usize) -> f64 {
        self.sum / n as f64
    }

    /// Variance of the sample mean.
    fn var_of_mean(&self, n: usize) -> f64 {
        if n < 2 {
            return f64::INFINITY;
        }
        let m = self.mean(n);
        ((self.sumsq / n as f64 - m * m).max(0.0) * n as f64 / (n as f64 - 1.0)) / n as f64
    }
}

/// Per-stratum accumulators, indexed by the constants below.
const S_XT: usize = 0;
const S_SQ: usize = 1;
const S_IDENT1: usize = 2;
const S_ABS: usize = 3;
const S_X: usize = 4;
const S_TAIL_Z: usize = 5;
const S_TAIL_T: usize = 6;
const NSTAT: usize = 7;

#[derive(Debug, Clone, Copy, Default)]
struct Stratum {
    n: usize,
    m: [Moment; NSTAT],
}

impl Stratum {
    fn merge(&mut self, o: &Stratum) {
        self.n += o.n;
        for (a, b) in self.m.iter_mut().zip(&o.m) {
            a.merge(b);
        }
    }
    fn mean(&self, k: usize) -> f64 {
        self.m[k].mean(self.n)
    }
    fn vm(&self, k: usize) -> f64 {
        self.m[k].var_of_mean(self.n)
    }
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Est {
    pub value: f64,
    pub se: f64,
}

impl Est {
    fn new(value: f64, var: f64) -> Self {
        Est { value, se: var.max(0.0).sqrt() }
    }

    /// |value - target| ≤ k·se (a zero se only accepts an exact hit).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate {
    pub level: usize,
    pub sign: i8,
    /// Samples with root occupied / vacant (stratified).
    pub samples_occupied: usize,
    pub samples_vacant: usize,
    /// x = E¹X̃ - p.
    pub x: Est,
    /// p⁻¹ E(X̃ - p)².
    pub x_var: Est,
    /// x - x_var, zero by the variance identity.
    pub identity_gap: Est,
    /// E⁰(X̃ - p) + p/(1-p)·x, zero by the martingale property.
    pub cond_mean_gap: Est,
    /// E X̃ - p under the p-prior.
    pub martingale_p: Est,
    /// E X - q under the q-prior.
    pub martingale_q: Est,
    /// E|X - q| under the q-prior.
    pub mean_abs_dev: Est,
    /// P(|X - q| ≥ exp(-ζ₁ℓ)) under the q-prior.
    pub tail_zeta: Est,
    pub zeta_threshold: f64,
    /// P(|X - q| ≥ threshold) under the q-prior, for a fixed threshold.
    pub tail_fixed: Option<Est>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayOptions {
    pub levels: Vec<usize>,
    /// Samples per level (split evenly between the two root spins).
    pub samples: usize,
    /// Cap on table draws per level; deeper levels get fewer samples.
    pub max_cost: u64,
    /// Lower limit on the per-level samples when the cap bites.
    pub min_samples: usize,
    pub zeta1: f64,
    pub tail_threshold: Option<f64>,
    /// Levels used for the geometric fit; all estimated levels if empty.
    pub fit_levels: Vec<usize>,
    pub seed: u64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            levels: (2..=8).collect(),
            samples: 100_000,
            max_cost: 2_000_000_000,
            min_samples: 1000,
            zeta1: 0.5,
            tail_threshold: None,
            fit_levels: vec![],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    pub d: u32,
    pub lambda: f64,
    pub sign: i8,
    pub options: DecayOptions,
    pub levels: Vec<LevelEstimate>,
    /// exp(2·slope) of ln x_var against ℓ over the fit levels.
    pub fitted_rate: Option<f64>,
    /// (d-1)²(q⁺q⁻)².
    pub predicted_rate: f64,
    pub degenerate: bool,
}

impl DecayEstimate {
    pub fn level(&self, l: usize) -> Option<&LevelEstimate> {
        self.levels.iter().find(|e| e.level == l)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "level,sign,n1,n0,x,x_se,x_var,x_var_se,identity_gap,identity_se,cond_mean_gap,cond_mean_se,\
             mart_q,mart_q_se,mean_abs_dev,mean_abs_dev_se,tail_zeta,tail_zeta_se,zeta_threshold,tail_fixed,tail_fixed_se,degenerate\n",
        );
        for e in &self.levels {
            let (tf, tfs) = e.tail_fixed.map_or((f64::NAN, f64::NAN), |t| (t.value, t.se));
            s.push_str(&format!(
                "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
                e.level,
                e.sign,
                e.samples_occupied,
                e.samples_vacant,
                e.x.value,
                e.x.se,
                e.x_var.value,
                e.x_var.se,
                e.identity_gap.value,
                e.identity_gap.se,
                e.cond_mean_gap.value,
                e.cond_mean_gap.se,
                e.martingale_q.value,
                e.martingale_q.se,
                e.mean_abs_dev.value,
                e.mean_abs_dev.se,
                e.tail_zeta.value,
                e.tail_zeta.se,
                e.zeta_threshold,
                tf,
                tfs,
                e.degenerate
            ));
        }
        s
    }
}

const CHUNK: usize = 1024;

fn stream_id(level: usize, sign: i8, spin: bool, chunk: usize) -> u64 {
    ((level as u64) << 40) | ((ti(sign) as u64) << 33) | ((spin as u64) << 32) | chunk as u64
}

struct LevelCtx<'a> {
    tables: &'a PosteriorTables,
    level: usize,
    sign: i8,
    p: f64,
    q: f64,
    thr_z: f64,
    thr_t: Option<f64>,
    seed: u64,
}

fn run_stratum(ctx: &LevelCtx, spin: bool, n: usize) -> Stratum {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Stratum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            rng.set_stream(stream_id(ctx.level, ctx.sign, spin, c));
            let m = CHUNK.min(n - c * CHUNK);
            let mut st = Stratum::default();
            for _ in 0..m {
                let x = ctx.tables.draw(ctx.level, ctx.sign, spin, &mut rng);
                let xt = tilde_from_q(&x, &ctx.p, &ctx.q);
                let sq = (xt - ctx.p) * (xt - ctx.p);
                let dev = (x - ctx.q).abs();
                st.n += 1;
                st.m[S_XT].push(xt);
                st.m[S_SQ].push(sq);
                st.m[S_IDENT1].push(xt - sq);
                st.m[S_ABS].push(dev);
                st.m[S_X].push(x);
                st.m[S_TAIL_Z].push((dev >= ctx.thr_z) as u8 as f64);
                st.m[S_TAIL_T].push(ctx.thr_t.map_or(0.0, |t| (dev >= t) as u8 as f64));
            }
            st
        })
        .collect();
    let mut out = Stratum::default();
    for p in &parts {
        out.merge(p);
    }
    out
}

fn combine_level(ctx: &LevelCtx, s1: &Stratum, s0: &Stratum) -> LevelEstimate {
    let (p, q) = (ctx.p, ctx.q);
    let r = p / (1.0 - p);
    let x = Est::new(s1.mean(S_XT) - p, s1.vm(S_XT));
    let x_var = Est::new(
        (p * s1.mean(S_SQ) + (1.0 - p) * s0.mean(S_SQ)) / p,
        s1.vm(S_SQ) + ((1.0 - p) / p).powi(2) * s0.vm(S_SQ),
    );
    let identity_gap = Est::new(
        s1.mean(S_IDENT1) - p - (1.0 - p) / p * s0.mean(S_SQ),
        s1.vm(S_IDENT1) + ((1.0 - p) / p).powi(2) * s0.vm(S_SQ),
    );
    let cond_mean_gap = Est::new(s0.mean(S_XT) - p + r * x.value, s0.vm(S_XT) + r * r * s1.vm(S_XT));
    let mix = |k: usize, w: f64| Est::new(w * s1.mean(k) + (1.0 - w) * s0.mean(k), w * w * s1.vm(k) + (1.0 - w).powi(2) * s0.vm(k));
    let mut martingale_p = mix(S_XT, p);
    martingale_p.value -= p;
    let mut martingale_q = mix(S_X, q);
    martingale_q.value -= q;
    let degenerate = s1.n < 2 || s0.n < 2 || !(x_var.value > 0.0) || !x_var.value.is_finite();
    LevelEstimate {
        level: ctx.level,
        sign: ctx.sign,
        samples_occupied: s1.n,
        samples_vacant: s0.n,
        x,
        x_var,
        identity_gap,
        cond_mean_gap,
        martingale_p,
        martingale_q,
        mean_abs_dev: mix(S_ABS, q),
        tail_zeta: mix(S_TAIL_Z, q),
        zeta_threshold: ctx.thr_z,
        tail_fixed: ctx.thr_t.map(|_| mix(S_TAIL_T, q)),
        degenerate,
    }
}

fn check_model(fp: &TreeFixedPoints, d: u32, lambda: f64, sign: i8) -> Result<()> {
    check_sign(sign)?;
    if fp.d != d || fp.lambda != lambda {
        return Err(Error::Input(format!(
            "fixed points are for d={}, λ={}, requested d={d}, λ={lambda}",
            fp.d, fp.lambda
        )));
    }
    Ok(())
}

/// Samples at one level under the budget.
pub fn level_samples(tables: &PosteriorTables, level: usize, opts: &DecayOptions) -> usize {
    let cost = tables.cost(level).max(1);
    let cap = (opts.max_cost / cost) as usize;
    opts.samples.min(cap.max(opts.min_samples)).max(2)
}

pub fn estimate_decay(fp: &TreeFixedPoints, d: u32, lambda: f64, sign: i8, opts: &DecayOptions) -> Result<DecayEstimate> {
    check_model(fp, d, lambda, sign)?;
    if opts.samples < 1000 {
        return Err(Error::domain(format!("need at least 1000 samples, got {}", opts.samples)));
    }
    if opts.levels.is_empty() {
        return Err(Error::domain("no levels requested"));
    }
    let tables = PosteriorTables::new(BroadcastKernel::from_fixed_points(fp), d, lambda, usize::MAX)?;
    for &l in &opts.levels {
        let floor = tables.cost(l).saturating_mul(opts.min_samples as u64);
        if floor > opts.max_cost {
            return Err(Error::Resource(format!(
                "level {l} needs {floor} table draws for {} samples, budget is {}",
                opts.min_samples, opts.max_cost
            )));
        }
    }
    let mut levels = vec![];
    for &l in &opts.levels {
        let n = level_samples(&tables, l, opts);
        let ctx = LevelCtx {
            tables: &tables,
            level: l,
            sign,
            p: fp.p(sign),
            q: fp.q(sign),
            thr_z: (-opts.zeta1 * l as f64).exp(),
            thr_t: opts.tail_threshold,
            seed: opts.seed,
        };
        let s1 = run_stratum(&ctx, true, n / 2);
        let s0 = run_stratum(&ctx, false, n - n / 2);
        levels.push(combine_level(&ctx, &s1, &s0));
    }
    let fit: Vec<&LevelEstimate> = levels
        .iter()
        .filter(|e| (opts.fit_levels.is_empty() || opts.fit_levels.contains(&e.level)) && !e.degenerate)
        .collect();
    let fitted_rate = if fit.len() >= 2 {
        let pts: Vec<(f64, f64)> = fit.iter().map(|e| (e.level as f64, e.x_var.value.ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((2.0 * sxy / sxx).exp())
    } else {
        None
    };
    let degenerate = levels.iter().any(|e| e.degenerate);
    Ok(DecayEstimate {
        d,
        lambda,
        sign,
        options: opts.clone(),
        levels,
        fitted_rate,
        predicted_rate: predicted_rate(fp),
        degenerate,
    })
}

/// (d-1)²(q⁺q⁻)², the two-level contraction of x_ℓ.
pub fn predicted_rate(fp: &TreeFixedPoints) -> f64 {
    let b = fp.d as f64 - 1.0;
    (b * fp.q_plus * fp.q_minus).powi(2)
}

/// Exact values at heights covered by the tables (no sampling).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLevel {
    pub level: usize,
    pub x: f64,
    pub x_var: f64,
    pub martingale_p: f64,
    pub martingale_q: f64,
    pub mean_abs_dev: f64,
}

pub fn exact_level(tables: &PosteriorTables, fp: &TreeFixedPoints, sign: i8, level: usize) -> Option<ExactLevel> {
    let a1 = tables.atoms(level, sign, true)?;
    let a0 = tables.atoms(level, sign, false)?;
    let (p, q) = (fp.p(sign), fp.q(sign));
    let xt = |x: f64| tilde_from_q(&x, &p, &q);
    let e1 = a1.expect(xt);
    let e0 = a0.expect(xt);
    let sq = |x: f64| (xt(x) - p).powi(2);
    Some(ExactLevel {
        level,
        x: e1 - p,
        x_var: (p * a1.expect(sq) + (1.0 - p) * a0.expect(sq)) / p,
        martingale_p: p * e1 + (1.0 - p) * e0 - p,
        martingale_q: q * a1.expect(|x| x) + (1.0 - q) * a0.expect(|x| x) - q,
        mean_abs_dev: q * a1.expect(|x| (x - q).abs()) + (1.0 - q) * a0.expect(|x| (x - q).abs()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub level: usize,
    pub threshold: f64,
    pub prob: Est,
    pub samples: usize,
}

/// P(|X - q^s| ≥ exp(-ζ₁ℓ)) under the q-prior model.
pub fn concentration_tail(
    fp: &TreeFixedPoints,
    d: u32,
    lambda: f64,
    sign: i8,
    level: usize,
    zeta1: f64,
    samples: usize,
    seed: u64,
) -> Result<TailEstimate> {
    check_model(fp, d, lambda, sign)?;
    if !(zeta1 >= 0.0) {
        return Err(Error::domain("ζ₁ must be nonnegative"));
    }
    let tables = PosteriorTables::new(BroadcastKernel::from_fixed_points(fp), d, lambda, usize::MAX)?;
    let ctx = LevelCtx {
        tables: &tables,
        level,
        sign,
        p: fp.p(sign),
        q: fp.q(sign),
        thr_z: (-zeta1 * level as f64).exp(),
        thr_t: None,
        seed,
    };
    let samples = samples.max(2);
    let s1 = run_stratum(&ctx, true, samples / 2);
    let s0 = run_stratum(&ctx, false, samples - samples / 2);
    let e = combine_level(&ctx, &s1, &s0);
    Ok(TailEstimate { level, threshold: ctx.thr_z, prob: e.tail_zeta, samples })
}
