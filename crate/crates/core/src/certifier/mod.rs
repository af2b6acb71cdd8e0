//! Interval certification of the second-moment condition at λ = 1, d = 6.
//!
//! Each grid cell is bounded twice, by the natural interval extension and by
//! the mean-value form around the cell centre, and the intersection is kept.
//! Cells that miss a threshold are bisected in both directions up to
//! `refine` levels; a child's bound is always intersected with its parent's,
//! so refinement never loosens a bound.

pub mod dual;
pub mod enclosure;
pub mod expr;
pub mod interval;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::treegibbs::TreeFixedPoints;
use dual::{Dual2, IvNum};
pub use enclosure::{enclose_fixed_points, FixedPointEnclosure};
pub use interval::{rounding, set_rounding, Interval, Rounding};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Half-width of the (α, β) box around the enclosed (p-, p+).
    pub nbhd: f64,
    /// (γ cells, δ cells); δ cells tile [0.01, 0.33].
    pub grid: (usize, usize),
    /// Maximum bisection depth for failing cells.
    pub refine: u32,
    pub h1_threshold: f64,
    pub phi_threshold: f64,
    pub rounding: Rounding,
    /// Worker threads; None uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            nbhd: 1e-9,
            grid: (100, 32),
            refine: 4,
            h1_threshold: -17.0,
            phi_threshold: 1500.0,
            rounding: Rounding::Directed,
            threads: None,
        }
    }
}

pub const DELTA_LO: f64 = 0.01;
pub const DELTA_HI: f64 = 0.33;

/// The (α, β) box used by the certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBox {
    pub alpha: Interval,
    pub beta: Interval,
    pub enclosure: FixedPointEnclosure,
}

pub fn parameter_box(fp: &TreeFixedPoints, nbhd: f64) -> Result<ParameterBox> {
    if !(nbhd >= 0.0) || !nbhd.is_finite() {
        return Err(Error::domain("nbhd must be a nonnegative real"));
    }
    let enclosure = enclose_fixed_points(fp)?;
    Ok(ParameterBox {
        alpha: enclosure.p_minus.inflate(nbhd),
        beta: enclosure.p_plus.inflate(nbhd),
        enclosure,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    /// γ-cell index, 0-based.
    pub i: usize,
    /// δ-cell index, 1-based (j = 1 is [0.01, 0.02] on the default grid).
    pub j: usize,
    pub gamma: Interval,
    pub delta: Interval,
    pub h1_upper: f64,
    pub phi_lower: f64,
    /// Bisection depth actually used (0 = the cell itself).
    pub depth: u32,
    pub leaves: usize,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub d: u32,
    pub lambda: f64,
    pub options: CertifyOptions,
    pub params: ParameterBox,
    pub cells: Vec<CellResult>,
    pub pass: bool,
    pub wall_time: Duration,
}

impl CertificationReport {
    pub fn max_h1_upper(&self) -> f64 {
        self.cells.iter().map(|c| c.h1_upper).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_phi_lower(&self) -> f64 {
        self.cells.iter().map(|c| c.phi_lower).fold(f64::INFINITY, f64::min)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| !c.pass)
    }

    pub fn refined(&self) -> usize {
        self.cells.iter().filter(|c| c.depth > 0).count()
    }

    fn worst_by<F: Fn(&CellResult) -> f64>(&self, key: F) -> Option<&CellResult> {
        self.cells.iter().max_by(|a, b| key(a).total_cmp(&key(b)))
    }

    /// Structured text. Wall time is left out unless asked for, so that the
    /// report is byte-identical across runs.
    pub fn to_text(&self, with_timing: bool) -> String {
        let o = &self.options;
        let mut s = String::new();
        let _ = writeln!(s, "# certification report");
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "nbhd = {:e}", o.nbhd);
        let _ = writeln!(s, "q_plus = {}", self.params.enclosure.q_plus);
        let _ = writeln!(s, "q_minus = {}", self.params.enclosure.q_minus);
        let _ = writeln!(s, "alpha = {}", self.params.alpha);
        let _ = writeln!(s, "beta = {}", self.params.beta);
        let _ = writeln!(s, "grid = {}x{}", o.grid.0, o.grid.1);
        let _ = writeln!(s, "gamma_cells = 0..{}", o.grid.0 - 1);
        let _ = writeln!(s, "delta_cells = 1..{}", o.grid.1);
        let _ = writeln!(s, "delta_range = [{DELTA_LO}, {DELTA_HI}]");
        let _ = writeln!(s, "refine_depth = {}", o.refine);
        let _ = writeln!(s, "rounding = {:?}", o.rounding);
        let _ = writeln!(s, "h1_threshold = {}", o.h1_threshold);
        let _ = writeln!(s, "phi_threshold = {}", o.phi_threshold);
        let _ = writeln!(s, "max_h1_upper = {:.17e}", self.max_h1_upper());
        let _ = writeln!(s, "min_phi_lower = {:.17e}", self.min_phi_lower());
        let _ = writeln!(s, "cells = {}", self.cells.len());
        let _ = writeln!(s, "cells_refined = {}", self.refined());
        let _ = writeln!(s, "cells_failed = {}", self.failing().count());
        if let Some(c) = self.worst_by(|c| c.h1_upper) {
            let _ = writeln!(s, "worst_h1 = {} {} {:.17e}", c.i, c.j, c.h1_upper);
        }
        if let Some(c) = self.worst_by(|c| -c.phi_lower) {
            let _ = writeln!(s, "worst_phi = {} {} {:.17e}", c.i, c.j, c.phi_lower);
        }
        if with_timing {
            let _ = writeln!(s, "wall_time_ms = {}", self.wall_time.as_millis());
        }
        let _ = writeln!(s, "verdict = {}", if self.pass { "pass" } else { "fail" });
        let _ = writeln!(
            s,
            "cell,i,j,gamma_lo,gamma_hi,delta_lo,delta_hi,h1_upper,phi_lower,depth,leaves,pass,error"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "cell,{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{},{}",
                c.i,
                c.j,
                c.gamma.lo(),
                c.gamma.hi(),
                c.delta.lo(),
                c.delta.hi(),
                c.h1_upper,
                c.phi_lower,
                c.depth,
                c.leaves,
                c.pass,
                c.error.as_deref().unwrap_or("")
            );
        }
        s
    }
}

/// Bounds (upper h1, lower Φ) on one box: natural extension ∩ mean-value form.
pub fn bound_box(pb: &ParameterBox, g: Interval, dl: Interval, d: u32) -> Result<(f64, f64)> {
    let (a, b) = (pb.alpha, pb.beta);
    let (gm, dm) = (Interval::point(g.mid()), Interval::point(dl.mid()));
    let (hc, pc) = expr::h1_phi::<Interval>(a, b, gm, dm, d)?;
    let (hd, pd) =
        expr::h1_phi(Dual2::cst(a), Dual2::cst(b), Dual2::var(g, 0), Dual2::var(dl, 1), d)?;
    let mv = |c: Interval, x: Dual2| c + x.g[0] * (g - gm) + x.g[1] * (dl - dm);
    let h = hd.v.intersect(mv(hc, hd));
    let p = pd.v.intersect(mv(pc, pd));
    match (h, p) {
        (Some(h), Some(p)) if h.is_finite() && p.is_finite() => Ok((h.hi(), p.lo())),
        _ => Err(Error::IntervalDomain("disjoint or non-finite enclosures".into())),
    }
}

struct Node {
    h1: f64,
    phi: f64,
    depth: u32,
    leaves: usize,
    pass: bool,
    error: Option<String>,
}

fn certify_box(
    pb: &ParameterBox,
    g: Interval,
    dl: Interval,
    d: u32,
    o: &CertifyOptions,
    left: u32,
    parent: (f64, f64),
) -> Node {
    let (h1, phi, error) = match bound_box(pb, g, dl, d) {
        Ok((h, p)) => (h.min(parent.0), p.max(parent.1), None),
        Err(e) => (parent.0, parent.1, Some(e.to_string())),
    };
    let pass = error.is_none() && h1 < o.h1_threshold && phi > o.phi_threshold;
    if pass || left == 0 {
        return Node { h1, phi, depth: 0, leaves: 1, pass, error };
    }
    let (g0, g1) = g.bisect();
    let (d0, d1) = dl.bisect();
    let kids = [(g0, d0), (g0, d1), (g1, d0), (g1, d1)]
        .map(|(gg, dd)| certify_box(pb, gg, dd, d, o, left - 1, (h1, phi)));
    Node {
        h1: kids.iter().map(|k| k.h1).fold(f64::NEG_INFINITY, f64::max),
        phi: kids.iter().map(|k| k.phi).fold(f64::INFINITY, f64::min),
        depth: 1 + kids.iter().map(|k| k.depth).max().unwrap_or(0),
        leaves: kids.iter().map(|k| k.leaves).sum(),
        pass: kids.iter().all(|k| k.pass),
        error: kids.iter().find_map(|k| k.error.clone()),
    }
}

/// γ cell i of n: [α_lo·i/n, α_hi·(i+1)/n].
pub fn gamma_cell(alpha: Interval, i: usize, n: usize) -> Interval {
    let lo = (Interval::point(alpha.lo()) * Interval::ratio(i as f64, n as f64)).lo();
    let hi = (Interval::point(alpha.hi()) * Interval::ratio((i + 1) as f64, n as f64)).hi();
    Interval::new(lo, hi).expect("ordered")
}

/// δ cell j (1-based) of n tiling [0.01, 0.33].
pub fn delta_cell(j: usize, n: usize) -> Interval {
    // 0.01 + 0.32 k / n = (n + 32 k) / (100 n)
    let at = |k: usize| Interval::ratio((n + 32 * k) as f64, (100 * n) as f64);
    Interval::new(at(j - 1).lo(), at(j).hi()).expect("ordered")
}

/// Bounds for a single cell at the given refinement depth.
pub fn certify_cell(
    pb: &ParameterBox,
    i: usize,
    j: usize,
    d: u32,
    o: &CertifyOptions,
) -> CellResult {
    let prev = set_rounding(o.rounding);
    let g = gamma_cell(pb.alpha, i, o.grid.0);
    let dl = delta_cell(j, o.grid.1);
    let n = certify_box(pb, g, dl, d, o, o.refine, (f64::INFINITY, f64::NEG_INFINITY));
    set_rounding(prev);
    CellResult {
        i,
        j,
        gamma: g,
        delta: dl,
        h1_upper: n.h1,
        phi_lower: n.phi,
        depth: n.depth,
        leaves: n.leaves,
        pass: n.pass,
        error: n.error,
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Resource(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn certify_condition1(fp: &TreeFixedPoints, opts: &CertifyOptions) -> Result<CertificationReport> {
    if fp.d != 6 || fp.lambda != 1.0 {
        return Err(Error::domain("certification is implemented for d = 6, λ = 1 only"));
    }
    if opts.grid.0 == 0 || opts.grid.1 == 0 {
        return Err(Error::domain("grid dimensions must be positive"));
    }
    let start = Instant::now();
    let pb = parameter_box(fp, opts.nbhd)?;
    let (ni, nj) = opts.grid;
    let idx: Vec<(usize, usize)> =
        (0..ni).flat_map(|i| (1..=nj).map(move |j| (i, j))).collect();
    let cells: Vec<CellResult> = in_pool(opts.threads, || {
        idx.par_iter().map(|&(i, j)| certify_cell(&pb, i, j, fp.d, opts)).collect()
    })?;
    let pass = cells.iter().all(|c| c.pass);
    Ok(CertificationReport {
        d: fp.d,
        lambda: fp.lambda,
        options: *opts,
        params: pb,
        cells,
        pass,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrelimItem {
    pub key: &'static str,
    pub statement: &'static str,
    pub value: Interval,
    pub pass: bool,
    /// Distance of the enclosure from the threshold (negative when failing).
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreliminaryReport {
    pub nbhd: f64,
    pub params: ParameterBox,
    pub items: Vec<PrelimItem>,
    pub pass: bool,
}

impl PreliminaryReport {
    pub fn item(&self, key: &str) -> Option<&PrelimItem> {
        self.items.iter().find(|i| i.key == key)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# preliminary bounds");
        let _ = writeln!(s, "nbhd = {:e}", self.nbhd);
        let _ = writeln!(s, "alpha = {}", self.params.alpha);
        let _ = writeln!(s, "beta = {}", self.params.beta);
        for it in &self.items {
            let _ = writeln!(
                s,
                "prelim,{},{},{},{:.6e},{}",
                it.key,
                it.statement,
                it.value,
                it.margin,
                if it.pass { "pass" } else { "fail" }
            );
        }
        let _ = writeln!(s, "verdict = {}", if self.pass { "pass" } else { "fail" });
        s
    }
}

fn above(key: &'static str, statement: &'static str, v: Interval, t: f64) -> PrelimItem {
    PrelimItem { key, statement, value: v, pass: v.lo() > t, margin: v.lo() - t }
}

fn below(key: &'static str, statement: &'static str, v: Interval, t: f64) -> PrelimItem {
    PrelimItem { key, statement, value: v, pass: v.hi() < t, margin: t - v.hi() }
}

/// The scalar bounds that reduce the certification to the grid region.
pub fn certify_preliminaries(fp: &TreeFixedPoints, nbhd: f64) -> Result<PreliminaryReport> {
    if fp.d != 6 || fp.lambda != 1.0 {
        return Err(Error::domain("preliminary bounds are implemented for d = 6, λ = 1 only"));
    }
    let d = fp.d;
    let pb = parameter_box(fp, nbhd)?;
    let (a, b) = (pb.alpha, pb.beta);
    let (a2, b2) = (a.powi(2), b.powi(2));
    let one = Interval::point(1.0);
    let d015 = Interval::ratio(15.0, 1000.0);
    let d330 = Interval::ratio(33.0, 100.0);

    let star = expr::ghat_lambda1(a, b, a2, b2, d)?;
    let f1a = expr::f1(a, a2)?;
    let low = f1a + expr::f1(b, d015)?;
    let high = f1a + expr::f1(b, d330)?;
    let ab = (Interval::point(4.0) * a * b).div((one - a - b).powi(2))?;
    let [gg, dd, gd] = expr::hessian_ghat(a, b, a2, b2, d)?;
    let det = gg * dd - gd * gd;

    let mut items = vec![
        above("a", "ghat((p-)^2,(p+)^2) > 1.430", star, 1.430),
        below("b", "f1(p-,(p-)^2) + f2(p+,0.015) < 1.425", low, 1.425),
        below("c", "f1(p-,(p-)^2) + f2(p+,0.330) < 1.414", high, 1.414),
        below("d", "4ab/(1-a-b)^2 <= 0.19", ab, 0.19),
        below("e_gg", "d2ghat/dgamma2 < 0 at star", gg, 0.0),
        above("e_det", "det D2ghat > 0 at star", det, 0.0),
    ];
    // f2(β, ·) increases below β² and decreases above it, f1(α, ·) peaks at α²;
    // with (a)-(c) this confines the maximiser to 0.015 < δ < 0.330.
    let inside = b2.lo() > d015.hi() && b2.hi() < d330.lo();
    let abc = items[..3].iter().all(|i| i.pass);
    items.push(PrelimItem {
        key: "f",
        statement: "region reduction to 0.015 <= delta <= 0.330",
        value: b2,
        pass: inside && abc,
        margin: (b2.lo() - d015.hi()).min(d330.lo() - b2.hi()),
    });
    let pass = items.iter().all(|i| i.pass);
    Ok(PreliminaryReport { nbhd, params: pb, items, pass })
}

/// Largest neighbourhood (on a log scale between `lo` and `hi`) for which both
/// the preliminaries and the grid certification still pass.
pub fn max_certified_nbhd(
    fp: &TreeFixedPoints,
    opts: &CertifyOptions,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Option<f64>> {
    let ok = |n: f64| -> Result<bool> {
        let o = CertifyOptions { nbhd: n, ..*opts };
        // a box so wide that an enclosure leaves the domain is simply not certified
        let prelim = match certify_preliminaries(fp, n) {
            Ok(r) => r.pass,
            Err(Error::IntervalDomain(_)) => false,
            Err(e) => return Err(e),
        };
        Ok(prelim && certify_condition1(fp, &o)?.pass)
    };
    if !ok(lo)? {
        return Ok(None);
    }
    if ok(hi)? {
        return Ok(Some(hi));
    }
    let (mut l, mut h) = (lo.ln(), hi.ln());
    for _ in 0..steps {
        let m = 0.5 * (l + h);
        if ok(m.exp())? { l = m } else { h = m }
    }
    Ok(Some(l.exp()))
}
