//! Exact hardcore computations on small graphs: partition functions,
//! conditional partition functions, phase statistics, the product measures
//! Q_U/Q_V, closed-form moments and a Glauber sampler.

pub mod brute;
pub mod elim;
pub mod formulas;
pub mod glauber;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gadgets::Graph;
use crate::treegibbs::TreeFixedPoints;
pub use elim::{CountGrid, ElimOptions, Eliminator, Fugacity, Mark, PhaseSeries, Pinning, Weight};
pub use glauber::{glauber_chains, glauber_run, GlauberChain, GlauberTrace, Init};

/// Phase of a configuration: plus iff #W+ occupied ≥ #W- occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Plus,
    Minus,
}

impl Phase {
    pub fn of(w_plus: usize, w_minus: usize) -> Phase {
        if w_plus >= w_minus {
            Phase::Plus
        } else {
            Phase::Minus
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Phase::Plus => 1,
            Phase::Minus => -1,
        }
    }
}

pub fn exact_partition(g: &Graph, lambda: &BigRational) -> Result<BigRational> {
    exact_partition_with(g, lambda, ElimOptions::default())
}

pub fn exact_partition_with(g: &Graph, lambda: &BigRational, opts: ElimOptions) -> Result<BigRational> {
    let lam = Fugacity::new(lambda)?;
    let z: BigUint = elim::homogenised(g, &lam, opts)?;
    Ok(elim::dehomogenise(&z, &lam, g.len()))
}

/// U vertices (U±, including depth-0 roots) in index order; a boundary
/// condition η is one bit per entry.
pub fn u_vertices(g: &Graph) -> Vec<usize> {
    (0..g.len()).filter(|&v| g.label(v).is_u()).collect()
}

/// Ports V+ then V-, each in index order.
pub fn v_vertices(g: &Graph) -> (Vec<usize>, Vec<usize>) {
    let side = |s: i8| (0..g.len()).filter(|&v| g.label(v).is_port() && g.label(v).side() == s).collect();
    (side(1), side(-1))
}

fn eta_pinning(g: &Graph, eta: &[bool]) -> Result<Pinning> {
    let u = u_vertices(g);
    if eta.len() != u.len() {
        return Err(Error::Input(format!("boundary condition has {} bits, graph has {} U vertices", eta.len(), u.len())));
    }
    let mut pin = Pinning::default();
    for (&v, &b) in u.iter().zip(eta) {
        if b {
            pin.occupied.push(v);
        } else {
            pin.vacant.push(v);
        }
    }
    Ok(pin)
}

/// Count grid of Z(η) by occupied (W+, W-) numbers, rational entries;
/// None if η is not an independent set.
pub fn conditional_grid(g: &Graph, lambda: &BigRational, eta: &[bool]) -> Result<Option<Vec<Vec<BigRational>>>> {
    let lam = Fugacity::new(lambda)?;
    let pin = eta_pinning(g, eta)?;
    let mut el = Eliminator::<CountGrid>::new(g, &lam, ElimOptions::default())?;
    Ok(elim::pinned(&mut el, &pin)?.map(|grid| {
        grid.coef
            .iter()
            .map(|row| row.iter().map(|c| elim::dehomogenise(c, &lam, g.len())).collect())
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalValue {
    pub value: BigRational,
    /// false when η itself is not independent (value is then zero).
    pub consistent: bool,
}

/// Z(η), optionally restricted to a phase or to exact counts
/// (#W+, #W-) = (αn, βn).
pub fn conditional_partition(
    g: &Graph,
    lambda: &BigRational,
    eta: &[bool],
    phase: Option<Phase>,
    counts: Option<(usize, usize)>,
) -> Result<ConditionalValue> {
    let Some(grid) = conditional_grid(g, lambda, eta)? else {
        return Ok(ConditionalValue { value: BigRational::zero(), consistent: false });
    };
    let mut v = BigRational::zero();
    for (a, row) in grid.iter().enumerate() {
        for (b, c) in row.iter().enumerate() {
            if counts.is_some_and(|ab| ab != (a, b)) {
                continue;
            }
            if phase.is_some_and(|p| p != Phase::of(a, b)) {
                continue;
            }
            v += c;
        }
    }
    Ok(ConditionalValue { value: v, consistent: true })
}

/// Q^±_V(σ_V) (or Q_U): product measure with densities q^± on the plus
/// ports and q^∓ on the minus ports for phase ±.
pub fn product_measure_q(fp: &TreeFixedPoints, plus: &[bool], minus: &[bool], phase: Phase) -> f64 {
    let (a, b) = match phase {
        Phase::Plus => (fp.q_plus, fp.q_minus),
        Phase::Minus => (fp.q_minus, fp.q_plus),
    };
    let f = |x: f64, s: &[bool]| s.iter().map(|&o| if o { x } else { 1.0 - x }).product::<f64>();
    f(a, plus) * f(b, minus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDiagnostic {
    /// max over σ_V of |P(σ_V | Y=+)/Q^+_V(σ_V) - 1|.
    pub max_ratio_plus: f64,
    pub max_ratio_minus: f64,
    pub ports_per_side: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStatistics {
    pub z: BigRational,
    pub z_plus: BigRational,
    pub z_minus: BigRational,
    pub p_plus: f64,
    pub p_minus: f64,
    pub ports: Option<PortDiagnostic>,
}

pub const MAX_PORT_BITS: usize = 16;

fn ratio_f64(a: &BigRational, b: &BigRational) -> f64 {
    (a / b).to_f64().unwrap_or(f64::NAN)
}

fn frac(a: &BigUint, b: &BigUint) -> f64 {
    if Zero::is_zero(b) {
        return f64::NAN;
    }
    BigRational::new(a.clone().into(), b.clone().into()).to_f64().unwrap_or(f64::NAN)
}

/// Exact phase probabilities; with fixed points supplied, also the
/// conditional port-marginal diagnostic against Q_V^±.
pub fn phase_statistics(g: &Graph, lambda: &BigRational, fp: Option<&TreeFixedPoints>) -> Result<PhaseStatistics> {
    let lam = Fugacity::new(lambda)?;
    let n = g.len();
    let mut el = Eliminator::<PhaseSeries>::new(g, &lam, ElimOptions::default())?;
    let full = el.full();
    let series = el.z(full)?;
    let (zp, zm) = series.split();
    let z = elim::dehomogenise(&series.total(), &lam, n);
    let z_plus = elim::dehomogenise(&zp, &lam, n);
    let z_minus = elim::dehomogenise(&zm, &lam, n);
    let p_plus = ratio_f64(&z_plus, &z);
    let p_minus = ratio_f64(&z_minus, &z);

    let ports = match fp {
        None => None,
        Some(fp) => {
            let (vp, vm) = v_vertices(g);
            let bits = vp.len() + vm.len();
            if bits > MAX_PORT_BITS {
                return Err(Error::Resource(format!("{bits} ports exceed the {MAX_PORT_BITS}-bit enumeration cap")));
            }
            let all: Vec<usize> = vp.iter().chain(&vm).copied().collect();
            let (mut worst_p, mut worst_m) = (0.0f64, 0.0f64);
            for mask in 0u32..(1 << bits) {
                let mut pin = Pinning::default();
                for (i, &v) in all.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        pin.occupied.push(v);
                    } else {
                        pin.vacant.push(v);
                    }
                }
                let sp: Vec<bool> = (0..vp.len()).map(|i| mask >> i & 1 == 1).collect();
                let sm: Vec<bool> = (0..vm.len()).map(|i| mask >> (vp.len() + i) & 1 == 1).collect();
                let (cp, cm) = match elim::pinned(&mut el, &pin)? {
                    Some(s) => s.split(),
                    None => (BigUint::zero(), BigUint::zero()),
                };
                let pp = frac(&cp, &zp);
                let pm = frac(&cm, &zm);
                worst_p = worst_p.max((pp / product_measure_q(fp, &sp, &sm, Phase::Plus) - 1.0).abs());
                worst_m = worst_m.max((pm / product_measure_q(fp, &sp, &sm, Phase::Minus) - 1.0).abs());
            }
            Some(PortDiagnostic { max_ratio_plus: worst_p, max_ratio_minus: worst_m, ports_per_side: vp.len() })
        }
    };
    Ok(PhaseStatistics { z, z_plus, z_minus, p_plus, p_minus, ports })
}

/// Fraction of sweeps in the plus phase along a Glauber chain from the
/// empty set, after `burn_in` sweeps.
pub fn phase_fraction_mc(g: &Graph, lambda: f64, sweeps: usize, burn_in: usize, seed: u64) -> Result<f64> {
    Ok(glauber_run(g, lambda, sweeps, &Init::Empty, seed)?.plus_fraction(burn_in + 1))
}

/// Monte Carlo means of Z^{α,β}(η) and its square over sampled G̃, next to
/// the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub alpha: BigRational,
    pub beta: BigRational,
    pub eta: (usize, usize),
    pub graphs: usize,
    pub first_formula: f64,
    pub first_mean: f64,
    pub first_se: f64,
    pub second_formula: f64,
    pub second_mean: f64,
    pub second_se: f64,
}

impl MomentCheck {
    /// |mean - formula| in standard errors, for the first and second moment.
    pub fn z_scores(&self) -> (f64, f64) {
        let z = |m: f64, f: f64, se: f64| if se > 0.0 { (m - f).abs() / se } else if m == f { 0.0 } else { f64::INFINITY };
        (z(self.first_mean, self.first_formula, self.first_se), z(self.second_mean, self.second_formula, self.second_se))
    }
}

/// Boundary with the first ep U+ and the first em U- vertices occupied.
pub fn eta_from_counts(g: &Graph, eta: (usize, usize)) -> Vec<bool> {
    let (mut ep, mut em) = eta;
    u_vertices(g)
        .iter()
        .map(|&v| {
            let c = if g.label(v).side() > 0 { &mut ep } else { &mut em };
            if *c > 0 {
                *c -= 1;
                true
            } else {
                false
            }
        })
        .collect()
}

/// Samples `graphs` copies of G̃ (seeds seed, seed+1, ...) and compares the
/// empirical moments of Z^{α,β}(η) against the exact formulas, for every
/// (α, β) in `pairs` at once.
pub fn moment_monte_carlo(
    spec: &crate::gadgets::GadgetSpec,
    pairs: &[(BigRational, BigRational)],
    eta: (usize, usize),
    lambda: &BigRational,
    graphs: usize,
    seed: u64,
) -> Result<Vec<MomentCheck>> {
    use rayon::prelude::*;
    if spec.tree_depth != 0 {
        return Err(Error::domain("moment checks use G̃ (tree depth 0 sizes)"));
    }
    if graphs < 2 {
        return Err(Error::domain("need at least two graphs"));
    }
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(a, b)| Ok((formulas::scaled_count(spec.n, a, "alpha")?, formulas::scaled_count(spec.n, b, "beta")?)))
        .collect::<Result<_>>()?;
    const CHUNK: usize = 256;
    let chunks = graphs.div_ceil(CHUNK);
    let sums: Vec<Vec<[f64; 4]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![[0.0f64; 4]; pairs.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(graphs) {
                let g = crate::gadgets::sample_gtilde(&spec.with_seed(seed.wrapping_add(i as u64)));
                let grid = conditional_grid(&g, lambda, &eta_from_counts(&g, eta))?;
                for (k, &(a, b)) in idx.iter().enumerate() {
                    let z = grid
                        .as_ref()
                        .and_then(|gr| gr.get(a).and_then(|r| r.get(b)))
                        .map_or(0.0, |v| v.to_f64().unwrap_or(f64::NAN));
                    acc[k][0] += z;
                    acc[k][1] += z * z;
                    acc[k][2] += z * z;
                    acc[k][3] += z * z * z * z;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let n = graphs as f64;
    pairs
        .iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let s: [f64; 4] = sums.iter().fold([0.0; 4], |mut t, part| {
                for j in 0..4 {
                    t[j] += part[k][j];
                }
                t
            });
            let m1 = s[0] / n;
            let m2 = s[2] / n;
            let se = |mean: f64, sq: f64| ((sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
            Ok(MomentCheck {
                alpha: a.clone(),
                beta: b.clone(),
                eta,
                graphs,
                first_formula: formulas::expected_z(spec, a, b, eta, lambda)?.to_f64().unwrap_or(f64::NAN),
                first_mean: m1,
                first_se: se(m1, s[1]),
                second_formula: formulas::expected_z2(spec, a, b, eta, lambda)?.to_f64().unwrap_or(f64::NAN),
                second_mean: m2,
                second_se: se(m2, s[3]),
            })
        })
        .collect()
}
