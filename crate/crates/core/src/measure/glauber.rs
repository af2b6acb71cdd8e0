//! Heat-bath single-site Glauber dynamics for the hardcore model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gadgets::{Graph, Label};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Init {
    Empty,
    /// All of W+ occupied.
    Plus,
    /// All of W- occupied.
    Minus,
    Given(Vec<bool>),
}

impl std::str::FromStr for Init {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "empty" => Ok(Init::Empty),
            "plus" => Ok(Init::Plus),
            "minus" => Ok(Init::Minus),
            _ => Err(format!("unknown init {s:?} (empty|plus|minus)")),
        }
    }
}

pub fn initial_state(g: &Graph, init: &Init) -> Result<Vec<bool>> {
    let s = match init {
        Init::Empty => vec![false; g.len()],
        Init::Plus => (0..g.len()).map(|v| g.label(v) == Label::WPlus).collect(),
        Init::Minus => (0..g.len()).map(|v| g.label(v) == Label::WMinus).collect(),
        Init::Given(s) => s.clone(),
    };
    if !g.is_independent(&s) {
        return Err(Error::Input("initial configuration is not an independent set".into()));
    }
    Ok(s)
}

pub struct GlauberChain<'g> {
    g: &'g Graph,
    state: Vec<bool>,
    rng: ChaCha8Rng,
    p_occ: f64,
}

impl<'g> GlauberChain<'g> {
    pub fn new(g: &'g Graph, lambda: f64, init: &Init, seed: u64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain("fugacity must be a nonnegative real"));
        }
        Ok(GlauberChain {
            g,
            state: initial_state(g, init)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            p_occ: lambda / (1.0 + lambda),
        })
    }

    /// One heat-bath update at a uniformly chosen vertex.
    pub fn step(&mut self) {
        if self.g.is_empty() {
            return;
        }
        let v = self.rng.gen_range(0..self.g.len());
        let u: f64 = self.rng.gen();
        let blocked = self.g.neighbors(v).iter().any(|&w| self.state[w as usize]);
        self.state[v] = !blocked && u < self.p_occ;
    }

    /// |V| updates.
    pub fn sweep(&mut self) {
        for _ in 0..self.g.len() {
            self.step();
        }
    }

    pub fn state(&self) -> &[bool] {
        &self.state
    }

    /// (occupied W+, occupied W-).
    pub fn w_counts(&self) -> (usize, usize) {
        let mut c = (0, 0);
        for (v, &s) in self.state.iter().enumerate() {
            if s {
                match self.g.label(v) {
                    Label::WPlus => c.0 += 1,
                    Label::WMinus => c.1 += 1,
                    _ => {}
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlauberTrace {
    pub seed: u64,
    pub lambda: f64,
    /// Per sweep (entry 0 is the initial state).
    pub w_plus: Vec<usize>,
    pub w_minus: Vec<usize>,
    pub phase: Vec<i8>,
    pub final_state: Vec<bool>,
}

impl GlauberTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sweep,w_plus,w_minus,phase\n");
        for i in 0..self.phase.len() {
            s.push_str(&format!("{i},{},{},{}\n", self.w_plus[i], self.w_minus[i], self.phase[i]));
        }
        s
    }

    /// Fraction of recorded sweeps (after `burn_in`) spent in the plus phase.
    pub fn plus_fraction(&self, burn_in: usize) -> f64 {
        let tail = &self.phase[burn_in.min(self.phase.len())..];
        tail.iter().filter(|&&p| p > 0).count() as f64 / tail.len().max(1) as f64
    }

    /// Did the phase stay at its initial value throughout?
    pub fn phase_held(&self) -> bool {
        self.phase.windows(2).all(|w| w[0] == w[1])
    }
}

fn phase_of(c: (usize, usize)) -> i8 {
    if c.0 >= c.1 {
        1
    } else {
        -1
    }
}

pub fn glauber_run(g: &Graph, lambda: f64, sweeps: usize, init: &Init, seed: u64) -> Result<GlauberTrace> {
    let mut ch = GlauberChain::new(g, lambda, init, seed)?;
    let mut tr = GlauberTrace {
        seed,
        lambda,
        w_plus: Vec::with_capacity(sweeps + 1),
        w_minus: Vec::with_capacity(sweeps + 1),
        phase: Vec::with_capacity(sweeps + 1),
        final_state: vec![],
    };
    let mut record = |ch: &GlauberChain| {
        let c = ch.w_counts();
        tr.w_plus.push(c.0);
        tr.w_minus.push(c.1);
        tr.phase.push(phase_of(c));
    };
    record(&ch);
    for _ in 0..sweeps {
        ch.sweep();
        record(&ch);
    }
    tr.final_state = ch.state.clone();
    Ok(tr)
}

/// Independent chains in parallel, one per (init, seed).
pub fn glauber_chains(g: &Graph, lambda: f64, sweeps: usize, runs: &[(Init, u64)]) -> Result<Vec<GlauberTrace>> {
    runs.par_iter().map(|(i, s)| glauber_run(g, lambda, sweeps, i, *s)).collect()
}
