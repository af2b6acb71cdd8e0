use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::{Graph, Label};
use crate::error::{Error, Result};

/// Size parameters of a gadget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadgetSpec {
    /// Side size |W+| = |W-|.
    pub n: usize,
    pub d: u32,
    /// None when the sizes were set directly.
    pub theta: Option<f64>,
    pub psi: Option<f64>,
    /// Trees (and ports) per side.
    pub m: usize,
    /// Depth of each (d-1)-ary tree, even.
    pub tree_depth: u32,
    /// Leaves per side, m (d-1)^tree_depth = |U+|.
    pub m_prime: usize,
    pub seed: u64,
}

/// Largest e with b^e <= x^t, guarded against rounding at exact powers.
fn floor_log(t: f64, x: f64, b: f64) -> u32 {
    if x <= 1.0 || t <= 0.0 {
        return 0;
    }
    let target = t * x.ln();
    let mut e = (target / b.ln()).floor().max(0.0) as u32;
    while (e + 1) as f64 * b.ln() <= target + 1e-12 {
        e += 1;
    }
    while e > 0 && e as f64 * b.ln() > target + 1e-12 {
        e -= 1;
    }
    e
}

impl GadgetSpec {
    /// Sizes from the exponents: m = (d-1)^⌊θ log n⌋, depth = 2⌊(ψ/2) log n⌋.
    pub fn new(n: usize, theta: f64, psi: f64, d: u32, seed: u64) -> Result<Self> {
        if d < 3 {
            return Err(Error::domain(format!("d must be >= 3, got {d}")));
        }
        if !(theta > 0.0 && theta < 0.125) {
            return Err(Error::domain(format!("theta must lie in (0, 1/8), got {theta}")));
        }
        if !(psi > 0.0 && psi < 0.125) {
            return Err(Error::domain(format!("psi must lie in (0, 1/8), got {psi}")));
        }
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        let b = (d - 1) as f64;
        let m = (d as usize - 1).pow(floor_log(theta, n as f64, b));
        let tree_depth = 2 * floor_log(psi / 2.0, n as f64, b);
        let mut s = Self::with_sizes(n, m, tree_depth, d, seed)?;
        s.theta = Some(theta);
        s.psi = Some(psi);
        Ok(s)
    }

    /// Explicit sizes, for desk-scale experiments where the exponents would
    /// force m = 1 and depth 0.
    pub fn with_sizes(n: usize, m: usize, tree_depth: u32, d: u32, seed: u64) -> Result<Self> {
        if d < 3 {
            return Err(Error::domain(format!("d must be >= 3, got {d}")));
        }
        if tree_depth % 2 != 0 {
            return Err(Error::domain(format!("tree depth must be even, got {tree_depth}")));
        }
        let m_prime = (d as usize - 1)
            .checked_pow(tree_depth)
            .and_then(|l| l.checked_mul(m))
            .ok_or_else(|| Error::Resource("tree size overflows".into()))?;
        Ok(GadgetSpec { n, d, theta: None, psi: None, m, tree_depth, m_prime, seed })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GadgetSpec { seed, ..self }
    }

    /// Cross-edges per H-edge and sign class, max(1, ⌊n^{3θ/4}⌋); 1 when θ is unset.
    pub fn default_k(&self) -> usize {
        match self.theta {
            Some(t) => ((self.n as f64).powf(0.75 * t).floor() as usize).max(1),
            None => 1,
        }
    }

    /// Vertices added by the trees on one side (internal vertices and roots).
    pub fn tree_vertices_per_side(&self) -> usize {
        let b = self.d as usize - 1;
        (0..self.tree_depth).map(|l| self.m * b.pow(l)).sum()
    }

    /// Vertex count of G: 2n + 2m' + 2·(tree vertices above the leaves).
    pub fn gadget_size(&self) -> usize {
        2 * self.n + 2 * self.m_prime + 2 * self.tree_vertices_per_side()
    }
}

/// The bipartite graph G̃: d-1 uniform perfect matchings of W+∪U+ with
/// W-∪U-, then one of W+ with W-. Parallel edges are collapsed in the
/// adjacency and kept in the edge multiset.
///
/// Layout: W+ = [0, n), W- = [n, 2n), U+ = [2n, 2n+m'), U- = [2n+m', 2n+2m').
pub fn sample_gtilde(spec: &GadgetSpec) -> Graph {
    let (n, mp) = (spec.n, spec.m_prime);
    let mut g = Graph::new(spec.d);
    for (count, l) in [(n, Label::WPlus), (n, Label::WMinus), (mp, Label::UPlus), (mp, Label::UMinus)] {
        for _ in 0..count {
            g.add_vertex(l, 0);
        }
    }
    let plus = |i: usize| if i < n { i } else { 2 * n + (i - n) };
    let minus = |j: usize| if j < n { n + j } else { 2 * n + mp + (j - n) };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut perm: Vec<usize> = (0..n + mp).collect();
    for _ in 0..spec.d - 1 {
        perm.shuffle(&mut rng);
        for (i, &j) in perm.iter().enumerate() {
            g.add_edge(plus(i), minus(j)).expect("in range");
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    for (i, &j) in perm.iter().enumerate() {
        g.add_edge(i, n + j).expect("in range");
    }
    g
}

/// Attach m (d-1)-ary trees of depth `tree_depth` per side, identifying the
/// leaves with U± in index order. Roots are labelled V± (UV± at depth 0).
pub fn append_trees(gt: &Graph, spec: &GadgetSpec) -> Result<Graph> {
    let mut g = gt.clone();
    let b = spec.d as usize - 1;
    let leaves_per_tree = b.pow(spec.tree_depth);
    for (u_label, v_label, t_label, uv_label) in [
        (Label::UPlus, Label::VPlus, Label::TPlus, Label::UVPlus),
        (Label::UMinus, Label::VMinus, Label::TMinus, Label::UVMinus),
    ] {
        let leaves = g.vertices_with(u_label);
        if leaves.len() != spec.m * leaves_per_tree {
            return Err(Error::Consistency(format!(
                "{} {u_label} vertices, expected m (d-1)^depth = {}",
                leaves.len(),
                spec.m * leaves_per_tree
            )));
        }
        if spec.tree_depth == 0 {
            for &u in &leaves {
                g.set_label(u, uv_label);
            }
            continue;
        }
        for t in 0..spec.m {
            // levels[0] = root, ..., levels[depth] = the leaves of this tree
            let mut levels: Vec<Vec<usize>> = Vec::with_capacity(spec.tree_depth as usize + 1);
            for l in 0..spec.tree_depth as usize {
                let lab = if l == 0 { v_label } else { t_label };
                let count = b.pow(l as u32);
                levels.push((0..count).map(|_| g.add_vertex(lab, 0)).collect());
            }
            levels.push(leaves[t * leaves_per_tree..(t + 1) * leaves_per_tree].to_vec());
            for l in 0..spec.tree_depth as usize {
                for (i, &p) in levels[l].iter().enumerate() {
                    for c in 0..b {
                        g.add_edge(p, levels[l + 1][i * b + c])?;
                    }
                }
            }
        }
    }
    Ok(g)
}

/// G = append_trees(sample_gtilde(spec)).
pub fn sample_gadget(spec: &GadgetSpec) -> Result<Graph> {
    append_trees(&sample_gtilde(spec), spec)
}

/// Ports of one sign in a gadget, in index order.
pub fn ports(g: &Graph, sign: i8) -> Vec<usize> {
    (0..g.len()).filter(|&v| g.label(v).is_port() && g.label(v).side() == sign).collect()
}

/// H^G: one copy of the gadget per vertex of H, and for every H-edge (x, y)
/// k edges V+_x–V+_y and k edges V-_x–V-_y. Ports are consumed round-robin
/// in index order, each at most once, so no degree grows by more than one.
/// With k = 0 this is the disjoint union Ĥ^G.
pub fn build_hg(h: &Graph, gadget: &Graph, k: usize) -> Result<Graph> {
    let size = gadget.len();
    let mut out = Graph::new(gadget.d());
    for x in 0..h.len() {
        for v in 0..size {
            out.add_vertex(gadget.label(v), x as u32);
        }
        for &(u, v) in gadget.multi_edges() {
            out.add_edge(x * size + u as usize, x * size + v as usize)?;
        }
    }
    if k == 0 {
        return Ok(out);
    }
    let mut next = vec![[0usize; 2]; h.len()];
    let port_lists = [ports(gadget, 1), ports(gadget, -1)];
    for (x, y) in h.edges() {
        for (si, pl) in port_lists.iter().enumerate() {
            for _ in 0..k {
                let take = |z: usize, next: &mut Vec<[usize; 2]>| -> Result<usize> {
                    let i = next[z][si];
                    let p = *pl.get(i).ok_or_else(|| {
                        Error::Capacity(format!(
                            "gadget {z} has {} ports per side; needs k·deg_H = {}",
                            pl.len(),
                            k * h.degree(z)
                        ))
                    })?;
                    if gadget.degree(p) >= gadget.d() as usize {
                        return Err(Error::Capacity(format!("port {p} has no spare degree")));
                    }
                    next[z][si] += 1;
                    Ok(z * size + p)
                };
                let a = take(x, &mut next)?;
                let b = take(y, &mut next)?;
                out.add_edge(a, b)?;
                out.set_cross(a);
                out.set_cross(b);
            }
        }
    }
    Ok(out)
}
