//! Independent oracles: exhaustive subset enumeration and the tree DP.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::gadgets::Graph;

pub const MAX_EXHAUSTIVE: usize = 26;

/// c[k] = number of independent sets of size k.
pub fn independence_counts(g: &Graph) -> Result<Vec<u64>> {
    let n = g.len();
    if n > MAX_EXHAUSTIVE {
        return Err(Error::Resource(format!("exhaustive enumeration capped at {MAX_EXHAUSTIVE} vertices")));
    }
    let adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u))).collect();
    let mut c = vec![0u64; n + 1];
    'sets: for s in 0u32..(1u32 << n) {
        let mut r = s;
        while r != 0 {
            let v = r.trailing_zeros() as usize;
            if adj[v] & s != 0 {
                continue 'sets;
            }
            r &= r - 1;
        }
        c[s.count_ones() as usize] += 1;
    }
    Ok(c)
}

/// Z(λ) by enumerating all 2^n subsets.
pub fn exhaustive_partition(g: &Graph, lambda: &BigRational) -> Result<BigRational> {
    let c = independence_counts(g)?;
    let mut z = BigRational::zero();
    let mut pow = BigRational::one();
    for ck in c {
        z += &pow * BigRational::from_integer(BigUint::from(ck).into());
        pow *= lambda;
    }
    Ok(z)
}

/// Z(λ) on a forest by the leaf-to-root recursion
/// Z0(v) = Π (Z0(c) + Z1(c)), Z1(v) = λ Π Z0(c).
pub fn tree_partition(g: &Graph, lambda: &BigRational) -> Result<BigRational> {
    if !g.is_forest() {
        return Err(Error::Input("tree DP needs a forest".into()));
    }
    let n = g.len();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut roots = vec![];
    for r in 0..n {
        if seen[r] {
            continue;
        }
        roots.push(r);
        seen[r] = true;
        let mut stack = vec![r];
        while let Some(u) = stack.pop() {
            order.push(u);
            for &v in g.neighbors(u) {
                let v = v as usize;
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = u;
                    stack.push(v);
                }
            }
        }
    }
    let mut z0 = vec![BigRational::one(); n];
    let mut z1 = vec![lambda.clone(); n];
    for &u in order.iter().rev() {
        let p = parent[u];
        if p != usize::MAX {
            let s = &z0[u] + &z1[u];
            let a = z0[u].clone();
            z0[p] *= s;
            z1[p] *= a;
        }
    }
    Ok(roots.iter().fold(BigRational::one(), |acc, &r| acc * (&z0[r] + &z1[r])))
}

/// Root marginal on the (d-1)-ary tree of the given depth with every leaf
/// pinned (occupied or vacant). By symmetry the DP collapses to iterating
/// x ← λ(1-x)^{d-1}/(1+λ(1-x)^{d-1}) from the leaf value.
pub fn boundary_tree_marginal(d: u32, lambda: f64, depth: u32, leaves_occupied: bool) -> f64 {
    let mut x: f64 = if leaves_occupied { 1.0 } else { 0.0 };
    for _ in 0..depth {
        let t = lambda * (1.0 - x).powi(d as i32 - 1);
        x = t / (1.0 + t);
    }
    x
}
