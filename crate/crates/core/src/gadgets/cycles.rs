use std::collections::HashMap;

use super::graph::Graph;
use crate::error::{Error, Result};

pub const MAX_CYCLE_LENGTH: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats {
    pub length: usize,
    /// Cycles of the construction multigraph (parallel edges distinguished).
    pub count: u64,
    /// Cycles of the collapsed simple graph.
    pub count_simple: u64,
    /// Predicted Poisson mean r(d,i)/i.
    pub lambda: f64,
    /// (αβ/((1-α)(1-β)))^{i/2}, when densities are supplied.
    pub delta: Option<f64>,
}

/// r(d,i) = (d-1)^i + (-1)^i (d-1), the number of proper d-colourings of C_i.
pub fn r(d: u32, i: u32) -> i128 {
    let b = d as i128 - 1;
    b.pow(i) + if i % 2 == 0 { b } else { -b }
}

pub fn cycle_delta(alpha: f64, beta: f64, i: usize) -> f64 {
    (alpha * beta / ((1.0 - alpha) * (1.0 - beta))).powf(i as f64 / 2.0)
}

/// Counts of cycles of each length 2..=i_max whose vertices all lie in W.
pub fn count_short_cycles(g: &Graph, i_max: usize, densities: Option<(f64, f64)>) -> Result<Vec<CycleStats>> {
    if i_max > MAX_CYCLE_LENGTH {
        return Err(Error::domain(format!("cycle length cap is {MAX_CYCLE_LENGTH}, got {i_max}")));
    }
    let n = g.len();
    let in_w: Vec<bool> = (0..n).map(|v| g.label(v).is_w()).collect();
    let mult: HashMap<(u32, u32), usize> = g.multiplicities();
    let mu = |u: usize, v: usize| -> u64 {
        let k = (u.min(v) as u32, u.max(v) as u32);
        *mult.get(&k).unwrap_or(&1) as u64
    };
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            if !in_w[v] {
                return vec![];
            }
            g.neighbors(v).iter().map(|&u| u as usize).filter(|&u| in_w[u]).collect()
        })
        .collect();

    let mut multi = vec![0u64; i_max + 1];
    let mut simple = vec![0u64; i_max + 1];
    if i_max >= 2 {
        for (&(u, v), &k) in &mult {
            if in_w[u as usize] && in_w[v as usize] && k >= 2 {
                multi[2] += (k * (k - 1) / 2) as u64;
            }
        }
    }
    // Each cycle is found twice from its least vertex, once per direction.
    let mut on_path = vec![false; n];
    for s in 0..n {
        if adj[s].is_empty() {
            continue;
        }
        on_path[s] = true;
        let mut stack: Vec<(usize, usize, u64)> = vec![(s, 0, 1)];
        // iterative DFS: (vertex, next neighbour index, multiplicity product)
        let mut len = 1;
        while let Some(&mut (v, ref mut idx, w)) = stack.last_mut() {
            if *idx >= adj[v].len() {
                on_path[v] = false;
                stack.pop();
                len -= 1;
                continue;
            }
            let u = adj[v][*idx];
            *idx += 1;
            if u == s && len >= 3 {
                multi[len] += w * mu(v, u);
                simple[len] += 1;
            } else if u > s && !on_path[u] && len < i_max {
                on_path[u] = true;
                stack.push((u, 0, w * mu(v, u)));
                len += 1;
            }
        }
        on_path[s] = false;
    }
    Ok((2..=i_max)
        .map(|i| CycleStats {
            length: i,
            count: if i == 2 { multi[2] } else { multi[i] / 2 },
            count_simple: if i == 2 { 0 } else { simple[i] / 2 },
            lambda: r(g.d(), i as u32) as f64 / i as f64,
            delta: densities.map(|(a, b)| cycle_delta(a, b, i)),
        })
        .collect())
}
