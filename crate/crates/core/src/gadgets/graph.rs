use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Role of a vertex in a gadget or in an outer graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    WPlus,
    WMinus,
    UPlus,
    UMinus,
    /// Tree root (port).
    VPlus,
    VMinus,
    /// Depth-0 trees: a U vertex that is also a root.
    UVPlus,
    UVMinus,
    /// Internal tree vertex, by the side of the tree.
    TPlus,
    TMinus,
    /// Plain vertex of an outer graph H.
    Node,
}

impl Label {
    pub fn side(self) -> i8 {
        use Label::*;
        match self {
            WPlus | UPlus | VPlus | UVPlus | TPlus => 1,
            WMinus | UMinus | VMinus | UVMinus | TMinus => -1,
            Node => 0,
        }
    }

    pub fn is_w(self) -> bool {
        matches!(self, Label::WPlus | Label::WMinus)
    }

    pub fn is_u(self) -> bool {
        matches!(self, Label::UPlus | Label::UMinus | Label::UVPlus | Label::UVMinus)
    }

    pub fn is_port(self) -> bool {
        matches!(self, Label::VPlus | Label::VMinus | Label::UVPlus | Label::UVMinus)
    }

    pub fn as_str(self) -> &'static str {
        use Label::*;
        match self {
            WPlus => "W+",
            WMinus => "W-",
            UPlus => "U+",
            UMinus => "U-",
            VPlus => "V+",
            VMinus => "V-",
            UVPlus => "UV+",
            UVMinus => "UV-",
            TPlus => "T+",
            TMinus => "T-",
            Node => "x",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        use Label::*;
        Ok(match s {
            "W+" => WPlus,
            "W-" => WMinus,
            "U+" => UPlus,
            "U-" => UMinus,
            "V+" => VPlus,
            "V-" => VMinus,
            "UV+" => UVPlus,
            "UV-" => UVMinus,
            "T+" => TPlus,
            "T-" => TMinus,
            "x" => Node,
            _ => return Err(format!("unknown label {s:?}")),
        })
    }
}

/// Undirected graph with labelled vertices.
///
/// `edges` keeps the construction multiset (parallel edges included, in
/// insertion order); `adj` is the collapsed simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    d: u32,
    adj: Vec<Vec<u32>>,
    labels: Vec<Label>,
    cross: Vec<bool>,
    gadget: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    pub fn new(d: u32) -> Self {
        Graph { d, adj: vec![], labels: vec![], cross: vec![], gadget: vec![], edges: vec![] }
    }

    /// Unlabelled graph on `n` vertices with the given edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(0);
        for _ in 0..n {
            g.add_vertex(Label::Node, 0);
        }
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        g.d = g.max_degree() as u32;
        Ok(g)
    }

    pub fn cycle(n: usize) -> Self {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &e).expect("valid cycle")
    }

    pub fn path(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &e).expect("valid path")
    }

    pub fn complete(n: usize) -> Self {
        let e: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph::from_edges(n, &e).expect("valid clique")
    }

    pub fn add_vertex(&mut self, label: Label, gadget: u32) -> usize {
        self.adj.push(vec![]);
        self.labels.push(label);
        self.cross.push(false);
        self.gadget.push(gadget);
        self.adj.len() - 1
    }

    /// Add an edge; a repeated edge is recorded in the multiset only.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.len();
        if u >= n || v >= n {
            return Err(Error::Input(format!("edge ({u},{v}) out of range for {n} vertices")));
        }
        if u == v {
            return Err(Error::Input(format!("self-loop at {u}")));
        }
        self.edges.push((u as u32, v as u32));
        if !self.adj[u].contains(&(v as u32)) {
            self.adj[u].push(v as u32);
            self.adj[v].push(u as u32);
        }
        Ok(())
    }

    pub(crate) fn set_cross(&mut self, v: usize) {
        self.cross[v] = true;
    }

    pub(crate) fn set_label(&mut self, v: usize, l: Label) {
        self.labels[v] = l;
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn is_cross(&self, v: usize) -> bool {
        self.cross[v]
    }

    pub fn gadget_of(&self, v: usize) -> u32 {
        self.gadget[v]
    }

    /// Construction multiset of edges, parallel edges included.
    pub fn multi_edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Simple edges (u < v), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = (0..self.len())
            .flat_map(|u| self.adj[u].iter().filter(move |&&v| (v as usize) > u).map(move |&v| (u, v as usize)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&(v as u32))
    }

    pub fn vertices_with(&self, l: Label) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.labels[v] == l).collect()
    }

    /// Vertices of gadget `x` carrying label `l`, in index order.
    pub fn gadget_vertices_with(&self, x: u32, l: Label) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.gadget[v] == x && self.labels[v] == l).collect()
    }

    pub fn gadget_count(&self) -> usize {
        self.gadget.iter().map(|&g| g as usize + 1).max().unwrap_or(0)
    }

    /// Two-colouring, or None if an odd cycle exists.
    pub fn two_coloring(&self) -> Option<Vec<u8>> {
        let mut col = vec![u8::MAX; self.len()];
        let mut q = VecDeque::new();
        for s in 0..self.len() {
            if col[s] != u8::MAX {
                continue;
            }
            col[s] = 0;
            q.push_back(s);
            while let Some(u) = q.pop_front() {
                for &v in &self.adj[u] {
                    let v = v as usize;
                    if col[v] == u8::MAX {
                        col[v] = 1 - col[u];
                        q.push_back(v);
                    } else if col[v] == col[u] {
                        return None;
                    }
                }
            }
        }
        Some(col)
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }

    /// Bipartite, and within every gadget (and component) all W+, U+ and V+
    /// vertices share a colour opposite to the W-, U- and V- vertices. Per gadget
    /// because cross-edges join V+ to V+, flipping the neighbour's colouring.
    pub fn parity_consistent(&self) -> bool {
        let Some(col) = self.two_coloring() else { return false };
        let comp = self.components();
        let mut plus_colour: std::collections::HashMap<(usize, u32), u8> = Default::default();
        for v in 0..self.len() {
            let l = self.labels[v];
            if l.side() == 0 || matches!(l, Label::TPlus | Label::TMinus) {
                continue;
            }
            let c = if l.side() > 0 { col[v] } else { 1 - col[v] };
            if *plus_colour.entry((comp[v], self.gadget[v])).or_insert(c) != c {
                return false;
            }
        }
        true
    }

    /// Component index of every vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.len()];
        let mut k = 0;
        for s in 0..self.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = k;
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if comp[v as usize] == usize::MAX {
                        comp[v as usize] = k;
                        stack.push(v as usize);
                    }
                }
            }
            k += 1;
        }
        comp
    }

    pub fn is_forest(&self) -> bool {
        let c = self.components();
        let k = c.iter().max().map_or(0, |&m| m + 1);
        self.edge_count() + k == self.len()
    }

    /// Is `set` (vertex indicator) an independent set?
    pub fn is_independent(&self, set: &[bool]) -> bool {
        set.len() == self.len()
            && (0..self.len()).all(|u| !set[u] || self.adj[u].iter().all(|&v| !set[v as usize]))
    }

    /// Number of (simple-graph) parallel edges collapsed during construction.
    pub fn collapsed_edges(&self) -> usize {
        self.edges.len() - self.edge_count()
    }

    /// Multiplicity of each simple edge in the construction multiset.
    pub fn multiplicities(&self) -> std::collections::HashMap<(u32, u32), usize> {
        let mut m = std::collections::HashMap::new();
        for &(u, v) in &self.edges {
            *m.entry((u.min(v), u.max(v))).or_insert(0) += 1;
        }
        m
    }
}
