//! Line-oriented graph files:
//!
//! ```text
//! hgg 1 <num_vertices> <d>
//! v <id> <label>[*] <gadget>
//! e <u> <v>
//! ```
//!
//! `*` marks a cross-edge endpoint. Blank lines and `#` comments are skipped.
//! Edges are written with multiplicity, so the construction multiset
//! survives a round trip.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::graph::{Graph, Label};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn to_text(g: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "hgg {FORMAT_VERSION} {} {}", g.len(), g.d());
    for v in 0..g.len() {
        let star = if g.is_cross(v) { "*" } else { "" };
        let _ = writeln!(s, "v {v} {}{star} {}", g.label(v), g.gadget_of(v));
    }
    for &(u, v) in g.multi_edges() {
        let _ = writeln!(s, "e {u} {v}");
    }
    s
}

pub fn write_graph<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    w.write_all(to_text(g).as_bytes()).map_err(|e| Error::Resource(e.to_string()))
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let t = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    t.parse().map_err(|_| perr(line, format!("bad {what} {t:?}")))
}

pub fn from_text(text: &str) -> Result<Graph> {
    read_graph(text.as_bytes())
}

pub fn read_graph<R: BufRead>(r: R) -> Result<Graph> {
    let mut g: Option<Graph> = None;
    let mut expected = 0usize;
    let mut seen: Vec<bool> = vec![];
    let mut pending: Vec<(usize, Label, bool, u32)> = vec![];
    let mut edges: Vec<(usize, usize, usize)> = vec![];
    for (i, line) in r.lines().enumerate() {
        let ln = i + 1;
        let line = line.map_err(|e| perr(ln, e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tok = body.split_whitespace();
        let kind = tok.next().unwrap_or("");
        match (kind, g.is_some()) {
            ("hgg", false) => {
                let ver: u32 = field(tok.next(), ln, "version")?;
                if ver != FORMAT_VERSION {
                    return Err(perr(ln, format!("unsupported version {ver}")));
                }
                expected = field(tok.next(), ln, "vertex count")?;
                let d: u32 = field(tok.next(), ln, "degree bound")?;
                g = Some(Graph::new(d));
                seen = vec![false; expected];
            }
            ("hgg", true) => return Err(perr(ln, "duplicate header")),
            (_, false) => return Err(perr(ln, "expected header `hgg <version> <n> <d>`")),
            ("v", true) => {
                let id: usize = field(tok.next(), ln, "vertex id")?;
                let lab = tok.next().ok_or_else(|| perr(ln, "missing label"))?;
                let (lab, cross) = match lab.strip_suffix('*') {
                    Some(l) => (l, true),
                    None => (lab, false),
                };
                let label: Label = lab.parse().map_err(|e: String| perr(ln, e))?;
                let gadget: u32 = field(tok.next(), ln, "gadget index")?;
                if id >= expected {
                    return Err(perr(ln, format!("vertex id {id} >= {expected}")));
                }
                if std::mem::replace(&mut seen[id], true) {
                    return Err(perr(ln, format!("duplicate vertex {id}")));
                }
                pending.push((id, label, cross, gadget));
            }
            ("e", true) => {
                let u: usize = field(tok.next(), ln, "edge endpoint")?;
                let v: usize = field(tok.next(), ln, "edge endpoint")?;
                edges.push((u, v, ln));
            }
            (k, true) => return Err(perr(ln, format!("unknown record {k:?}"))),
        }
        if tok.next().is_some() {
            return Err(perr(ln, "trailing fields"));
        }
    }
    let mut g = g.ok_or_else(|| perr(0, "empty input"))?;
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(perr(0, format!("vertex {missing} not declared")));
    }
    pending.sort_by_key(|p| p.0);
    for (_, label, cross, gadget) in pending {
        let v = g.add_vertex(label, gadget);
        if cross {
            g.set_cross(v);
        }
    }
    for (u, v, ln) in edges {
        g.add_edge(u, v).map_err(|e| perr(ln, e.to_string()))?;
    }
    Ok(g)
}
