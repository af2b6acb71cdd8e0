//! Random bipartite gadgets, their tree extensions, the composite graphs
//! Ĥ^G and H^G, short-cycle counts and the graph file format.

mod build;
pub mod cycles;
mod graph;
pub mod io;

pub use build::{append_trees, build_hg, ports, sample_gadget, sample_gtilde, GadgetSpec};
pub use cycles::{count_short_cycles, CycleStats};
pub use graph::{Graph, Label};

/// One sign per vertex of the outer graph H.
pub type PhaseVector = Vec<i8>;
