//! Hardcore model on bounded-degree graphs near the tree uniqueness threshold.
//!
//! Fixed points of the tree recursions, the first/second moment exponents and
//! their interval certification, random bipartite gadgets, exact partition
//! functions, tree reconstruction and the MAX-CUT reduction at desk scale.

pub mod certifier;
pub mod cli;
pub mod error;
pub mod gadgets;
pub mod measure;
pub mod moments;
pub mod reconstruction;
pub mod reduction;
pub mod treegibbs;

pub use error::{Error, Result};

pub use gadgets::{GadgetSpec, Graph, Label};
pub use moments::{OccupancyPair, OverlapPoint};
pub use treegibbs::{ModelParams, TreeFixedPoints};
