//! Multi-view contrastive graph clustering.
//!
//! Pipeline: low-pass graph filtering of node attributes, consensus-graph
//! learning by self-expression with a graph-level contrastive regularizer
//! and adaptive view weights, spectral clustering on the learned affinity,
//! and external validity metrics. Ablation variants (shared neighbors,
//! no contrastive term, no filtering, single view) run as solver modes.

pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod solver;
pub mod spectral;

pub use error::{McgcError, Result};
pub use model::{MultiViewDataset, View};
pub use pipeline::{run, RunReport};
pub use solver::{solve, SolverConfig, Variant};
