//! King-graph mesh of bisynchronous links with local tree repair.

mod graph;
mod heal;
mod kirchhoff;
mod visibility;

pub use graph::{Cell, Edge, KingGraph, SpanningTree};
pub use heal::{
    parse_failure_script, run_failure_script, single_failure_sweep, HealEvent, HealScope, Mesh, ScriptAction,
    SingleFailureSweep,
};
pub use kirchhoff::{
    bareiss_determinant, count_spanning_trees, count_trees_of, growth_is_superexponential, growth_table, GrowthRow,
};
pub use visibility::{heal_outage_ns, visibility, Visibility, CLOS_RECONVERGENCE_NS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshError {
    #[error("grid must be at least 1x1, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("no such cell `{0}`")]
    Cell(String),
    #[error("no edge {0}")]
    NoEdge(Edge),
    #[error("edge {0} is already down")]
    AlreadyDown(Edge),
    #[error("failure script line {line}: {msg}")]
    Script { line: usize, msg: String },
}
