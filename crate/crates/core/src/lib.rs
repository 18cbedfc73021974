//! Vertex and edge replacement systems.
//!
//! Core pieces: typed multigraphs ([`graph`]), VERS definitions
//! ([`vers`]), the expansion engine ([`expansion`]) and history-graph
//! truncations ([`history`]). Builders turn automaton groups
//! ([`selfsimilar`]), affine IFSs ([`ifs`]) and edge replacement systems
//! ([`ers`]) into VERSs; [`hyperbolicity`] checks expansion and squares.

pub mod bundled;
pub mod document;
pub mod ers;
pub mod expansion;
pub mod export;
pub mod graph;
pub mod history;
pub mod hyperbolicity;
pub mod ifs;
pub mod report;
pub mod selfsimilar;
pub mod vers;

pub use expansion::{expand, gamma};
pub use graph::{
    barycentric_subdivision, bfs_distance, graph_equal, validate_kappa_compatible, GraphError, KappaMap, TypedGraph,
};
pub use history::{at_distance, history, spanning_lift, tree_power, HEdge, HVertex, HistoryTruncation};
pub use vers::{validate_vers, Vers, VersDefinition, VersError, VersReport, Word};
