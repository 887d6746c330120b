//! Non-backtracking and adjacency spectra of finite graphs, their
//! universal covers, and random lifts.
//!
//! The crate computes exact non-backtracking spectra of finite graphs,
//! decides membership of a spectral parameter in the spectrum of a local
//! operator pulled back to the universal cover (via edge-ratio systems
//! and their decay rate), rasterizes the resulting planar spectral
//! regions, and runs old/new eigenvalue experiments on random lifts.

pub mod error;
pub mod finite_spectrum;
pub mod graph;
pub mod green;
pub mod lifts;
pub mod numerics;
pub mod operator;
pub mod ratio;
pub mod scanner;
pub mod solver;
pub mod tree;

pub use graph::{Graph, EdgeId, VertexId};
pub use operator::{FamilyKind, LocalOperator, OperatorFamily};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
