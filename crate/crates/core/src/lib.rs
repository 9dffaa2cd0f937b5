//! Hybrid quantum-classical graph bipartitioning.
//!
//! The crate turns a weighted graph into a balanced-bipartition QUBO,
//! simulates warm-started linear-ramp QAOA on a statevector, iterates the
//! warm start from Boltzmann-weighted samples, and wraps the solver in a
//! spectral coarsen, solve, lift and refine loop. The loop drives a nested
//! dissection ordering whose quality is scored by symbolic factorization.

pub mod coarsen;
pub mod encoding;
pub mod error;
pub mod fm;
pub mod graph;
pub mod iterative;
pub mod ordering;
pub mod params;
pub mod pipeline;
pub mod qaoa;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{Assignment, WeightedGraph};
