//! Bond percolation laboratory on transitive graphs.
//!
//! Lazy neighbour oracles for infinite and finite graph families, cluster
//! exploration driven by per-edge counter-based uniforms, Monte Carlo
//! estimators with censoring envelopes, closed-form bounds, brute-force
//! oracles for small graphs, and modular-function estimation for
//! nonunimodular graphs.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod graphs;
pub mod nonunimodular;
pub mod oracle;
pub mod output;
pub mod percolation;
pub mod rng;
pub mod stats;
pub mod unionfind;

pub use error::{PercError, Result};
pub use graphs::{Ball, CanonicalCert, EdgeId, GraphFamilySpec, GraphHandle, VertexCoord};
