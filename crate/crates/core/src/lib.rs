//! Approximate undirected shortest transshipment and single-source shortest
//! paths.
//!
//! The solver minimizes a soft-max potential over node potentials by
//! projected gradient descent, using a spanner-backed approximate
//! transshipment oracle (or an exact one) to pick descent directions. It
//! returns a primal flow and dual potentials whose objectives match up to a
//! configurable factor `1 + eps`, together with a per-iteration trace.
//!
//! Costs may differ per direction of an edge. Simulators in [`models`]
//! replay the same arithmetic under broadcast-clique and multipass-streaming
//! cost models and report round, pass, and space usage.

#![forbid(unsafe_code)]

pub mod descent;
pub mod error;
pub mod generate;
pub mod graph;
pub mod models;
pub mod oracle;
pub mod potential;
pub mod spanner;
pub mod sssp;

pub use error::{Error, Result};
