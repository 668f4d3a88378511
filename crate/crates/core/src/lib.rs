//! A laboratory for first-passage percolation on the square lattice.
//!
//! Edge weights are drawn i.i.d. from a [`weights::DistributionSpec`] by a
//! counter-based generator, passage times and geodesics come from a
//! deterministic label-setting sweep, and the remaining modules build limit
//! shape estimates, Busemann functions, competition models and infection
//! trees on top of that engine.

pub mod busemann;
pub mod config;
pub mod emit;
pub mod error;
pub mod growth;
pub mod harness;
pub mod lattice;
pub mod passage;
pub mod shape;
pub mod stats;
pub mod trees;
pub mod weights;

pub use error::{Error, Result};
