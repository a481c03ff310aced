//! Qualitative orderings of squared partial correlations in Gaussian
//! graphical models.
//!
//! The library decides, from graph structure alone, inequalities between
//! squared partial correlations `rho2(a,c|Z)` of a Gaussian vector Markov to
//! the graph, emits a theorem-level proof trace for each ordering, and can
//! verify or refute orderings numerically through an exact structural
//! equation covariance oracle.

pub mod engine;
pub mod polytree;
pub mod tree;
pub mod verify;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod separation;

pub use error::{Error, Result};
