//! Differentially private continual release of graph statistics under
//! event-level privacy.
//!
//! The crate provides a graph-sequence model with neighbouring relations,
//! the binary p-sum counter, exact evaluators for graph statistics, two
//! release mechanisms (difference sequences for bounded-sensitivity
//! statistics and a sparse-vector based mechanism for monotone ones),
//! lower-bound sequence constructions and a brute-force sensitivity oracle.

pub mod adversarial;
pub mod cli;
pub mod counter;
pub mod diff;
pub mod flow;
pub mod funcs;
pub mod graph;
pub mod monotone;
pub mod noise;
pub mod oracle;
