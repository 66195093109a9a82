//! Splitting min-sum message passing for discrete factor graphs.
//!
//! The crate minimizes objectives of the form
//! `f(x) = Σ_i φ_i(x_i) + Σ_α ψ_α(x_α)` over finite alphabets using a
//! reweighted family of min-sum updates parameterized by a vector `c`.
//! Alongside the solver it ships exact brute-force oracles, weighted
//! computation trees, graph covers and 2-cover certificates so every
//! claim about a run can be checked on small instances.

pub mod beliefs;
pub mod cli;
pub mod comptree;
pub mod covers;
pub mod engine;
pub mod format;
pub mod graph;
pub mod oracle;
pub mod pairwise;
pub mod params;
pub mod random;
pub mod split;

pub use beliefs::{BeliefSet, Estimate};
pub use engine::{MessageState, Order, RunConfig, RunReport, RunStatus, Schedule};
pub use graph::{evaluate_objective, FactorGraph, GraphError, PotentialTable};
pub use params::{ConicalWeights, OptimalityClass, SplitParams};
