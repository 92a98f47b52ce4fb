//! How little setting randomness lets a local hidden variable model fake a
//! CHSH violation when the two parties choose their settings independently?
//!
//! This crate answers that question computationally:
//!
//! - [`math`] — binary entropy, the constrained two-entropy maximum `f(t)`,
//!   its concave envelope `g(t)`, and the closed-form asymptotic bounds
//!   (headline value `4^(-h_b(sqrt(c_Q))) ≈ 0.26429`).
//! - [`profile`] — profiles of bit-string sets: step functions, the partial
//!   order, inner-product densities, grid discretizations, and exact
//!   small-`n` volumes with their entropy upper bound.
//! - [`solver`] — exact small-`n` optimization over uniform supports, the
//!   greedy capped-LP reduction, threshold-set constructions, and finite-`n`
//!   converse certificates.
//! - [`lhvm`] — executable hidden-variable strategies: CHSH values, the
//!   output-function tables, the uniform-marginal four-lambda lift, the
//!   randomness measure, and a seeded Monte Carlo simulator.
//! - [`checks`] — seeded self-check suites behind `bellrand verify`.
//!
//! Everything that must be exact is exact: profiles of sets, constraint
//! densities, feasibility comparisons and strategy probabilities are
//! big-rational arithmetic; floating point enters only where entropy does.

pub mod checks;
pub mod error;
mod pool;
pub mod lhvm;
pub mod math;
pub mod profile;
pub mod rational;
pub mod report;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use rational::Rat;
