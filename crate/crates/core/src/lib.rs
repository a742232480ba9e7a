//! Modeling baseball at-bats as finite episodic Markov decision processes.
//!
//! The crate estimates pitcher-specific and general transition models from
//! pitch-by-pitch data, computes and evaluates optimal batting policies,
//! tests pitcher exploitability with exact binomial tails, and simulates
//! batter performance by composing a trajectory-noise pitch-type classifier
//! with a learned policy. A synthetic-season generator with analytic ground
//! truth backs the test suites end to end.

pub mod atbat;
pub mod estimation;
pub mod exploit;
pub mod fixtures;
pub mod ingest;
pub mod mdp;
pub mod seed;
pub mod simulate;
pub mod spatial;
pub mod synthgen;
