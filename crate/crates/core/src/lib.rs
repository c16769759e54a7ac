//! Simulation and verification toolkit for the longest common subsequence of
//! two random binary strings made of i.i.d. blocks with lengths `l-1`, `l`
//! and `l+1`.
//!
//! The crate is organised bottom-up:
//!
//! - [`block_model`]: block strings, the `(T, Z, R)` statistics, their exact
//!   joint law, conditional sampling and enumeration of the conditional support.
//! - [`lcs`]: LCS length with a quadratic reference and a word-parallel engine.
//! - [`modification`]: the paired block modification, its half-step variant and
//!   the conditional LCS drift.
//! - [`ladder`]: the coupled family of conditioned strings over the `z` grid,
//!   slope events, the repaired process and martingale diagnostics.
//! - [`analysis`]: the typical domain `D`, exact probability scans, variance
//!   scans and numeric inequality checkers.

pub mod analysis;
pub mod block_model;
pub mod error;
pub mod lcs;
pub mod ladder;
pub mod modification;
pub mod seed;

pub use block_model::{BlockCounts, BlockString, ModelParams, TzrStats};
pub use error::{Error, Result};
pub use lcs::{lcs_len, Engine};
pub use seed::RandomSeed;
