//! Data interaction as a signaling game between a user and a database system.
//!
//! The user maps intents to queries with a row-stochastic strategy `U` (m x n);
//! the DBMS maps queries to interpreted intents (results) with `D` (n x o).
//! Both receive the same reward `r(intent, result)`, so the expected payoff of a
//! profile is `sum_i prior_i sum_j U_ij sum_l D_jl r_il`.
//!
//! This crate holds the allocation-only algorithmic core:
//!
//! - [`game`]: strategies, effectiveness matrices and the expected payoff.
//! - [`metrics`]: set precision, precision at k and NDCG used as rewards.
//! - [`equilibria`]: best replies, Nash / strict Nash / optimality checks and
//!   exhaustive enumeration of pure profiles.
//! - [`user_learning`]: the six user adaptation models.
//! - [`dbms_learning`]: Roth-Erev adaptation for the DBMS, the user adaptation
//!   step of the joint regime and seeded trajectories.
//! - [`diagnostics`]: trend and convergence statistics over trajectory sets.
//! - [`workload`]: query-log replay, model fitting and synthetic logs.
//!
//! File formats, parallel drivers and the command line live in the `digame` crate.

#![no_std]

extern crate alloc;

pub mod dbms_learning;
pub mod diagnostics;
pub mod equilibria;
mod error;
pub mod game;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod user_learning;
pub mod workload;

pub use error::{Error, Result};
pub use game::{EffectivenessMatrix, GameConfig, IntentWeights, Labels, Weighting};
pub use matrix::{Matrix, StrategyMatrix};

/// Absolute tolerance for row sums and payoff identities.
pub const STOCHASTIC_TOL: f64 = 1e-9;
