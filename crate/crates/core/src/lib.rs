//! Online min-max resource re-allocation.
//!
//! A fixed budget (normalized to 1) is split among `N` agents every round.
//! Each agent's cost is a non-increasing function of its share, the round's
//! cost is the largest agent cost, and the cost functions change from round
//! to round and are only revealed after the allocation is committed.
//!
//! - [`model`]: allocations, cost functions and their inverse.
//! - [`dora`]: the gradient- and projection-free re-allocation algorithm.
//! - [`baselines`]: equal split, OGD, OMD, FKM, OCG and the per-round optimum.
//! - [`costmodel`]: wireless edge-learning delay model with mobility.
//! - [`sim`]: round loop, regret metrics, runtime property checks, output.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod costmodel;
pub mod dora;
pub mod error;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
