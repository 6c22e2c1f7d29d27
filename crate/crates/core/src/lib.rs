//! Linear contextual bandits with batched greedy and LinUCB policies,
//! the two-bridge and smoothed (perturbed) environments, the batch-reward
//! simulation construction, regret metrics and an experiment harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environments;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{ContextRound, ContextVector, Group, History, RoundKind};
