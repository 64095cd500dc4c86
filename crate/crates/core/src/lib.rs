//! Conversational swarm deliberation simulator and forecast evaluation.
//!
//! A large group is split into small subgroups. Each subgroup gets a
//! surrogate agent that extracts insights from the local conversation and
//! relays them to the other subgroups, preferring content a subgroup has not
//! heard yet. Participant beliefs are tracked tick by tick and aggregated
//! into a collective forecast with a High/Low confidence label.
//!
//! The [`stats`] module scores collections of forecasts against market odds:
//! exact Poisson-Binomial tails, Wilson intervals, Cohen's d, and flat-stake
//! wager backtests.

pub mod analyzer;
pub mod belief;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod persona;
pub mod replication;
pub mod rng;
pub mod session;
pub mod simulate;
pub mod stats;
pub mod surrogate;
pub mod types;

pub use crate::error::{Error, Result};
pub use crate::types::{Confidence, Lean, Side};
