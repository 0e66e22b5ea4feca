//! Market making under performative price dynamics.
//!
//! The mid-price is pulled towards the reservation price of the prevailing
//! quoting strategy, `ds = (r(t) - epsilon s) dt + sigma dW`. With an
//! inventory-model market maker as the prevailing strategy the process is a
//! mean-reverting diffusion whose drift depends on that maker's inventory.
//! This crate provides:
//!
//! - [`dynamics`]: the price process, its closed-form transition law, and
//!   Euler / exact steppers;
//! - [`strategies`]: inventory-model, symmetric, performative and
//!   theta-enhanced quotes, the critical inventory thresholds and the
//!   exponential-utility value function;
//! - [`execution`]: probabilistic fills and agent ledgers;
//! - [`harness`]: closed-loop Monte Carlo experiments and sweeps;
//! - [`tuner`]: derivative-free tuning of the theta multipliers;
//! - [`cli`]: the `perfmm` command line and its file formats.
//!
//! See `examples/` for one runnable program per capability.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod execution;
pub mod harness;
pub mod params;
pub mod rng;
pub mod strategies;
pub mod tuner;

pub use error::{Error, Result};
pub use params::{Gamma, MarketParams, Xi};
