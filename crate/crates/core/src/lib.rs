//! Radar pulse deinterleaving by per-pulse sequence labeling, with classical
//! baselines and a from-scratch autodiff engine.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod autograd;
pub mod classical;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod models;
pub mod simulator;

pub use error::{Error, Result};
