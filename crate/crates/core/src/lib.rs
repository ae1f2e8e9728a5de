//! Fully digital delayed feedback reservoir (DFR) for multivariate time-series
//! classification.
//!
//! The pipeline is: m-sequence input masking, a discretized Mackey-Glass
//! virtual-node cascade, a fixed-length reservoir representation (LRS, DRS,
//! MRS, OMS, RMS or the dot-product representation DPRR) and a ridge-regression
//! readout with one-hot targets.

pub mod dataset;
pub mod error;
pub mod linalg;
pub mod masking;
pub mod pipeline;
pub mod readout;
pub mod representation;
pub mod reproduce;
pub mod reservoir;
pub mod rng;

pub use error::{Error, Result};
