//! Approximation of convex and partially convex functions by cuts.
//!
//! A cut is an affine function lower-bounding a convex target; a finite
//! collection of cuts represents the target as their pointwise maximum.
//! This crate provides:
//!
//! - [`diffcore`]: dense linear algebra plus tape-based reverse-mode
//!   gradients for the small operation set the networks need;
//! - [`models`]: the group-max architectures (fully convex and partially
//!   convex), the single-layer max-affine network, and the baseline
//!   input-convex and feedforward networks;
//! - [`cuts`]: exact enumeration of the max-affine representation a
//!   trained network realizes, conditional enumeration at a fixed
//!   non-convex input, single active-cut extraction, and a line-oriented
//!   export format for LP/SDDP consumers;
//! - [`training`]: ADAM minimization of the population mean-squared
//!   error with configurable samplers, observation noise, and optional
//!   input/output standardization;
//! - [`bench`]: the target-function suite, Monte Carlo evaluation, and
//!   the predefined experiment grids.

pub mod bench;
pub mod convexity;
pub mod cuts;
pub mod diffcore;
pub mod models;
pub mod training;

mod error;
mod fsio;
mod rng;

pub use error::{Error, Result};
pub use rng::seeded_rng;
