//! ADAM minimization of the population mean-squared error.
//!
//! Every iteration draws a fresh batch from the configured sampler (the
//! objective is an expectation, not a fixed data set), optionally adds
//! Gaussian observation noise to the targets, and takes one ADAM step.
//! With standardization enabled the model trains in normalized
//! coordinates; evaluation and cut extraction map back through the
//! [`Normalizer`].

mod adam;
mod fit;
mod normalizer;
mod sampler;

pub use adam::{adam_step, AdamState};
pub use fit::{fit, mse_loss, FitResult, Trained, TrainReport};
pub use normalizer::{make_normalizer, Normalizer};
pub use sampler::{Law, SamplerSpec};

use crate::{Error, Result};

/// Optimizer and data-stream configuration for one fit.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub sampler: SamplerSpec,
    /// Standard deviation of the observation noise added to targets
    /// during training (never during evaluation).
    pub noise_std: f64,
    /// Standardize inputs and noisy targets to zero mean, unit standard
    /// deviation before training.
    pub normalize: bool,
    /// Seed of the training data stream (batches and noise).
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults: learning rate 1e-3, batch size 300, conventional ADAM
    /// moment constants, no noise, no standardization.
    pub fn new(sampler: SamplerSpec, iterations: usize) -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 300,
            iterations,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            sampler,
            noise_std: 0.0,
            normalize: false,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Structure("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Structure("batch_size must be at least 1".into()));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Structure("noise_std must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Structure("ADAM moment constants must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Structure("epsilon must be positive".into()));
        }
        Ok(())
    }
}
