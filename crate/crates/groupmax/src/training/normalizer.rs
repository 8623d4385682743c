//! Empirical input/output standardization.

use super::SamplerSpec;
use crate::{seeded_rng, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Affine change of coordinates under which a model was trained:
/// inputs map to `(x - mean) / scale` per coordinate, the output maps
/// back through `h * scale + mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_mean: f64,
    pub output_scale: f64,
    /// Pre-sample size the statistics were estimated from.
    pub sample_size: usize,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            input_mean: vec![0.0; dim],
            input_scale: vec![1.0; dim],
            output_mean: 0.0,
            output_scale: 1.0,
            sample_size: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn normalize_input(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = (x[i] - self.input_mean[i]) / self.input_scale[i];
        }
    }

    pub fn normalize_output(&self, t: f64) -> f64 {
        (t - self.output_mean) / self.output_scale
    }

    pub fn denormalize_output(&self, h: f64) -> f64 {
        h * self.output_scale + self.output_mean
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_scale.iter().any(|&s| !(s > 0.0)) || !(self.output_scale > 0.0) {
            return Err(Error::Structure("normalizer scales must be positive".into()));
        }
        Ok(())
    }
}

/// Estimates standardization statistics from `n` pre-samples of the
/// sampler and of the noisy target. Errors when any empirical standard
/// deviation vanishes (a constant coordinate or a constant noiseless
/// target cannot be standardized).
pub fn make_normalizer<F>(
    sampler: &SamplerSpec,
    target: F,
    noise_std: f64,
    n: usize,
    seed: u64,
) -> Result<Normalizer>
where
    F: Fn(&[f64]) -> f64,
{
    if n < 2 {
        return Err(Error::Structure("normalizer needs at least 2 pre-samples".into()));
    }
    let d = sampler.dim;
    let mut rng = seeded_rng(seed);
    let mut point = vec![0.0; d];

    let mut sum_x = vec![0.0; d];
    let mut sum_xx = vec![0.0; d];
    let mut sum_h = 0.0;
    let mut sum_hh = 0.0;
    for _ in 0..n {
        sampler.sample_into(&mut rng, &mut point);
        for i in 0..d {
            sum_x[i] += point[i];
            sum_xx[i] += point[i] * point[i];
        }
        let mut t = target(&point);
        if noise_std > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            t += noise_std * z;
        }
        sum_h += t;
        sum_hh += t * t;
    }

    let nf = n as f64;
    let std_of = |s: f64, ss: f64| {
        let mean = s / nf;
        ((ss / nf - mean * mean).max(0.0)).sqrt()
    };
    let input_mean: Vec<f64> = sum_x.iter().map(|&s| s / nf).collect();
    let input_scale: Vec<f64> =
        sum_x.iter().zip(&sum_xx).map(|(&s, &ss)| std_of(s, ss)).collect();
    let output_mean = sum_h / nf;
    let output_scale = std_of(sum_h, sum_hh);

    let norm = Normalizer {
        input_mean,
        input_scale,
        output_mean,
        output_scale,
        sample_size: n,
    };
    norm.validate().map_err(|_| {
        Error::Structure("zero empirical standard deviation; cannot standardize".into())
    })?;
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_without_noise_errors() {
        let s = SamplerSpec::uniform(1, -1.0, 1.0).unwrap();
        assert!(make_normalizer(&s, |_| 3.0, 0.0, 1000, 0).is_err());
    }

    #[test]
    fn squared_gaussian_output_mean() {
        // x ~ N(0, 4): E[x^2] = 4.
        let s = SamplerSpec::gaussian(1, 0.0, 4.0).unwrap();
        let norm = make_normalizer(&s, |x| x[0] * x[0], 1.0, 100_000, 1).unwrap();
        assert!((norm.output_mean - 4.0).abs() < 0.1, "mean {}", norm.output_mean);
        assert!((norm.input_scale[0] - 2.0).abs() < 0.05);
    }

    #[test]
    fn identity_target_symmetric_sampler() {
        let s = SamplerSpec::uniform(1, -2.0, 2.0).unwrap();
        let norm = make_normalizer(&s, |x| x[0], 0.0, 100_000, 2).unwrap();
        assert!(norm.output_mean.abs() < 0.02);
    }

    #[test]
    fn round_trip_of_coordinates() {
        let norm = Normalizer {
            input_mean: vec![1.0, -2.0],
            input_scale: vec![0.5, 4.0],
            output_mean: 3.0,
            output_scale: 2.0,
            sample_size: 10,
        };
        let x = [2.0, 2.0];
        let mut z = [0.0, 0.0];
        norm.normalize_input(&x, &mut z);
        assert_eq!(z, [2.0, 1.0]);
        assert_eq!(norm.denormalize_output(norm.normalize_output(7.25)), 7.25);
    }
}
