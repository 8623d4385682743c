//! Monte Carlo mean-squared-error evaluation.

use crate::diffcore::Tape;
use crate::models::Model;
use crate::seeded_rng;
use crate::training::{SamplerSpec, Trained};

/// `(1/n) Σ (f(X_i) - h(X_i))^2` over fresh draws from the sampler,
/// against noiseless targets. Deterministic in `eval_seed`.
pub fn mc_mse<M: Model, F>(
    model: &Trained<M>,
    target: F,
    sampler: &SamplerSpec,
    n: usize,
    eval_seed: u64,
) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(n >= 1, "need at least one evaluation sample");
    let d = sampler.dim;
    let mut rng = seeded_rng(eval_seed);
    let mut point = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut tape = Tape::new();
    let mut acc = 0.0;
    for _ in 0..n {
        sampler.sample_into(&mut rng, &mut point);
        let err = target(&point) - model.predict_with(&mut tape, &mut scratch, &point);
        acc += err * err;
    }
    acc / n as f64
}
