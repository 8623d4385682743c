//! The training loop.

use super::{adam_step, make_normalizer, AdamState, Normalizer, TrainConfig};
use crate::diffcore::{RealMatrix, Tape};
use crate::models::Model;
use crate::{seeded_rng, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use std::time::{Duration, Instant};

/// Seed offset separating the normalizer pre-sample stream from the
/// training stream.
const NORMALIZER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Outcome of one fit: loss trace (every 100 iterations), the final
/// parameters, wall time, and the data seed.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub loss_trace: Vec<(usize, f64)>,
    pub final_params: Vec<f64>,
    pub wall_time: Duration,
    pub seed: u64,
}

impl TrainReport {
    /// Loss trace as `iteration,loss` CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,loss\n");
        for (it, loss) in &self.loss_trace {
            out.push_str(&format!("{it},{loss}\n"));
        }
        out
    }
}

/// Result of [`fit`]: the normalizer actually used (when standardization
/// was enabled) plus the report.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub normalizer: Option<Normalizer>,
    pub report: TrainReport,
}

/// A model together with the coordinate change it was trained under.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub normalizer: Option<Normalizer>,
}

impl<M: Model> Trained<M> {
    pub fn plain(model: M) -> Self {
        Self { model, normalizer: None }
    }

    /// Prediction in original coordinates.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut tape = Tape::new();
        let mut scratch = vec![0.0; x.len()];
        self.predict_with(&mut tape, &mut scratch, x)
    }

    /// Allocation-free prediction for hot loops; `scratch` must have the
    /// input length.
    pub fn predict_with(&self, tape: &mut Tape, scratch: &mut [f64], x: &[f64]) -> f64 {
        match &self.normalizer {
            None => self.model.eval_on(tape, x),
            Some(norm) => {
                norm.normalize_input(x, scratch);
                norm.denormalize_output(self.model.eval_on(tape, scratch))
            }
        }
    }
}

/// Mean over the batch of `(target - h)^2` and its parameter gradient.
pub fn mse_loss(model: &dyn Model, batch: &RealMatrix, targets: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.param_count()];
    let mut tape = Tape::new();
    let loss = mse_loss_into(model, &mut tape, batch.as_slice(), batch.cols(), targets, &mut grad);
    (loss, grad)
}

/// Accumulates the batch-mean MSE gradient into `grad` (caller zeroes)
/// and returns the loss. `batch` is point-major with `dim` columns.
fn mse_loss_into(
    model: &dyn Model,
    tape: &mut Tape,
    batch: &[f64],
    dim: usize,
    targets: &[f64],
    grad: &mut [f64],
) -> f64 {
    let n = targets.len();
    assert!(n >= 1, "batch must be nonempty");
    assert_eq!(batch.len(), n * dim);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    for (point, &target) in batch.chunks_exact(dim).zip(targets) {
        // d/dθ mean (t - h)^2 = mean 2 (h - t) dh/dθ.
        tape.clear();
        let out = model.forward_on(tape, point);
        let h = tape.scalar(out);
        let residual = h - target;
        loss += residual * residual * inv_n;
        tape.backward(out, 2.0 * residual * inv_n).expect("scalar output");
        let mut off = 0;
        for leaf in 0..model.param_leaves() {
            let adj = tape.adjoint(tape.node(leaf));
            for (g, a) in grad[off..off + adj.len()].iter_mut().zip(adj) {
                *g += a;
            }
            off += adj.len();
        }
    }
    loss
}

/// Runs the configured number of ADAM iterations on fresh batches.
///
/// With `cfg.normalize` the model is trained in standardized
/// coordinates; the returned normalizer is the one to evaluate through.
/// Fully deterministic given the model state and `cfg.seed`.
pub fn fit<F>(model: &mut dyn Model, target: F, cfg: &TrainConfig) -> Result<FitResult>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    if cfg.sampler.dim != model.input_dim() {
        return Err(Error::Shape(format!(
            "sampler dimension {} does not match model input dimension {}",
            cfg.sampler.dim,
            model.input_dim()
        )));
    }

    let start = Instant::now();
    let normalizer = if cfg.normalize {
        Some(make_normalizer(
            &cfg.sampler,
            &target,
            cfg.noise_std,
            100_000,
            cfg.seed ^ NORMALIZER_SEED_SALT,
        )?)
    } else {
        None
    };

    let d = model.input_dim();
    let n = cfg.batch_size;
    let mut rng = seeded_rng(cfg.seed);
    let mut theta = model.params();
    let mut grad = vec![0.0; theta.len()];
    let mut state = AdamState::new(theta.len());
    let mut tape = Tape::new();
    let mut batch = vec![0.0; n * d];
    let mut targets = vec![0.0; n];
    let mut scratch = vec![0.0; d];
    let mut trace = Vec::new();

    for it in 0..cfg.iterations {
        cfg.sampler.sample_into(&mut rng, &mut batch);
        for (point, t) in batch.chunks_exact(d).zip(targets.iter_mut()) {
            let mut value = target(point);
            if cfg.noise_std > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                value += cfg.noise_std * z;
            }
            *t = value;
        }
        if let Some(norm) = &normalizer {
            for point in batch.chunks_exact_mut(d) {
                scratch.copy_from_slice(point);
                norm.normalize_input(&scratch, point);
            }
            for t in targets.iter_mut() {
                *t = norm.normalize_output(*t);
            }
        }

        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss = mse_loss_into(model, &mut tape, &batch, d, &targets, &mut grad);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "loss diverged at iteration {it}; trace tail: {:?}",
                &trace[trace.len().saturating_sub(3)..]
            )));
        }
        if it % 100 == 0 {
            trace.push((it, loss));
        }
        adam_step(&mut theta, &grad, &mut state, cfg)?;
        model.set_params(&theta);
    }

    Ok(FitResult {
        normalizer,
        report: TrainReport {
            loss_trace: trace,
            final_params: theta,
            wall_time: start.elapsed(),
            seed: cfg.seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::MaxAffineNet;
    use crate::training::SamplerSpec;

    #[test]
    fn zero_iterations_returns_initial_parameters() {
        let mut net = MaxAffineNet::new(1, 3, 5).unwrap();
        let before = net.params();
        let cfg = TrainConfig::new(SamplerSpec::uniform(1, -1.0, 1.0).unwrap(), 0);
        let result = fit(&mut net, |x| x[0], &cfg).unwrap();
        assert_eq!(net.params(), before);
        assert_eq!(result.report.final_params, before);
        assert!(result.report.loss_trace.is_empty());
    }

    #[test]
    fn single_cut_recovers_affine_target() {
        // One cut fit to 2x + 1 is a convex quadratic problem with the
        // unique optimum (slope 2, intercept 1). The step size below is
        // chosen so 5000 ADAM steps can cover the init-to-optimum
        // distance (each step moves at most about one learning rate).
        let mut net = MaxAffineNet::new(1, 1, 9).unwrap();
        let mut cfg =
            TrainConfig::new(SamplerSpec::uniform(1, -2.0, 2.0).unwrap(), 5000).with_seed(3);
        cfg.learning_rate = 3e-3;
        fit(&mut net, |x| 2.0 * x[0] + 1.0, &cfg).unwrap();
        let p = net.params();
        assert!((p[0] - 2.0).abs() < 1e-2, "slope {}", p[0]);
        assert!((p[1] - 1.0).abs() < 1e-2, "intercept {}", p[1]);
    }

    #[test]
    fn fit_is_deterministic() {
        let run = || {
            let mut net = MaxAffineNet::new(1, 4, 11).unwrap();
            let cfg =
                TrainConfig::new(SamplerSpec::gaussian(1, 0.0, 1.0).unwrap(), 200).with_seed(21);
            let result = fit(&mut net, |x| x[0] * x[0], &cfg).unwrap();
            (net.params(), result.report.loss_trace)
        };
        let (p1, t1) = run();
        let (p2, t2) = run();
        assert_eq!(p1, p2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn mse_loss_basics() {
        let net = MaxAffineNet::from_parts(
            crate::diffcore::RealMatrix::from_rows(&[vec![0.0]]).unwrap(),
            crate::diffcore::RealVector::new(vec![4.0]).unwrap(),
        )
        .unwrap();
        let batch = RealMatrix::new(2, 1, vec![0.5, -1.0]).unwrap();
        // Constant model c = 4 against constant targets t = 7: (t-c)^2.
        let (loss, _) = mse_loss(&net, &batch, &[7.0, 7.0]);
        assert_eq!(loss, 9.0);
        // Model matching targets: zero loss, zero gradient.
        let (loss, grad) = mse_loss(&net, &batch, &[4.0, 4.0]);
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn normalized_and_raw_coordinates_agree() {
        // Train normalized, then check predict() equals manual
        // de-normalization of the normalized-space evaluation.
        let mut net = MaxAffineNet::new(1, 4, 2).unwrap();
        let cfg = TrainConfig::new(SamplerSpec::gaussian(1, 0.0, 4.0).unwrap(), 300)
            .with_seed(8)
            .with_normalize(true);
        let result = fit(&mut net, |x| x[0] * x[0], &cfg).unwrap();
        let norm = result.normalizer.clone().unwrap();
        let trained = Trained { model: net, normalizer: result.normalizer };
        for &x in &[-3.0, -0.5, 0.0, 1.7, 4.2] {
            let direct = trained.predict(&[x]);
            let z = (x - norm.input_mean[0]) / norm.input_scale[0];
            let manual = trained.model.eval(&[z]) * norm.output_scale + norm.output_mean;
            assert!((direct - manual).abs() <= 1e-12 * (1.0 + manual.abs()));
        }
    }
}
