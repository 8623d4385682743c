//! Standard ADAM update with bias correction.

use super::TrainConfig;
use crate::{Error, Result};

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One in-place ADAM step. Aborts on a non-finite gradient so parameter
/// corruption is caught at the source.
pub fn adam_step(
    theta: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    assert_eq!(theta.len(), grad.len());
    assert_eq!(theta.len(), state.m.len());
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite gradient at coordinate {i} on step {}",
            state.t + 1
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let m_corr = 1.0 - cfg.beta1.powi(t);
    let v_corr = 1.0 - cfg.beta2.powi(t);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / m_corr;
        let v_hat = state.v[i] / v_corr;
        theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::SamplerSpec;

    fn cfg() -> TrainConfig {
        TrainConfig::new(SamplerSpec::uniform(1, -1.0, 1.0).unwrap(), 0)
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut theta = vec![1.0, -2.0, 0.5];
        let mut state = AdamState::new(3);
        adam_step(&mut theta, &[0.0, 0.0, 0.0], &mut state, &cfg()).unwrap();
        assert_eq!(theta, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn unit_gradient_first_step_size() {
        // Fresh state, grad = 1 everywhere: m_hat = v_hat = 1, so the
        // step is lr / (1 + eps) per coordinate.
        let mut theta = vec![0.0, 3.0];
        let mut state = AdamState::new(2);
        let c = cfg();
        adam_step(&mut theta, &[1.0, 1.0], &mut state, &c).unwrap();
        let expected = 1e-3 * (1.0 / (1.0 + 1e-8));
        assert!((theta[0] - (-expected)).abs() < 1e-18);
        assert!((theta[1] - (3.0 - expected)).abs() < 1e-15);
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // minimize f(t) = t^2 from t = 1.
        let mut theta = vec![1.0];
        let mut state = AdamState::new(1);
        let c = cfg();
        for _ in 0..10_000 {
            let grad = [2.0 * theta[0]];
            adam_step(&mut theta, &grad, &mut state, &c).unwrap();
        }
        assert!(theta[0].abs() < 1e-3, "theta = {}", theta[0]);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut theta = vec![0.0];
        let mut state = AdamState::new(1);
        let err = adam_step(&mut theta, &[f64::NAN], &mut state, &cfg());
        assert!(matches!(err, Err(Error::Numerical(_))));
    }
}
