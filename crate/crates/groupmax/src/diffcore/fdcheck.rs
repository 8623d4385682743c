//! Central finite-difference verification of analytic gradients.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Outcome of a [`finite_diff_check`] run.
#[derive(Debug, Clone)]
pub struct FdReport {
    /// Max over checked parameters of |analytic - central difference| / max(1, |analytic|).
    pub max_rel_err: f64,
    /// Number of parameters actually compared.
    pub checked: usize,
    /// Parameters that stayed within `10h` of an argmax or clamp
    /// boundary through all retries and were not compared.
    pub skipped: Vec<usize>,
}

/// Compares an analytic gradient against central differences of step `h`.
///
/// `value_margin` evaluates the function at a parameter vector and also
/// reports the decision margin of that evaluation (see
/// [`Tape::decision_margin`](super::Tape::decision_margin); `INFINITY`
/// for smooth functions). A coordinate whose stencil lands closer than
/// `10h` to a boundary is retried at a randomly perturbed base point (the
/// analytic gradient is recomputed there); after 10 failed retries the
/// coordinate is reported as skipped.
pub fn finite_diff_check<V, G>(
    theta: &[f64],
    h: f64,
    mut value_margin: V,
    mut analytic: G,
    rng: &mut ChaCha8Rng,
) -> FdReport
where
    V: FnMut(&[f64]) -> (f64, f64),
    G: FnMut(&[f64]) -> Vec<f64>,
{
    assert!(h > 0.0, "finite difference step must be positive");
    let base_grad = analytic(theta);
    assert_eq!(base_grad.len(), theta.len());

    let mut max_rel_err: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = Vec::new();
    let mut work = theta.to_vec();

    'coords: for i in 0..theta.len() {
        let mut point = theta.to_vec();
        let mut grad_i = base_grad[i];
        for retry in 0..=10 {
            if retry > 0 {
                // Move the whole base point off the boundary and redo the
                // analytic gradient there.
                for (p, &t) in point.iter_mut().zip(theta) {
                    *p = t + rng.gen_range(-50.0 * h..50.0 * h);
                }
                grad_i = analytic(&point)[i];
            }
            work.copy_from_slice(&point);
            work[i] = point[i] + h;
            let (plus, margin_plus) = value_margin(&work);
            work[i] = point[i] - h;
            let (minus, margin_minus) = value_margin(&work);
            if margin_plus.min(margin_minus) >= 10.0 * h {
                let fd = (plus - minus) / (2.0 * h);
                let err = (grad_i - fd).abs() / grad_i.abs().max(1.0);
                max_rel_err = max_rel_err.max(err);
                checked += 1;
                continue 'coords;
            }
        }
        skipped.push(i);
    }

    FdReport { max_rel_err, checked, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quadratics_up_to_roundoff() {
        // f(t) = sum of a_i t_i^2 + b_i t_i.
        let a = [0.5, -1.25, 2.0];
        let b = [1.0, 0.0, -3.0];
        let theta = [0.3, -0.7, 1.1];
        let f = |t: &[f64]| {
            let v: f64 = t.iter().zip(a).zip(b).map(|((&t, ai), bi)| ai * t * t + bi * t).sum();
            (v, f64::INFINITY)
        };
        let g = |t: &[f64]| {
            t.iter().zip(a).zip(b).map(|((&t, ai), bi)| 2.0 * ai * t + bi).collect()
        };
        let mut rng = crate::seeded_rng(3);
        let report = finite_diff_check(&theta, 1e-5, f, g, &mut rng);
        assert!(report.skipped.is_empty());
        assert!(report.max_rel_err < 1e-8, "err = {}", report.max_rel_err);
    }

    #[test]
    fn persistent_tie_is_skipped() {
        // |t| has a kink at 0 that no 50h perturbation of a zero base
        // point escapes when the margin is measured at the kink itself.
        let f = |t: &[f64]| (t[0].abs(), 0.0);
        let g = |_: &[f64]| vec![1.0];
        let mut rng = crate::seeded_rng(4);
        let report = finite_diff_check(&[0.0], 1e-5, f, g, &mut rng);
        assert_eq!(report.skipped, vec![0]);
        assert_eq!(report.checked, 0);
    }
}
