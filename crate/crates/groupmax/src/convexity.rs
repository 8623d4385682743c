//! Empirical convexity checking by sampling the secant inequality.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Largest normalized violation of
/// `f(λ x₁ + (1-λ) x₂) ≤ λ f(x₁) + (1-λ) f(x₂)`
/// over random triples; nonpositive values mean every sampled triple
/// satisfied the inequality. The violation is divided by
/// `1 + max(|f|)` over the triple so that tolerances are scale-free.
pub fn max_jensen_violation<F, P>(
    f: F,
    mut sample_point: P,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> f64
where
    F: Fn(&[f64]) -> f64,
    P: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a = sample_point(rng);
        let b = sample_point(rng);
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let mid: Vec<f64> =
            a.iter().zip(&b).map(|(&ai, &bi)| lambda * ai + (1.0 - lambda) * bi).collect();
        let fa = f(&a);
        let fb = f(&b);
        let fm = f(&mid);
        let bound = lambda * fa + (1.0 - lambda) * fb;
        let scale = 1.0 + fa.abs().max(fb.abs()).max(fm.abs());
        worst = worst.max((fm - bound) / scale);
    }
    worst
}

/// Point sampler for a centered cube of the given half-width.
pub fn cube_sampler(dim: usize, half_width: f64) -> impl FnMut(&mut ChaCha8Rng) -> Vec<f64> {
    move |rng| (0..dim).map(|_| rng.gen_range(-half_width..half_width)).collect()
}

/// Point sampler that holds the leading coordinates fixed and varies the
/// trailing `free` coordinates in a centered cube — the partial-convexity
/// check at a frozen non-convex input.
pub fn conditional_cube_sampler(
    prefix: Vec<f64>,
    free: usize,
    half_width: f64,
) -> impl FnMut(&mut ChaCha8Rng) -> Vec<f64> {
    move |rng| {
        let mut point = prefix.clone();
        point.extend((0..free).map(|_| rng.gen_range(-half_width..half_width)));
        point
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_convex_and_negated_quadratic_is_not() {
        let mut rng = crate::seeded_rng(1);
        let v = max_jensen_violation(
            |x| x[0] * x[0] + x[1] * x[1],
            cube_sampler(2, 3.0),
            10_000,
            &mut rng,
        );
        assert!(v <= 1e-12, "violation {v}");
        let v = max_jensen_violation(
            |x| -(x[0] * x[0] + x[1] * x[1]),
            cube_sampler(2, 3.0),
            10_000,
            &mut rng,
        );
        assert!(v > 1e-3, "expected a clear violation, got {v}");
    }
}
