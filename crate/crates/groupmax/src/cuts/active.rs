//! Single supporting cut at a query point.

use super::Cut;
use crate::models::Model;

/// The affine piece a convex (or partially convex) model realizes at
/// `x`: its slope is the input gradient under the recorded argmax
/// winners (ties resolve to the lowest index, clamps at the boundary to
/// the zero branch), the intercept closes the plane through `h(x)`.
///
/// For partially convex models the slope covers the convex coordinates
/// only; the non-convex contribution folds into the intercept, so the
/// result is the active conditional cut at the query's frozen
/// non-convex part.
pub fn active_cut(model: &dyn Model, x: &[f64]) -> Cut {
    let (value, grad) = model.value_and_input_grad(x);
    let split = model.convex_split();
    let slope = grad[split..].to_vec();
    let mut intercept = value;
    for (s, v) in slope.iter().zip(&x[split..]) {
        intercept -= s * v;
    }
    Cut { slope, intercept }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{RealMatrix, RealVector};
    use crate::models::MaxAffineNet;

    fn abs_net() -> MaxAffineNet {
        MaxAffineNet::from_parts(
            RealMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            RealVector::zeros(2),
        )
        .unwrap()
    }

    #[test]
    fn supporting_piece_of_absolute_value() {
        let net = abs_net();
        let cut = active_cut(&net, &[3.0]);
        assert_eq!(cut.slope, vec![1.0]);
        assert_eq!(cut.intercept, 0.0);
        let cut = active_cut(&net, &[-2.0]);
        assert_eq!(cut.slope, vec![-1.0]);
        assert_eq!(cut.intercept, 0.0);
    }

    #[test]
    fn tie_at_the_kink_takes_the_lowest_index() {
        let net = abs_net();
        let cut = active_cut(&net, &[0.0]);
        assert_eq!(cut.slope, vec![1.0]);
        assert_eq!(cut.intercept, 0.0);
    }

    #[test]
    fn touches_and_lower_bounds_random_max_affine_nets() {
        use rand::Rng;
        let mut rng = crate::seeded_rng(55);
        for seed in 0..20 {
            let net = MaxAffineNet::new(2, 6, seed).unwrap();
            for _ in 0..50 {
                let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let cut = active_cut(&net, &x);
                let h = crate::models::Model::eval(&net, &x);
                assert!((cut.eval(&x) - h).abs() <= 1e-10 * (1.0 + h.abs()));
                for _ in 0..20 {
                    let z = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                    let hz = crate::models::Model::eval(&net, &z);
                    assert!(cut.eval(&z) <= hz + 1e-9 * (1.0 + hz.abs()));
                }
            }
        }
    }
}
