//! The benchmark target functions.

use crate::diffcore::RealMatrix;
use crate::{seeded_rng, Error, Result};
use rand_distr::{Distribution, StandardNormal};

/// Identifier of a benchmark target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
}

impl TargetId {
    pub const ALL: [TargetId; 10] = [
        TargetId::F1,
        TargetId::F2,
        TargetId::F3,
        TargetId::F4,
        TargetId::F5,
        TargetId::F6,
        TargetId::F7,
        TargetId::F8,
        TargetId::F9,
        TargetId::F10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TargetId::F1 => "f1",
            TargetId::F2 => "f2",
            TargetId::F3 => "f3",
            TargetId::F4 => "f4",
            TargetId::F5 => "f5",
            TargetId::F6 => "f6",
            TargetId::F7 => "f7",
            TargetId::F8 => "f8",
            TargetId::F9 => "f9",
            TargetId::F10 => "f10",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.name() == s)
    }

    /// True when the target is convex only in its trailing coordinates.
    pub fn partially_convex(self) -> bool {
        matches!(self, TargetId::F5 | TargetId::F6 | TargetId::F7 | TargetId::F10)
    }
}

/// Construction rule for the random symmetric positive definite matrix:
/// `A = B^T B / d + 0.1 I` with `B` a `d x d` matrix of i.i.d. standard
/// normals, so the minimum eigenvalue is at least 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpdSpec {
    pub dim: usize,
    pub seed: u64,
}

pub fn make_spd(spec: SpdSpec) -> RealMatrix {
    let d = spec.dim;
    assert!(d >= 1, "dimension must be at least 1");
    let mut rng = seeded_rng(spec.seed);
    let b: Vec<f64> = (0..d * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut a = RealMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += b[k * d + i] * b[k * d + j];
            }
            acc /= d as f64;
            if i == j {
                acc += 0.1;
            }
            // Mirror so symmetry is exact.
            a.set(i, j, acc);
            a.set(j, i, acc);
        }
    }
    a
}

/// An evaluable benchmark target with its dimensions fixed.
#[derive(Debug, Clone)]
pub struct Target {
    id: TargetId,
    dim: usize,
    convex_dim: usize,
    spd: Option<RealMatrix>,
}

impl Target {
    /// `dim` is the total input dimension. For the partially convex
    /// targets the last `convex_dim` coordinates are the convex input;
    /// fully convex targets ignore `convex_dim`. `spd_seed` pins the
    /// random quadratic form instance.
    pub fn new(id: TargetId, dim: usize, convex_dim: usize, spd_seed: u64) -> Result<Self> {
        let (dim, convex_dim) = match id {
            TargetId::F1 | TargetId::F2 | TargetId::F3 | TargetId::F4 => {
                if dim != 1 {
                    return Err(Error::Structure(format!("{} is one-dimensional", id.name())));
                }
                (1, 1)
            }
            TargetId::F5 | TargetId::F6 | TargetId::F7 => {
                if dim != 2 {
                    return Err(Error::Structure(format!("{} is two-dimensional", id.name())));
                }
                (2, 1)
            }
            TargetId::F8 | TargetId::F9 => {
                if dim == 0 {
                    return Err(Error::Structure("dimension must be at least 1".into()));
                }
                (dim, dim)
            }
            TargetId::F10 => {
                if convex_dim == 0 || dim <= convex_dim {
                    return Err(Error::Structure(
                        "f10 needs dim > convex_dim >= 1".into(),
                    ));
                }
                (dim, convex_dim)
            }
        };
        let spd = match id {
            TargetId::F9 => Some(make_spd(SpdSpec { dim, seed: spd_seed })),
            _ => None,
        };
        Ok(Self { id, dim, convex_dim, spd })
    }

    pub fn id(&self) -> TargetId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn convex_dim(&self) -> usize {
        self.convex_dim
    }

    /// Index where the convex coordinates start.
    pub fn convex_split(&self) -> usize {
        self.dim - self.convex_dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        match self.id {
            TargetId::F1 => x[0] * x[0],
            TargetId::F2 => {
                let t = x[0];
                let bracket = if t < 0.0 { t.exp() - 1.0 } else { t };
                t * t + 10.0 * bracket
            }
            TargetId::F3 => {
                let s = x[0] * x[0] + 1.0;
                s * s
            }
            TargetId::F4 => {
                let t = x[0];
                t.abs().max((t * t - 3.0) / 2.0)
            }
            TargetId::F5 => {
                let (t, y) = (x[0], x[1]);
                y * y * (t + 2.0 * t * t * t).abs()
            }
            TargetId::F6 => {
                let (t, y) = (x[0], x[1]);
                (1.0 + y.abs()) * (t + 2.0 * t * t * t).abs()
            }
            TargetId::F7 => {
                let (t, y) = (x[0], x[1]);
                y.max(0.0) * t.abs() + t * t
            }
            TargetId::F8 => x.iter().map(|v| v * v).sum(),
            TargetId::F9 => {
                let a = self.spd.as_ref().expect("f9 carries its quadratic form");
                let mut acc = 0.0;
                for (i, &xi) in x.iter().enumerate() {
                    acc += xi.abs() + (1.0 - xi).abs();
                    let mut row = 0.0;
                    for (j, &xj) in x.iter().enumerate() {
                        row += a.get(i, j) * xj;
                    }
                    acc += xi * row;
                }
                acc
            }
            TargetId::F10 => {
                let split = self.convex_split();
                let sx: f64 = x[..split].iter().map(|v| v * v).sum();
                let sy: f64 = x[split..].iter().map(|v| v * v).sum();
                -sx / (2.0 * split as f64) + sy / (2.0 * self.convex_dim as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: TargetId, dim: usize, convex: usize) -> Target {
        Target::new(id, dim, convex, 7).unwrap()
    }

    #[test]
    fn one_dimensional_values() {
        assert_eq!(t(TargetId::F1, 1, 1).eval(&[2.0]), 4.0);
        assert_eq!(t(TargetId::F2, 1, 1).eval(&[0.0]), 0.0);
        assert_eq!(t(TargetId::F3, 1, 1).eval(&[1.0]), 4.0);
        // The two pieces meet at |x| = 3 (solve |x| = (x^2 - 3) / 2).
        assert_eq!(t(TargetId::F4, 1, 1).eval(&[1.0]), 1.0);
        assert_eq!(t(TargetId::F4, 1, 1).eval(&[3.0]), 3.0);
        assert_eq!(t(TargetId::F4, 1, 1).eval(&[-3.0]), 3.0);
        assert_eq!(t(TargetId::F4, 1, 1).eval(&[4.0]), (16.0 - 3.0) / 2.0);
    }

    #[test]
    fn bracket_of_f2_is_continuous_at_zero_with_matching_slopes() {
        let f = t(TargetId::F2, 1, 1);
        let h = 1e-7;
        let left = (f.eval(&[0.0]) - f.eval(&[-h])) / h;
        let right = (f.eval(&[h]) - f.eval(&[0.0])) / h;
        // Both one-sided slopes of the bracket are 1, so f2' is 10 on
        // either side at the origin (the x^2 term contributes nothing).
        assert!((left - 10.0).abs() < 1e-5, "left slope {left}");
        assert!((right - 10.0).abs() < 1e-5, "right slope {right}");
    }

    #[test]
    fn partial_targets() {
        assert_eq!(t(TargetId::F5, 2, 1).eval(&[1.0, 2.0]), 4.0 * 3.0);
        assert_eq!(t(TargetId::F6, 2, 1).eval(&[1.0, -2.0]), 3.0 * 3.0);
        assert_eq!(t(TargetId::F7, 2, 1).eval(&[-2.0, 3.0]), 3.0 * 2.0 + 4.0);
        assert_eq!(t(TargetId::F7, 2, 1).eval(&[-2.0, -3.0]), 4.0);
    }

    #[test]
    fn f10_unit_value_on_the_convex_sphere() {
        let target = t(TargetId::F10, 10, 4);
        // x = 0, y with y^T y = 2m gives exactly 1.
        let mut point = vec![0.0; 10];
        let m = 4.0;
        for v in point[6..].iter_mut() {
            *v = (2.0 * m / 4.0f64).sqrt();
        }
        assert!((target.eval(&point) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spd_matrix_is_symmetric_and_positive() {
        for seed in 0..20 {
            let a = make_spd(SpdSpec { dim: 6, seed });
            for i in 0..6 {
                for j in 0..6 {
                    assert_eq!(a.get(i, j), a.get(j, i));
                }
            }
            // d = 1 case: A = b^2 + 0.1 > 0.
            let scalar = make_spd(SpdSpec { dim: 1, seed });
            assert!(scalar.get(0, 0) >= 0.1);
        }
    }

    #[test]
    fn convex_targets_pass_the_secant_check() {
        use crate::convexity::{cube_sampler, max_jensen_violation};
        let mut rng = crate::seeded_rng(90);
        for id in [TargetId::F1, TargetId::F2, TargetId::F3, TargetId::F4] {
            let f = t(id, 1, 1);
            let v = max_jensen_violation(|x| f.eval(x), cube_sampler(1, 5.0), 10_000, &mut rng);
            assert!(v <= 1e-12, "{}: violation {v}", id.name());
        }
        for d in [2, 5] {
            for id in [TargetId::F8, TargetId::F9] {
                let f = t(id, d, d);
                let v =
                    max_jensen_violation(|x| f.eval(x), cube_sampler(d, 3.0), 10_000, &mut rng);
                assert!(v <= 1e-12, "{} d={d}: violation {v}", id.name());
            }
        }
    }

    #[test]
    fn partial_targets_are_convex_in_the_convex_coordinate() {
        use crate::convexity::{conditional_cube_sampler, max_jensen_violation};
        let mut rng = crate::seeded_rng(91);
        for id in [TargetId::F5, TargetId::F6, TargetId::F7] {
            let f = t(id, 2, 1);
            for xt in [-1.5, 0.0, 0.7] {
                let v = max_jensen_violation(
                    |x| f.eval(x),
                    conditional_cube_sampler(vec![xt], 1, 4.0),
                    10_000,
                    &mut rng,
                );
                assert!(v <= 1e-12, "{} at {xt}: violation {v}", id.name());
            }
        }
    }
}
