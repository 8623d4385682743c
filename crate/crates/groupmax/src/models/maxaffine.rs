//! Single-layer cut network: the maximum of N affine functions, with
//! the max taken over the whole pre-activation vector.

use super::{gather_params, scatter_params, Model};
use crate::diffcore::{NodeId, RealMatrix, RealVector, Tape};
use crate::{seeded_rng, Error, Result};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxAffineNet {
    weight: RealMatrix,
    bias: RealVector,
}

impl MaxAffineNet {
    /// `cuts` affine pieces over a `input_dim`-dimensional input.
    /// Slopes are drawn symmetrically; intercepts are spread over
    /// (-1, 1) so the pieces start tie-free.
    pub fn new(input_dim: usize, cuts: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || cuts == 0 {
            return Err(Error::Structure("need at least one cut and one input dimension".into()));
        }
        let mut rng = seeded_rng(seed);
        let s = (6.0 / (input_dim + cuts) as f64).sqrt();
        let weight = RealMatrix::new(
            cuts,
            input_dim,
            (0..cuts * input_dim).map(|_| rng.gen_range(-s..s)).collect(),
        )?;
        let bias = RealVector::new((0..cuts).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        Ok(Self { weight, bias })
    }

    pub fn from_parts(weight: RealMatrix, bias: RealVector) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::Shape("bias length must match cut count".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn cut_count(&self) -> usize {
        self.weight.rows()
    }

    pub fn weight(&self) -> &RealMatrix {
        &self.weight
    }

    pub fn bias(&self) -> &RealVector {
        &self.bias
    }
}

impl Model for MaxAffineNet {
    fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    fn param_count(&self) -> usize {
        self.weight.rows() * (self.weight.cols() + 1)
    }

    fn params(&self) -> Vec<f64> {
        gather_params(&[self.weight.as_slice(), self.bias.as_slice()])
    }

    fn set_params(&mut self, p: &[f64]) {
        scatter_params(p, &mut [self.weight.entries_mut(), self.bias.entries_mut()]);
    }

    fn param_leaves(&self) -> usize {
        2
    }

    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let w = tape.leaf_matrix(&self.weight);
        let b = tape.leaf_vector(&self.bias);
        let input = tape.leaf_slice(x);
        let pre = tape.affine(w, Some(b), input);
        tape.global_max(pre)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cut_is_affine() {
        let net = MaxAffineNet::from_parts(
            RealMatrix::from_rows(&[vec![2.0, -1.0]]).unwrap(),
            RealVector::new(vec![0.5]).unwrap(),
        )
        .unwrap();
        assert_eq!(net.eval(&[1.0, 3.0]), 2.0 - 3.0 + 0.5);
        assert_eq!(net.eval(&[0.0, 0.0]), 0.5);
    }

    #[test]
    fn two_cuts_make_absolute_value() {
        let net = MaxAffineNet::from_parts(
            RealMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            RealVector::zeros(2),
        )
        .unwrap();
        assert_eq!(net.eval(&[4.0]), 4.0);
        assert_eq!(net.eval(&[-4.0]), 4.0);
    }

    #[test]
    fn matches_scan_oracle() {
        use rand::Rng;
        let net = MaxAffineNet::new(3, 7, 11).unwrap();
        let mut rng = crate::seeded_rng(12);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut want = f64::NEG_INFINITY;
            for i in 0..net.cut_count() {
                let mut v = net.bias().get(i);
                for j in 0..3 {
                    v += net.weight().get(i, j) * x[j];
                }
                want = want.max(v);
            }
            assert_eq!(net.eval(&x), want);
        }
    }
}
