//! The fully convex group-max network.
//!
//! Layer 1 applies an unconstrained affine map; every later layer clamps
//! its weights to the nonnegative cone at forward time, so the
//! composition of block maxima stays a maximum of affine functions of
//! the input, i.e. a finite cut collection.

use super::{
    constant_vector, gather_params, glorot_nonneg, glorot_symmetric, scatter_params, DenseLayer,
    MaxAffineNet, Model,
};
use crate::diffcore::{NodeId, RealMatrix, RealVector, Tape};
use crate::{seeded_rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupMaxNet {
    input_dim: usize,
    group_size: usize,
    layers: Vec<DenseLayer>,
}

impl GroupMaxNet {
    /// Builds a network with the given per-layer widths.
    ///
    /// Every width except the last must be divisible by the group size
    /// (the last layer feeds the global maximum, which consumes all of
    /// its entries). Layer-1 weights are drawn symmetrically, deeper
    /// weights nonnegatively so all units start active under the clamp;
    /// biases start at zero. Deterministic in `seed`.
    pub fn new(input_dim: usize, widths: &[usize], group_size: usize, seed: u64) -> Result<Self> {
        Self::check_structure(input_dim, widths, group_size)?;
        let mut rng = seeded_rng(seed);
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = input_dim;
        for (j, &m) in widths.iter().enumerate() {
            let weight = if j == 0 {
                glorot_symmetric(m, fan_in, &mut rng)
            } else {
                glorot_nonneg(m, fan_in, &mut rng)
            };
            layers.push(DenseLayer { weight, bias: constant_vector(m, 0.0) });
            fan_in = m / group_size;
        }
        Ok(Self { input_dim, group_size, layers })
    }

    /// Wraps explicit layers, validating the shape recursion.
    pub fn from_layers(input_dim: usize, group_size: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        let widths: Vec<usize> = layers.iter().map(|l| l.weight.rows()).collect();
        Self::check_structure(input_dim, &widths, group_size)?;
        let mut fan_in = input_dim;
        for (j, layer) in layers.iter().enumerate() {
            if layer.weight.cols() != fan_in || layer.bias.len() != layer.weight.rows() {
                return Err(Error::Shape(format!(
                    "layer {j}: expected weight cols {fan_in} and matching bias"
                )));
            }
            fan_in = layer.weight.rows() / group_size;
        }
        Ok(Self { input_dim, group_size, layers })
    }

    fn check_structure(input_dim: usize, widths: &[usize], group_size: usize) -> Result<()> {
        if input_dim == 0 {
            return Err(Error::Structure("input dimension must be at least 1".into()));
        }
        if widths.is_empty() {
            return Err(Error::Structure("at least one layer is required".into()));
        }
        if group_size == 0 {
            return Err(Error::Structure("group size must be at least 1".into()));
        }
        for (j, &m) in widths.iter().enumerate() {
            if m == 0 {
                return Err(Error::Structure(format!("layer {j} has width 0")));
            }
            // The last layer feeds the global max: no divisibility needed.
            if j + 1 < widths.len() && m % group_size != 0 {
                return Err(Error::Structure(format!(
                    "layer {j} width {m} is not divisible by group size {group_size}"
                )));
            }
        }
        Ok(())
    }

    /// Deep network realizing exactly the cuts of a single-layer
    /// max-affine network: identity weights and zero biases above the
    /// first layer, widths shrinking by the group size each layer.
    /// Requires the cut count to be divisible by `group_size^(depth-1)`.
    pub fn embed_maxaffine(src: &MaxAffineNet, group_size: usize, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Structure("depth must be at least 1".into()));
        }
        let mut layers = vec![DenseLayer {
            weight: src.weight().clone(),
            bias: src.bias().clone(),
        }];
        let mut m = src.cut_count();
        for _ in 1..depth {
            if m % group_size != 0 {
                return Err(Error::Structure(format!(
                    "cannot embed {} cuts at depth {depth} with group size {group_size}",
                    src.cut_count()
                )));
            }
            m /= group_size;
            layers.push(DenseLayer {
                weight: RealMatrix::identity(m),
                bias: RealVector::zeros(m),
            });
        }
        Self::from_layers(src.input_dim(), group_size, layers)
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.weight.rows()).collect()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }
}

impl Model for GroupMaxNet {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.rows() * (l.weight.cols() + 1)).sum()
    }

    fn params(&self) -> Vec<f64> {
        let blocks: Vec<&[f64]> = self
            .layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect();
        gather_params(&blocks)
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut blocks: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| [l.weight.entries_mut(), l.bias.entries_mut()])
            .collect();
        scatter_params(p, &mut blocks);
    }

    fn param_leaves(&self) -> usize {
        2 * self.layers.len()
    }

    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId {
        assert_eq!(x.len(), self.input_dim, "input dimension mismatch");
        let leaves: Vec<(NodeId, NodeId)> = self
            .layers
            .iter()
            .map(|l| (tape.leaf_matrix(&l.weight), tape.leaf_vector(&l.bias)))
            .collect();
        let input = tape.leaf_slice(x);

        let q = self.layers.len();
        let mut state = input;
        for (j, &(w, b)) in leaves.iter().enumerate() {
            let weight = if j == 0 { w } else { tape.relu_clamp(w) };
            let pre = tape.affine(weight, Some(b), state);
            state = if j + 1 == q {
                tape.global_max(pre)
            } else {
                tape.group_max(pre, self.group_size)
            };
        }
        state
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// |x| as a two-layer net: rows (+1, -1), identity second layer.
    fn abs_net() -> GroupMaxNet {
        GroupMaxNet::from_layers(
            1,
            1,
            vec![
                DenseLayer {
                    weight: RealMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
                    bias: RealVector::zeros(2),
                },
                DenseLayer {
                    weight: RealMatrix::identity(2),
                    bias: RealVector::zeros(2),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn parameter_count_formula() {
        // M_1 (d+1) + sum_j M_j (K_{j-1} + 1)
        let net = GroupMaxNet::new(1, &[9, 9, 9], 3, 0).unwrap();
        assert_eq!(net.param_count(), 9 * 2 + 9 * 4 + 9 * 4);
        assert_eq!(net.params().len(), 90);

        // Single layer reduces to the max-affine shape.
        let single = GroupMaxNet::new(2, &[4], 4, 0).unwrap();
        assert_eq!(single.param_count(), 4 * 3);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = GroupMaxNet::new(3, &[8, 8], 2, 42).unwrap();
        let b = GroupMaxNet::new(3, &[8, 8], 2, 42).unwrap();
        assert_eq!(a.params(), b.params());
        let c = GroupMaxNet::new(3, &[8, 8], 2, 43).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn divisibility_is_enforced_except_last_layer() {
        assert!(GroupMaxNet::new(1, &[9, 9], 2, 0).is_err());
        // Last layer may be anything.
        assert!(GroupMaxNet::new(1, &[8, 9], 2, 0).is_ok());
        // Single layer: no group application at all.
        assert!(GroupMaxNet::new(1, &[5], 3, 0).is_ok());
    }

    #[test]
    fn constructed_absolute_value() {
        let net = abs_net();
        assert_eq!(net.eval(&[3.0]), 3.0);
        assert_eq!(net.eval(&[-2.0]), 2.0);
        assert_eq!(net.eval(&[0.0]), 0.0);
    }

    #[test]
    fn constant_net_ignores_input() {
        // All-zero weights, final bias c: h(x) = max_i c_i everywhere.
        let net = GroupMaxNet::from_layers(
            2,
            2,
            vec![
                DenseLayer { weight: RealMatrix::zeros(4, 2), bias: RealVector::zeros(4) },
                DenseLayer {
                    weight: RealMatrix::zeros(3, 2),
                    bias: RealVector::new(vec![-1.0, 7.5, 2.0]).unwrap(),
                },
            ],
        )
        .unwrap();
        assert_eq!(net.eval(&[0.3, -4.0]), 7.5);
        assert_eq!(net.eval(&[100.0, 100.0]), 7.5);
    }

    #[test]
    fn set_params_round_trip() {
        let mut net = GroupMaxNet::new(2, &[6, 6], 2, 9).unwrap();
        let p = net.params();
        let mut q = p.clone();
        q[0] += 0.5;
        net.set_params(&q);
        assert_eq!(net.params(), q);
        assert_ne!(net.params(), p);
    }

    #[test]
    fn positive_homogeneity_of_the_clamp_path() {
        use rand::Rng;
        let mut rng = crate::seeded_rng(17);
        for trial in 0..20 {
            let net = GroupMaxNet::new(2, &[6, 6, 6], 3, trial).unwrap();
            let c: f64 = rng.gen_range(0.1..10.0);
            // Scale layer-1 weights and every bias by c.
            let mut scaled = net.clone();
            let mut p = net.params();
            let mut off = 0;
            for (j, layer) in net.layers().iter().enumerate() {
                let wlen = layer.weight.rows() * layer.weight.cols();
                if j == 0 {
                    for v in &mut p[off..off + wlen] {
                        *v *= c;
                    }
                }
                off += wlen;
                for v in &mut p[off..off + layer.bias.len()] {
                    *v *= c;
                }
                off += layer.bias.len();
            }
            scaled.set_params(&p);
            for _ in 0..50 {
                let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let h = net.eval(&x);
                let hc = scaled.eval(&x);
                assert!(
                    (hc - c * h).abs() <= 1e-12 * (1.0 + h.abs() * c),
                    "homogeneity violated: c={c} h={h} hc={hc}"
                );
            }
        }
    }

    #[test]
    fn embedding_matches_source_max_affine() {
        let src = MaxAffineNet::new(2, 8, 5).unwrap();
        let deep = GroupMaxNet::embed_maxaffine(&src, 2, 3).unwrap();
        assert_eq!(deep.widths(), vec![8, 4, 2]);
        let mut rng = crate::seeded_rng(5);
        use rand::Rng;
        for _ in 0..1000 {
            let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let a = src.eval(&x);
            let b = deep.eval(&x);
            assert!((a - b).abs() <= 1e-12, "embedding drifted: {a} vs {b}");
        }
    }
}
