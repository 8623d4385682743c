//! The partially convex group-max network.
//!
//! The input splits into a non-convex part (fed through an ordinary
//! activation path) and a convex part. Each layer combines a clamped,
//! gate-scaled recurrent term, a Hadamard-gated affine term in the
//! convex input, and a skip term from the feedforward state. Freezing
//! the non-convex input turns every layer into a max of affine
//! functions of the convex input, which is what conditional cut
//! enumeration exploits.

use super::{
    constant_vector, gather_params, glorot_nonneg, glorot_symmetric, scatter_params, Activation,
    DenseLayer, Model,
};
use crate::diffcore::{affine, relu_clamp, NodeId, RealMatrix, RealVector, Tape};
use crate::{seeded_rng, Error, Result};

/// One layer of the gated recursion. `u_prev` below is the width of the
/// feedforward state entering the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedLayer {
    /// Scaled by the gate and clamped before multiplying the recurrent state.
    pub gate_weight: RealMatrix,
    /// Maps the feedforward state to the gate (`gate_dim x u_prev`).
    pub gate_feed: RealMatrix,
    pub gate_bias: RealVector,
    /// Applied to the gated convex input (`rows x k`).
    pub convex_weight: RealMatrix,
    /// Maps the feedforward state to the convex gate (`k x u_prev`).
    pub convex_feed: RealMatrix,
    pub convex_bias: RealVector,
    /// Skip connection from the feedforward state (`rows x u_prev`).
    pub skip_weight: RealMatrix,
    pub bias: RealVector,
}

impl GatedLayer {
    fn blocks(&self) -> [&[f64]; 8] {
        [
            self.gate_weight.as_slice(),
            self.gate_feed.as_slice(),
            self.gate_bias.as_slice(),
            self.convex_weight.as_slice(),
            self.convex_feed.as_slice(),
            self.convex_bias.as_slice(),
            self.skip_weight.as_slice(),
            self.bias.as_slice(),
        ]
    }

    fn blocks_mut(&mut self) -> [&mut [f64]; 8] {
        [
            self.gate_weight.entries_mut(),
            self.gate_feed.entries_mut(),
            self.gate_bias.entries_mut(),
            self.convex_weight.entries_mut(),
            self.convex_feed.entries_mut(),
            self.convex_bias.entries_mut(),
            self.skip_weight.entries_mut(),
            self.bias.entries_mut(),
        ]
    }

    pub(super) fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub(super) fn random(
        rows: usize,
        gate_dim: usize,
        convex_dim: usize,
        u_prev: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Self {
        GatedLayer {
            gate_weight: glorot_nonneg(rows, gate_dim, rng),
            gate_feed: glorot_symmetric(gate_dim, u_prev, rng),
            gate_bias: constant_vector(gate_dim, 1.0),
            convex_weight: glorot_symmetric(rows, convex_dim, rng),
            convex_feed: glorot_symmetric(convex_dim, u_prev, rng),
            convex_bias: constant_vector(convex_dim, 1.0),
            skip_weight: glorot_symmetric(rows, u_prev, rng),
            bias: constant_vector(rows, 0.0),
        }
    }

    /// Records the layer pre-activation given the recurrent state (if
    /// any), the convex input leaf, and the feedforward state.
    pub(super) fn pre_activation_on(
        &self,
        tape: &mut Tape,
        leaves: &GatedLeaves,
        recurrent: Option<NodeId>,
        convex_input: NodeId,
        feed_state: NodeId,
    ) -> NodeId {
        let gate_in = tape.affine(leaves.gate_feed, Some(leaves.gate_bias), feed_state);
        let conv_in = tape.affine(leaves.convex_feed, Some(leaves.convex_bias), feed_state);
        let gated_y = tape.hadamard(convex_input, conv_in);
        let convex_term = tape.affine(leaves.convex_weight, None, gated_y);
        let skip_term = tape.affine(leaves.skip_weight, Some(leaves.bias), feed_state);
        let mut pre = tape.add(convex_term, skip_term);
        if let Some(z) = recurrent {
            let scaled = tape.col_scale(leaves.gate_weight, gate_in);
            let clamped = tape.relu_clamp(scaled);
            let rec_term = tape.affine(clamped, None, z);
            pre = tape.add(pre, rec_term);
        }
        pre
    }

    pub(super) fn register_on(&self, tape: &mut Tape) -> GatedLeaves {
        GatedLeaves {
            gate_weight: tape.leaf_matrix(&self.gate_weight),
            gate_feed: tape.leaf_matrix(&self.gate_feed),
            gate_bias: tape.leaf_vector(&self.gate_bias),
            convex_weight: tape.leaf_matrix(&self.convex_weight),
            convex_feed: tape.leaf_matrix(&self.convex_feed),
            convex_bias: tape.leaf_vector(&self.convex_bias),
            skip_weight: tape.leaf_matrix(&self.skip_weight),
            bias: tape.leaf_vector(&self.bias),
        }
    }
}

pub(super) struct GatedLeaves {
    gate_weight: NodeId,
    gate_feed: NodeId,
    gate_bias: NodeId,
    convex_weight: NodeId,
    convex_feed: NodeId,
    convex_bias: NodeId,
    skip_weight: NodeId,
    bias: NodeId,
}

/// Affine data of one layer at a frozen non-convex input: the layer
/// pre-activation is `recurrent * z + convex_slope * y + offset`.
#[derive(Debug, Clone)]
pub struct ConditionalLayer {
    pub recurrent: RealMatrix,
    pub convex_slope: RealMatrix,
    pub offset: RealVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialGroupMaxNet {
    input_dim: usize,
    convex_dim: usize,
    feed_width: usize,
    convex_width: usize,
    group_size: usize,
    feed_activation: Activation,
    feed_layers: Vec<DenseLayer>,
    layers: Vec<GatedLayer>,
}

impl PartialGroupMaxNet {
    /// `input_dim` is the total dimension; the last `convex_dim`
    /// coordinates are the convex input. `feed_width`/`convex_width` are
    /// the widths of the non-convex and convex paths, `depth` the layer
    /// count. Gate biases start at one so every multiplicative gate is
    /// initially open; gate weights are drawn nonnegative (they pass
    /// through the clamp), everything else symmetrically.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        input_dim: usize,
        convex_dim: usize,
        feed_width: usize,
        convex_width: usize,
        group_size: usize,
        depth: usize,
        seed: u64,
        feed_activation: Activation,
    ) -> Result<Self> {
        if convex_dim == 0 || input_dim <= convex_dim {
            return Err(Error::Structure(format!(
                "need input_dim > convex_dim >= 1, got {input_dim} and {convex_dim}"
            )));
        }
        if feed_width == 0 || convex_width == 0 || depth == 0 {
            return Err(Error::Structure("widths and depth must be at least 1".into()));
        }
        if group_size == 0 || convex_width % group_size != 0 {
            return Err(Error::Structure(format!(
                "convex width {convex_width} is not divisible by group size {group_size}"
            )));
        }
        let non_convex = input_dim - convex_dim;
        let groups = convex_width / group_size;
        let mut rng = seeded_rng(seed);

        let mut feed_layers = Vec::with_capacity(depth - 1);
        let mut u_prev = non_convex;
        for _ in 1..depth {
            feed_layers.push(DenseLayer {
                weight: glorot_symmetric(feed_width, u_prev, &mut rng),
                bias: constant_vector(feed_width, 0.0),
            });
            u_prev = feed_width;
        }

        let mut layers = Vec::with_capacity(depth);
        let mut u_prev = non_convex;
        for _ in 0..depth {
            layers.push(GatedLayer::random(convex_width, groups, convex_dim, u_prev, &mut rng));
            u_prev = feed_width;
        }

        Ok(Self {
            input_dim,
            convex_dim,
            feed_width,
            convex_width,
            group_size,
            feed_activation,
            feed_layers,
            layers,
        })
    }

    pub fn convex_dim(&self) -> usize {
        self.convex_dim
    }

    pub fn non_convex_dim(&self) -> usize {
        self.input_dim - self.convex_dim
    }

    pub fn feed_width(&self) -> usize {
        self.feed_width
    }

    pub fn convex_width(&self) -> usize {
        self.convex_width
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn group_count(&self) -> usize {
        self.convex_width / self.group_size
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn feed_activation(&self) -> Activation {
        self.feed_activation
    }

    pub fn layers_mut(&mut self) -> &mut [GatedLayer] {
        &mut self.layers
    }

    pub fn layers(&self) -> &[GatedLayer] {
        &self.layers
    }

    /// Feedforward states u_0 .. u_{q-1} at a frozen non-convex input.
    fn feed_states(&self, x_tilde: &[f64]) -> Vec<RealVector> {
        let mut states = Vec::with_capacity(self.layers.len());
        states.push(RealVector::new(x_tilde.to_vec()).expect("non-empty non-convex input"));
        for layer in &self.feed_layers {
            let pre = affine(&layer.weight, &layer.bias, states.last().unwrap())
                .expect("feed shapes validated at construction");
            let activated = match self.feed_activation {
                Activation::Relu => {
                    RealVector::new(pre.as_slice().iter().map(|&v| v.max(0.0)).collect()).unwrap()
                }
                Activation::Tanh => {
                    RealVector::new(pre.as_slice().iter().map(|v| v.tanh()).collect()).unwrap()
                }
            };
            states.push(activated);
        }
        states
    }

    /// Per-layer affine maps in the convex input at a frozen `x_tilde`.
    pub fn conditional_layers(&self, x_tilde: &[f64]) -> Vec<ConditionalLayer> {
        assert_eq!(x_tilde.len(), self.non_convex_dim(), "non-convex input dimension mismatch");
        let states = self.feed_states(x_tilde);
        self.layers
            .iter()
            .zip(&states)
            .map(|(layer, u)| {
                let gate = affine(&layer.gate_feed, &layer.gate_bias, u).expect("validated shapes");
                let mut recurrent = layer.gate_weight.clone();
                for i in 0..recurrent.rows() {
                    for j in 0..recurrent.cols() {
                        recurrent.set(i, j, recurrent.get(i, j) * gate.get(j));
                    }
                }
                let recurrent = relu_clamp(&recurrent);

                let conv_gate =
                    affine(&layer.convex_feed, &layer.convex_bias, u).expect("validated shapes");
                let mut convex_slope = layer.convex_weight.clone();
                for i in 0..convex_slope.rows() {
                    for j in 0..convex_slope.cols() {
                        convex_slope.set(i, j, convex_slope.get(i, j) * conv_gate.get(j));
                    }
                }

                let offset = affine(&layer.skip_weight, &layer.bias, u).expect("validated shapes");
                ConditionalLayer { recurrent, convex_slope, offset }
            })
            .collect()
    }
}

impl Model for PartialGroupMaxNet {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn convex_split(&self) -> usize {
        self.input_dim - self.convex_dim
    }

    fn param_count(&self) -> usize {
        let feed: usize =
            self.feed_layers.iter().map(|l| l.weight.rows() * (l.weight.cols() + 1)).sum();
        let gated: usize = self.layers.iter().map(GatedLayer::len).sum();
        feed + gated
    }

    fn params(&self) -> Vec<f64> {
        let mut blocks: Vec<&[f64]> = Vec::new();
        for l in &self.feed_layers {
            blocks.push(l.weight.as_slice());
            blocks.push(l.bias.as_slice());
        }
        for l in &self.layers {
            blocks.extend(l.blocks());
        }
        gather_params(&blocks)
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut blocks: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.feed_layers {
            blocks.push(l.weight.entries_mut());
            blocks.push(l.bias.entries_mut());
        }
        for l in &mut self.layers {
            blocks.extend(l.blocks_mut());
        }
        scatter_params(p, &mut blocks);
    }

    fn param_leaves(&self) -> usize {
        2 * self.feed_layers.len() + 8 * self.layers.len()
    }

    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId {
        assert_eq!(x.len(), self.input_dim, "input dimension mismatch");
        let split = self.convex_split();

        let feed_leaves: Vec<(NodeId, NodeId)> = self
            .feed_layers
            .iter()
            .map(|l| (tape.leaf_matrix(&l.weight), tape.leaf_vector(&l.bias)))
            .collect();
        let gated_leaves: Vec<GatedLeaves> =
            self.layers.iter().map(|l| l.register_on(tape)).collect();
        let mut feed_state = tape.leaf_slice(&x[..split]);
        let convex_input = tape.leaf_slice(&x[split..]);

        let q = self.layers.len();
        let mut recurrent: Option<NodeId> = None;
        let mut out = None;
        for (i, (layer, leaves)) in self.layers.iter().zip(&gated_leaves).enumerate() {
            let pre = layer.pre_activation_on(tape, leaves, recurrent, convex_input, feed_state);
            if i + 1 < q {
                recurrent = Some(tape.group_max(pre, self.group_size));
                let (w, b) = feed_leaves[i];
                let lin = tape.affine(w, Some(b), feed_state);
                feed_state = self.feed_activation.apply_on(tape, lin);
            } else {
                out = Some(tape.global_max(pre));
            }
        }
        out.expect("at least one layer")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_shapes() {
        let net = PartialGroupMaxNet::new(2, 1, 10, 10, 5, 3, 0, Activation::Relu).unwrap();
        assert_eq!(net.group_count(), 2);
        // Deeper layers map the feedforward state to the convex gate.
        assert_eq!(net.layers()[1].convex_feed.rows(), 1);
        assert_eq!(net.layers()[1].convex_feed.cols(), 10);
        // Layer 1 is fed by the raw non-convex input.
        assert_eq!(net.layers()[0].convex_feed.cols(), 1);
        // The recurrent term consumes a grouped state.
        assert_eq!(net.layers()[2].gate_weight.cols(), 2);
    }

    #[test]
    fn seed_determinism() {
        let a = PartialGroupMaxNet::new(3, 2, 4, 6, 2, 2, 5, Activation::Relu).unwrap();
        let b = PartialGroupMaxNet::new(3, 2, 4, 6, 2, 2, 5, Activation::Relu).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn parameter_count_matches_shape_enumeration() {
        // (d, k, m_x, m_y, G, q) = (2, 1, 3, 4, 2, 2): enumerate every
        // family's shape by the recursion and sum.
        let net = PartialGroupMaxNet::new(2, 1, 3, 4, 2, 2, 1, Activation::Relu).unwrap();
        let (d, k, m_x, m_y, g, q) = (2usize, 1usize, 3usize, 4usize, 2usize, 2usize);
        let groups = m_y / g;
        let mut expected = 0;
        // Feedforward path: q-1 layers, first from the raw input.
        let mut u_prev = d - k;
        for _ in 1..q {
            expected += m_x * u_prev + m_x;
            u_prev = m_x;
        }
        // Gated path: q layers.
        let mut u_prev = d - k;
        for _ in 0..q {
            expected += m_y * groups; // gate weight
            expected += groups * u_prev + groups; // gate feed + bias
            expected += m_y * k; // convex weight
            expected += k * u_prev + k; // convex feed + bias
            expected += m_y * u_prev + m_y; // skip + bias
            u_prev = m_x;
        }
        assert_eq!(expected, 72);
        assert_eq!(net.param_count(), expected);
        assert_eq!(net.params().len(), expected);
    }

    #[test]
    fn absolute_value_in_the_convex_input() {
        // Single layer, zero u-path and gate influence, convex weight
        // rows (+1, -1), convex gate pinned at one: h = |y| for every x.
        let mut net = PartialGroupMaxNet::new(2, 1, 1, 2, 1, 1, 3, Activation::Relu).unwrap();
        let mut p = vec![0.0; net.param_count()];
        // Flat layout of the single gated layer:
        // gate_weight (2x2), gate_feed (2x1), gate_bias (2),
        // convex_weight (2x1), convex_feed (1x1), convex_bias (1),
        // skip_weight (2x1), bias (2).
        let cw = 4 + 2 + 2;
        p[cw] = 1.0;
        p[cw + 1] = -1.0;
        p[cw + 2 + 1] = 1.0; // convex_bias = 1, convex_feed = 0
        net.set_params(&p);
        for &(xt, y) in &[(0.0, 3.0), (5.0, -2.0), (-1.0, 0.0), (2.5, 7.0)] {
            assert_eq!(net.eval(&[xt, y]), y.abs(), "at ({xt}, {y})");
        }
    }

    #[test]
    fn structural_validation() {
        assert!(PartialGroupMaxNet::new(2, 2, 3, 4, 2, 2, 0, Activation::Relu).is_err());
        assert!(PartialGroupMaxNet::new(2, 1, 3, 5, 2, 2, 0, Activation::Relu).is_err());
        assert!(PartialGroupMaxNet::new(1, 1, 3, 4, 2, 2, 0, Activation::Relu).is_err());
    }
}
