//! Baseline architectures: the input-convex network (full and partially
//! convex variants) and a plain dense ReLU network.

use super::{
    constant_vector, gather_params, glorot_nonneg, glorot_symmetric, scatter_params, Activation,
    DenseLayer, GatedLayer, Model,
};
use crate::diffcore::{NodeId, RealMatrix, Tape};
use crate::{seeded_rng, Error, Result};

/// Input-convex network: hidden states combined through recurrent
/// weights that are clamped nonnegative at forward time, plus an
/// unconstrained injection of the raw input at every layer. ReLU hidden
/// activations, linear scalar readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Icnn {
    input_dim: usize,
    /// Hidden layers followed by the width-1 readout; layer 0 has no
    /// recurrent weight.
    layers: Vec<IcnnLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcnnLayer {
    pub recurrent: Option<RealMatrix>,
    pub injection: DenseLayer,
}

impl Icnn {
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::Structure("need at least one nonempty hidden layer".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = 0usize;
        for (j, &width) in hidden.iter().chain(std::iter::once(&1usize)).enumerate() {
            let recurrent = if j == 0 { None } else { Some(glorot_nonneg(width, prev, &mut rng)) };
            let injection = DenseLayer {
                weight: glorot_symmetric(width, input_dim, &mut rng),
                bias: constant_vector(width, 0.0),
            };
            layers.push(IcnnLayer { recurrent, injection });
            prev = width;
        }
        Ok(Self { input_dim, layers })
    }

    pub fn layers(&self) -> &[IcnnLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [IcnnLayer] {
        &mut self.layers
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.injection.weight.rows()).collect()
    }
}

impl Model for Icnn {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                let rec = l.recurrent.as_ref().map_or(0, |r| r.rows() * r.cols());
                rec + l.injection.weight.rows() * (l.injection.weight.cols() + 1)
            })
            .sum()
    }

    fn params(&self) -> Vec<f64> {
        let mut blocks: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            if let Some(r) = &l.recurrent {
                blocks.push(r.as_slice());
            }
            blocks.push(l.injection.weight.as_slice());
            blocks.push(l.injection.bias.as_slice());
        }
        gather_params(&blocks)
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut blocks: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            if let Some(r) = &mut l.recurrent {
                blocks.push(r.entries_mut());
            }
            blocks.push(l.injection.weight.entries_mut());
            blocks.push(l.injection.bias.entries_mut());
        }
        scatter_params(p, &mut blocks);
    }

    fn param_leaves(&self) -> usize {
        self.layers.iter().map(|l| if l.recurrent.is_some() { 3 } else { 2 }).sum()
    }

    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId {
        assert_eq!(x.len(), self.input_dim, "input dimension mismatch");
        let leaves: Vec<(Option<NodeId>, NodeId, NodeId)> = self
            .layers
            .iter()
            .map(|l| {
                (
                    l.recurrent.as_ref().map(|r| tape.leaf_matrix(r)),
                    tape.leaf_matrix(&l.injection.weight),
                    tape.leaf_vector(&l.injection.bias),
                )
            })
            .collect();
        let input = tape.leaf_slice(x);

        let last = self.layers.len() - 1;
        let mut state: Option<NodeId> = None;
        for (j, &(rec, w, b)) in leaves.iter().enumerate() {
            let mut pre = tape.affine(w, Some(b), input);
            if let (Some(r), Some(z)) = (rec, state) {
                let clamped = tape.relu_clamp(r);
                let rec_term = tape.affine(clamped, None, z);
                pre = tape.add(pre, rec_term);
            }
            state = Some(if j == last { pre } else { tape.relu_clamp(pre) });
        }
        state.expect("at least one layer")
    }
}

/// Partially convex input-convex network: the gated recursion of the
/// partial group-max network with componentwise ReLU in place of the
/// block maxima and a linear width-1 readout in place of the global max.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialIcnn {
    input_dim: usize,
    convex_dim: usize,
    feed_width: usize,
    convex_width: usize,
    feed_activation: Activation,
    feed_layers: Vec<DenseLayer>,
    layers: Vec<GatedLayer>,
}

impl PartialIcnn {
    pub fn new(
        input_dim: usize,
        convex_dim: usize,
        feed_width: usize,
        convex_width: usize,
        depth: usize,
        seed: u64,
    ) -> Result<Self> {
        if convex_dim == 0 || input_dim <= convex_dim {
            return Err(Error::Structure(format!(
                "need input_dim > convex_dim >= 1, got {input_dim} and {convex_dim}"
            )));
        }
        if feed_width == 0 || convex_width == 0 || depth == 0 {
            return Err(Error::Structure("widths and depth must be at least 1".into()));
        }
        let non_convex = input_dim - convex_dim;
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

        // Hidden layers keep the convex width; the readout has one row.
        // The recurrent state is never grouped, so gates have the full
        // convex width.
        let mut layers = Vec::with_capacity(depth);
        let mut u_prev = non_convex;
        for i in 0..depth {
            let rows = if i + 1 == depth { 1 } else { convex_width };
            layers.push(GatedLayer::random(rows, convex_width, convex_dim, u_prev, &mut rng));
            u_prev = feed_width;
        }

        Ok(Self {
            input_dim,
            convex_dim,
            feed_width,
            convex_width,
            feed_activation: Activation::Relu,
            feed_layers,
            layers,
        })
    }

    pub fn convex_dim(&self) -> usize {
        self.convex_dim
    }

    pub fn feed_width(&self) -> usize {
        self.feed_width
    }

    pub fn convex_width(&self) -> usize {
        self.convex_width
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

impl Model for PartialIcnn {
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
            blocks.push(l.gate_weight.as_slice());
            blocks.push(l.gate_feed.as_slice());
            blocks.push(l.gate_bias.as_slice());
            blocks.push(l.convex_weight.as_slice());
            blocks.push(l.convex_feed.as_slice());
            blocks.push(l.convex_bias.as_slice());
            blocks.push(l.skip_weight.as_slice());
            blocks.push(l.bias.as_slice());
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
            blocks.push(l.gate_weight.entries_mut());
            blocks.push(l.gate_feed.entries_mut());
            blocks.push(l.gate_bias.entries_mut());
            blocks.push(l.convex_weight.entries_mut());
            blocks.push(l.convex_feed.entries_mut());
            blocks.push(l.convex_bias.entries_mut());
            blocks.push(l.skip_weight.entries_mut());
            blocks.push(l.bias.entries_mut());
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
        let gated_leaves: Vec<_> = self.layers.iter().map(|l| l.register_on(tape)).collect();
        let mut feed_state = tape.leaf_slice(&x[..split]);
        let convex_input = tape.leaf_slice(&x[split..]);

        let q = self.layers.len();
        let mut recurrent: Option<NodeId> = None;
        let mut out = None;
        for (i, (layer, leaves)) in self.layers.iter().zip(&gated_leaves).enumerate() {
            let pre = layer.pre_activation_on(tape, leaves, recurrent, convex_input, feed_state);
            if i + 1 < q {
                recurrent = Some(tape.relu_clamp(pre));
                let (w, b) = feed_leaves[i];
                let lin = tape.affine(w, Some(b), feed_state);
                feed_state = self.feed_activation.apply_on(tape, lin);
            } else {
                out = Some(pre); // width-1 linear readout
            }
        }
        out.expect("at least one layer")
    }
}

/// Plain dense network: ReLU hidden layers, linear scalar readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(input_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::Structure("need at least one nonempty hidden layer".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input_dim;
        for &width in hidden.iter().chain(std::iter::once(&1usize)) {
            layers.push(DenseLayer {
                weight: glorot_symmetric(width, prev, &mut rng),
                bias: constant_vector(width, 0.0),
            });
            prev = width;
        }
        Ok(Self { input_dim, layers })
    }

    pub fn from_layers(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() || layers.last().unwrap().weight.rows() != 1 {
            return Err(Error::Structure("readout layer must have one row".into()));
        }
        Ok(Self { input_dim, layers })
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.weight.rows()).collect()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }
}

impl Model for Mlp {
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

        let last = self.layers.len() - 1;
        let mut state = input;
        for (j, &(w, b)) in leaves.iter().enumerate() {
            let pre = tape.affine(w, Some(b), state);
            state = if j == last { pre } else { tape.relu_clamp(pre) };
        }
        state
    }
}
