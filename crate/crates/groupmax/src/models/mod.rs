//! The network architectures: group-max networks (fully and partially
//! convex), the single-layer max-affine network, and the baseline
//! input-convex and feedforward networks.
//!
//! All architectures evaluate through [`diffcore::Tape`](crate::diffcore::Tape)
//! so that one forward implementation serves plain evaluation, training
//! gradients, and active-cut extraction.

mod baselines;
mod groupmax;
mod maxaffine;
mod partial;
mod serialize;

pub use baselines::{Icnn, Mlp, PartialIcnn};
pub use groupmax::GroupMaxNet;
pub use maxaffine::MaxAffineNet;
pub use partial::{GatedLayer, PartialGroupMaxNet};
pub use serialize::{load_model, save_model, LoadedModel};

use crate::diffcore::{NodeId, RealMatrix, RealVector, Tape};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One dense layer: weight matrix plus bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: RealMatrix,
    pub bias: RealVector,
}

/// Activation of the non-convex feedforward path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply_on(self, tape: &mut Tape, n: NodeId) -> NodeId {
        match self {
            Activation::Relu => tape.relu_clamp(n),
            Activation::Tanh => tape.tanh(n),
        }
    }
}

/// A scalar-valued parametric function of a real vector.
///
/// The contract between `params`/`set_params` and `forward_on` is that
/// parameter leaves are registered on the tape first, in exactly the
/// flat-vector order, followed by the input leaf (or the non-convex and
/// convex input leaves, in that order, for partially convex models).
pub trait Model: Send + Sync {
    fn input_dim(&self) -> usize;

    /// Index where the convex input coordinates start (0 when the model
    /// is convex in its whole input).
    fn convex_split(&self) -> usize {
        0
    }

    fn param_count(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    /// Overwrites all parameters from a flat vector. Panics on length
    /// mismatch.
    fn set_params(&mut self, p: &[f64]);

    /// Number of parameter leaves `forward_on` registers.
    fn param_leaves(&self) -> usize;

    /// Records one forward pass on a cleared tape; returns the scalar
    /// output node.
    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId;

    fn eval_on(&self, tape: &mut Tape, x: &[f64]) -> f64 {
        tape.clear();
        let out = self.forward_on(tape, x);
        tape.scalar(out)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut tape = Tape::new();
        self.eval_on(&mut tape, x)
    }

    /// Forward plus backward: adds `seed * dh/dθ` into `grad` (flat
    /// layout) and returns the forward value.
    fn accumulate_grad(&self, tape: &mut Tape, x: &[f64], seed: f64, grad: &mut [f64]) -> f64 {
        tape.clear();
        let out = self.forward_on(tape, x);
        let value = tape.scalar(out);
        tape.backward(out, seed).expect("forward output is scalar");
        let mut off = 0;
        for leaf in 0..self.param_leaves() {
            let adj = tape.adjoint(tape.node(leaf));
            for (g, a) in grad[off..off + adj.len()].iter_mut().zip(adj) {
                *g += a;
            }
            off += adj.len();
        }
        debug_assert_eq!(off, self.param_count(), "leaf order does not match flat layout");
        value
    }

    /// Value and gradient with respect to the full input vector, under
    /// the recorded tie conventions. For a convex model this is a valid
    /// subgradient, i.e. the slope of the active cut.
    fn value_and_input_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut tape = Tape::new();
        let out = self.forward_on(&mut tape, x);
        let value = tape.scalar(out);
        tape.backward(out, 1.0).expect("forward output is scalar");
        let mut g = Vec::with_capacity(self.input_dim());
        let mut leaf = self.param_leaves();
        while g.len() < self.input_dim() {
            g.extend_from_slice(tape.adjoint(tape.node(leaf)));
            leaf += 1;
        }
        (value, g)
    }

    /// Value plus the decision margin of the pass (distance to the
    /// nearest argmax/clamp boundary), for tie-avoiding gradient checks.
    fn value_and_margin(&self, x: &[f64]) -> (f64, f64) {
        let mut tape = Tape::new();
        let out = self.forward_on(&mut tape, x);
        (tape.scalar(out), tape.decision_margin())
    }

    /// Full analytic parameter gradient at `x` (seed 1).
    fn param_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut tape = Tape::new();
        let mut grad = vec![0.0; self.param_count()];
        self.accumulate_grad(&mut tape, x, 1.0, &mut grad);
        grad
    }
}

impl<M: Model + ?Sized> Model for Box<M> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn convex_split(&self) -> usize {
        (**self).convex_split()
    }

    fn param_count(&self) -> usize {
        (**self).param_count()
    }

    fn params(&self) -> Vec<f64> {
        (**self).params()
    }

    fn set_params(&mut self, p: &[f64]) {
        (**self).set_params(p)
    }

    fn param_leaves(&self) -> usize {
        (**self).param_leaves()
    }

    fn forward_on(&self, tape: &mut Tape, x: &[f64]) -> NodeId {
        (**self).forward_on(tape, x)
    }
}

// ---------------------------------------------------------------------------
// Initialization. The symmetric draw is the usual fan-balanced uniform;
// weight families that pass through a clamp are drawn nonnegative so that
// no unit starts silenced.
// ---------------------------------------------------------------------------

pub(crate) fn glorot_symmetric(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
    let s = (6.0 / (rows + cols) as f64).sqrt();
    let entries = (0..rows * cols).map(|_| rng.gen_range(-s..s)).collect();
    RealMatrix::new(rows, cols, entries).expect("positive dims")
}

pub(crate) fn glorot_nonneg(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
    let s = (6.0 / (rows + cols) as f64).sqrt();
    let entries = (0..rows * cols).map(|_| rng.gen_range(0.0..s)).collect();
    RealMatrix::new(rows, cols, entries).expect("positive dims")
}

pub(crate) fn constant_vector(len: usize, value: f64) -> RealVector {
    RealVector::new(vec![value; len]).expect("positive length")
}

/// Copies a flat parameter slice into a sequence of mutable blocks.
pub(crate) fn scatter_params(p: &[f64], blocks: &mut [&mut [f64]]) {
    let total: usize = blocks.iter().map(|b| b.len()).sum();
    assert_eq!(p.len(), total, "flat parameter vector has wrong length");
    let mut off = 0;
    for block in blocks {
        block.copy_from_slice(&p[off..off + block.len()]);
        off += block.len();
    }
}

/// Concatenates parameter blocks into one flat vector.
pub(crate) fn gather_params(blocks: &[&[f64]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(blocks.iter().map(|b| b.len()).sum());
    for block in blocks {
        out.extend_from_slice(block);
    }
    out
}
