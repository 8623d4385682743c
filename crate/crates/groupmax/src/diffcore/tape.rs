//! Recording tape for one forward/backward pair.
//!
//! Node values and adjoints live in a single arena so a cleared tape can
//! be reused without reallocating; this is the hot path of training.
//! Every argmax records its winner so the backward sweep (and cut
//! extraction built on top of it) is deterministic.

use super::{global_max_kernel, group_max_kernel, matvec_kernel, RealMatrix, RealVector};
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy)]
struct NodeMeta {
    off: usize,
    rows: usize,
    cols: usize,
}

impl NodeMeta {
    fn len(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// out = weight * input (+ bias); weight is rows x cols, input and out are vectors.
    Affine {
        weight: NodeId,
        bias: Option<NodeId>,
        input: NodeId,
        out: NodeId,
    },
    /// Entrywise max(x, 0); subgradient 0 at 0.
    ReluClamp { input: NodeId, out: NodeId },
    /// Entrywise tanh.
    Tanh { input: NodeId, out: NodeId },
    /// out_ij = weight_ij * scale_j.
    ColScale {
        weight: NodeId,
        scale: NodeId,
        out: NodeId,
    },
    /// Entrywise product of two vectors.
    Hadamard { left: NodeId, right: NodeId, out: NodeId },
    /// Entrywise sum, identical shapes.
    Add { left: NodeId, right: NodeId, out: NodeId },
    /// Block maxima; winners are global indices into the input.
    GroupMax {
        input: NodeId,
        group_size: usize,
        winners_off: usize,
        out: NodeId,
    },
    /// Single maximum over the whole vector.
    GlobalMax {
        input: NodeId,
        winner_off: usize,
        out: NodeId,
    },
}

/// Ordered record of the primitive operations of one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<f64>,
    adjoints: Vec<f64>,
    nodes: Vec<NodeMeta>,
    ops: Vec<Op>,
    winners: Vec<usize>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops all recorded state but keeps allocations for reuse.
    pub fn clear(&mut self) {
        self.values.clear();
        self.adjoints.clear();
        self.nodes.clear();
        self.ops.clear();
        self.winners.clear();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Handle to the `idx`-th recorded node, in registration order.
    pub fn node(&self, idx: usize) -> NodeId {
        assert!(idx < self.nodes.len(), "node index out of range");
        NodeId(idx)
    }

    fn alloc(&mut self, rows: usize, cols: usize) -> NodeId {
        let off = self.values.len();
        self.values.resize(off + rows * cols, 0.0);
        self.nodes.push(NodeMeta { off, rows, cols });
        NodeId(self.nodes.len() - 1)
    }

    fn meta(&self, n: NodeId) -> NodeMeta {
        self.nodes[n.0]
    }

    pub fn leaf_matrix(&mut self, m: &RealMatrix) -> NodeId {
        let id = self.alloc(m.rows(), m.cols());
        let meta = self.meta(id);
        self.values[meta.off..meta.off + meta.len()].copy_from_slice(m.as_slice());
        id
    }

    pub fn leaf_vector(&mut self, v: &RealVector) -> NodeId {
        self.leaf_slice(v.as_slice())
    }

    /// Records a vector leaf from a raw slice.
    pub fn leaf_slice(&mut self, data: &[f64]) -> NodeId {
        assert!(!data.is_empty(), "leaf must be non-empty");
        let id = self.alloc(data.len(), 1);
        let meta = self.meta(id);
        self.values[meta.off..meta.off + meta.len()].copy_from_slice(data);
        id
    }

    pub fn value(&self, n: NodeId) -> &[f64] {
        let meta = self.meta(n);
        &self.values[meta.off..meta.off + meta.len()]
    }

    /// Value of a 1x1 node.
    pub fn scalar(&self, n: NodeId) -> f64 {
        let meta = self.meta(n);
        assert_eq!(meta.len(), 1, "node is not scalar");
        self.values[meta.off]
    }

    /// Adjoint of a node after [`Tape::backward`].
    pub fn adjoint(&self, n: NodeId) -> &[f64] {
        let meta = self.meta(n);
        &self.adjoints[meta.off..meta.off + meta.len()]
    }

    pub fn affine(&mut self, weight: NodeId, bias: Option<NodeId>, input: NodeId) -> NodeId {
        let w = self.meta(weight);
        let v = self.meta(input);
        assert_eq!(v.cols, 1, "affine input must be a vector");
        assert_eq!(w.cols, v.rows, "affine: weight cols must match input length");
        if let Some(b) = bias {
            let b = self.meta(b);
            assert_eq!(b.cols, 1, "affine bias must be a vector");
            assert_eq!(b.rows, w.rows, "affine: bias length must match weight rows");
        }
        let out = self.alloc(w.rows, 1);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        matvec_kernel(
            &vals[w.off..w.off + w.len()],
            w.rows,
            w.cols,
            &vals[v.off..v.off + v.len()],
            bias.map(|b| {
                let b = self.nodes[b.0];
                &vals[b.off..b.off + b.len()]
            }),
            dst,
        );
        self.ops.push(Op::Affine { weight, bias, input, out });
        out
    }

    pub fn relu_clamp(&mut self, input: NodeId) -> NodeId {
        let m = self.meta(input);
        let out = self.alloc(m.rows, m.cols);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        for (d, &x) in dst.iter_mut().zip(&vals[m.off..m.off + m.len()]) {
            *d = x.max(0.0);
        }
        self.ops.push(Op::ReluClamp { input, out });
        out
    }

    pub fn tanh(&mut self, input: NodeId) -> NodeId {
        let m = self.meta(input);
        let out = self.alloc(m.rows, m.cols);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        for (d, &x) in dst.iter_mut().zip(&vals[m.off..m.off + m.len()]) {
            *d = x.tanh();
        }
        self.ops.push(Op::Tanh { input, out });
        out
    }

    pub fn col_scale(&mut self, weight: NodeId, scale: NodeId) -> NodeId {
        let w = self.meta(weight);
        let s = self.meta(scale);
        assert_eq!(s.cols, 1, "col_scale scale must be a vector");
        assert_eq!(w.cols, s.rows, "col_scale: weight cols must match scale length");
        let out = self.alloc(w.rows, w.cols);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        for i in 0..w.rows {
            for j in 0..w.cols {
                dst[i * w.cols + j] = vals[w.off + i * w.cols + j] * vals[s.off + j];
            }
        }
        self.ops.push(Op::ColScale { weight, scale, out });
        out
    }

    pub fn hadamard(&mut self, left: NodeId, right: NodeId) -> NodeId {
        let l = self.meta(left);
        let r = self.meta(right);
        assert_eq!(l.cols, 1, "hadamard operands must be vectors");
        assert_eq!(r.cols, 1, "hadamard operands must be vectors");
        assert_eq!(l.rows, r.rows, "hadamard: length mismatch");
        let out = self.alloc(l.rows, 1);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        for k in 0..l.rows {
            dst[k] = vals[l.off + k] * vals[r.off + k];
        }
        self.ops.push(Op::Hadamard { left, right, out });
        out
    }

    pub fn add(&mut self, left: NodeId, right: NodeId) -> NodeId {
        let l = self.meta(left);
        let r = self.meta(right);
        assert_eq!((l.rows, l.cols), (r.rows, r.cols), "add: shape mismatch");
        let out = self.alloc(l.rows, l.cols);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        for k in 0..l.len() {
            dst[k] = vals[l.off + k] + vals[r.off + k];
        }
        self.ops.push(Op::Add { left, right, out });
        out
    }

    pub fn group_max(&mut self, input: NodeId, group_size: usize) -> NodeId {
        let v = self.meta(input);
        assert_eq!(v.cols, 1, "group_max input must be a vector");
        assert!(
            group_size >= 1 && v.rows % group_size == 0,
            "group_max: length {} not divisible by group size {group_size}",
            v.rows
        );
        let groups = v.rows / group_size;
        let winners_off = self.winners.len();
        self.winners.resize(winners_off + groups, 0);
        let out = self.alloc(groups, 1);
        let o = self.meta(out);
        let (vals, dst) = split_at_node(&mut self.values, o);
        group_max_kernel(
            &vals[v.off..v.off + v.len()],
            group_size,
            dst,
            &mut self.winners[winners_off..winners_off + groups],
        );
        self.ops.push(Op::GroupMax { input, group_size, winners_off, out });
        out
    }

    pub fn global_max(&mut self, input: NodeId) -> NodeId {
        let v = self.meta(input);
        assert_eq!(v.cols, 1, "global_max input must be a vector");
        let winner_off = self.winners.len();
        self.winners.push(0);
        let out = self.alloc(1, 1);
        let o = self.meta(out);
        let (best, idx) = global_max_kernel(&self.values[v.off..v.off + v.len()]);
        self.values[o.off] = best;
        self.winners[winner_off] = idx;
        self.ops.push(Op::GlobalMax { input, winner_off, out });
        out
    }

    /// Reverse sweep from a scalar output node, seeding its adjoint.
    ///
    /// Visits the recorded operations in exact reverse order; all other
    /// adjoints are reset first, so one tape supports repeated backward
    /// calls with different seeds.
    pub fn backward(&mut self, output: NodeId, seed: f64) -> Result<()> {
        let out_meta = self.meta(output);
        if out_meta.len() != 1 {
            return Err(Error::Structure(
                "backward requires a scalar-terminated tape".into(),
            ));
        }
        self.adjoints.clear();
        self.adjoints.resize(self.values.len(), 0.0);
        self.adjoints[out_meta.off] = seed;

        for op in self.ops.iter().rev() {
            match *op {
                Op::Affine { weight, bias, input, out } => {
                    let w = self.nodes[weight.0];
                    let v = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    for i in 0..w.rows {
                        let g = self.adjoints[o.off + i];
                        if g == 0.0 {
                            continue;
                        }
                        if let Some(b) = bias {
                            let b = self.nodes[b.0];
                            self.adjoints[b.off + i] += g;
                        }
                        let wrow = w.off + i * w.cols;
                        for j in 0..w.cols {
                            self.adjoints[wrow + j] += g * self.values[v.off + j];
                            self.adjoints[v.off + j] += g * self.values[wrow + j];
                        }
                    }
                }
                Op::ReluClamp { input, out } => {
                    let m = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    for k in 0..m.len() {
                        if self.values[m.off + k] > 0.0 {
                            self.adjoints[m.off + k] += self.adjoints[o.off + k];
                        }
                    }
                }
                Op::Tanh { input, out } => {
                    let m = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    for k in 0..m.len() {
                        let y = self.values[o.off + k];
                        self.adjoints[m.off + k] += self.adjoints[o.off + k] * (1.0 - y * y);
                    }
                }
                Op::ColScale { weight, scale, out } => {
                    let w = self.nodes[weight.0];
                    let s = self.nodes[scale.0];
                    let o = self.nodes[out.0];
                    for i in 0..w.rows {
                        for j in 0..w.cols {
                            let g = self.adjoints[o.off + i * w.cols + j];
                            if g == 0.0 {
                                continue;
                            }
                            self.adjoints[w.off + i * w.cols + j] += g * self.values[s.off + j];
                            self.adjoints[s.off + j] += g * self.values[w.off + i * w.cols + j];
                        }
                    }
                }
                Op::Hadamard { left, right, out } => {
                    let l = self.nodes[left.0];
                    let r = self.nodes[right.0];
                    let o = self.nodes[out.0];
                    for k in 0..l.rows {
                        let g = self.adjoints[o.off + k];
                        self.adjoints[l.off + k] += g * self.values[r.off + k];
                        self.adjoints[r.off + k] += g * self.values[l.off + k];
                    }
                }
                Op::Add { left, right, out } => {
                    let l = self.nodes[left.0];
                    let r = self.nodes[right.0];
                    let o = self.nodes[out.0];
                    for k in 0..o.len() {
                        let g = self.adjoints[o.off + k];
                        self.adjoints[l.off + k] += g;
                        self.adjoints[r.off + k] += g;
                    }
                }
                Op::GroupMax { input, group_size, winners_off, out } => {
                    let v = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let groups = v.rows / group_size;
                    for g in 0..groups {
                        let winner = self.winners[winners_off + g];
                        self.adjoints[v.off + winner] += self.adjoints[o.off + g];
                    }
                }
                Op::GlobalMax { input, winner_off, out } => {
                    let v = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let winner = self.winners[winner_off];
                    self.adjoints[v.off + winner] += self.adjoints[o.off];
                }
            }
        }
        Ok(())
    }

    /// Recomputes every recorded operation from the current leaf values.
    ///
    /// A clean replay reproduces all node values (and winners) bit for bit.
    pub fn replay(&mut self) {
        let ops: Vec<Op> = self.ops.clone();
        for op in ops {
            match op {
                Op::Affine { weight, bias, input, out } => {
                    let w = self.nodes[weight.0];
                    let v = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    matvec_kernel(
                        &vals[w.off..w.off + w.len()],
                        w.rows,
                        w.cols,
                        &vals[v.off..v.off + v.len()],
                        bias.map(|b| {
                            let b = self.nodes[b.0];
                            &vals[b.off..b.off + b.len()]
                        }),
                        dst,
                    );
                }
                Op::ReluClamp { input, out } => {
                    let m = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    for (d, &x) in dst.iter_mut().zip(&vals[m.off..m.off + m.len()]) {
                        *d = x.max(0.0);
                    }
                }
                Op::Tanh { input, out } => {
                    let m = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    for (d, &x) in dst.iter_mut().zip(&vals[m.off..m.off + m.len()]) {
                        *d = x.tanh();
                    }
                }
                Op::ColScale { weight, scale, out } => {
                    let w = self.nodes[weight.0];
                    let s = self.nodes[scale.0];
                    let o = self.nodes[out.0];
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    for i in 0..w.rows {
                        for j in 0..w.cols {
                            dst[i * w.cols + j] = vals[w.off + i * w.cols + j] * vals[s.off + j];
                        }
                    }
                }
                Op::Hadamard { left, right, out } => {
                    let l = self.nodes[left.0];
                    let r = self.nodes[right.0];
                    let o = self.nodes[out.0];
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    for k in 0..l.rows {
                        dst[k] = vals[l.off + k] * vals[r.off + k];
                    }
                }
                Op::Add { left, right, out } => {
                    let l = self.nodes[left.0];
                    let r = self.nodes[right.0];
                    let o = self.nodes[out.0];
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    for k in 0..o.len() {
                        dst[k] = vals[l.off + k] + vals[r.off + k];
                    }
                }
                Op::GroupMax { input, group_size, winners_off, out } => {
                    let v = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let groups = v.rows / group_size;
                    let (vals, dst) = split_at_node(&mut self.values, o);
                    group_max_kernel(
                        &vals[v.off..v.off + v.len()],
                        group_size,
                        dst,
                        &mut self.winners[winners_off..winners_off + groups],
                    );
                }
                Op::GlobalMax { input, winner_off, out } => {
                    let v = self.nodes[input.0];
                    let o = self.nodes[out.0];
                    let (best, idx) = global_max_kernel(&self.values[v.off..v.off + v.len()]);
                    self.values[o.off] = best;
                    self.winners[winner_off] = idx;
                }
            }
        }
    }

    /// Distance of the recorded pass from the nearest argmax or clamp
    /// boundary: the minimum over group/global maxima of
    /// `winner - runner_up` and over clamp inputs of `|entry|`.
    /// `INFINITY` when no such operation was recorded.
    pub fn decision_margin(&self) -> f64 {
        let mut margin = f64::INFINITY;
        for op in &self.ops {
            match *op {
                Op::ReluClamp { input, .. } => {
                    let m = self.nodes[input.0];
                    for k in 0..m.len() {
                        margin = margin.min(self.values[m.off + k].abs());
                    }
                }
                Op::GroupMax { input, group_size, winners_off, .. } => {
                    if group_size < 2 {
                        continue;
                    }
                    let v = self.nodes[input.0];
                    let groups = v.rows / group_size;
                    for g in 0..groups {
                        let winner = self.winners[winners_off + g];
                        let best = self.values[v.off + winner];
                        for k in g * group_size..(g + 1) * group_size {
                            if k != winner {
                                margin = margin.min(best - self.values[v.off + k]);
                            }
                        }
                    }
                }
                Op::GlobalMax { input, winner_off, .. } => {
                    let v = self.nodes[input.0];
                    if v.rows < 2 {
                        continue;
                    }
                    let winner = self.winners[winner_off];
                    let best = self.values[v.off + winner];
                    for k in 0..v.rows {
                        if k != winner {
                            margin = margin.min(best - self.values[v.off + k]);
                        }
                    }
                }
                _ => {}
            }
        }
        margin
    }
}

/// Splits the value arena into everything before `node` and the node's
/// own storage, so a kernel can read earlier nodes while writing its
/// output. Relies on nodes being allocated in tape order.
fn split_at_node(values: &mut [f64], node: NodeMeta) -> (&[f64], &mut [f64]) {
    let (before, rest) = values.split_at_mut(node.off);
    (before, &mut rest[..node.len()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_of_abs_at_three() {
        // h(x) = max(x, -x) via a 2x1 weight and a global max.
        let mut tape = Tape::new();
        let w = tape.leaf_matrix(&RealMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap());
        let b = tape.leaf_vector(&RealVector::zeros(2));
        let x = tape.leaf_slice(&[3.0]);
        let pre = tape.affine(w, Some(b), x);
        let out = tape.global_max(pre);
        assert_eq!(tape.scalar(out), 3.0);
        tape.backward(out, 1.0).unwrap();
        assert_eq!(tape.adjoint(x), &[1.0]);
    }

    #[test]
    fn backward_abs_tie_routes_to_lowest_index() {
        let mut tape = Tape::new();
        let w = tape.leaf_matrix(&RealMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap());
        let x = tape.leaf_slice(&[0.0]);
        let pre = tape.affine(w, None, x);
        let out = tape.global_max(pre);
        tape.backward(out, 1.0).unwrap();
        // Row 0 (+x) wins the 0-0 tie.
        assert_eq!(tape.adjoint(x), &[1.0]);
    }

    #[test]
    fn backward_of_pure_affine_is_transposed_weight_action() {
        let mut tape = Tape::new();
        let w = tape.leaf_matrix(&RealMatrix::from_rows(&[vec![2.0, -1.0], vec![0.5, 4.0]]).unwrap());
        let x = tape.leaf_slice(&[1.0, 2.0]);
        let pre = tape.affine(w, None, x);
        // Collapse to a scalar through a length-2 group max whose winner is row 1.
        let out = tape.group_max(pre, 2);
        assert_eq!(tape.value(pre), &[0.0, 8.5]);
        tape.backward(out, 1.0).unwrap();
        assert_eq!(tape.adjoint(x), &[0.5, 4.0]);
        assert_eq!(tape.adjoint(w), &[0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn relu_clamp_gradient_masks_boundary_and_negative() {
        let mut tape = Tape::new();
        let a = tape.leaf_matrix(&RealMatrix::from_rows(&[vec![-1.0, 2.0]]).unwrap());
        let c = tape.relu_clamp(a);
        let x = tape.leaf_slice(&[1.0, 1.0]);
        let pre = tape.affine(c, None, x);
        tape.backward(pre, 1.0).unwrap();
        // Upstream [1,1] against clamped [-1,2]: only the positive entry passes.
        assert_eq!(tape.adjoint(a), &[0.0, 1.0]);
    }

    #[test]
    fn replay_reproduces_output_bit_exactly() {
        use rand::Rng;
        let mut rng = crate::seeded_rng(41);
        for _ in 0..50 {
            let mut tape = Tape::new();
            let w1 = tape.leaf_matrix(
                &RealMatrix::new(6, 3, (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap(),
            );
            let b1 = tape.leaf_vector(
                &RealVector::new((0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap(),
            );
            let x = tape.leaf_slice(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.3]);
            let pre = tape.affine(w1, Some(b1), x);
            let z = tape.group_max(pre, 2);
            let w2 = tape.leaf_matrix(
                &RealMatrix::new(4, 3, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap(),
            );
            let w2c = tape.relu_clamp(w2);
            let pre2 = tape.affine(w2c, None, z);
            let out = tape.global_max(pre2);
            let recorded = tape.scalar(out);
            tape.replay();
            assert_eq!(tape.scalar(out).to_bits(), recorded.to_bits());
        }
    }

    #[test]
    fn backward_requires_scalar_output() {
        let mut tape = Tape::new();
        let x = tape.leaf_slice(&[1.0, 2.0]);
        assert!(tape.backward(x, 1.0).is_err());
    }

    #[test]
    fn clear_allows_reuse() {
        let mut tape = Tape::new();
        let x = tape.leaf_slice(&[5.0]);
        let y = tape.relu_clamp(x);
        assert_eq!(tape.scalar(y), 5.0);
        tape.clear();
        assert_eq!(tape.node_count(), 0);
        let x2 = tape.leaf_slice(&[-4.0]);
        let y2 = tape.relu_clamp(x2);
        assert_eq!(tape.scalar(y2), 0.0);
    }

    #[test]
    fn decision_margin_tracks_nearest_boundary() {
        let mut tape = Tape::new();
        let x = tape.leaf_slice(&[1.0, 0.25, -3.0, 0.5]);
        let _ = tape.group_max(x, 2); // margins 0.75 and 3.5
        assert_eq!(tape.decision_margin(), 0.75);
        let c = tape.relu_clamp(x);
        let _ = c;
        assert_eq!(tape.decision_margin(), 0.25);
    }
}
