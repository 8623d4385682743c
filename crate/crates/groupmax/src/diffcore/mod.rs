//! Dense real linear algebra plus reverse-mode gradients for the
//! operation set the cut-generating networks need.
//!
//! There is deliberately no general-purpose autodiff here: the
//! differentiable primitives are exactly affine maps, entrywise
//! clamping, tanh, column scaling, Hadamard products, vector addition,
//! and the two max activations. Subgradient conventions are fixed so
//! that gradients and cut extraction are reproducible:
//!
//! - ties inside a max resolve to the lowest index;
//! - the subgradient of `max(t, 0)` at `t = 0` is 0.

mod fdcheck;
mod tape;

pub use fdcheck::{finite_diff_check, FdReport};
pub use tape::{NodeId, Tape};

use crate::{Error, Result};

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Structure(format!(
                "matrix dimensions must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(Error::Structure("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("rows have unequal lengths".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols]).expect("positive dims")
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Mutable entry access for in-place parameter updates. Callers are
    /// responsible for keeping entries finite (the optimizer aborts on
    /// non-finite gradients before they can reach a matrix).
    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }
}

/// Dense vector of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector {
    entries: Vec<f64>,
}

impl RealVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Structure("vector length must be at least 1".into()));
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(Error::Structure("vector entries must be finite".into()));
        }
        Ok(Self { entries })
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len]).expect("positive length")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }
}

/// `A v + b`.
pub fn affine(a: &RealMatrix, b: &RealVector, v: &RealVector) -> Result<RealVector> {
    if a.cols() != v.len() || a.rows() != b.len() {
        return Err(Error::Shape(format!(
            "affine: {}x{} matrix with bias of length {} and input of length {}",
            a.rows(),
            a.cols(),
            b.len(),
            v.len()
        )));
    }
    let mut out = vec![0.0; a.rows()];
    matvec_kernel(a.as_slice(), a.rows(), a.cols(), v.as_slice(), Some(b.as_slice()), &mut out);
    RealVector::new(out)
}

/// Entrywise `max(x, 0)`.
///
/// The gradient contract is `1` where the entry is strictly positive and
/// `0` elsewhere, including at the boundary.
pub fn relu_clamp(a: &RealMatrix) -> RealMatrix {
    let entries = a.as_slice().iter().map(|&x| x.max(0.0)).collect();
    RealMatrix::new(a.rows(), a.cols(), entries).expect("clamp preserves shape")
}

/// Maximum within each contiguous block of `group_size` entries.
///
/// Returns the block maxima and, per block, the global index of the
/// maximizer (lowest index on ties). Errors if the length is not a
/// multiple of `group_size`.
pub fn group_max(v: &RealVector, group_size: usize) -> Result<(RealVector, Vec<usize>)> {
    if group_size == 0 || v.len() % group_size != 0 {
        return Err(Error::Structure(format!(
            "group_max: length {} is not divisible by group size {}",
            v.len(),
            group_size
        )));
    }
    let groups = v.len() / group_size;
    let mut out = vec![0.0; groups];
    let mut winners = vec![0usize; groups];
    group_max_kernel(v.as_slice(), group_size, &mut out, &mut winners);
    Ok((RealVector::new(out)?, winners))
}

/// Maximum entry and its lowest-index maximizer.
pub fn global_max(v: &RealVector) -> (f64, usize) {
    global_max_kernel(v.as_slice())
}

// ---------------------------------------------------------------------------
// Shared kernels. The tape replays exactly these, so plain evaluation and
// recorded evaluation cannot drift apart.
// ---------------------------------------------------------------------------

pub(crate) fn matvec_kernel(
    a: &[f64],
    rows: usize,
    cols: usize,
    v: &[f64],
    b: Option<&[f64]>,
    out: &mut [f64],
) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(v.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for i in 0..rows {
        let row = &a[i * cols..(i + 1) * cols];
        let mut acc = match b {
            Some(bias) => bias[i],
            None => 0.0,
        };
        for j in 0..cols {
            acc += row[j] * v[j];
        }
        out[i] = acc;
    }
}

pub(crate) fn group_max_kernel(v: &[f64], group_size: usize, out: &mut [f64], winners: &mut [usize]) {
    let groups = v.len() / group_size;
    for g in 0..groups {
        let start = g * group_size;
        let mut best = v[start];
        let mut best_idx = start;
        for k in start + 1..start + group_size {
            if v[k] > best {
                best = v[k];
                best_idx = k;
            }
        }
        out[g] = best;
        winners[g] = best_idx;
    }
}

pub(crate) fn global_max_kernel(v: &[f64]) -> (f64, usize) {
    let mut best = v[0];
    let mut best_idx = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > best {
            best = x;
            best_idx = k;
        }
    }
    (best, best_idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn affine_identity() {
        let a = RealMatrix::identity(2);
        let b = RealVector::zeros(2);
        let v = RealVector::new(vec![3.0, -2.0]).unwrap();
        assert_eq!(affine(&a, &b, &v).unwrap().as_slice(), &[3.0, -2.0]);
    }

    #[test]
    fn affine_row_sum() {
        let a = RealMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let b = RealVector::new(vec![5.0]).unwrap();
        let v = RealVector::new(vec![2.0, 3.0]).unwrap();
        assert_eq!(affine(&a, &b, &v).unwrap().as_slice(), &[10.0]);
    }

    #[test]
    fn affine_matches_double_loop_oracle() {
        let mut rng = crate::seeded_rng(7);
        let (m, n) = (7, 4);
        let a = RealMatrix::new(m, n, (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let b = RealVector::new((0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let v = RealVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let got = affine(&a, &b, &v).unwrap();
        // Independent evaluation, one scalar product at a time.
        for i in 0..m {
            let mut want = b.get(i);
            for j in 0..n {
                want += a.get(i, j) * v.get(j);
            }
            assert_eq!(got.get(i), want);
        }
    }

    #[test]
    fn affine_shape_mismatch_errors() {
        let a = RealMatrix::identity(2);
        let b = RealVector::zeros(2);
        let v = RealVector::zeros(3);
        assert!(matches!(affine(&a, &b, &v), Err(Error::Shape(_))));
    }

    #[test]
    fn relu_clamp_basics() {
        let a = RealMatrix::from_rows(&[vec![-1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let c = relu_clamp(&a);
        assert_eq!(c.as_slice(), &[0.0, 2.0, 0.0, 3.0]);
        // Identity on the nonnegative cone.
        let nn = RealMatrix::from_rows(&[vec![0.0, 1.5], vec![2.0, 0.25]]).unwrap();
        assert_eq!(relu_clamp(&nn), nn);
    }

    #[test]
    fn relu_clamp_idempotent() {
        let mut rng = crate::seeded_rng(11);
        let a = RealMatrix::new(5, 3, (0..15).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let once = relu_clamp(&a);
        assert_eq!(relu_clamp(&once), once);
    }

    #[test]
    fn group_max_blocks_and_winners() {
        let v = RealVector::new(vec![3.0, 1.0, 2.0, 5.0, 4.0, 0.0]).unwrap();
        let (out, winners) = group_max(&v, 3).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 5.0]);
        assert_eq!(winners, vec![0, 3]);
    }

    #[test]
    fn group_max_size_one_is_identity() {
        let v = RealVector::new(vec![7.0, -1.0, 0.5]).unwrap();
        let (out, winners) = group_max(&v, 1).unwrap();
        assert_eq!(out, v);
        assert_eq!(winners, vec![0, 1, 2]);
    }

    #[test]
    fn group_max_full_width_collapses() {
        let v = RealVector::new(vec![2.0, 7.0, 7.0]).unwrap();
        let (out, winners) = group_max(&v, 3).unwrap();
        let (gmax, gwin) = global_max(&v);
        assert_eq!(out.as_slice(), &[gmax]);
        assert_eq!(winners, vec![gwin]);
    }

    #[test]
    fn group_max_divisibility_error() {
        let v = RealVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(group_max(&v, 2), Err(Error::Structure(_))));
    }

    #[test]
    fn global_max_tie_takes_lowest_index() {
        let v = RealVector::new(vec![2.0, 7.0, 7.0]).unwrap();
        assert_eq!(global_max(&v), (7.0, 1));
        let single = RealVector::new(vec![-3.0]).unwrap();
        assert_eq!(global_max(&single), (-3.0, 0));
    }

    #[test]
    fn max_ops_match_scan_oracle() {
        let mut rng = crate::seeded_rng(23);
        for _ in 0..10_000 {
            let len = rng.gen_range(1..=24) * 2;
            let v = RealVector::new((0..len).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
            let (gmax, gwin) = global_max(&v);
            let mut want = v.get(0);
            let mut want_idx = 0;
            for k in 1..len {
                if v.get(k) > want {
                    want = v.get(k);
                    want_idx = k;
                }
            }
            assert_eq!((gmax, gwin), (want, want_idx));

            let (blocks, winners) = group_max(&v, 2).unwrap();
            for g in 0..len / 2 {
                let (a, b) = (v.get(2 * g), v.get(2 * g + 1));
                assert_eq!(blocks.get(g), a.max(b));
                assert_eq!(winners[g], if b > a { 2 * g + 1 } else { 2 * g });
            }
        }
    }

    #[test]
    fn constructors_reject_non_finite() {
        assert!(RealMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(RealVector::new(vec![f64::INFINITY]).is_err());
        assert!(RealMatrix::new(0, 1, vec![]).is_err());
        assert!(RealVector::new(vec![]).is_err());
    }
}
