//! Exact max-affine representations of trained networks.
//!
//! `enumerate_cuts` expands the full cut collection a fully convex
//! group-max network realizes; `enumerate_conditional_cuts` does the
//! same in the convex input after freezing the non-convex input;
//! `active_cut` extracts the single supporting piece at a query point.
//! Cut files are line-oriented text for LP/SDDP consumers.

mod active;
mod enumerate;
mod io;

pub use active::active_cut;
pub use enumerate::{
    closed_form_count, cut_count_report, enumerate_conditional_cuts, enumerate_cuts,
    predicted_count, CutCountReport, EnumeratedCuts, DEFAULT_CAP,
};
pub use io::{load_cuts, save_cuts};

use crate::models::Model;
use crate::training::Normalizer;
use crate::{Error, Result};

/// One affine piece: `slope · x + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

impl Cut {
    pub fn new(slope: Vec<f64>, intercept: f64) -> Result<Self> {
        if slope.is_empty() {
            return Err(Error::Structure("cut slope must have at least one entry".into()));
        }
        if !intercept.is_finite() || !slope.iter().all(|s| s.is_finite()) {
            return Err(Error::Structure("cut entries must be finite".into()));
        }
        Ok(Self { slope, intercept })
    }

    pub fn dim(&self) -> usize {
        self.slope.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.slope.len());
        let mut acc = self.intercept;
        for (s, v) in self.slope.iter().zip(x) {
            acc += s * v;
        }
        acc
    }

    /// Maps a cut expressed in standardized coordinates back to the
    /// original ones: if the model computes `h' = cut(x')` with
    /// `x' = (x - μ_x) / σ_x` and `h = σ_h h' + μ_h`, the returned cut
    /// satisfies `cut'(x) = σ_h cut((x - μ_x) / σ_x) + μ_h` exactly.
    pub fn denormalize(&self, norm: &Normalizer) -> Result<Cut> {
        norm.validate()?;
        if norm.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "normalizer dimension {} does not match cut dimension {}",
                norm.dim(),
                self.dim()
            )));
        }
        let slope: Vec<f64> = self
            .slope
            .iter()
            .zip(&norm.input_scale)
            .map(|(s, sc)| norm.output_scale * s / sc)
            .collect();
        let mut intercept = self.intercept;
        for i in 0..self.dim() {
            intercept -= self.slope[i] * norm.input_mean[i] / norm.input_scale[i];
        }
        intercept = norm.output_scale * intercept + norm.output_mean;
        Cut::new(slope, intercept)
    }
}

/// A finite cut collection over a common dimension, with provenance.
#[derive(Debug, Clone)]
pub struct CutSet {
    dim: usize,
    cuts: Vec<Cut>,
    /// The frozen non-convex input for conditional sets.
    conditioning: Option<Vec<f64>>,
    /// Hash of the source model's structure and parameters; not part of
    /// the file format and excluded from equality.
    model_hash: Option<u64>,
}

impl PartialEq for CutSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.cuts == other.cuts
            && self.conditioning == other.conditioning
    }
}

impl CutSet {
    pub fn new(dim: usize, cuts: Vec<Cut>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::Structure("cut set must be nonempty".into()));
        }
        if cuts.iter().any(|c| c.dim() != dim) {
            return Err(Error::Shape("all cuts must share the set dimension".into()));
        }
        Ok(Self { dim, cuts, conditioning: None, model_hash: None })
    }

    pub fn with_conditioning(mut self, x_tilde: Vec<f64>) -> Self {
        self.conditioning = Some(x_tilde);
        self
    }

    pub(crate) fn with_model_hash(mut self, hash: u64) -> Self {
        self.model_hash = Some(hash);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn conditioning(&self) -> Option<&[f64]> {
        self.conditioning.as_deref()
    }

    pub fn model_hash(&self) -> Option<u64> {
        self.model_hash
    }

    /// Max over cuts of `slope · x + intercept`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "point dimension {} does not match cut set dimension {}",
                x.len(),
                self.dim
            )));
        }
        let mut best = f64::NEG_INFINITY;
        for cut in &self.cuts {
            best = best.max(cut.eval(x));
        }
        Ok(best)
    }

    /// Removes cuts equal within `tol` componentwise, keeping the first
    /// occurrence in enumeration order. Returns the number removed.
    pub fn dedup(&mut self, tol: f64) -> usize {
        let n = self.cuts.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.cuts[a], &self.cuts[b]);
            ca.intercept
                .total_cmp(&cb.intercept)
                .then_with(|| {
                    for (x, y) in ca.slope.iter().zip(&cb.slope) {
                        let ord = x.total_cmp(y);
                        if ord != std::cmp::Ordering::Equal {
                            return ord;
                        }
                    }
                    std::cmp::Ordering::Equal
                })
        });
        let close = |a: &Cut, b: &Cut| {
            (a.intercept - b.intercept).abs() <= tol
                && a.slope.iter().zip(&b.slope).all(|(x, y)| (x - y).abs() <= tol)
        };
        // Chain consecutive near-equal cuts in sorted order; keep the
        // earliest original index of each chain.
        let mut keep = vec![false; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            let mut representative = order[i];
            while j + 1 < n && close(&self.cuts[order[j]], &self.cuts[order[j + 1]]) {
                j += 1;
                representative = representative.min(order[j]);
            }
            keep[representative] = true;
            i = j + 1;
        }
        let mut idx = 0;
        self.cuts.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        n - self.cuts.len()
    }
}

/// FNV-1a over a model's structure and parameter bits, for provenance.
pub(crate) fn hash_model(model: &(impl Model + ?Sized)) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(&(model.input_dim() as u64).to_le_bytes());
    feed(&(model.convex_split() as u64).to_le_bytes());
    feed(&(model.param_count() as u64).to_le_bytes());
    for p in model.params() {
        feed(&p.to_bits().to_le_bytes());
    }
    h
}
