//! Exhaustive expansion of the cut collection a network realizes.
//!
//! Each grouped layer turns every block maximum into a set of candidate
//! cuts; a deeper neuron with clamped (nonnegative) weights realizes the
//! maximum, over one choice of candidate per incoming group, of the
//! weighted sum of the chosen cuts. Distributing the maxima layer by
//! layer therefore yields a finite cut collection whose pointwise
//! maximum equals the forward pass everywhere.

use super::{hash_model, Cut, CutSet};
use crate::diffcore::{relu_clamp, RealMatrix, RealVector};
use crate::models::{GroupMaxNet, Model, PartialGroupMaxNet};
use crate::{Error, Result};

/// Default enumeration cap; beyond this only active-cut extraction is
/// practical (the count grows exponentially with depth).
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Result of an enumeration: the deduplicated cut set plus the raw
/// combinatorial count before deduplication.
#[derive(Debug, Clone)]
pub struct EnumeratedCuts {
    pub cuts: CutSet,
    pub pre_dedup_count: u64,
    pub removed_by_dedup: usize,
}

/// Affine data of one layer, as enumeration sees it.
struct EnumLayer {
    /// Clamped weights applied to the previous grouped state; `None`
    /// when the layer sees no recurrent state (the first layer).
    recurrent: Option<RealMatrix>,
    /// Slopes injected at this layer (the input weights of layer 1, or
    /// the frozen convex-slope matrices of a conditional enumeration).
    passthrough: Option<RealMatrix>,
    offset: RealVector,
}

impl EnumLayer {
    fn width(&self) -> usize {
        self.offset.len()
    }
}

fn saturating_product(values: impl Iterator<Item = u128>) -> u128 {
    values.fold(1u128, |acc, v| acc.saturating_mul(v))
}

/// Raw combinatorial cut count of the layer recurrence (before any
/// deduplication), saturating at `u128::MAX`.
fn predict(layers: &[EnumLayer], group_size: usize) -> u128 {
    let q = layers.len();
    if q == 1 {
        return layers[0].width() as u128;
    }
    // Per-group candidate-set sizes after layer 1.
    let mut group_sizes = vec![group_size as u128; layers[0].width() / group_size];
    for (j, layer) in layers.iter().enumerate().skip(1) {
        let per_neuron = saturating_product(group_sizes.iter().copied());
        if j + 1 == q {
            return (layer.width() as u128).saturating_mul(per_neuron);
        }
        let groups = layer.width() / group_size;
        group_sizes =
            vec![(group_size as u128).saturating_mul(per_neuron); groups];
    }
    unreachable!("loop returns on the final layer")
}

/// Predicted pre-dedup count for a fully convex group-max network.
pub fn predicted_count(net: &GroupMaxNet) -> u128 {
    predict(&groupmax_layers(net), net.group_size())
}

/// Closed-form count `M ·G^(K(q-1))` with `K = M/G`, defined for
/// uniform widths. Matches the enumerated pre-dedup count at depths 1
/// and 2; for deeper stacks the layer recurrence produces more
/// combinations than this formula, which [`cut_count_report`] records
/// instead of asserting.
pub fn closed_form_count(widths: &[usize], group_size: usize) -> Option<u128> {
    let m = *widths.first()?;
    if widths.iter().any(|&w| w != m) {
        return None;
    }
    let q = widths.len() as u32;
    if q == 1 {
        return Some(m as u128);
    }
    if m % group_size != 0 {
        return None;
    }
    let k = (m / group_size) as u32;
    (group_size as u128)
        .checked_pow(k * (q - 1))
        .map(|g| (m as u128).saturating_mul(g))
}

/// Observed-versus-closed-form cut counts for one network.
#[derive(Debug, Clone)]
pub struct CutCountReport {
    pub depth: usize,
    pub enumerated_pre_dedup: u64,
    pub closed_form: Option<u128>,
    pub distinct_after_dedup: usize,
}

impl std::fmt::Display for CutCountReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "depth {}: enumerated {} (distinct {}), closed form {}",
            self.depth,
            self.enumerated_pre_dedup,
            self.distinct_after_dedup,
            match self.closed_form {
                Some(c) => c.to_string(),
                None => "n/a".into(),
            }
        )
    }
}

pub fn cut_count_report(net: &GroupMaxNet, cap: u64) -> Result<CutCountReport> {
    let enumerated = enumerate_cuts(net, cap)?;
    Ok(CutCountReport {
        depth: net.layer_count(),
        enumerated_pre_dedup: enumerated.pre_dedup_count,
        closed_form: closed_form_count(&net.widths(), net.group_size()),
        distinct_after_dedup: enumerated.cuts.len(),
    })
}

fn groupmax_layers(net: &GroupMaxNet) -> Vec<EnumLayer> {
    net.layers()
        .iter()
        .enumerate()
        .map(|(j, layer)| {
            if j == 0 {
                EnumLayer {
                    recurrent: None,
                    passthrough: Some(layer.weight.clone()),
                    offset: layer.bias.clone(),
                }
            } else {
                EnumLayer {
                    recurrent: Some(relu_clamp(&layer.weight)),
                    passthrough: None,
                    offset: layer.bias.clone(),
                }
            }
        })
        .collect()
}

/// Full cut collection of a fully convex group-max network.
///
/// Fails fast with the predicted count when it exceeds `cap`. The
/// returned set is deduplicated at 1e-12 componentwise;
/// `pre_dedup_count` is the raw combinatorial count.
pub fn enumerate_cuts(net: &GroupMaxNet, cap: u64) -> Result<EnumeratedCuts> {
    let layers = groupmax_layers(net);
    let raw = expand(net.input_dim(), net.group_size(), &layers, cap)?;
    finish(raw, net.input_dim(), hash_model(net), None)
}

/// Cut collection of a partially convex network in its convex input,
/// conditional on the frozen non-convex input.
pub fn enumerate_conditional_cuts(
    net: &PartialGroupMaxNet,
    x_tilde: &[f64],
    cap: u64,
) -> Result<EnumeratedCuts> {
    let conditional = net.conditional_layers(x_tilde);
    let layers: Vec<EnumLayer> = conditional
        .into_iter()
        .enumerate()
        .map(|(j, layer)| EnumLayer {
            // The recurrent state entering layer 1 is the zero vector;
            // its term contributes nothing and is dropped.
            recurrent: (j > 0).then_some(layer.recurrent),
            passthrough: Some(layer.convex_slope),
            offset: layer.offset,
        })
        .collect();
    let raw = expand(net.convex_dim(), net.group_size(), &layers, cap)?;
    finish(raw, net.convex_dim(), hash_model(net), Some(x_tilde.to_vec()))
}

fn finish(
    raw: Vec<Cut>,
    dim: usize,
    model_hash: u64,
    conditioning: Option<Vec<f64>>,
) -> Result<EnumeratedCuts> {
    let pre_dedup_count = raw.len() as u64;
    let mut cuts = CutSet::new(dim, raw)?.with_model_hash(model_hash);
    if let Some(c) = conditioning {
        cuts = cuts.with_conditioning(c);
    }
    let removed = cuts.dedup(1e-12);
    Ok(EnumeratedCuts { cuts, pre_dedup_count, removed_by_dedup: removed })
}

/// Materializes every combination. `cap` is checked against the
/// predicted count before any allocation.
fn expand(dim: usize, group_size: usize, layers: &[EnumLayer], cap: u64) -> Result<Vec<Cut>> {
    let predicted = predict(layers, group_size);
    if predicted > cap as u128 {
        return Err(Error::EnumerationOverflow { predicted, cap });
    }

    let first = &layers[0];
    let pass = first.passthrough.as_ref().expect("layer 1 carries the input slopes");
    let mut neuron_sets: Vec<Vec<Cut>> = (0..first.width())
        .map(|i| {
            vec![Cut {
                slope: pass.row(i).to_vec(),
                intercept: first.offset.get(i),
            }]
        })
        .collect();

    let q = layers.len();
    for (j, layer) in layers.iter().enumerate().skip(1) {
        // Candidate sets per group of the previous layer.
        let group_sets: Vec<Vec<Cut>> = neuron_sets
            .chunks(group_size)
            .map(|chunk| chunk.iter().flatten().cloned().collect())
            .collect();
        let weights = layer.recurrent.as_ref().expect("deeper layers carry clamped weights");
        debug_assert_eq!(weights.cols(), group_sets.len());

        neuron_sets = (0..layer.width())
            .map(|n| {
                let base_slope: Vec<f64> = match &layer.passthrough {
                    Some(p) => p.row(n).to_vec(),
                    None => vec![0.0; dim],
                };
                let base_intercept = layer.offset.get(n);
                let mut cuts = Vec::new();
                let mut choice = vec![0usize; group_sets.len()];
                loop {
                    let mut slope = base_slope.clone();
                    let mut intercept = base_intercept;
                    for (i, set) in group_sets.iter().enumerate() {
                        let w = weights.get(n, i);
                        let picked = &set[choice[i]];
                        for (s, ps) in slope.iter_mut().zip(&picked.slope) {
                            *s += w * ps;
                        }
                        intercept += w * picked.intercept;
                    }
                    cuts.push(Cut { slope, intercept });
                    // Odometer over the per-group choices.
                    let mut pos = 0;
                    loop {
                        if pos == choice.len() {
                            return cuts;
                        }
                        choice[pos] += 1;
                        if choice[pos] < group_sets[pos].len() {
                            break;
                        }
                        choice[pos] = 0;
                        pos += 1;
                    }
                }
            })
            .collect();
        debug_assert!(j < q);
    }

    Ok(neuron_sets.into_iter().flatten().collect())
}
