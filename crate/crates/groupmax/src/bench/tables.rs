//! Predefined experiment grids (tables) and curve dumps (figures).
//!
//! Every grid writes one CSV whose rows follow a fixed, documented
//! order, so repeated invocations produce identical bytes. Wall-clock
//! progress goes to stderr only.

use super::{derive_seed, run_case, ArchSpec, BenchmarkCase, Target, TargetId};
use crate::cuts::{enumerate_cuts, DEFAULT_CAP};
use crate::models::Model;
use crate::training::{fit, SamplerSpec, Trained};
use crate::Result;

/// Identifier of a predefined table (T*) or figure curve dump (F*).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    F1,
    F2,
    F3,
    F4,
}

impl TableId {
    pub const ALL: [TableId; 14] = [
        TableId::T1,
        TableId::T2,
        TableId::T3,
        TableId::T4,
        TableId::T5,
        TableId::T6,
        TableId::T7,
        TableId::T8,
        TableId::T9,
        TableId::T10,
        TableId::F1,
        TableId::F2,
        TableId::F3,
        TableId::F4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableId::T1 => "T1",
            TableId::T2 => "T2",
            TableId::T3 => "T3",
            TableId::T4 => "T4",
            TableId::T5 => "T5",
            TableId::T6 => "T6",
            TableId::T7 => "T7",
            TableId::T8 => "T8",
            TableId::T9 => "T9",
            TableId::T10 => "T10",
            TableId::F1 => "F1",
            TableId::F2 => "F2",
            TableId::F3 => "F3",
            TableId::F4 => "F4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let upper = s.to_ascii_uppercase();
        Self::ALL.into_iter().find(|id| id.name() == upper)
    }
}

/// Run-count override and proportional shrink factor for CI use.
#[derive(Debug, Clone, Copy)]
pub struct TableOptions {
    pub runs: Option<usize>,
    pub scale: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { runs: None, scale: 1.0 }
    }
}

impl TableOptions {
    fn iterations(&self, full: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(1)
    }

    fn runs(&self, full: usize) -> usize {
        match self.runs {
            Some(r) => r.max(1),
            None => ((full as f64 * self.scale).round() as usize).max(1),
        }
    }

    /// Evaluation sample counts shrink with the scale as well (floor
    /// 1000) because Monte Carlo dominates the cost of smoke runs.
    fn eval_samples(&self, full: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(1000)
    }
}

/// Executes a predefined grid and returns its CSV contents.
pub fn run_table(id: TableId, opts: &TableOptions) -> Result<String> {
    match id {
        TableId::T1 => networks_on_1d(opts),
        TableId::T2 => group_count_sweep(opts),
        TableId::T3 => depth_sweep_1d(opts),
        TableId::T4 => partial_networks(opts, gaussian(2, 0.0, 1.0), "T4"),
        TableId::T5 => partial_networks(opts, uniform(2, -2.0, 2.0), "T5"),
        TableId::T6 => partial_depth_sweep(opts),
        TableId::T7 => high_dim(opts, TargetId::F8, 700),
        TableId::T8 => high_dim(opts, TargetId::F9, 800),
        TableId::T9 => dim5_depth_sweep(opts),
        TableId::T10 => very_high_dim(opts),
        TableId::F1 => simple_cut_figure(opts, false, 1100),
        TableId::F2 => simple_cut_figure(opts, true, 1200),
        TableId::F3 => comparison_figure(opts),
        TableId::F4 => cut_dump_figure(opts),
    }
}

fn gaussian(dim: usize, mean: f64, variance: f64) -> SamplerSpec {
    SamplerSpec::gaussian(dim, mean, variance).expect("static sampler spec")
}

fn uniform(dim: usize, lo: f64, hi: f64) -> SamplerSpec {
    SamplerSpec::uniform(dim, lo, hi).expect("static sampler spec")
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn one_d_targets() -> [TargetId; 4] {
    [TargetId::F1, TargetId::F2, TargetId::F3, TargetId::F4]
}

fn best_mse(case: &BenchmarkCase) -> Result<f64> {
    let start = std::time::Instant::now();
    let outcome = run_case(case)?;
    eprintln!(
        "  {} / {} ({}): best {:.3e} in {:.1?}",
        case.arch.name(),
        case.target_id.name(),
        case.sampler.dim,
        outcome.min,
        start.elapsed()
    );
    Ok(outcome.min)
}

fn standard_case(
    target_id: TargetId,
    dim: usize,
    convex_dim: usize,
    sampler: SamplerSpec,
    arch: ArchSpec,
    iterations: usize,
    base_seed: u64,
    opts: &TableOptions,
) -> BenchmarkCase {
    let mut case = BenchmarkCase::new(target_id, dim, convex_dim, sampler, arch, 0);
    case.iterations = opts.iterations(iterations);
    case.runs = opts.runs(10);
    case.eval_samples = opts.eval_samples(1_000_000);
    case.base_seed = base_seed;
    case
}

fn networks_on_1d(opts: &TableOptions) -> Result<String> {
    let arches = [
        ("feedforward", ArchSpec::Mlp { hidden: vec![10, 10, 10] }),
        ("icnn", ArchSpec::Icnn { hidden: vec![10, 10, 10] }),
        ("groupmax", ArchSpec::GroupMax { widths: vec![10, 10, 10], group_size: 5 }),
    ];
    let mut csv = String::from("network,f1,f2,f3,f4\n");
    for (row, (name, arch)) in arches.iter().enumerate() {
        csv.push_str(name);
        for (col, &target) in one_d_targets().iter().enumerate() {
            let case = standard_case(
                target,
                1,
                1,
                gaussian(1, 0.0, 4.0),
                arch.clone(),
                50_000,
                100 + (row * 4 + col) as u64,
                opts,
            );
            csv.push(',');
            csv.push_str(&fmt(best_mse(&case)?));
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn group_count_sweep(opts: &TableOptions) -> Result<String> {
    // 12 neurons per layer; the swept parameter is the number of groups
    // K, so the group size is 12 / K (K = 12 means group size 1).
    let mut csv = String::from("k,group_size,f1,f2,f3,f4\n");
    for (row, &k) in [2usize, 4, 6, 12].iter().enumerate() {
        let group_size = 12 / k;
        csv.push_str(&format!("{k},{group_size}"));
        for (col, &target) in one_d_targets().iter().enumerate() {
            let case = standard_case(
                target,
                1,
                1,
                gaussian(1, 0.0, 4.0),
                ArchSpec::GroupMax { widths: vec![12, 12, 12], group_size },
                50_000,
                200 + (row * 4 + col) as u64,
                opts,
            );
            csv.push(',');
            csv.push_str(&fmt(best_mse(&case)?));
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn depth_sweep_1d(opts: &TableOptions) -> Result<String> {
    let mut csv = String::from("q,f1,f2,f3,f4\n");
    for (row, &q) in [2usize, 3, 4, 5].iter().enumerate() {
        csv.push_str(&format!("{q}"));
        for (col, &target) in one_d_targets().iter().enumerate() {
            let case = standard_case(
                target,
                1,
                1,
                gaussian(1, 0.0, 4.0),
                ArchSpec::GroupMax { widths: vec![12; q], group_size: 2 },
                50_000,
                300 + (row * 4 + col) as u64,
                opts,
            );
            csv.push(',');
            csv.push_str(&fmt(best_mse(&case)?));
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn partial_targets() -> [TargetId; 3] {
    [TargetId::F5, TargetId::F6, TargetId::F7]
}

fn partial_networks(opts: &TableOptions, sampler: SamplerSpec, tag: &str) -> Result<String> {
    let base = if tag == "T4" { 400 } else { 500 };
    let arches = [
        ("feedforward", ArchSpec::Mlp { hidden: vec![10, 10, 10] }),
        ("icnn", ArchSpec::PartialIcnn { feed_width: 10, convex_width: 10, depth: 3 }),
        (
            "groupmax",
            ArchSpec::PartialGroupMax {
                feed_width: 10,
                convex_width: 10,
                group_size: 5,
                depth: 3,
            },
        ),
    ];
    let mut csv = String::from("network,f5,f6,f7\n");
    for (row, (name, arch)) in arches.iter().enumerate() {
        csv.push_str(name);
        for (col, &target) in partial_targets().iter().enumerate() {
            let case = standard_case(
                target,
                2,
                1,
                sampler.clone(),
                arch.clone(),
                50_000,
                base + (row * 3 + col) as u64,
                opts,
            );
            csv.push(',');
            csv.push_str(&fmt(best_mse(&case)?));
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn partial_depth_sweep(opts: &TableOptions) -> Result<String> {
    let mut csv = String::from("law,q,f5,f6,f7\n");
    let laws =
        [("gaussian", gaussian(2, 0.0, 1.0)), ("uniform", uniform(2, -2.0, 2.0))];
    for (l, (law_name, sampler)) in laws.iter().enumerate() {
        for (row, &q) in [3usize, 4, 5].iter().enumerate() {
            csv.push_str(&format!("{law_name},{q}"));
            for (col, &target) in partial_targets().iter().enumerate() {
                let case = standard_case(
                    target,
                    2,
                    1,
                    sampler.clone(),
                    ArchSpec::PartialGroupMax {
                        feed_width: 12,
                        convex_width: 12,
                        group_size: 3,
                        depth: q,
                    },
                    50_000,
                    600 + (l * 9 + row * 3 + col) as u64,
                    opts,
                );
                csv.push(',');
                csv.push_str(&fmt(best_mse(&case)?));
            }
            csv.push('\n');
        }
    }
    Ok(csv)
}

fn high_dim(opts: &TableOptions, target: TargetId, base: u64) -> Result<String> {
    let mut csv = String::from("law,network,d2,d3,d4,d5\n");
    let arch_of = |name: &str, _d: usize| match name {
        "feedforward" => ArchSpec::Mlp { hidden: vec![10, 10, 10] },
        "icnn" => ArchSpec::Icnn { hidden: vec![10, 10, 10] },
        _ => ArchSpec::GroupMax { widths: vec![10; 5], group_size: 2 },
    };
    let laws: [(&str, fn(usize) -> SamplerSpec); 2] = [
        ("gaussian", |d| gaussian(d, 0.0, 1.0)),
        ("uniform", |d| uniform(d, -2.0, 2.0)),
    ];
    for (l, (law_name, make_sampler)) in laws.iter().enumerate() {
        for (row, name) in ["feedforward", "icnn", "groupmax"].iter().enumerate() {
            csv.push_str(&format!("{law_name},{name}"));
            for (col, d) in (2usize..=5).enumerate() {
                let mut case = standard_case(
                    target,
                    d,
                    d,
                    make_sampler(d),
                    arch_of(name, d),
                    100_000,
                    base + (l * 12 + row * 4 + col) as u64,
                    opts,
                );
                // One reference quadratic-form instance per dimension.
                case.spd_seed = 9000 + d as u64;
                csv.push(',');
                csv.push_str(&fmt(best_mse(&case)?));
            }
            csv.push('\n');
        }
    }
    Ok(csv)
}

fn dim5_depth_sweep(opts: &TableOptions) -> Result<String> {
    let mut csv = String::from("q,f8,f9\n");
    for (row, &q) in [4usize, 6, 7, 8].iter().enumerate() {
        csv.push_str(&format!("{q}"));
        for (col, &target) in [TargetId::F8, TargetId::F9].iter().enumerate() {
            let mut case = standard_case(
                target,
                5,
                5,
                uniform(5, -2.0, 2.0),
                ArchSpec::GroupMax { widths: vec![10; q], group_size: 2 },
                100_000,
                900 + (row * 2 + col) as u64,
                opts,
            );
            case.spd_seed = 9005;
            csv.push(',');
            csv.push_str(&fmt(best_mse(&case)?));
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn very_high_dim(opts: &TableOptions) -> Result<String> {
    let (n, m) = (376usize, 17usize);
    let mut csv = String::from("q,feedforward,icnn,groupmax\n");
    for (row, &q) in [3usize, 5, 7, 9].iter().enumerate() {
        csv.push_str(&format!("{q}"));
        let arches = [
            ArchSpec::Mlp { hidden: vec![20; q] },
            ArchSpec::PartialIcnn { feed_width: 10, convex_width: 10, depth: q },
            ArchSpec::PartialGroupMax {
                feed_width: 12,
                convex_width: 12,
                group_size: 2,
                depth: q,
            },
        ];
        for (col, arch) in arches.iter().enumerate() {
            let case = standard_case(
                TargetId::F10,
                n + m,
                m,
                gaussian(n + m, 0.0, 1.0),
                arch.clone(),
                100_000,
                1000 + (row * 3 + col) as u64,
                opts,
            );
            csv.push(',');
            csv.push_str(&fmt(best_mse(&case)?));
        }
        csv.push('\n');
    }
    Ok(csv)
}

// ---------------------------------------------------------------------------
// Figure curve dumps: predictions (and cuts) over a uniform grid of 401
// points on [-6, 6], roughly three standard deviations of the 1-D
// sampling law.
// ---------------------------------------------------------------------------

const GRID_POINTS: usize = 401;
const GRID_HALF_WIDTH: f64 = 6.0;

fn grid() -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(|i| {
        -GRID_HALF_WIDTH + 2.0 * GRID_HALF_WIDTH * i as f64 / (GRID_POINTS - 1) as f64
    })
}

/// Trains one model for a figure panel; returns it with its normalizer.
fn train_panel(
    target: &Target,
    arch: &ArchSpec,
    iterations: usize,
    noise_std: f64,
    normalize: bool,
    base_seed: u64,
) -> Result<Trained<Box<dyn Model>>> {
    let sampler = gaussian(1, 0.0, 4.0);
    let mut model = arch.build(1, 1, derive_seed(base_seed, 1, 0))?;
    let mut cfg = crate::training::TrainConfig::new(sampler, iterations);
    cfg.noise_std = noise_std;
    cfg.normalize = normalize;
    cfg.seed = derive_seed(base_seed, 2, 0);
    let outcome = fit(model.as_mut(), |x| target.eval(x), &cfg)?;
    Ok(Trained { model, normalizer: outcome.normalizer })
}

fn simple_cut_figure(opts: &TableOptions, normalize: bool, base: u64) -> Result<String> {
    let cut_counts = [8usize, 16, 32];
    let mut csv = String::from("function,x,target,cuts8,cuts16,cuts32\n");
    for (fi, &target_id) in one_d_targets().iter().enumerate() {
        let target = Target::new(target_id, 1, 1, 0)?;
        let models: Vec<Trained<Box<dyn Model>>> = cut_counts
            .iter()
            .enumerate()
            .map(|(ci, &n)| {
                train_panel(
                    &target,
                    &ArchSpec::MaxAffine { cuts: n },
                    opts.iterations(20_000),
                    1.0,
                    normalize,
                    base + (fi * 3 + ci) as u64,
                )
            })
            .collect::<Result<_>>()?;
        for x in grid() {
            csv.push_str(&format!("{},{},{}", target_id.name(), fmt(x), fmt(target.eval(&[x]))));
            for model in &models {
                csv.push(',');
                csv.push_str(&fmt(model.predict(&[x])));
            }
            csv.push('\n');
        }
    }
    Ok(csv)
}

fn comparison_arches() -> [(&'static str, ArchSpec); 3] {
    [
        ("groupmax", ArchSpec::GroupMax { widths: vec![10, 10, 10], group_size: 5 }),
        ("icnn", ArchSpec::Icnn { hidden: vec![10, 10, 10] }),
        ("feedforward", ArchSpec::Mlp { hidden: vec![10, 10, 10] }),
    ]
}

fn comparison_figure(opts: &TableOptions) -> Result<String> {
    let mut csv = String::from("function,x,target,groupmax,icnn,feedforward\n");
    for (fi, &target_id) in one_d_targets().iter().enumerate() {
        let target = Target::new(target_id, 1, 1, 0)?;
        let models: Vec<Trained<Box<dyn Model>>> = comparison_arches()
            .iter()
            .enumerate()
            .map(|(ci, (_, arch))| {
                train_panel(
                    &target,
                    arch,
                    opts.iterations(50_000),
                    1.0,
                    false,
                    1300 + (fi * 3 + ci) as u64,
                )
            })
            .collect::<Result<_>>()?;
        for x in grid() {
            csv.push_str(&format!("{},{},{}", target_id.name(), fmt(x), fmt(target.eval(&[x]))));
            for model in &models {
                csv.push(',');
                csv.push_str(&fmt(model.predict(&[x])));
            }
            csv.push('\n');
        }
    }
    Ok(csv)
}

fn cut_dump_figure(opts: &TableOptions) -> Result<String> {
    // Train the grouped network of the comparison figure (same seed
    // derivation, so the model matches the F3 panel) and dump every cut
    // it realizes. Panels with fewer cuts leave trailing columns empty.
    let mut panels = Vec::new();
    let mut max_cuts = 0usize;
    for (fi, &target_id) in one_d_targets().iter().enumerate() {
        let target = Target::new(target_id, 1, 1, 0)?;
        let base_seed = 1300 + (fi * 3) as u64;
        let mut net =
            crate::models::GroupMaxNet::new(1, &[10, 10, 10], 5, derive_seed(base_seed, 1, 0))?;
        let mut cfg =
            crate::training::TrainConfig::new(gaussian(1, 0.0, 4.0), opts.iterations(50_000));
        cfg.noise_std = 1.0;
        cfg.seed = derive_seed(base_seed, 2, 0);
        let outcome = fit(&mut net, |x| target.eval(x), &cfg)?;
        let enumerated = enumerate_cuts(&net, DEFAULT_CAP)?;
        let cuts: Vec<crate::cuts::Cut> = match &outcome.normalizer {
            None => enumerated.cuts.cuts().to_vec(),
            Some(norm) => enumerated
                .cuts
                .cuts()
                .iter()
                .map(|c| c.denormalize(norm))
                .collect::<Result<_>>()?,
        };
        max_cuts = max_cuts.max(cuts.len());
        let trained = Trained { model: net, normalizer: outcome.normalizer };
        panels.push((target_id, target, trained, cuts));
    }

    let mut csv = String::from("function,x,target,prediction");
    for j in 1..=max_cuts {
        csv.push_str(&format!(",cut_{j}"));
    }
    csv.push('\n');
    for (target_id, target, trained, cuts) in &panels {
        for x in grid() {
            csv.push_str(&format!(
                "{},{},{},{}",
                target_id.name(),
                fmt(x),
                fmt(target.eval(&[x])),
                fmt(trained.predict(&[x]))
            ));
            for j in 0..max_cuts {
                csv.push(',');
                if let Some(cut) = cuts.get(j) {
                    csv.push_str(&fmt(cut.eval(&[x])));
                }
            }
            csv.push('\n');
        }
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse_case_insensitively() {
        assert_eq!(TableId::parse("t3"), Some(TableId::T3));
        assert_eq!(TableId::parse("F4"), Some(TableId::F4));
        assert_eq!(TableId::parse("T11"), None);
    }

    #[test]
    fn smoke_t1_at_tiny_scale_is_deterministic() {
        let opts = TableOptions { runs: Some(1), scale: 0.0005 };
        let a = run_table(TableId::T1, &opts).unwrap();
        let b = run_table(TableId::T1, &opts).unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some("network,f1,f2,f3,f4"));
        assert_eq!(a.lines().count(), 4);
        for row in lines {
            assert_eq!(row.split(',').count(), 5);
        }
    }

    #[test]
    fn smoke_figure_f1_shape() {
        let opts = TableOptions { runs: Some(1), scale: 0.0005 };
        let csv = run_table(TableId::F1, &opts).unwrap();
        // Header plus 4 functions x 401 grid points.
        assert_eq!(csv.lines().count(), 1 + 4 * GRID_POINTS);
    }
}
