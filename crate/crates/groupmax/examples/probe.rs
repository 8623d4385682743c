// Scratch calibration probe (not part of the test suite).

use groupmax::bench::{run_case, ArchSpec, BenchmarkCase, TargetId};
use groupmax::training::SamplerSpec;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let runs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let iters: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let normalize = args.get(3).map(|s| s == "norm").unwrap_or(false);

    for target in [TargetId::F1, TargetId::F2, TargetId::F3, TargetId::F4] {
        let mut case = BenchmarkCase::new(
            target,
            1,
            1,
            SamplerSpec::gaussian(1, 0.0, 4.0).unwrap(),
            ArchSpec::GroupMax { widths: vec![10, 10, 10], group_size: 5 },
            iters,
        );
        case.runs = runs;
        case.eval_samples = 200_000;
        case.normalize = normalize;
        let start = Instant::now();
        let outcome = run_case(&case).unwrap();
        println!(
            "{}: best {:.4e} median {:.4e} max {:.4e} ({:.1?}, runs {:?})",
            target.name(),
            outcome.min,
            outcome.median,
            outcome.max,
            start.elapsed(),
            outcome.mse_runs.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
        );
    }
}
