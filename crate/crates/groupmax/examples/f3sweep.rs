// Scratch sweep over init variants for the hard quartic case (not part
// of the test suite).

use groupmax::bench::{mc_mse, Target, TargetId};
use groupmax::models::{GroupMaxNet, Model};
use groupmax::training::{fit, SamplerSpec, Trained, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let variant: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let normalize = args.get(3).map(|s| s == "norm").unwrap_or(false);

    let target = Target::new(TargetId::F3, 1, 1, 0).unwrap();
    let sampler = SamplerSpec::gaussian(1, 0.0, 4.0).unwrap();

    let mut results = Vec::new();
    for seed in 0..3u64 {
        let mut net = GroupMaxNet::new(1, &[10, 10, 10], 5, 1000 + seed).unwrap();
        // Variant 1: spread layer-1 biases so initial cuts tile the
        // input range instead of all passing through the origin.
        // Variant 2: also scale layer-1 slopes up.
        if variant >= 1 {
            let mut p = net.params();
            use rand::Rng;
            let mut rng = groupmax::seeded_rng(500 + seed);
            let m1 = 10;
            for b in p.iter_mut().take(2 * m1).skip(m1) {
                *b = rng.gen_range(-3.0..3.0);
            }
            if variant >= 2 {
                for w in p.iter_mut().take(m1) {
                    *w *= 4.0;
                }
            }
            net.set_params(&p);
        }
        let mut cfg = TrainConfig::new(sampler.clone(), iters);
        cfg.seed = 2000 + seed;
        cfg.normalize = normalize;
        let out = fit(&mut net, |x| target.eval(x), &cfg).unwrap();
        let trained = Trained { model: net, normalizer: out.normalizer };
        let mse = mc_mse(&trained, |x: &[f64]| target.eval(x), &sampler, 200_000, 42);
        results.push(mse);
        println!("seed {seed}: mse {mse:.4e}");
    }
    let best = results.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("variant {variant} normalize {normalize} iters {iters}: best {best:.4e}");
}
