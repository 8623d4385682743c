// Scratch diagnostics for one training run (not part of the test suite).

use groupmax::bench::{Target, TargetId};
use groupmax::models::{GroupMaxNet, Model};
use groupmax::training::{fit, SamplerSpec, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let normalize = args.get(3).map(|s| s == "norm").unwrap_or(false);

    let target = Target::new(TargetId::F3, 1, 1, 0).unwrap();
    let mut net = GroupMaxNet::new(1, &[10, 10, 10], 5, 12345).unwrap();
    let mut cfg = TrainConfig::new(SamplerSpec::gaussian(1, 0.0, 4.0).unwrap(), iters);
    cfg.seed = 999;
    cfg.learning_rate = lr;
    cfg.normalize = normalize;
    let out = fit(&mut net, |x| target.eval(x), &cfg).unwrap();
    for (it, loss) in out.report.loss_trace.iter().step_by(50) {
        println!("iter {it:>6}: loss {loss:.6e}");
    }
    let norm = out.normalizer;

    // Weight magnitude and clamp survival per layer.
    for (j, layer) in net.layers().iter().enumerate() {
        let w = layer.weight.as_slice();
        let pos = w.iter().filter(|&&v| v > 0.0).count();
        let maxabs = w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let bmax = layer.bias.as_slice().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        println!(
            "layer {j}: {}x{}, {}/{} entries positive, max|w| {maxabs:.3}, max|b| {bmax:.3}",
            layer.weight.rows(),
            layer.weight.cols(),
            pos,
            w.len()
        );
    }
    for x in [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0] {
        let h = match &norm {
            None => net.eval(&[x]),
            Some(n) => {
                let z = (x - n.input_mean[0]) / n.input_scale[0];
                n.denormalize_output(net.eval(&[z]))
            }
        };
        println!("x {x:>5}: target {:>10.3} model {h:>10.3}", target.eval(&[x]));
    }
}
