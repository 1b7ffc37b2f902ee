//! Inspect early training dynamics: per-group gradient scales and the
//! effect of the first optimizer steps.

use spadsr_core::NoiseSpec;
use spadsr_histnet::loss::l1_loss;
use spadsr_histnet::model::HistNet;
use spadsr_histnet::optim::ProximalAdagrad;
use spadsr_histnet::Sample;
use spadsr_pipeline::features::{build_features, PipelineConfig};
use spadsr_pipeline::simulator::simulate;
use spadsr_pipeline::synth::{make_scene, SceneKind};

fn main() {
    let scene = make_scene(SceneKind::Blobs, 64, 64, 505);
    let spec = NoiseSpec::new(1200.0, 2.0).with_seed(505);
    let m = simulate(&scene, 16, &spec, 4).unwrap();
    let features = build_features(&m, &PipelineConfig::for_factor(4)).unwrap();
    let sample = Sample::new(&features, &scene.depth).unwrap();

    let input = &sample.input;
    let first = input.first_depth_tensor();
    let gt = &sample.gt;

    let mut net = HistNet::new(1.0 / 8.0, 5);
    let mut opt = ProximalAdagrad::new(&net.params, 0.1, 0.0, f64::from_bits(
        std::env::args().nth(1).map(|s| s.parse::<f64>().unwrap()).unwrap_or(0.1).to_bits(),
    ));

    for step in 0..30 {
        let (tape, out) = net.forward(input).unwrap();
        let (loss, seed) = l1_loss(tape.value(out), &first, gt);
        let grads = tape.backward(out, seed);
        if step < 6 || step % 10 == 0 {
            let mut msg = format!("step {step:3} loss {loss:.6}");
            for name in ["out_w", "out_b", "dec8_conv2_w", "enc0_conv1_w"] {
                let idx = net
                    .params
                    .tensors
                    .iter()
                    .position(|t| t.name == name)
                    .unwrap();
                let gmax = grads[idx].iter().fold(0.0f64, |a, &g| a.max(g.abs()));
                let wmax = net.params.tensors[idx]
                    .data
                    .iter()
                    .fold(0.0f32, |a, &w| a.max(w.abs()));
                msg.push_str(&format!("  {name}: |g| {gmax:.2e} |w| {wmax:.2e}"));
            }
            println!("{msg}");
        }
        opt.step(&mut net.params, &grads);
    }
}
