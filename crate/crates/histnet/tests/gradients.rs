//! Gradient verification and training behaviour.

use spadsr_core::SplitMix64;
use spadsr_histnet::gradcheck::{all_active_instance, check, random_instance};
use spadsr_histnet::model::HistNet;
use spadsr_histnet::train::{train, TrainConfig};
use spadsr_histnet::Sample;

// The output convolution is zero-initialized (identity start), which also
// zeroes every trunk gradient; give it values so gradients flow everywhere.
fn randomize_out_layer(net: &mut HistNet, seed: u64) {
    let mut rng = SplitMix64::derive(seed, &[0x0;  1]);
    for t in &mut net.params.tensors {
        if t.name == "out_w" {
            for v in &mut t.data {
                *v = rng.uniform(-0.3, 0.3) as f32;
            }
        }
    }
}

#[test]
fn finite_differences_agree_on_the_all_active_instance() {
    // Small instance for speed; the acceptance suite runs the full-size one.
    let (mut net, input, gt) = all_active_instance(1.0 / 32.0, 16, 16, 11);
    let report = check(&mut net, &input, &gt, 8, 1e-3, 5);
    assert!(
        report.max_rel < 1e-3,
        "max rel {} at {}",
        report.max_rel,
        report.worst_tensor
    );
}

#[test]
fn finite_differences_are_statistically_clean_at_a_signed_point() {
    // Random signed weights: a +-1e-3 interval regularly straddles ReLU
    // kinks, which corrupts individual coordinates by up to a few percent.
    // A systematic backward bug corrupts most coordinates at O(1) relative
    // error instead, so the tripwires are the median and the gross tail.
    let mut net = HistNet::new(1.0 / 32.0, 21);
    randomize_out_layer(&mut net, 21);
    let (input, gt) = random_instance(16, 16, 22, false);
    let report = check(&mut net, &input, &gt, 8, 1e-3, 6);
    assert!(report.median_rel() < 1e-3, "median {}", report.median_rel());
    assert!(report.l2_ratio() < 0.1, "l2 ratio {}", report.l2_ratio());
}

#[test]
fn doubling_the_loss_scale_doubles_every_gradient() {
    let mut net = HistNet::new(1.0 / 32.0, 31);
    randomize_out_layer(&mut net, 31);
    let (input, gt) = random_instance(16, 16, 32, false);
    let first = input.first_depth_tensor();
    let (tape, out) = net.forward(&input).unwrap();
    let (_, seed_grad) = spadsr_histnet::loss::l1_loss(tape.value(out), &first, &gt);
    let grads1 = tape.backward(out, seed_grad.clone());
    let mut doubled = seed_grad;
    doubled.data.iter_mut().for_each(|v| *v *= 2.0);
    let grads2 = tape.backward(out, doubled);
    for (g1, g2) in grads1.iter().zip(grads2.iter()) {
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }
}

#[test]
fn zero_loss_configuration_has_zero_gradients() {
    // Zero parameters give a zero residual; a target equal to the first
    // depth makes every per-pixel error exactly 0, whose subgradient is 0.
    let mut net = HistNet::new(1.0 / 32.0, 41);
    for t in &mut net.params.tensors {
        t.data.iter_mut().for_each(|v| *v = 0.0);
    }
    let (input, _) = random_instance(16, 16, 42, false);
    let first = input.first_depth_tensor();
    let gt = first.clone();
    let (tape, out) = net.forward(&input).unwrap();
    let (loss, seed_grad) = spadsr_histnet::loss::l1_loss(tape.value(out), &first, &gt);
    assert_eq!(loss, 0.0);
    let grads = tape.backward(out, seed_grad);
    for g in &grads {
        assert!(g.iter().all(|&v| v == 0.0));
    }
}

fn tiny_dataset(seed: u64) -> Vec<Sample> {
    use spadsr_core::NoiseSpec;
    use spadsr_pipeline::features::{build_features, PipelineConfig};
    use spadsr_pipeline::simulator::simulate;
    use spadsr_pipeline::synth::{make_scene, SceneKind};

    let scene = make_scene(SceneKind::Blobs, 32, 32, seed);
    let spec = NoiseSpec::new(900.0, 4.0).with_seed(seed);
    let m = simulate(&scene, 16, &spec, 4).unwrap();
    let features = build_features(&m, &PipelineConfig::for_factor(4)).unwrap();
    vec![Sample::new(&features, &scene.depth).unwrap()]
}

#[test]
fn same_seed_training_runs_are_bit_identical() {
    let dataset = tiny_dataset(77);
    let cfg = TrainConfig {
        batch_size: 2,
        steps: Some(6),
        seed: 9,
        ..TrainConfig::default()
    };
    let mut net_a = HistNet::new(1.0 / 32.0, 1);
    let curve_a = train(&mut net_a, &dataset, &cfg).unwrap();
    let mut net_b = HistNet::new(1.0 / 32.0, 1);
    let curve_b = train(&mut net_b, &dataset, &cfg).unwrap();
    assert_eq!(curve_a.len(), 6);
    for (a, b) in curve_a.iter().zip(curve_b.iter()) {
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
    for (ta, tb) in net_a.params.tensors.iter().zip(net_b.params.tensors.iter()) {
        let ba: Vec<u32> = ta.data.iter().map(|v| v.to_bits()).collect();
        let bb: Vec<u32> = tb.data.iter().map(|v| v.to_bits()).collect();
        assert_eq!(ba, bb, "{}", ta.name);
    }
}

#[test]
fn short_training_approaches_the_input_baseline() {
    // The untrained random residual adds error on top of the first depth;
    // a short run must shed most of that overhead and come close to the
    // baseline loss of a zero residual.
    let dataset = tiny_dataset(78);
    let sample = &dataset[0];
    let first = sample.input.first_depth_tensor();
    let baseline: f64 = first
        .data
        .iter()
        .zip(sample.gt.data.iter())
        .map(|(d, y)| (d - y).abs())
        .sum::<f64>()
        / first.data.len() as f64;

    let cfg = TrainConfig {
        batch_size: 2,
        steps: Some(150),
        seed: 3,
        ..TrainConfig::default()
    };
    let mut net = HistNet::new(1.0 / 16.0, 2);
    let curve = train(&mut net, &dataset, &cfg).unwrap();
    let first_avg: f64 = curve[..5].iter().map(|&(_, l)| l).sum::<f64>() / 5.0;
    let last_avg: f64 = curve[curve.len() - 5..].iter().map(|&(_, l)| l).sum::<f64>() / 5.0;
    assert!(last_avg < first_avg, "loss must decrease");
    assert!(
        last_avg < 1.3 * baseline,
        "final loss {last_avg} far above baseline {baseline}"
    );
}

#[test]
fn huge_l1_regularization_zeroes_the_weights() {
    let dataset = tiny_dataset(79);
    let cfg = TrainConfig {
        batch_size: 1,
        steps: Some(8),
        l1_reg: 10.0,
        seed: 5,
        ..TrainConfig::default()
    };
    let mut net = HistNet::new(1.0 / 32.0, 6);
    train(&mut net, &dataset, &cfg).unwrap();
    let nonzero: usize = net
        .params
        .tensors
        .iter()
        .map(|t| t.data.iter().filter(|&&v| v != 0.0).count())
        .sum();
    assert_eq!(nonzero, 0, "{nonzero} weights survived the shrinkage");
}

#[test]
fn infer_adds_residual_and_clamps() {
    use spadsr_core::NoiseSpec;
    use spadsr_pipeline::features::{build_features, PipelineConfig};
    use spadsr_pipeline::simulator::simulate;
    use spadsr_pipeline::synth::{make_scene, SceneKind};

    let scene = make_scene(SceneKind::Steps, 32, 32, 3);
    let spec = NoiseSpec::new(500.0, 5.0).with_seed(1);
    let m = simulate(&scene, 16, &spec, 4).unwrap();
    let features = build_features(&m, &PipelineConfig::for_factor(4)).unwrap();

    // Zero parameters: the residual is zero, so inference returns the
    // first depth map exactly.
    let mut net = HistNet::new(1.0 / 32.0, 4);
    for t in &mut net.params.tensors {
        t.data.iter_mut().for_each(|v| *v = 0.0);
    }
    let out = net.infer(&features).unwrap();
    assert_eq!(out.values(), features.first_depth.values());

    // Any parameters: outputs stay in [0, 1].
    let net = HistNet::new(1.0 / 32.0, 4);
    let out = net.infer(&features).unwrap();
    assert!(out.values().iter().all(|v| (0.0..=1.0).contains(v)));
}
