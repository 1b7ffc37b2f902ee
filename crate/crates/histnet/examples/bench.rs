//! Rough training-step timing at the sizes the acceptance suite uses.

use std::time::Instant;

use spadsr_histnet::gradcheck::random_instance;
use spadsr_histnet::loss::l1_loss;
use spadsr_histnet::model::{HistNet, NetInput};
use spadsr_histnet::optim::ProximalAdagrad;

fn time_step(scale: f64, h: usize, w: usize, batch: usize, label: &str) {
    let mut net = HistNet::new(scale, 1);
    let items: Vec<(NetInput, _)> = (0..batch).map(|i| random_instance(h, w, i as u64, false)).collect();
    let refs: Vec<&NetInput> = items.iter().map(|(i, _)| i).collect();
    let input = NetInput::stack(&refs).unwrap();
    let first = input.first_depth_tensor();
    let mut gt = first.clone();
    gt.data.iter_mut().for_each(|v| *v *= 0.7);
    let mut opt = ProximalAdagrad::new(&net.params, 0.1, 0.0, 0.1);

    let t0 = Instant::now();
    let reps = 3;
    for _ in 0..reps {
        let (tape, out) = net.forward(&input).unwrap();
        let (_, seed) = l1_loss(tape.value(out), &first, &gt);
        let grads = tape.backward(out, seed);
        opt.step(&mut net.params, &grads);
    }
    let per = t0.elapsed().as_secs_f64() / reps as f64;
    println!("{label}: {per:.3} s/step -> 2000 steps = {:.1} min", per * 2000.0 / 60.0);
}

fn main() {
    time_step(1.0 / 8.0, 64, 64, 4, "1/8 width, 64x64, batch 4");
    time_step(1.0 / 4.0, 32, 32, 4, "1/4 width, 32x32, batch 4");
    time_step(1.0 / 4.0, 48, 48, 4, "1/4 width, 48x48, batch 4");
    time_step(1.0 / 8.0, 48, 48, 4, "1/8 width, 48x48, batch 4");
}
