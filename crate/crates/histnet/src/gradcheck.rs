//! Finite-difference verification of the reverse-mode gradients.
//!
//! Every op in the engine is piecewise linear, so central differences are
//! exact (up to f64 rounding) whenever the perturbation interval does not
//! cross a ReLU or |.| kink. [`all_active_instance`] constructs a network
//! state with strictly positive weights, biases and inputs, which bounds
//! every pre-activation away from 0 by more than any +-1e-3 step can move
//! it: on that instance the check is exact and any disagreement is a real
//! gradient bug. Random signed states additionally exercise the gating
//! paths, at the cost of occasional kink crossings inside the interval,
//! so their tolerance is statistical.

use spadsr_core::SplitMix64;

use crate::loss::l1_loss;
use crate::model::{HistNet, NetInput};
use crate::tensor4::Tensor4;

/// Outcome of one finite-difference sweep.
#[derive(Debug, Clone)]
pub struct GradReport {
    /// Relative errors of every sampled coordinate.
    pub rels: Vec<f64>,
    /// (analytic, numeric) pairs of every sampled coordinate.
    pub pairs: Vec<(f64, f64)>,
    /// Largest relative error and where it occurred.
    pub max_rel: f64,
    pub worst_tensor: String,
    pub checked: usize,
}

impl GradReport {
    pub fn median_rel(&self) -> f64 {
        if self.rels.is_empty() {
            return 0.0;
        }
        let mut sorted = self.rels.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[sorted.len() / 2]
    }

    pub fn fraction_above(&self, threshold: f64) -> f64 {
        if self.rels.is_empty() {
            return 0.0;
        }
        self.rels.iter().filter(|&&r| r > threshold).count() as f64 / self.rels.len() as f64
    }

    /// `||analytic - numeric||_2 / ||analytic||_2` over all sampled
    /// coordinates. Kink crossings add small noise; a systematic gradient
    /// bug pushes this towards O(1).
    pub fn l2_ratio(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(a, n) in &self.pairs {
            num += (a - n) * (a - n);
            den += a * a;
        }
        if den == 0.0 {
            return if num == 0.0 { 0.0 } else { f64::INFINITY };
        }
        (num / den).sqrt()
    }
}

fn loss_of(net: &HistNet, input: &NetInput, first: &Tensor4, gt: &Tensor4) -> f64 {
    let (tape, out) = net.forward(input).expect("forward in gradcheck");
    l1_loss(tape.value(out), first, gt).0
}

/// Central-difference check of `coords_per_tensor` sampled coordinates in
/// every parameter tensor, with the given f32 perturbation step.
pub fn check(
    net: &mut HistNet,
    input: &NetInput,
    gt: &Tensor4,
    coords_per_tensor: usize,
    step: f64,
    seed: u64,
) -> GradReport {
    let first = input.first_depth_tensor();
    let (tape, out) = net.forward(input).expect("forward in gradcheck");
    let (_, seed_grad) = l1_loss(tape.value(out), &first, gt);
    let analytic = tape.backward(out, seed_grad);
    drop(tape);

    let mut rels = Vec::new();
    let mut pairs = Vec::new();
    let mut max_rel = 0.0f64;
    let mut worst_tensor = String::new();
    for t_idx in 0..net.params.tensors.len() {
        let len = net.params.tensors[t_idx].data.len();
        let mut rng = SplitMix64::derive(seed, &[0xfd, t_idx as u64]);
        let count = coords_per_tensor.min(len);
        for _ in 0..count {
            let c = rng.next_below(len);
            let w0 = net.params.tensors[t_idx].data[c];
            let wp = (w0 as f64 + step) as f32;
            let wm = (w0 as f64 - step) as f32;

            net.params.tensors[t_idx].data[c] = wp;
            let lp = loss_of(net, input, &first, gt);
            net.params.tensors[t_idx].data[c] = wm;
            let lm = loss_of(net, input, &first, gt);
            net.params.tensors[t_idx].data[c] = w0;

            let numeric = (lp - lm) / (wp as f64 - wm as f64);
            let a = analytic[t_idx][c];
            let scale = a.abs().max(numeric.abs()).max(1e-9);
            let rel = (a - numeric).abs() / scale;
            rels.push(rel);
            pairs.push((a, numeric));
            if rel > max_rel {
                max_rel = rel;
                worst_tensor = net.params.tensors[t_idx].name.clone();
            }
        }
    }
    GradReport {
        checked: rels.len(),
        rels,
        pairs,
        max_rel,
        worst_tensor,
    }
}

/// A network state plus instance where every ReLU is strictly active and
/// every |.| argument strictly positive, with margins far larger than the
/// perturbation step, so finite differences are exact.
///
/// Weights are positive with mean ~1.2 / fan_in (near-unit layer gain),
/// biases 0.2, inputs in (0.05, 0.95) and the target 0.
pub fn all_active_instance(
    width_scale: f64,
    h: usize,
    w: usize,
    seed: u64,
) -> (HistNet, NetInput, Tensor4) {
    let mut net = HistNet::new(width_scale, seed);
    for (idx, t) in net.params.tensors.iter_mut().enumerate() {
        let mut rng = SplitMix64::derive(seed, &[0xac, idx as u64]);
        if t.shape.len() < 2 {
            t.data.iter_mut().for_each(|b| *b = 0.2);
        } else {
            let fan_in: usize = if t.name.ends_with("up_w") {
                t.shape[0] * t.shape[2] * t.shape[3]
            } else {
                t.shape[1..].iter().product()
            };
            let lo = 0.6 / fan_in as f64;
            let hi = 1.8 / fan_in as f64;
            for v in &mut t.data {
                *v = rng.uniform(lo, hi) as f32;
            }
        }
    }
    let (input, gt) = random_instance(h, w, seed, true);
    (net, input, gt)
}

/// Random inputs (and ground truth) for a gradient check. `positive_only`
/// keeps everything in (0.05, 0.95) with a zero target.
pub fn random_instance(h: usize, w: usize, seed: u64, positive_only: bool) -> (NetInput, Tensor4) {
    let mut rng = SplitMix64::derive(seed, &[0x1457]);
    let mut fill = |t: &mut Tensor4| {
        for v in &mut t.data {
            *v = rng.uniform(0.05, 0.95);
        }
    };
    let mut main = Tensor4::zeros(1, 2, h, w);
    fill(&mut main);
    let mut d = [
        Tensor4::zeros(1, 1, h / 2, w / 2),
        Tensor4::zeros(1, 1, h / 4, w / 4),
        Tensor4::zeros(1, 1, h / 8, w / 8),
        Tensor4::zeros(1, 1, h / 16, w / 16),
    ];
    for t in &mut d {
        fill(t);
    }
    let mut intensity = Tensor4::zeros(1, 1, h, w);
    fill(&mut intensity);
    let mut gt = Tensor4::zeros(1, 1, h, w);
    if !positive_only {
        fill(&mut gt);
    }
    (NetInput { main, d, intensity }, gt)
}
