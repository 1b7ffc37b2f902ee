//! Batch training loop: seeded shuffling, l1 loss, proximal-Adagrad
//! updates, and a recorded loss curve.

use spadsr_core::SplitMix64;

use crate::error::{NetError, Result};
use crate::loss::l1_loss;
use crate::model::{HistNet, NetInput, Sample};
use crate::optim::ProximalAdagrad;
use crate::tensor4::Tensor4;

/// Training hyper-parameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Passes over the dataset when `steps` is not set.
    pub epochs: usize,
    /// Exact optimizer step count; overrides `epochs` when present.
    pub steps: Option<usize>,
    pub l1_reg: f64,
    pub accumulator_init: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 0.1,
            epochs: 2000,
            steps: None,
            l1_reg: 0.0,
            accumulator_init: 0.1,
            seed: 0,
        }
    }
}

/// (step, loss) pairs, one per optimizer step.
pub type LossCurve = Vec<(usize, f64)>;

fn stack_batch(dataset: &[Sample], indices: &[usize]) -> Result<(NetInput, Tensor4, Tensor4)> {
    let inputs: Vec<&NetInput> = indices.iter().map(|&i| &dataset[i].input).collect();
    let input = NetInput::stack(&inputs)?;
    let first = input.first_depth_tensor();
    let gt_items: Vec<&Tensor4> = indices.iter().map(|&i| &dataset[i].gt).collect();
    let mut gt = Tensor4::zeros(first.n, 1, first.h, first.w);
    for (slot, item) in (0..gt.n).zip(gt_items.iter()) {
        gt.plane_mut(slot, 0).copy_from_slice(item.plane(0, 0));
    }
    Ok((input, first, gt))
}

/// Train in place, returning the loss curve. Deterministic for a given
/// seed: shuffling, initialization and all kernel reductions are fixed.
pub fn train(net: &mut HistNet, dataset: &[Sample], cfg: &TrainConfig) -> Result<LossCurve> {
    if dataset.is_empty() {
        return Err(NetError::EmptyDataset);
    }
    let n = dataset.len();
    let batch = cfg.batch_size.max(1);
    let steps_per_epoch = n.div_ceil(batch);
    let total_steps = cfg.steps.unwrap_or(cfg.epochs * steps_per_epoch);

    let mut optimizer =
        ProximalAdagrad::new(&net.params, cfg.learning_rate, cfg.l1_reg, cfg.accumulator_init);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::derive(cfg.seed, &[0x7264u64]);
    let mut cursor = n; // trigger a shuffle on first use
    let mut curve = Vec::with_capacity(total_steps);

    for step in 0..total_steps {
        let mut indices = Vec::with_capacity(batch);
        while indices.len() < batch {
            if cursor >= n {
                rng.shuffle(&mut order);
                cursor = 0;
            }
            indices.push(order[cursor]);
            cursor += 1;
        }

        let (input, first, gt) = stack_batch(dataset, &indices)?;
        let (tape, out) = net.forward(&input)?;
        let (loss, seed_grad) = l1_loss(tape.value(out), &first, &gt);
        if !loss.is_finite() {
            return Err(NetError::NanLoss { step, loss });
        }
        let grads = tape.backward(out, seed_grad);
        optimizer.step(&mut net.params, &grads);
        curve.push((step, loss));
    }
    Ok(curve)
}
