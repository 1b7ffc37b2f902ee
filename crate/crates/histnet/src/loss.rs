//! The l1 training objective on the residual-corrected depth.

use crate::tensor4::Tensor4;

/// Mean absolute error of `residual + first_depth` against the ground
/// truth, averaged over batch items and pixels. Returns the loss and its
/// gradient with respect to the residual (the subgradient of |.| at 0 is
/// taken as 0).
pub fn l1_loss(residual: &Tensor4, first_depth: &Tensor4, gt: &Tensor4) -> (f64, Tensor4) {
    assert!(residual.same_shape(first_depth), "residual vs first depth");
    assert!(residual.same_shape(gt), "residual vs ground truth");
    let count = residual.data.len() as f64;
    let inv = 1.0 / count;
    let mut grad = Tensor4::zeros(residual.n, residual.c, residual.h, residual.w);
    let mut total = 0.0f64;
    for ((g, &r), (&d, &y)) in grad
        .data
        .iter_mut()
        .zip(residual.data.iter())
        .zip(first_depth.data.iter().zip(gt.data.iter()))
    {
        let e = r + d - y;
        total += e.abs();
        *g = if e > 0.0 {
            inv
        } else if e < 0.0 {
            -inv
        } else {
            0.0
        };
    }
    (total * inv, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use spadsr_core::SplitMix64;

    #[test]
    fn exact_residual_has_zero_loss() {
        let mut rng = SplitMix64::new(1);
        let n = 2 * 4 * 4;
        let first = Tensor4::from_vec(2, 1, 4, 4, (0..n).map(|_| rng.next_f64()).collect());
        let gt = Tensor4::from_vec(2, 1, 4, 4, (0..n).map(|_| rng.next_f64()).collect());
        let mut residual = gt.clone();
        for (r, d) in residual.data.iter_mut().zip(first.data.iter()) {
            *r -= d;
        }
        let (loss, grad) = l1_loss(&residual, &first, &gt);
        assert_eq!(loss, 0.0);
        assert!(grad.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn constant_offset_gives_that_loss() {
        let first = Tensor4::from_vec(1, 1, 2, 2, vec![0.5; 4]);
        let gt = Tensor4::from_vec(1, 1, 2, 2, vec![0.4; 4]);
        let residual = Tensor4::zeros(1, 1, 2, 2);
        let (loss, grad) = l1_loss(&residual, &first, &gt);
        assert!((loss - 0.1).abs() < 1e-12);
        assert!(grad.data.iter().all(|&g| (g - 0.25).abs() < 1e-12));
    }

    #[test]
    fn random_case_matches_direct_sum() {
        let mut rng = SplitMix64::new(2);
        let n = 3 * 5 * 7;
        let residual = Tensor4::from_vec(3, 1, 5, 7, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let first = Tensor4::from_vec(3, 1, 5, 7, (0..n).map(|_| rng.next_f64()).collect());
        let gt = Tensor4::from_vec(3, 1, 5, 7, (0..n).map(|_| rng.next_f64()).collect());
        let (loss, _) = l1_loss(&residual, &first, &gt);
        let mut expected = 0.0;
        for i in 0..n {
            expected += (residual.data[i] + first.data[i] - gt.data[i]).abs();
        }
        expected /= n as f64;
        assert!((loss - expected).abs() < 1e-12);
    }
}
