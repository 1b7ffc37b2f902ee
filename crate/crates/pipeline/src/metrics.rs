//! Evaluation metrics: RMSE and absolute depth error on normalized maps,
//! and the in-window SBR/ppp noise measures of a histogram cube.

use ndarray::Array2;
use spadsr_core::{CoreError, DepthMap, HistogramCube, Result};

use crate::features::PeakMap;

/// Root mean squared error over pixels valid in both maps.
pub fn rmse(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let (sum_sq, n) = diff_fold(pred, gt, |d| d * d)?;
    Ok((sum_sq / n as f64).sqrt())
}

/// Per-pixel absolute depth error map plus its mean over the jointly valid
/// pixels. Excluded pixels hold 0 in the map.
pub fn ade(pred: &DepthMap, gt: &DepthMap) -> Result<(Array2<f32>, f64)> {
    if pred.dims() != gt.dims() {
        return Err(CoreError::DimensionMismatch(format!(
            "pred {:?} vs gt {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    let (h, w) = pred.dims();
    let mut map = Array2::<f32>::zeros((h, w));
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for i in 0..h {
        for j in 0..w {
            if pred.is_valid(i, j) && gt.is_valid(i, j) {
                let d = (pred.get(i, j) as f64 - gt.get(i, j) as f64).abs();
                map[[i, j]] = d as f32;
                sum += d;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(CoreError::InvalidParameter(
            "no jointly valid pixels to evaluate".into(),
        ));
    }
    Ok((map, sum / n as f64))
}

fn diff_fold(pred: &DepthMap, gt: &DepthMap, f: impl Fn(f64) -> f64) -> Result<(f64, usize)> {
    if pred.dims() != gt.dims() {
        return Err(CoreError::DimensionMismatch(format!(
            "pred {:?} vs gt {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for ((p, g), (vp, vg)) in pred
        .values()
        .iter()
        .zip(gt.values().iter())
        .zip(pred.valid().iter().zip(gt.valid().iter()))
    {
        if *vp && *vg {
            sum += f(*p as f64 - *g as f64);
            n += 1;
        }
    }
    if n == 0 {
        return Err(CoreError::InvalidParameter(
            "no jointly valid pixels to evaluate".into(),
        ));
    }
    Ok((sum, n))
}

/// Image-average noise measures of a cube.
#[derive(Debug, Clone, Copy)]
pub struct NoiseStats {
    /// Mean in-window signal-to-background ratio. Infinite if every pixel
    /// had zero background.
    pub sbr: f64,
    /// Mean in-window background-subtracted counts.
    pub ppp: f64,
    /// Pixels excluded from the SBR average because their background is 0
    /// (their ratio is the +inf sentinel).
    pub excluded_pixels: usize,
}

/// Measure SBR and ppp over the 3-bin windows around the supplied peaks,
/// averaging over all pixels. `background` and `peaks` may be the
/// simulator's ground truth or estimates.
pub fn measure_noise(
    cube: &HistogramCube,
    background: &Array2<f64>,
    peaks: &PeakMap,
) -> NoiseStats {
    let (h, w, t) = cube.dims();
    assert_eq!(background.dim(), (h, w), "background dims");
    assert_eq!(peaks.bins.dim(), (h, w), "peaks dims");
    let mut ppp_sum = 0.0f64;
    let mut sbr_sum = 0.0f64;
    let mut sbr_n = 0usize;
    let mut excluded = 0usize;
    for i in 0..h {
        for j in 0..w {
            let d_max = peaks.bins[[i, j]];
            let lo = d_max.saturating_sub(1).max(1);
            let hi = (d_max + 1).min(t);
            let b = background[[i, j]];
            let hist = cube.pixel(i, j);
            let mut signal = 0.0;
            for tt in lo..=hi {
                signal += hist[tt - 1] as f64 - b;
            }
            ppp_sum += signal;
            if b > 0.0 {
                let width = (hi - lo + 1) as f64;
                sbr_sum += signal / (b * width);
                sbr_n += 1;
            } else {
                excluded += 1;
            }
        }
    }
    let n = (h * w) as f64;
    NoiseStats {
        sbr: if sbr_n > 0 {
            sbr_sum / sbr_n as f64
        } else {
            f64::INFINITY
        },
        ppp: ppp_sum / n,
        excluded_pixels: excluded,
    }
}
