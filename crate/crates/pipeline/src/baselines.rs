//! Classical reconstruction references: nearest-neighbour up-sampling and
//! guided image filtering.
//!
//! The guided filter fits a local linear model of the depth on the
//! intensity guide over box windows: `a = cov(I, p) / (var(I) + eps)`,
//! `b = mean(p) - a mean(I)`, output `q = mean(a) I + mean(b)`. All box
//! means run over `(2r+1)^2` windows with edge-replicated padding and are
//! computed with 2-D prefix sums, O(1) per pixel.

use ndarray::{Array2, ArrayView2};
use spadsr_core::{CoreError, DepthMap, IntensityMap, Result};

/// Guided-filter parameters: box window half-width and regularizer.
#[derive(Debug, Clone, Copy)]
pub struct GuidedFilterParams {
    pub radius: usize,
    pub eps: f64,
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        Self {
            radius: 8,
            eps: 1e-4,
        }
    }
}

/// Replicate each pixel (and its validity) over an s x s block.
pub fn upsample_nearest(map: &DepthMap, s: usize) -> DepthMap {
    assert!(s >= 1, "upsample factor must be at least 1");
    let (h, w) = map.dims();
    let values = Array2::from_shape_fn((h * s, w * s), |(i, j)| map.get(i / s, j / s));
    let valid = Array2::from_shape_fn((h * s, w * s), |(i, j)| map.is_valid(i / s, j / s));
    DepthMap::new(values, valid).expect("replication preserves range")
}

/// Box mean over `(2 radius + 1)^2` windows with edge-replicated padding.
///
/// Implemented with a prefix-sum table over the padded image so every
/// window is full-sized and each output costs O(1).
pub fn box_mean(src: ArrayView2<'_, f64>, radius: usize) -> Array2<f64> {
    let (h, w) = src.dim();
    let r = radius;
    let (ph, pw) = (h + 2 * r, w + 2 * r);
    let clamp = |idx: usize, n: usize| idx.saturating_sub(r).min(n - 1);

    // integral[i+1][j+1] = sum of padded[0..=i][0..=j]
    let mut integral = Array2::<f64>::zeros((ph + 1, pw + 1));
    for i in 0..ph {
        let si = clamp(i, h);
        for j in 0..pw {
            let sj = clamp(j, w);
            integral[[i + 1, j + 1]] = src[[si, sj]] + integral[[i, j + 1]]
                + integral[[i + 1, j]]
                - integral[[i, j]];
        }
    }

    let count = ((2 * r + 1) * (2 * r + 1)) as f64;
    Array2::from_shape_fn((h, w), |(i, j)| {
        // Window in padded coordinates: rows i..i+2r+1, cols j..j+2r+1.
        let (i1, j1) = (i + 2 * r + 1, j + 2 * r + 1);
        let sum =
            integral[[i1, j1]] - integral[[i, j1]] - integral[[i1, j]] + integral[[i, j]];
        sum / count
    })
}

/// Brute-force box mean used as the oracle for the prefix-sum version:
/// O(r^2) per pixel, same replicate padding.
pub fn box_mean_naive(src: ArrayView2<'_, f64>, radius: usize) -> Array2<f64> {
    let (h, w) = src.dim();
    let r = radius as i64;
    let count = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    Array2::from_shape_fn((h, w), |(i, j)| {
        let mut sum = 0.0;
        for di in -r..=r {
            for dj in -r..=r {
                let si = (i as i64 + di).clamp(0, h as i64 - 1) as usize;
                let sj = (j as i64 + dj).clamp(0, w as i64 - 1) as usize;
                sum += src[[si, sj]];
            }
        }
        sum / count
    })
}

/// Edge-preserving smoothing of `input` steered by `guide`. Output is
/// clamped to [0, 1]; the input's validity mask carries through.
pub fn guided_filter(
    input: &DepthMap,
    guide: &IntensityMap,
    params: &GuidedFilterParams,
) -> Result<DepthMap> {
    if input.dims() != guide.dims() {
        return Err(CoreError::DimensionMismatch(format!(
            "input {:?} vs guide {:?}",
            input.dims(),
            guide.dims()
        )));
    }
    if params.radius < 1 {
        return Err(CoreError::InvalidParameter("radius must be at least 1".into()));
    }
    if params.eps < 0.0 {
        return Err(CoreError::InvalidParameter("eps must be non-negative".into()));
    }
    let (h, w) = input.dims();
    let p = input.values().mapv(|v| v as f64);
    let g = guide.values().mapv(|v| v as f64);

    let r = params.radius;
    let mean_g = box_mean(g.view(), r);
    let mean_p = box_mean(p.view(), r);
    let corr_gg = box_mean((&g * &g).view(), r);
    let corr_gp = box_mean((&g * &p).view(), r);

    let mut a = Array2::<f64>::zeros((h, w));
    let mut b = Array2::<f64>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let var = corr_gg[[i, j]] - mean_g[[i, j]] * mean_g[[i, j]];
            let cov = corr_gp[[i, j]] - mean_g[[i, j]] * mean_p[[i, j]];
            let den = var + params.eps;
            // A fully degenerate window with eps = 0 carries no guide
            // information; fall back to the local mean.
            let ai = if den != 0.0 { cov / den } else { 0.0 };
            a[[i, j]] = ai;
            b[[i, j]] = mean_p[[i, j]] - ai * mean_g[[i, j]];
        }
    }
    let mean_a = box_mean(a.view(), r);
    let mean_b = box_mean(b.view(), r);

    let values = Array2::from_shape_fn((h, w), |(i, j)| {
        (mean_a[[i, j]] * g[[i, j]] + mean_b[[i, j]]).clamp(0.0, 1.0) as f32
    });
    DepthMap::new(values, input.valid().to_owned())
}
