//! Histogram pre-processing: background estimation, peak finding, first and
//! second depth maps, multi-scale depth features and temporal outlier
//! rejection.
//!
//! Time bins are 1-indexed throughout so the window clamping in the
//! centre-of-mass estimator reads the same as its closed form: the depth of
//! a pixel is the centre of mass of background-subtracted counts over the
//! 3-bin window around the detected peak, divided by the number of bins.

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use spadsr_core::{CoreError, DepthMap, FeatureSet, HistogramCube, Result};

use crate::baselines::upsample_nearest;
use crate::gauss::matched_kernel;
use crate::simulator::{block_sum, Measurement};

/// How the signal peak is located per pixel: histogram argmax for
/// photon-dense data, or the argmax of a matched-filter correlation for
/// sparse data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakMethod {
    Argmax,
    MatchedFilter,
}

/// Detected peak bins (1-indexed) for every pixel of a cube.
#[derive(Debug, Clone)]
pub struct PeakMap {
    pub bins: Array2<usize>,
    pub method: PeakMethod,
}

/// Pre-processing configuration.
#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub upsample_factor: usize,
    /// Threshold multiplier of the peak-relevance criterion.
    pub level: f64,
    pub second_depth_enabled: bool,
    pub peak_method: PeakMethod,
    pub crop_enabled: bool,
    /// Window of the 1-D median filter used by the temporal crop; odd.
    pub median_window: usize,
    /// IRF width in bins for the matched filter.
    pub sigma_bins: f64,
}

impl PipelineConfig {
    /// Defaults for a spatial factor: 4x data is photon-dense with gathered
    /// multi-peak pixels; 8x data is sparse, cropped, single-surface.
    pub fn for_factor(s: usize) -> Self {
        if s == 8 {
            Self {
                upsample_factor: 8,
                level: 12.0,
                second_depth_enabled: false,
                peak_method: PeakMethod::MatchedFilter,
                crop_enabled: true,
                median_window: 3,
                sigma_bins: spadsr_core::noise::DEFAULT_SIGMA_BINS,
            }
        } else {
            Self {
                upsample_factor: 4,
                level: 12.0,
                second_depth_enabled: true,
                peak_method: PeakMethod::Argmax,
                crop_enabled: false,
                median_window: 3,
                sigma_bins: spadsr_core::noise::DEFAULT_SIGMA_BINS,
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.upsample_factor != 4 && self.upsample_factor != 8 {
            return Err(CoreError::InvalidParameter(format!(
                "upsample factor must be 4 or 8, got {}",
                self.upsample_factor
            )));
        }
        if !(self.level > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "level must be positive, got {}",
                self.level
            )));
        }
        if self.median_window == 0 || self.median_window % 2 == 0 {
            return Err(CoreError::InvalidParameter(format!(
                "median window must be odd, got {}",
                self.median_window
            )));
        }
        if !(self.sigma_bins > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "sigma_bins must be positive, got {}",
                self.sigma_bins
            )));
        }
        Ok(())
    }
}

/// Per-pixel background level: the median over time bins of the histogram.
/// Even bin counts use the lower median, which keeps integer counts integer.
pub fn estimate_background(cube: &HistogramCube) -> Array2<f64> {
    let (h, w, t) = cube.dims();
    let mut out = Array2::<f64>::zeros((h, w));
    out.outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let mut scratch = vec![0u32; t];
            for j in 0..w {
                scratch.copy_from_slice(cube.pixel(i, j).as_slice().unwrap());
                scratch.sort_unstable();
                row[j] = scratch[(t - 1) / 2] as f64;
            }
        });
    out
}

fn argmax_counts(hist: &[u32]) -> usize {
    let mut best = 0;
    for (t, &c) in hist.iter().enumerate() {
        if c > hist[best] {
            best = t;
        }
    }
    best + 1
}

fn matched_filter_peak(hist: &[u32], kernel: &[f64]) -> usize {
    let t_bins = hist.len();
    let m = kernel.len() / 2;
    let mut best_t = 1usize;
    let mut best_score = f64::NEG_INFINITY;
    for t in 1..=t_bins {
        let mut score = 0.0;
        for (k, &g) in kernel.iter().enumerate() {
            let idx = t as i64 + k as i64 - m as i64 - 1;
            if idx >= 0 && (idx as usize) < t_bins {
                score += g * hist[idx as usize] as f64;
            }
        }
        if score > best_score {
            best_score = score;
            best_t = t;
        }
    }
    best_t
}

/// Locate the signal peak of every pixel. Ties resolve to the lowest bin.
pub fn find_peak(cube: &HistogramCube, method: PeakMethod, sigma_bins: f64) -> PeakMap {
    let (h, w, _) = cube.dims();
    let kernel = matched_kernel(sigma_bins);
    let bins = Array2::from_shape_fn((h, w), |(i, j)| {
        let hist = cube.pixel(i, j);
        let hist = hist.as_slice().unwrap();
        match method {
            PeakMethod::Argmax => argmax_counts(hist),
            PeakMethod::MatchedFilter => matched_filter_peak(hist, &kernel),
        }
    });
    PeakMap { bins, method }
}

fn window(d_max: usize, t_bins: usize) -> (usize, usize) {
    (d_max.saturating_sub(1).max(1), (d_max + 1).min(t_bins))
}

fn com_window(hist: &[u32], b: f64, d_max: usize) -> Option<f64> {
    let (lo, hi) = window(d_max, hist.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for t in lo..=hi {
        let excess = (hist[t - 1] as f64 - b).max(0.0);
        num += t as f64 * excess;
        den += excess;
    }
    (den > 0.0).then(|| num / den)
}

/// Centre-of-mass depth around the detected peaks, normalized by the
/// number of time bins. Pixels whose window holds no counts above
/// background come back invalid with value 0.
pub fn center_of_mass_depth(cube: &HistogramCube, background: &Array2<f64>, peaks: &PeakMap) -> DepthMap {
    let (h, w, t) = cube.dims();
    let mut values = Array2::<f32>::zeros((h, w));
    let mut valid = Array2::from_elem((h, w), true);
    for i in 0..h {
        for j in 0..w {
            let hist = cube.pixel(i, j);
            match com_window(hist.as_slice().unwrap(), background[[i, j]], peaks.bins[[i, j]]) {
                Some(depth_bins) => values[[i, j]] = (depth_bins / t as f64) as f32,
                None => valid[[i, j]] = false,
            }
        }
    }
    DepthMap::new(values, valid).expect("com depth lies in (0, 1]")
}

/// Depth of the second-strongest return. The 3-bin window of the first
/// peak is excluded from the search; the best remaining bin must carry
/// counts strictly above `b + level * sqrt(b)` to count as signal,
/// otherwise the pixel is zero/invalid.
pub fn second_depth(
    cube: &HistogramCube,
    background: &Array2<f64>,
    first_peaks: &PeakMap,
    level: f64,
) -> DepthMap {
    let (h, w, t) = cube.dims();
    let mut values = Array2::<f32>::zeros((h, w));
    let mut valid = Array2::from_elem((h, w), false);
    for i in 0..h {
        for j in 0..w {
            let hist = cube.pixel(i, j);
            let hist = hist.as_slice().unwrap();
            let b = background[[i, j]];
            let (ex_lo, ex_hi) = window(first_peaks.bins[[i, j]], t);
            let mut candidate: Option<usize> = None;
            for tt in 1..=t {
                if tt >= ex_lo && tt <= ex_hi {
                    continue;
                }
                if candidate.map_or(true, |c| hist[tt - 1] > hist[c - 1]) {
                    candidate = Some(tt);
                }
            }
            if let Some(t2) = candidate {
                if hist[t2 - 1] as f64 > b + level * b.sqrt() {
                    if let Some(depth_bins) = com_window(hist, b, t2) {
                        values[[i, j]] = (depth_bins / t as f64) as f32;
                        valid[[i, j]] = true;
                    }
                }
            }
        }
    }
    DepthMap::new(values, valid).expect("second depth lies in (0, 1]")
}

/// Restrict a cube to the bin range carrying aggregate signal.
///
/// All pixels are summed into one histogram; bins passing the
/// peak-relevance criterion against that histogram's median background are
/// kept, a binary median filter (zero-padded) erases isolated bins, and the
/// first/last survivors bound the crop. Returns `(1, T)` when nothing
/// survives.
pub fn temporal_crop(cube: &HistogramCube, level: f64, median_window: usize) -> (usize, usize) {
    let (h, w, t) = cube.dims();
    let mut aggregate = vec![0u64; t];
    let counts = cube.counts();
    for i in 0..h {
        for j in 0..w {
            for (tt, a) in aggregate.iter_mut().enumerate() {
                *a += counts[[i, j, tt]] as u64;
            }
        }
    }
    let mut sorted = aggregate.clone();
    sorted.sort_unstable();
    let b = sorted[(t - 1) / 2] as f64;
    let threshold = b + level * b.sqrt();
    let mask: Vec<bool> = aggregate.iter().map(|&a| a as f64 > threshold).collect();

    let r = median_window / 2;
    let filtered: Vec<bool> = (0..t)
        .map(|tt| {
            let mut ones = 0usize;
            for k in tt.saturating_sub(r)..=(tt + r).min(t - 1) {
                if mask[k] {
                    ones += 1;
                }
            }
            // Out-of-range taps count as zeros.
            ones >= median_window / 2 + 1
        })
        .collect();

    let first = filtered.iter().position(|&m| m);
    let last = filtered.iter().rposition(|&m| m);
    match (first, last) {
        (Some(lo), Some(hi)) => (lo + 1, hi + 1),
        _ => (1, t),
    }
}

/// Keep the top-left pixel of every `factor x factor` square.
pub fn downsample_topleft(map: &DepthMap, factor: usize) -> Result<DepthMap> {
    let (h, w) = map.dims();
    if factor == 0 || h % factor != 0 || w % factor != 0 {
        return Err(CoreError::DimensionMismatch(format!(
            "dims {h}x{w} not divisible by {factor}"
        )));
    }
    let values = Array2::from_shape_fn((h / factor, w / factor), |(i, j)| {
        map.get(i * factor, j * factor)
    });
    let valid = Array2::from_shape_fn((h / factor, w / factor), |(i, j)| {
        map.is_valid(i * factor, j * factor)
    });
    DepthMap::new(values, valid)
}

/// Pad a cube spatially by reflection (edge-exclusive) to the given dims.
fn pad_reflect_cube(cube: &HistogramCube, target_h: usize, target_w: usize) -> Result<HistogramCube> {
    let (h, w, t) = cube.dims();
    let reflect = |idx: usize, n: usize| -> usize {
        if idx < n {
            idx
        } else {
            // Mirror without repeating the edge sample.
            let over = idx - (n - 1);
            n - 1 - over.min(n - 1)
        }
    };
    let counts = cube.counts();
    let out = Array3::from_shape_fn((target_h, target_w, t), |(i, j, tt)| {
        counts[[reflect(i, h), reflect(j, w), tt]]
    });
    HistogramCube::new(out, cube.bin_width())
}

/// Pad a measurement so the target resolution divides by 16 (the four
/// pooling stages of the network). Returns the padded measurement and the
/// original target dims for cropping outputs back.
pub fn pad_measurement(meas: &Measurement) -> Result<(Measurement, (usize, usize))> {
    let s = meas.spatial_factor;
    let (lh, lw, _) = meas.histogram.dims();
    let orig = meas.intensity.dims();
    let lr_mult = 16 / s.min(16);
    let target_lh = lh.div_ceil(lr_mult) * lr_mult;
    let target_lw = lw.div_ceil(lr_mult) * lr_mult;
    if (target_lh, target_lw) == (lh, lw) {
        return Ok((meas.clone(), orig));
    }
    let cube = pad_reflect_cube(&meas.histogram, target_lh, target_lw)?;
    let (ih, iw) = orig;
    let reflect = |idx: usize, n: usize| -> usize {
        if idx < n {
            idx
        } else {
            let over = idx - (n - 1);
            n - 1 - over.min(n - 1)
        }
    };
    let inten = Array2::from_shape_fn((target_lh * s, target_lw * s), |(i, j)| {
        meas.intensity.get(reflect(i, ih), reflect(j, iw))
    });
    Ok((
        Measurement {
            histogram: cube,
            intensity: spadsr_core::IntensityMap::new(inten)?,
            spatial_factor: s,
            true_background: meas.true_background,
            signal_scale: meas.signal_scale,
        },
        orig,
    ))
}

/// Run the full pre-processing pipeline on a measurement.
pub fn build_features(meas: &Measurement, cfg: &PipelineConfig) -> Result<FeatureSet> {
    cfg.validate()?;
    let s = cfg.upsample_factor;
    if meas.spatial_factor != s {
        return Err(CoreError::InvalidParameter(format!(
            "measurement has factor {}, config expects {}",
            meas.spatial_factor, s
        )));
    }
    let (lh, lw, t_full) = meas.histogram.dims();
    let (ih, iw) = meas.intensity.dims();
    if (ih, iw) != (lh * s, lw * s) {
        return Err(CoreError::DimensionMismatch(format!(
            "intensity {ih}x{iw} does not match {s}x the {lh}x{lw} cube"
        )));
    }
    if ih % 16 != 0 || iw % 16 != 0 {
        return Err(CoreError::DimensionMismatch(format!(
            "target dims {ih}x{iw} must divide by 16; pad the measurement first"
        )));
    }

    // Temporal crop, widened to the 3-bin minimum a cube requires.
    let (crop, crop_range) = if cfg.crop_enabled {
        let (mut lo, mut hi) = temporal_crop(&meas.histogram, cfg.level, cfg.median_window);
        while hi - lo + 1 < 3 {
            if hi < t_full {
                hi += 1;
            } else {
                lo -= 1;
            }
        }
        (meas.histogram.crop_time(lo, hi)?, (lo, hi))
    } else {
        (meas.histogram.clone(), (1, t_full))
    };

    let background = estimate_background(&crop);
    let peaks = find_peak(&crop, cfg.peak_method, cfg.sigma_bins);
    let lr_first = center_of_mass_depth(&crop, &background, &peaks);
    let first = upsample_nearest(&lr_first, s);

    let (second, d1, d2, d3, d4);
    if s == 8 {
        // Sparse single-surface sensors: no second return; coarser scales
        // come from the matched-filter depth and a 2x block-summed cube.
        second = DepthMap::zeros(ih, iw);
        d1 = downsample_topleft(&first, 2)?;
        d2 = downsample_topleft(&first, 4)?;
        d3 = lr_first;
        let cube2 = block_sum(&crop, 2)?;
        let b2 = estimate_background(&cube2);
        let p2 = find_peak(&cube2, cfg.peak_method, cfg.sigma_bins);
        d4 = center_of_mass_depth(&cube2, &b2, &p2);
    } else {
        second = if cfg.second_depth_enabled {
            let lr_second = second_depth(&crop, &background, &peaks, cfg.level);
            upsample_nearest(&lr_second, s)
        } else {
            DepthMap::zeros(ih, iw)
        };
        d1 = downsample_topleft(&first, 2)?;
        d2 = lr_first;
        let cube2 = block_sum(&crop, 2)?;
        let b2 = estimate_background(&cube2);
        let p2 = find_peak(&cube2, cfg.peak_method, cfg.sigma_bins);
        d3 = center_of_mass_depth(&cube2, &b2, &p2);
        let cube4 = block_sum(&crop, 4)?;
        let b4 = estimate_background(&cube4);
        let p4 = find_peak(&cube4, cfg.peak_method, cfg.sigma_bins);
        d4 = center_of_mass_depth(&cube4, &b4, &p4);
    }

    let features = FeatureSet {
        first_depth: first,
        second_depth: second,
        d1,
        d2,
        d3,
        d4,
        intensity: meas.intensity.clone(),
        crop_range,
    };
    features.validate()?;
    Ok(features)
}
