//! Photon-count histogram cubes.

use ndarray::{Array3, ArrayView1, ArrayView3};

use crate::error::{CoreError, Result};

/// Per-pixel time-of-flight histograms: `[H, W, T]` non-negative photon
/// counts, row-major, with time bins indexed 1..=T in all estimator
/// formulas.
///
/// At least 3 time bins are required so the centre-of-mass window around a
/// peak is always well defined.
#[derive(Debug, Clone)]
pub struct HistogramCube {
    counts: Array3<u32>,
    bin_width: f64,
}

impl HistogramCube {
    /// Wrap a `[H, W, T]` count array. `bin_width` is the bin duration in
    /// seconds and is informational only.
    pub fn new(counts: Array3<u32>, bin_width: f64) -> Result<Self> {
        let t = counts.dim().2;
        if t < 3 {
            return Err(CoreError::InvalidParameter(format!(
                "histogram cube needs at least 3 time bins, got {t}"
            )));
        }
        Ok(Self { counts, bin_width })
    }

    /// (H, W, T)
    pub fn dims(&self) -> (usize, usize, usize) {
        self.counts.dim()
    }

    pub fn counts(&self) -> ArrayView3<'_, u32> {
        self.counts.view()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Histogram of pixel (i, j), length T.
    pub fn pixel(&self, i: usize, j: usize) -> ArrayView1<'_, u32> {
        self.counts.slice(ndarray::s![i, j, ..])
    }

    /// Total photon count over the whole cube.
    pub fn total_counts(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Restrict to the inclusive 1-indexed bin range `[t_lo, t_hi]`.
    pub fn crop_time(&self, t_lo: usize, t_hi: usize) -> Result<Self> {
        let (_, _, t) = self.dims();
        if t_lo < 1 || t_hi > t || t_lo > t_hi {
            return Err(CoreError::InvalidParameter(format!(
                "crop range [{t_lo}, {t_hi}] out of bounds for T={t}"
            )));
        }
        if t_hi - t_lo + 1 < 3 {
            return Err(CoreError::InvalidParameter(format!(
                "crop range [{t_lo}, {t_hi}] leaves fewer than 3 bins"
            )));
        }
        let cropped = self
            .counts
            .slice(ndarray::s![.., .., t_lo - 1..t_hi])
            .to_owned();
        Self::new(cropped, self.bin_width)
    }
}
