//! The bundle of network input features extracted from one measurement.

use crate::error::{CoreError, Result};
use crate::image::{DepthMap, IntensityMap};

/// Inputs to the reconstruction network for a single measurement: the first
/// and second depth maps at target resolution, the four multi-scale depth
/// features at successively halved resolutions, and the high-resolution
/// intensity.
///
/// `crop_range` is the inclusive 1-indexed time-bin range the features were
/// computed on (the full range when no temporal crop was applied); its width
/// is the depth normalization divisor.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub first_depth: DepthMap,
    pub second_depth: DepthMap,
    pub d1: DepthMap,
    pub d2: DepthMap,
    pub d3: DepthMap,
    pub d4: DepthMap,
    pub intensity: IntensityMap,
    pub crop_range: (usize, usize),
}

impl FeatureSet {
    /// Check the dimension contract: first/second depth match the intensity,
    /// and feature k has dims `target / 2^k` exactly.
    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.first_depth.dims();
        if self.second_depth.dims() != (h, w) || self.intensity.dims() != (h, w) {
            return Err(CoreError::DimensionMismatch(format!(
                "first {:?}, second {:?} and intensity {:?} must share dims",
                self.first_depth.dims(),
                self.second_depth.dims(),
                self.intensity.dims()
            )));
        }
        let scales = [&self.d1, &self.d2, &self.d3, &self.d4];
        for (k, d) in scales.iter().enumerate() {
            let f = 2usize.pow(k as u32 + 1);
            if h % f != 0 || w % f != 0 || d.dims() != (h / f, w / f) {
                return Err(CoreError::DimensionMismatch(format!(
                    "d{} has dims {:?}, expected {:?}",
                    k + 1,
                    d.dims(),
                    (h / f, w / f)
                )));
            }
        }
        if self.crop_range.0 < 1 || self.crop_range.0 > self.crop_range.1 {
            return Err(CoreError::InvalidParameter(format!(
                "bad crop range {:?}",
                self.crop_range
            )));
        }
        Ok(())
    }

    /// Target (output) resolution.
    pub fn target_dims(&self) -> (usize, usize) {
        self.first_depth.dims()
    }

    /// Number of time bins the depth features were normalized by.
    pub fn norm_bins(&self) -> usize {
        self.crop_range.1 - self.crop_range.0 + 1
    }
}
