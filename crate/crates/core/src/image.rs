//! Depth and intensity images.

use ndarray::{Array2, ArrayView2};

use crate::error::{CoreError, Result};

/// A 2-D depth image with values normalized to [0, 1] plus a validity mask.
///
/// Invariant: every pixel with `valid == true` holds a value in [0, 1];
/// invalid pixels hold exactly 0.
#[derive(Debug, Clone)]
pub struct DepthMap {
    values: Array2<f32>,
    valid: Array2<bool>,
}

impl DepthMap {
    pub fn new(mut values: Array2<f32>, valid: Array2<bool>) -> Result<Self> {
        if values.dim() != valid.dim() {
            return Err(CoreError::DimensionMismatch(format!(
                "depth values {:?} vs mask {:?}",
                values.dim(),
                valid.dim()
            )));
        }
        for (v, &ok) in values.iter_mut().zip(valid.iter()) {
            if ok {
                if !(0.0..=1.0).contains(v) {
                    return Err(CoreError::InvalidParameter(format!(
                        "valid depth value {v} outside [0, 1]"
                    )));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(Self { values, valid })
    }

    /// All pixels valid.
    pub fn from_values(values: Array2<f32>) -> Result<Self> {
        let valid = Array2::from_elem(values.dim(), true);
        Self::new(values, valid)
    }

    /// All-zero map with every pixel valid.
    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            values: Array2::zeros((h, w)),
            valid: Array2::from_elem((h, w), true),
        }
    }

    /// (H, W)
    pub fn dims(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> ArrayView2<'_, f32> {
        self.values.view()
    }

    pub fn valid(&self) -> ArrayView2<'_, bool> {
        self.valid.view()
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[[i, j]]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[[i, j]]
    }

    /// Number of invalid pixels.
    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| !v).count()
    }
}

/// A 2-D intensity image with values in [0, 1].
#[derive(Debug, Clone)]
pub struct IntensityMap {
    values: Array2<f32>,
}

impl IntensityMap {
    pub fn new(values: Array2<f32>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CoreError::InvalidParameter(format!(
                "intensity value {v} outside [0, 1]"
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            values: Array2::zeros((h, w)),
        }
    }

    /// (H, W)
    pub fn dims(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> ArrayView2<'_, f32> {
        self.values.view()
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[[i, j]]
    }
}
