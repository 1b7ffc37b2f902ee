//! Measurement noise parameters.

use crate::error::{CoreError, Result};

/// Width in bins of the instrument response of the reference sensor,
/// expressed as the standard deviation of its Gaussian approximation.
pub const DEFAULT_SIGMA_BINS: f64 = 0.5714;

/// Noise scenario for the measurement simulator: mean signal photons per
/// pixel, signal-to-background ratio, Gaussian impulse-response width in
/// bin units, and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub ppp: f64,
    pub sbr: f64,
    pub sigma_bins: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(ppp: f64, sbr: f64) -> Self {
        Self {
            ppp,
            sbr,
            sigma_bins: DEFAULT_SIGMA_BINS,
            seed: 0,
        }
    }

    pub fn with_sigma(mut self, sigma_bins: f64) -> Self {
        self.sigma_bins = sigma_bins;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `ppp` and `sigma_bins` must be positive and finite; `sbr` must be
    /// positive (an infinite `sbr` is allowed and forces zero background).
    pub fn validate(&self) -> Result<()> {
        if !(self.ppp > 0.0 && self.ppp.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "ppp must be positive, got {}",
                self.ppp
            )));
        }
        if !(self.sbr > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "sbr must be positive, got {}",
                self.sbr
            )));
        }
        if !(self.sigma_bins > 0.0 && self.sigma_bins.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "sigma_bins must be positive, got {}",
                self.sigma_bins
            )));
        }
        Ok(())
    }
}
