//! Subcommand implementations and shared plumbing.

pub mod eval;
pub mod features;
pub mod infer;
pub mod reconstruct;
pub mod simulate;
pub mod sweep;
pub mod train;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::Array3;
use serde_json::Value;
use spadsr_core::{pfm, pgm, spdt, DepthMap, HistogramCube, NoiseSpec};
use spadsr_pipeline::features::{PeakMethod, PipelineConfig};
use spadsr_pipeline::simulator::{Measurement, ScenePair};
use spadsr_pipeline::synth::{self, SceneKind};

use crate::config::{resolve, FileConfig};

/// Noise preset names and their (ppp, sbr) values.
pub fn preset_values(name: &str) -> Result<(f64, f64)> {
    match name {
        "high" => Ok((1200.0, 2.0)),
        "medium" => Ok((4.0, 0.02)),
        "low" => Ok((4.0, 0.006)),
        other => bail!("unknown preset {other:?} (high|medium|low)"),
    }
}

#[derive(clap::Args, Debug)]
pub struct NoiseArgs {
    /// Noise preset: high (ppp 1200, SBR 2), medium (4, 0.02), low (4, 0.006).
    #[arg(long)]
    pub preset: Option<String>,
    /// Mean signal photons per pixel.
    #[arg(long)]
    pub ppp: Option<f64>,
    /// Signal-to-background ratio.
    #[arg(long)]
    pub sbr: Option<f64>,
    /// Gaussian IRF standard deviation in bins.
    #[arg(long)]
    pub sigma_bins: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl NoiseArgs {
    pub fn resolve(&self, cfg: &FileConfig) -> Result<NoiseSpec> {
        let preset = self.preset.clone().or_else(|| cfg.string("preset"));
        let (preset_ppp, preset_sbr) = match preset.as_deref() {
            Some(name) => {
                let (p, s) = preset_values(name)?;
                (Some(p), Some(s))
            }
            None => (None, None),
        };
        let ppp = self
            .ppp
            .or_else(|| cfg.f64("ppp"))
            .or(preset_ppp)
            .unwrap_or(1200.0);
        let sbr = self
            .sbr
            .or_else(|| cfg.f64("sbr"))
            .or(preset_sbr)
            .unwrap_or(2.0);
        let sigma = resolve(
            self.sigma_bins,
            cfg.f64("sigma_bins"),
            spadsr_core::noise::DEFAULT_SIGMA_BINS,
        );
        let seed = resolve(self.seed, cfg.u64("seed"), 0);
        let spec = NoiseSpec::new(ppp, sbr).with_sigma(sigma).with_seed(seed);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(clap::Args, Debug)]
pub struct FeatureArgs {
    /// Spatial up-sampling factor (4 or 8).
    #[arg(long)]
    pub factor: Option<usize>,
    /// Peak-relevance threshold multiplier.
    #[arg(long)]
    pub level: Option<f64>,
    /// Extract the second depth map (4x default: true).
    #[arg(long)]
    pub second_depth: Option<bool>,
    /// Peak finder: argmax | matched.
    #[arg(long)]
    pub peak_method: Option<String>,
    /// Apply the temporal crop (8x default: true).
    #[arg(long)]
    pub crop: Option<bool>,
    /// Median window of the crop's isolated-bin filter (odd).
    #[arg(long)]
    pub median_window: Option<usize>,
}

impl FeatureArgs {
    pub fn factor(&self, cfg: &FileConfig) -> usize {
        resolve(self.factor, cfg.usize("factor"), 4)
    }

    pub fn resolve(&self, cfg: &FileConfig, sigma_bins: f64) -> Result<PipelineConfig> {
        let factor = self.factor(cfg);
        let mut pc = PipelineConfig::for_factor(factor);
        pc.sigma_bins = sigma_bins;
        pc.level = resolve(self.level, cfg.f64("level"), pc.level);
        pc.second_depth_enabled = resolve(
            self.second_depth,
            cfg.bool("second_depth"),
            pc.second_depth_enabled,
        );
        pc.crop_enabled = resolve(self.crop, cfg.bool("crop"), pc.crop_enabled);
        pc.median_window = resolve(
            self.median_window,
            cfg.usize("median_window"),
            pc.median_window,
        );
        if let Some(name) = self.peak_method.clone().or_else(|| cfg.string("peak_method")) {
            pc.peak_method = match name.as_str() {
                "argmax" => PeakMethod::Argmax,
                "matched" => PeakMethod::MatchedFilter,
                other => bail!("unknown peak method {other:?} (argmax|matched)"),
            };
        }
        pc.validate()?;
        Ok(pc)
    }
}

pub fn peak_method_name(method: PeakMethod) -> &'static str {
    match method {
        PeakMethod::Argmax => "argmax",
        PeakMethod::MatchedFilter => "matched",
    }
}

#[derive(clap::Args, Debug)]
pub struct SceneArgs {
    /// Ground-truth depth (PFM).
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// Ground-truth intensity (PGM).
    #[arg(long)]
    pub intensity: Option<PathBuf>,
    /// Synthetic scene kind (ramp | steps | blobs) when no files given.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
}

impl SceneArgs {
    pub fn load(&self, cfg: &FileConfig, seed: u64) -> Result<(ScenePair, String)> {
        let depth = self.depth.clone().or_else(|| cfg.string("depth").map(Into::into));
        let intensity = self
            .intensity
            .clone()
            .or_else(|| cfg.string("intensity").map(Into::into));
        match (depth, intensity) {
            (Some(d), Some(i)) => {
                let depth = pfm::read_depth(&d)
                    .with_context(|| format!("reading depth {}", d.display()))?;
                let intensity = pgm::read_intensity(&i)
                    .with_context(|| format!("reading intensity {}", i.display()))?;
                let name = d
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scene".into());
                Ok((ScenePair::new(depth, intensity)?, name))
            }
            (None, None) => {
                let kind_name = self
                    .synthetic
                    .clone()
                    .or_else(|| cfg.string("synthetic"))
                    .unwrap_or_else(|| "blobs".into());
                let kind: SceneKind = kind_name.parse().map_err(anyhow::Error::msg)?;
                let h = resolve(self.height, cfg.usize("height"), 128);
                let w = resolve(self.width, cfg.usize("width"), 128);
                Ok((synth::make_scene(kind, h, w, seed), kind_name))
            }
            _ => bail!("provide both --depth and --intensity, or neither for a synthetic scene"),
        }
    }
}

/// Read a measurement from a u32 SPDT cube and a PGM intensity image.
pub fn load_measurement(cube: &Path, intensity: &Path, factor: usize) -> Result<Measurement> {
    let (dims, counts) = spdt::read_u32(cube)
        .with_context(|| format!("reading histogram cube {}", cube.display()))?;
    if dims.len() != 3 {
        bail!("histogram cube must be 3-D [H, W, T], got {dims:?}");
    }
    let counts = Array3::from_shape_vec((dims[0], dims[1], dims[2]), counts)?;
    let histogram = HistogramCube::new(counts, 1.0)?;
    let intensity = pgm::read_intensity(intensity)?;
    let (lh, lw, _) = histogram.dims();
    if intensity.dims() != (lh * factor, lw * factor) {
        bail!(
            "intensity {:?} does not match {}x the {}x{} cube",
            intensity.dims(),
            factor,
            lh,
            lw
        );
    }
    Ok(Measurement {
        histogram,
        intensity,
        spatial_factor: factor,
        true_background: 0.0,
        signal_scale: 0.0,
    })
}

/// Write a measurement's files into `dir`.
pub fn write_measurement(dir: &Path, meas: &Measurement, gt: &ScenePair) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (h, w, t) = meas.histogram.dims();
    let counts: Vec<u32> = meas.histogram.counts().iter().copied().collect();
    spdt::write(
        &dir.join("histogram.spdt"),
        &[h, w, t],
        &spdt::Payload::U32(counts),
    )?;
    pgm::write_intensity(&dir.join("intensity.pgm"), &meas.intensity)?;
    pfm::write_depth(&dir.join("gt_depth.pfm"), &gt.depth)?;
    Ok(())
}

pub fn write_manifest(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Crop a map back to the pre-padding target dims.
pub fn crop_map(map: &DepthMap, dims: (usize, usize)) -> DepthMap {
    let (h, w) = dims;
    if map.dims() == dims {
        return map.clone();
    }
    DepthMap::new(
        map.values().slice(ndarray::s![..h, ..w]).to_owned(),
        map.valid().slice(ndarray::s![..h, ..w]).to_owned(),
    )
    .expect("crop preserves invariants")
}

/// Depth preview: linear map of [0, 1] onto 8-bit gray.
pub fn write_preview(path: &Path, map: &DepthMap) -> Result<()> {
    pgm::write_gray8(path, map.values())?;
    Ok(())
}
