//! `spadsr infer`: run a trained checkpoint on one measurement.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use serde_json::json;
use spadsr_core::pfm;
use spadsr_pipeline::baselines::GuidedFilterParams;

use super::reconstruct::reconstruct_measurement;
use super::{load_measurement, peak_method_name, write_manifest, write_preview, FeatureArgs};
use crate::config::{resolve, FileConfig};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Histogram cube (SPDT, u32).
    #[arg(long)]
    cube: PathBuf,
    /// HR intensity image (PGM).
    #[arg(long)]
    intensity: PathBuf,
    /// Checkpoint directory.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    feat: FeatureArgs,
    /// IRF width in bins for the matched filter.
    #[arg(long)]
    sigma_bins: Option<f64>,
}

pub fn run(args: Args, cfg: &FileConfig) -> Result<()> {
    let factor = args.feat.factor(cfg);
    let sigma = resolve(
        args.sigma_bins,
        cfg.f64("sigma_bins"),
        spadsr_core::noise::DEFAULT_SIGMA_BINS,
    );
    let pc = args.feat.resolve(cfg, sigma)?;
    let measurement = load_measurement(&args.cube, &args.intensity, factor)?;

    let started = Instant::now();
    let depth = reconstruct_measurement(
        &measurement,
        &pc,
        "histnet",
        &GuidedFilterParams::default(),
        Some(&args.checkpoint),
    )?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    std::fs::create_dir_all(&args.out)?;
    pfm::write_depth(&args.out.join("depth.pfm"), &depth)?;
    write_preview(&args.out.join("preview.pgm"), &depth)?;
    write_manifest(
        &args.out.join("manifest.json"),
        &json!({
            "command": "infer",
            "factor": factor,
            "checkpoint": args.checkpoint.display().to_string(),
            "level": pc.level,
            "second_depth": pc.second_depth_enabled,
            "peak_method": peak_method_name(pc.peak_method),
            "crop_enabled": pc.crop_enabled,
            "median_window": pc.median_window,
            "sigma_bins": pc.sigma_bins,
            "output_dims": [depth.dims().0, depth.dims().1],
        }),
    )?;
    eprintln!(
        "infer finished in {runtime_ms:.1} ms -> {}",
        args.out.display()
    );
    Ok(())
}
