//! `spadsr features`

use std::path::PathBuf;

use anyhow::Result;
use serde_json::json;
use spadsr_core::pfm;
use spadsr_pipeline::features::{build_features, pad_measurement};

use super::{load_measurement, peak_method_name, write_manifest, FeatureArgs};
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
    let (padded, original_dims) = pad_measurement(&measurement)?;
    let features = build_features(&padded, &pc)?;

    std::fs::create_dir_all(&args.out)?;
    pfm::write_depth(&args.out.join("first_depth.pfm"), &features.first_depth)?;
    pfm::write_depth(&args.out.join("second_depth.pfm"), &features.second_depth)?;
    pfm::write_depth(&args.out.join("d1.pfm"), &features.d1)?;
    pfm::write_depth(&args.out.join("d2.pfm"), &features.d2)?;
    pfm::write_depth(&args.out.join("d3.pfm"), &features.d3)?;
    pfm::write_depth(&args.out.join("d4.pfm"), &features.d4)?;

    write_manifest(
        &args.out.join("manifest.json"),
        &json!({
            "command": "features",
            "factor": factor,
            "crop_enabled": pc.crop_enabled,
            "crop_range": [features.crop_range.0, features.crop_range.1],
            "level": pc.level,
            "second_depth": pc.second_depth_enabled,
            "peak_method": peak_method_name(pc.peak_method),
            "median_window": pc.median_window,
            "sigma_bins": pc.sigma_bins,
            "original_dims": [original_dims.0, original_dims.1],
            "feature_dims": [features.first_depth.dims().0, features.first_depth.dims().1],
        }),
    )?;
    eprintln!(
        "features at {:?} (crop {:?}) -> {}",
        features.first_depth.dims(),
        features.crop_range,
        args.out.display()
    );
    Ok(())
}
