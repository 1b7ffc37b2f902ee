//! `spadsr reconstruct`

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::json;
use spadsr_core::{pfm, DepthMap};
use spadsr_pipeline::baselines::{guided_filter, GuidedFilterParams};
use spadsr_pipeline::features::{build_features, pad_measurement, PipelineConfig};
use spadsr_pipeline::simulator::Measurement;

use super::{crop_map, load_measurement, peak_method_name, write_manifest, write_preview, FeatureArgs};
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
    /// Reconstruction method: nn | guided | histnet.
    #[arg(long)]
    method: String,
    #[command(flatten)]
    feat: FeatureArgs,
    /// Guided-filter box radius.
    #[arg(long)]
    radius: Option<usize>,
    /// Guided-filter regularizer.
    #[arg(long)]
    eps: Option<f64>,
    /// Checkpoint directory (histnet method).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// IRF width in bins for the matched filter.
    #[arg(long)]
    sigma_bins: Option<f64>,
}

/// Feature extraction + one reconstruction method; shared with `infer`.
pub fn reconstruct_measurement(
    measurement: &Measurement,
    pc: &PipelineConfig,
    method: &str,
    gf: &GuidedFilterParams,
    checkpoint: Option<&Path>,
) -> Result<DepthMap> {
    let (padded, original_dims) = pad_measurement(measurement)?;
    let features = build_features(&padded, pc)?;
    let full = match method {
        "nn" => features.first_depth.clone(),
        "guided" => guided_filter(&features.first_depth, &features.intensity, gf)?,
        "histnet" => {
            let dir = checkpoint.context("--checkpoint is required for the histnet method")?;
            let (net, _step) = spadsr_histnet::checkpoint::load(dir)?;
            net.infer(&features)?
        }
        other => bail!("unknown method {other:?} (nn|guided|histnet)"),
    };
    Ok(crop_map(&full, original_dims))
}

pub fn run(args: Args, cfg: &FileConfig) -> Result<()> {
    let factor = args.feat.factor(cfg);
    let sigma = resolve(
        args.sigma_bins,
        cfg.f64("sigma_bins"),
        spadsr_core::noise::DEFAULT_SIGMA_BINS,
    );
    let pc = args.feat.resolve(cfg, sigma)?;
    let gf = GuidedFilterParams {
        radius: resolve(args.radius, cfg.usize("radius"), 8),
        eps: resolve(args.eps, cfg.f64("eps"), 1e-4),
    };
    let measurement = load_measurement(&args.cube, &args.intensity, factor)?;

    let started = Instant::now();
    let depth = reconstruct_measurement(
        &measurement,
        &pc,
        &args.method,
        &gf,
        args.checkpoint.as_deref(),
    )?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    std::fs::create_dir_all(&args.out)?;
    pfm::write_depth(&args.out.join("depth.pfm"), &depth)?;
    write_preview(&args.out.join("preview.pgm"), &depth)?;
    write_manifest(
        &args.out.join("manifest.json"),
        &json!({
            "command": "reconstruct",
            "method": args.method,
            "factor": factor,
            "radius": gf.radius,
            "eps": gf.eps,
            "level": pc.level,
            "second_depth": pc.second_depth_enabled,
            "peak_method": peak_method_name(pc.peak_method),
            "crop_enabled": pc.crop_enabled,
            "median_window": pc.median_window,
            "sigma_bins": pc.sigma_bins,
            "checkpoint": args.checkpoint.as_ref().map(|p| p.display().to_string()),
            "output_dims": [depth.dims().0, depth.dims().1],
        }),
    )?;
    // Timing goes to stderr only: output files stay bit-reproducible.
    eprintln!(
        "reconstruct --method {} finished in {runtime_ms:.1} ms -> {}",
        args.method,
        args.out.display()
    );
    Ok(())
}
