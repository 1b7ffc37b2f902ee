//! `spadsr simulate`

use std::path::PathBuf;

use anyhow::Result;
use serde_json::json;

use super::{write_manifest, write_measurement, NoiseArgs, SceneArgs};
use crate::config::{resolve, FileConfig};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Number of time bins.
    #[arg(long)]
    bins: Option<usize>,
    /// Spatial down-sampling factor (4 or 8).
    #[arg(long)]
    factor: Option<usize>,
}

pub fn run(args: Args, cfg: &FileConfig) -> Result<()> {
    let spec = args.noise.resolve(cfg)?;
    let bins = resolve(args.bins, cfg.usize("bins"), 16);
    let factor = resolve(args.factor, cfg.usize("factor"), 4);
    let (scene, scene_name) = args.scene.load(cfg, spec.seed)?;

    let measurement = spadsr_pipeline::simulator::simulate(&scene, bins, &spec, factor)?;
    write_measurement(&args.out, &measurement, &scene)?;

    let (h, w) = scene.dims();
    write_manifest(
        &args.out.join("meta.json"),
        &json!({
            "command": "simulate",
            "scene": scene_name,
            "scene_dims": [h, w],
            "bins": bins,
            "factor": factor,
            "ppp": spec.ppp,
            "sbr": spec.sbr,
            "sigma_bins": spec.sigma_bins,
            "seed": spec.seed,
            "signal_scale": measurement.signal_scale,
            "background": measurement.true_background,
        }),
    )?;
    eprintln!(
        "simulated {}x{}x{} cube (a = {:.6}, b = {:.6}) -> {}",
        measurement.histogram.dims().0,
        measurement.histogram.dims().1,
        bins,
        measurement.signal_scale,
        measurement.true_background,
        args.out.display()
    );
    Ok(())
}
