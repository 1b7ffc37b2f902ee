//! `spadsr sweep`: RMSE of a fixed checkpoint over a ppp x SBR grid.

use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;
use spadsr_pipeline::features::{build_features, pad_measurement};
use spadsr_pipeline::metrics::rmse;
use spadsr_pipeline::simulator::simulate;

use super::{crop_map, write_manifest, FeatureArgs, NoiseArgs, SceneArgs};
use crate::config::{resolve, FileConfig};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Checkpoint directory.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    feat: FeatureArgs,
    /// Number of time bins.
    #[arg(long)]
    bins: Option<usize>,
    /// Comma-separated ppp values (rows).
    #[arg(long)]
    ppp_grid: Option<String>,
    /// Comma-separated SBR values (columns).
    #[arg(long)]
    sbr_grid: Option<String>,
}

fn parse_grid(text: &str, name: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {name} entry {v:?}"))
        })
        .collect()
}

pub fn run(args: Args, cfg: &FileConfig) -> Result<()> {
    let base_spec = args.noise.resolve(cfg)?;
    let bins = resolve(args.bins, cfg.usize("bins"), 16);
    let factor = args.feat.factor(cfg);
    let pc = args.feat.resolve(cfg, base_spec.sigma_bins)?;
    let ppp_grid = parse_grid(
        &args
            .ppp_grid
            .clone()
            .or_else(|| cfg.string("ppp_grid"))
            .unwrap_or_else(|| "16,4,1,0.25".into()),
        "ppp",
    )?;
    let sbr_grid = parse_grid(
        &args
            .sbr_grid
            .clone()
            .or_else(|| cfg.string("sbr_grid"))
            .unwrap_or_else(|| "0.08,0.02,0.005,0.00125".into()),
        "sbr",
    )?;

    let (scene, scene_name) = args.scene.load(cfg, base_spec.seed)?;
    let (net, _) = spadsr_histnet::checkpoint::load(&args.checkpoint)?;

    let cells: Vec<(usize, usize)> = (0..ppp_grid.len())
        .flat_map(|i| (0..sbr_grid.len()).map(move |j| (i, j)))
        .collect();
    // Cells run in parallel; the output order is fixed by index.
    let results: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let mut spec = base_spec;
            spec.ppp = ppp_grid[i];
            spec.sbr = sbr_grid[j];
            spec.seed = base_spec.seed.wrapping_add((i * sbr_grid.len() + j) as u64);
            let measurement = simulate(&scene, bins, &spec, factor)?;
            let (padded, dims) = pad_measurement(&measurement)?;
            let features = build_features(&padded, &pc)?;
            let pred = crop_map(&net.infer(&features)?, dims);
            Ok(rmse(&pred, &scene.depth)?)
        })
        .collect();

    let mut csv = String::from("ppp,sbr,rmse\n");
    for (&(i, j), result) in cells.iter().zip(results.into_iter()) {
        let value = result?;
        csv.push_str(&format!("{},{},{value:.6}\n", ppp_grid[i], sbr_grid[j]));
    }
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("sweep.csv"), &csv)?;
    write_manifest(
        &args.out.join("manifest.json"),
        &json!({
            "command": "sweep",
            "scene": scene_name,
            "bins": bins,
            "factor": factor,
            "checkpoint": args.checkpoint.display().to_string(),
            "ppp_grid": ppp_grid,
            "sbr_grid": sbr_grid,
            "seed": base_spec.seed,
            "sigma_bins": base_spec.sigma_bins,
        }),
    )?;
    eprintln!(
        "swept {} cells -> {}",
        ppp_grid.len() * sbr_grid.len(),
        args.out.display()
    );
    Ok(())
}
