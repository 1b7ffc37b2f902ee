//! `spadsr eval`: RMSE/ADE against ground truth plus measured noise levels.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use spadsr_core::{pfm, spdt, HistogramCube};
use spadsr_pipeline::features::{estimate_background, find_peak, PeakMethod};
use spadsr_pipeline::metrics::{ade, measure_noise, rmse};

use crate::config::{resolve, FileConfig};

pub const CSV_HEADER: &str = "scene,method,rmse,ade,sbr,ppp,runtime_ms";

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Output directory (rows append to eval.csv).
    #[arg(long)]
    out: PathBuf,
    /// Predicted depth (PFM).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth depth (PFM).
    #[arg(long)]
    gt: PathBuf,
    /// Histogram cube for SBR/ppp measurement (optional).
    #[arg(long)]
    cube: Option<PathBuf>,
    /// Scene label for the CSV row.
    #[arg(long)]
    scene: Option<String>,
    /// Method label for the CSV row.
    #[arg(long)]
    method: Option<String>,
    /// Reconstruction runtime to record (milliseconds).
    #[arg(long)]
    runtime_ms: Option<f64>,
    /// Peak finder for the noise measurement: argmax | matched.
    #[arg(long)]
    peak_method: Option<String>,
    /// IRF width in bins for the matched filter.
    #[arg(long)]
    sigma_bins: Option<f64>,
}

pub fn run(args: Args, cfg: &FileConfig) -> Result<()> {
    let pred = pfm::read_depth(&args.pred)
        .with_context(|| format!("reading prediction {}", args.pred.display()))?;
    let gt = pfm::read_depth(&args.gt)
        .with_context(|| format!("reading ground truth {}", args.gt.display()))?;
    let rmse_v = rmse(&pred, &gt)?;
    let (_, ade_v) = ade(&pred, &gt)?;

    let (sbr_s, ppp_s) = match &args.cube {
        Some(path) => {
            let (dims, counts) = spdt::read_u32(path)?;
            if dims.len() != 3 {
                bail!("histogram cube must be 3-D, got {dims:?}");
            }
            let cube = HistogramCube::new(
                ndarray::Array3::from_shape_vec((dims[0], dims[1], dims[2]), counts)?,
                1.0,
            )?;
            let sigma = resolve(
                args.sigma_bins,
                cfg.f64("sigma_bins"),
                spadsr_core::noise::DEFAULT_SIGMA_BINS,
            );
            let method = match args
                .peak_method
                .clone()
                .or_else(|| cfg.string("peak_method"))
                .unwrap_or_else(|| "argmax".into())
                .as_str()
            {
                "argmax" => PeakMethod::Argmax,
                "matched" => PeakMethod::MatchedFilter,
                other => bail!("unknown peak method {other:?}"),
            };
            let background = estimate_background(&cube);
            let peaks = find_peak(&cube, method, sigma);
            let stats = measure_noise(&cube, &background, &peaks);
            if stats.excluded_pixels > 0 {
                eprintln!(
                    "warning: {} pixels with zero background excluded from the SBR average",
                    stats.excluded_pixels
                );
            }
            let sbr_s = if stats.sbr.is_finite() {
                format!("{:.6}", stats.sbr)
            } else {
                "inf".into()
            };
            (sbr_s, format!("{:.6}", stats.ppp))
        }
        None => (String::new(), String::new()),
    };

    let scene = args.scene.clone().unwrap_or_else(|| {
        args.pred
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scene".into())
    });
    let method = args.method.clone().unwrap_or_else(|| "unknown".into());
    let runtime_s = args
        .runtime_ms
        .or_else(|| cfg.f64("runtime_ms"))
        .map(|v| format!("{v:.3}"))
        .unwrap_or_default();

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join("eval.csv");
    let need_header = !csv_path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&csv_path)?;
    if need_header {
        writeln!(file, "{CSV_HEADER}")?;
    }
    let row = format!("{scene},{method},{rmse_v:.6},{ade_v:.6},{sbr_s},{ppp_s},{runtime_s}");
    writeln!(file, "{row}")?;
    println!("{row}");
    Ok(())
}
