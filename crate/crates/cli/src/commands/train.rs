//! `spadsr train`

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde_json::json;
use spadsr_core::{pfm, pgm};
use spadsr_histnet::{checkpoint, train, HistNet, Sample, TrainConfig};
use spadsr_pipeline::features::build_features;
use spadsr_pipeline::simulator::{augment, crop_measurement, simulate, ScenePair};
use spadsr_pipeline::synth::{make_scene, SceneKind};

use super::{peak_method_name, write_manifest, FeatureArgs, NoiseArgs};
use crate::config::{resolve, FileConfig};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Output directory (checkpoint + loss curve).
    #[arg(long)]
    out: PathBuf,
    /// Directory of ground-truth scenes: NAME.pfm + NAME.pgm pairs.
    #[arg(long)]
    scenes: Option<PathBuf>,
    /// Number of synthetic scenes when no directory is given.
    #[arg(long)]
    synthetic_count: Option<usize>,
    /// Synthetic scene kind (ramp | steps | blobs).
    #[arg(long)]
    synthetic: Option<String>,
    /// Synthetic scene dims.
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Number of time bins.
    #[arg(long)]
    bins: Option<usize>,
    #[command(flatten)]
    feat: FeatureArgs,
    /// Training patch size (divisible by 16 and by the factor).
    #[arg(long)]
    patch_size: Option<usize>,
    /// Patch stride.
    #[arg(long)]
    stride: Option<usize>,
    /// Eight-fold rotation/flip augmentation.
    #[arg(long)]
    augment: Option<bool>,
    /// Filter-count multiplier in (0, 1].
    #[arg(long)]
    width_scale: Option<f64>,
    /// Optimizer steps (overrides --epochs).
    #[arg(long)]
    steps: Option<usize>,
    /// Passes over the patch set when --steps is absent.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    l1_reg: Option<f64>,
    #[arg(long)]
    accumulator_init: Option<f64>,
}

fn load_scene_dir(dir: &PathBuf) -> Result<Vec<(ScenePair, String)>> {
    let mut stems: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("pfm") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    if stems.is_empty() {
        bail!("no .pfm scenes found in {}", dir.display());
    }
    let mut scenes = Vec::with_capacity(stems.len());
    for stem in stems {
        let depth = pfm::read_depth(&dir.join(format!("{stem}.pfm")))?;
        let intensity = pgm::read_intensity(&dir.join(format!("{stem}.pgm")))
            .with_context(|| format!("intensity for scene {stem}"))?;
        scenes.push((ScenePair::new(depth, intensity)?, stem));
    }
    Ok(scenes)
}

pub fn run(args: Args, cfg: &FileConfig) -> Result<()> {
    let spec = args.noise.resolve(cfg)?;
    let bins = resolve(args.bins, cfg.usize("bins"), 16);
    let factor = args.feat.factor(cfg);
    let pc = args.feat.resolve(cfg, spec.sigma_bins)?;
    let patch_size = resolve(args.patch_size, cfg.usize("patch_size"), 96);
    let stride = resolve(args.stride, cfg.usize("stride"), 48);
    let use_augment = resolve(args.augment, cfg.bool("augment"), true);
    let width_scale = resolve(args.width_scale, cfg.f64("width_scale"), 0.25);

    if patch_size % 16 != 0 || patch_size % factor != 0 {
        bail!("patch size {patch_size} must divide by 16 and by the factor {factor}");
    }
    if stride % factor != 0 {
        bail!("stride {stride} must divide by the factor {factor}");
    }

    // Assemble ground-truth scenes.
    let scenes: Vec<(ScenePair, String)> = match &args.scenes {
        Some(dir) => load_scene_dir(dir)?,
        None => {
            let count = resolve(args.synthetic_count, cfg.usize("synthetic_count"), 3);
            let kind_name = args
                .synthetic
                .clone()
                .or_else(|| cfg.string("synthetic"))
                .unwrap_or_else(|| "blobs".into());
            let kind: SceneKind = kind_name.parse().map_err(anyhow::Error::msg)?;
            let h = resolve(args.height, cfg.usize("height"), 96);
            let w = resolve(args.width, cfg.usize("width"), 96);
            (0..count)
                .map(|i| {
                    (
                        make_scene(kind, h, w, spec.seed.wrapping_add(i as u64)),
                        format!("{kind_name}-{i}"),
                    )
                })
                .collect()
        }
    };

    // Scene -> (augmented) variants -> one simulated measurement each ->
    // aligned patches -> feature sets.
    let mut samples: Vec<Sample> = Vec::new();
    for (scene_idx, (scene, _)) in scenes.iter().enumerate() {
        let variants = if use_augment {
            augment(scene)
        } else {
            vec![scene.clone()]
        };
        for (variant_idx, variant) in variants.iter().enumerate() {
            let mut vspec = spec;
            vspec.seed = spec
                .seed
                .wrapping_add((scene_idx * 131 + variant_idx) as u64);
            let measurement = simulate(variant, bins, &vspec, factor)?;
            let (vh, vw) = variant.dims();
            if patch_size > vh || patch_size > vw {
                bail!("patch size {patch_size} exceeds scene dims {vh}x{vw}");
            }
            let mut i = 0;
            while i + patch_size <= vh {
                let mut j = 0;
                while j + patch_size <= vw {
                    let window = crop_measurement(
                        &measurement,
                        i / factor,
                        j / factor,
                        patch_size / factor,
                        patch_size / factor,
                    )?;
                    let features = build_features(&window, &pc)?;
                    let gt = spadsr_core::DepthMap::new(
                        variant
                            .depth
                            .values()
                            .slice(ndarray::s![i..i + patch_size, j..j + patch_size])
                            .to_owned(),
                        variant
                            .depth
                            .valid()
                            .slice(ndarray::s![i..i + patch_size, j..j + patch_size])
                            .to_owned(),
                    )?;
                    samples.push(Sample::new(&features, &gt)?);
                    j += stride;
                }
                i += stride;
            }
        }
    }

    let train_cfg = TrainConfig {
        batch_size: resolve(args.batch_size, cfg.usize("batch_size"), 64),
        learning_rate: resolve(args.lr, cfg.f64("lr"), 0.1),
        epochs: resolve(args.epochs, cfg.usize("epochs"), 2000),
        steps: args.steps.or_else(|| cfg.usize("steps")),
        l1_reg: resolve(args.l1_reg, cfg.f64("l1_reg"), 0.0),
        accumulator_init: resolve(args.accumulator_init, cfg.f64("accumulator_init"), 0.1),
        seed: spec.seed,
    };

    eprintln!(
        "training width_scale {width_scale} on {} patches ({} scenes)",
        samples.len(),
        scenes.len()
    );
    let mut net = HistNet::new(width_scale, spec.seed);
    let curve = train(&mut net, &samples, &train_cfg)?;

    std::fs::create_dir_all(&args.out)?;
    checkpoint::save(&args.out.join("checkpoint"), &net, curve.len())?;
    let mut csv = String::from("step,loss\n");
    for (step, loss) in &curve {
        csv.push_str(&format!("{step},{loss:.9}\n"));
    }
    std::fs::write(args.out.join("loss.csv"), csv)?;

    write_manifest(
        &args.out.join("manifest.json"),
        &json!({
            "command": "train",
            "scenes": scenes.iter().map(|(_, n)| n.clone()).collect::<Vec<_>>(),
            "patches": samples.len(),
            "bins": bins,
            "factor": factor,
            "patch_size": patch_size,
            "stride": stride,
            "augment": use_augment,
            "ppp": spec.ppp,
            "sbr": spec.sbr,
            "sigma_bins": spec.sigma_bins,
            "seed": spec.seed,
            "level": pc.level,
            "second_depth": pc.second_depth_enabled,
            "peak_method": peak_method_name(pc.peak_method),
            "crop_enabled": pc.crop_enabled,
            "width_scale": width_scale,
            "batch_size": train_cfg.batch_size,
            "lr": train_cfg.learning_rate,
            "steps": curve.len(),
            "l1_reg": train_cfg.l1_reg,
            "accumulator_init": train_cfg.accumulator_init,
            "final_loss": curve.last().map(|&(_, l)| l),
        }),
    )?;
    eprintln!(
        "trained {} steps, final loss {:.6} -> {}",
        curve.len(),
        curve.last().map(|&(_, l)| l).unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}
