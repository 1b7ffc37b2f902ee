//! Command-line driver: simulate measurements, extract features,
//! reconstruct depth, train and run the network, evaluate, and sweep noise
//! grids.
//!
//! Every flag can also come from a flat JSON config file (`--config`);
//! explicit flags win. The merged effective configuration is echoed into
//! each command's output manifest. All commands are deterministic given
//! `--seed`.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "spadsr",
    about = "Single-photon lidar depth super-resolution toolkit",
    version
)]
struct Cli {
    /// Flat JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Worker threads for per-scene parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a SPAD measurement from ground truth or a synthetic scene.
    Simulate(commands::simulate::Args),
    /// Extract the network input features from a measurement.
    Features(commands::features::Args),
    /// Reconstruct a depth map (nn | guided | histnet).
    Reconstruct(commands::reconstruct::Args),
    /// Train the network on simulated patches.
    Train(commands::train::Args),
    /// Run a trained network on a measurement.
    Infer(commands::infer::Args),
    /// Evaluate a reconstruction against ground truth.
    Eval(commands::eval::Args),
    /// RMSE grid over noise levels with a fixed checkpoint.
    Sweep(commands::sweep::Args),
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Thread count affects scheduling only; results are fixed.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let cfg = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args, &cfg),
        Command::Features(args) => commands::features::run(args, &cfg),
        Command::Reconstruct(args) => commands::reconstruct::run(args, &cfg),
        Command::Train(args) => commands::train::run(args, &cfg),
        Command::Infer(args) => commands::infer::run(args, &cfg),
        Command::Eval(args) => commands::eval::run(args, &cfg),
        Command::Sweep(args) => commands::sweep::run(args, &cfg),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
