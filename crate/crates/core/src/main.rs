use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use otfs_noma::experiment::{run_experiment, summarize, write_outputs, ExperimentConfig, Scheme};

/// Monte-Carlo sweeps of OTFS-NOMA beamforming designs.
#[derive(Debug, Parser)]
#[command(name = "otfs-noma", version)]
struct Args {
    /// Experiment configuration (JSON); omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for results.csv, summary.json and timings.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Trials per grid point.
    #[arg(long)]
    trials: Option<usize>,

    /// Comma-separated schemes (sca, sdr, random).
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,

    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn load_config(args: &Args) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(schemes) = &args.schemes {
        cfg.schemes = schemes.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };

    let rows = match run_experiment(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("sweep failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = write_outputs(&args.out, &rows) {
        eprintln!("writing {}: {e}", args.out.display());
        return ExitCode::FAILURE;
    }

    println!("{:<7} {:>3} {:>6} {:>7} {:>7} {:>9} {:>8}", "scheme", "V", "sigma", "rho_dB", "trials", "mean_Rmin", "zero");
    for p in summarize(&rows) {
        println!(
            "{:<7} {:>3} {:>6} {:>7} {:>7} {:>9.4} {:>8.3}",
            p.scheme.name(),
            p.v,
            p.sigma,
            p.rho_db,
            p.trials,
            p.mean_r_min,
            p.zero_fraction
        );
    }
    ExitCode::SUCCESS
}
