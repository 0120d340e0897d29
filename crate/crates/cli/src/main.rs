//! Experiment runner for variance-profile random matrix studies.
//!
//! Exit codes: 0 success, 1 runtime or invariant failure, 2 malformed
//! config or usage error.

mod config;
mod presets;
mod runner;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use runner::Runner;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "varprof", version, about = "Variance-profile random matrix experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config file.
    Run {
        /// Path to the config file.
        config: String,
        /// Override the output directory.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a named preset experiment.
    Preset {
        /// Preset name; see `list-presets`.
        name: String,
        /// Override the profile size.
        #[arg(long)]
        n: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the preset name).
        #[arg(long)]
        out: Option<String>,
    },
    /// List the available presets.
    ListPresets,
    /// Fit the empirical norm-budget scale on a Gaussian all-ones baseline.
    /// The fitted value is a measured quantile, not a derived constant.
    CalibrateKcal {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        quantile: f64,
    },
}

fn init_workers(config_workers: usize) {
    let workers = std::env::var("VARPROF_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(config_workers);
    if workers > 0 {
        // best effort: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

fn execute(cfg: ExperimentConfig) -> ExitCode {
    init_workers(cfg.workers);
    let runner = match Runner::new(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match runner.run() {
        Ok(()) => {
            println!("artifacts written to {}", runner.out_dir().display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {config}: {e}");
                    return ExitCode::from(2);
                }
            };
            let mut cfg = match ExperimentConfig::from_toml(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            if let Some(out) = out {
                cfg.out_dir = Some(out);
            }
            // validate the law and ensemble eagerly for a clean exit code
            if let Err(e) = cfg.ensemble.build(cfg.seed) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            execute(cfg)
        }
        Command::Preset { name, n, seed, out } => {
            let Some(mut cfg) = presets::find(&name) else {
                eprintln!("error: unknown preset '{name}'; see `varprof list-presets`");
                return ExitCode::from(2);
            };
            if let Some(n) = n {
                cfg.profile.n = n;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.out_dir = Some(out.unwrap_or_else(|| name.clone()));
            execute(cfg)
        }
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{:<16} {}", p.name, p.summary);
            }
            ExitCode::SUCCESS
        }
        Command::CalibrateKcal {
            n,
            trials,
            seed,
            quantile,
        } => match varprof::bounds::calibrate_kcal(n, trials, seed, quantile) {
            Ok(k_cal) => {
                println!(
                    "{}",
                    serde_json::json!({
                        "k_cal": k_cal,
                        "n": n,
                        "trials": trials,
                        "seed": seed,
                        "quantile": quantile,
                        "version": varprof::VERSION,
                        "note": "empirical quantile of ||A.X|| / budget on the all-ones Gaussian baseline",
                    })
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
