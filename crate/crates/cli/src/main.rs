use clap::{Parser, Subcommand};
use currents_cli::{run_experiment, validate_config, Experiment, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Walkers with current reservoirs: experiment runner.
///
/// Replica fan-out uses a worker pool sized by RAYON_NUM_THREADS (defaults
/// to the number of cores); results are independent of the worker count.
#[derive(Parser)]
#[command(name = "currents", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write CSVs plus a manifest.
    Run {
        /// Which experiment to run.
        #[arg(value_enum)]
        experiment: Experiment,
        /// JSON configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default `out/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a configuration and print its normalized form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ExperimentConfig::from_json(&text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => match load_config(&path) {
                    Ok(cfg) => cfg,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                },
                None => ExperimentConfig::defaults(experiment),
            };
            if cfg.experiment != experiment {
                eprintln!(
                    "error: config is for '{}' but '{}' was requested",
                    cfg.experiment.name(),
                    experiment.name()
                );
                return ExitCode::from(2);
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Err(e) = validate_config(&cfg) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
            match run_experiment(&cfg, &out_dir) {
                Ok(report) => {
                    report.print_summary();
                    println!("outputs in {}", out_dir.display());
                    if report.pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { config } => match load_config(&config).map_err(|e| e.to_string()) {
            Ok(cfg) => match validate_config(&cfg) {
                Ok(v) => {
                    for w in &v.warnings {
                        println!("[WARN] {w}");
                    }
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&v.cfg).expect("config serializes")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
