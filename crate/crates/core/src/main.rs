use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ewalk::config::{parse_config, serialize, Experiment, ExperimentConfig};
use ewalk::output;

/// Discrete-time quantum walks under static and harmonic phase fields.
#[derive(Parser)]
#[command(name = "ewalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; created if missing, existing files are overwritten.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for parameter sweeps (0 = all available cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Parse and validate a config file, printing it with defaults applied.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<16} {}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                print!("{}", serialize(&c));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, out, jobs } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match output::run(&cfg, &out, jobs) {
                Ok(report) => {
                    for (k, v) in &report.results {
                        println!("{k} = {v}");
                    }
                    for e in &report.errors {
                        eprintln!("error: {e}");
                    }
                    if report.success() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
