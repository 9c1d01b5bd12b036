use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use sidewalk_cli::{evaluate, run, RunConfig};
use sidewalk_core::mission::Strategy;

#[derive(Parser)]
#[command(
    name = "sidewalk",
    version,
    about = "Sidewalk navigation scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run robot and pedestrian trials of a scenario and write all artifacts.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory (default: out/<scenario file stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parameter override, e.g. curb.alpha=4.0 or robot.v_max=0.6.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// auto, surf or curb.
        #[arg(long, default_value = "auto")]
        mode: Strategy,
    },
    /// Recompute path metrics from the trace files in a run directory.
    Evaluate {
        dir: PathBuf,
        /// Arc-length sampling of the traces (m).
        #[arg(long, default_value_t = 0.1)]
        spacing: f64,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            trials,
            seed,
            out,
            overrides,
            mode,
        } => {
            let stem = scenario
                .file_stem()
                .map(PathBuf::from)
                .unwrap_or_else(|| "run".into());
            let config = RunConfig {
                out: out.unwrap_or_else(|| PathBuf::from("out").join(stem)),
                scenario,
                trials,
                seed,
                strategy: mode,
                overrides,
            };
            let report = run(&config)?;
            print!("{}", sidewalk_cli::report_text(&config, &report));
            if let Err(e) = &report.shortest {
                for t in &report.trials {
                    eprintln!("trial {}: {e}", t.trial);
                }
            }
            println!("artifacts written to {}", config.out.display());
            Ok(if report.all_complete() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Evaluate { dir, spacing } => {
            print!("{}", evaluate(&dir, spacing)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
