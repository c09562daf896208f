use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cir_core::config::{parse_override, ExperimentConfig};
use cir_core::harness::{self, RunOptions};
use cir_core::Error;

#[derive(Parser)]
#[command(name = "cirstream", version, about = "Class-incremental-with-repetition stream runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every (strategy, seed) cell of the grid and write artifacts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Continue cells from their last saved experience.
        #[arg(long)]
        resume: bool,
        /// Stop each cell after this many experiences (resumable).
        #[arg(long, value_name = "N")]
        stop_after: Option<usize>,
    },
    /// Print stream statistics without training.
    Inspect {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Directory for occurrence.csv and class_stats.csv.
        #[arg(long, value_name = "DIR")]
        csv_dir: Option<PathBuf>,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Recompute analysis tables from the checkpoints of a finished run.
    Analyze { run_dir: PathBuf },
}

#[derive(Args)]
struct Overrides {
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Policy for the bare `er` strategy.
    #[arg(long = "buffer.policy", value_name = "POLICY")]
    buffer_policy: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any config key, e.g. `--set train.lr=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn load(&self, path: &std::path::Path) -> Result<ExperimentConfig, Error> {
        let mut pairs = self
            .set
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(seed) = self.seed {
            pairs.push(("seeds".into(), toml::Value::Array(vec![toml::Value::Integer(seed as i64)])));
        }
        if let Some(p) = &self.buffer_policy {
            pairs.push(("buffer.policy".into(), toml::Value::String(p.clone())));
        }
        if let Some(out) = &self.out {
            pairs.push((
                "output_dir".into(),
                toml::Value::String(out.to_string_lossy().into_owned()),
            ));
        }
        ExperimentConfig::load(path, &pairs)
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            resume,
            stop_after,
        } => {
            let cfg = overrides.load(&config)?;
            let summary = harness::run(&cfg, &RunOptions { resume, stop_after })?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Inspect {
            config,
            overrides,
            csv_dir,
            json,
        } => {
            let cfg = overrides.load(&config)?;
            let report = harness::inspect(&cfg, None, csv_dir.as_deref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
        }
        Command::Analyze { run_dir } => {
            let n = harness::analyze(&run_dir)?;
            println!("analysed {n} cells");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
