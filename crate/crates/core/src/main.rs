use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use privcsb::error::{Error, Result};
use privcsb::harness::output::{csv_string, read_csv, rows_from_results, summary_json};
use privcsb::harness::{emit_results, run, run_sweep, summarize, Format, RunConfig, SweepConfig};

#[derive(Parser)]
#[command(
    name = "privcsb",
    version,
    about = "Private combinatorial semi-bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its regret curve.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when omitted and the config names none.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noiseless: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run a parameter grid; writes results.csv and summary.json into --out.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the grid's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noiseless: bool,
        /// Extra format for the results file next to summary.json.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Summarize a results directory (or CSV file) as JSON.
    Analyze {
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| io_err(p, e))?;
            f.write_all(text.as_bytes()).map_err(|e| io_err(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn io_err(p: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: p.to_path_buf(),
        source: e,
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            noiseless,
            format,
        } => {
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.noiseless |= noiseless;
            let out = out.or_else(|| cfg.output.clone());
            let result = run(&cfg)?;
            info!(
                "{} on {}: final regret {} in {:.2}s",
                cfg.algorithm,
                result.instance,
                result.final_regret(),
                result.wall_clock_secs
            );
            match (out, format) {
                (Some(p), f) => emit_results(std::slice::from_ref(&result), f, &p),
                (None, Format::Csv) => {
                    write_text(None, &csv_string(&rows_from_results(&[result]))?)
                }
                (None, Format::Json) => write_text(
                    None,
                    &summary_json(&summarize(&rows_from_results(&[result]))),
                ),
            }
        }
        Command::Sweep {
            config,
            out,
            seed,
            noiseless,
            format,
        } => {
            let mut sweep = SweepConfig::from_path(&config)?;
            if let Some(s) = seed {
                sweep.grid.master_seed = s;
            }
            sweep.base.noiseless |= noiseless;
            fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            let outcome = run_sweep(&sweep.base, &sweep.grid)?;
            for f in &outcome.failures {
                warn!("cell {} failed: {}", f.run_id, f.message);
            }
            emit_results(&outcome.results, Format::Csv, &out.join("results.csv"))?;
            emit_results(&outcome.results, Format::Json, &out.join("summary.json"))?;
            if format == Format::Json {
                let full =
                    serde_json::to_string_pretty(&outcome.results).expect("results serialize");
                write_text(Some(&out.join("runs.json")), &full)?;
            }
            if !outcome.failures.is_empty() {
                let text =
                    serde_json::to_string_pretty(&outcome.failures).expect("failures serialize");
                write_text(Some(&out.join("failures.json")), &text)?;
            }
            Ok(())
        }
        Command::Analyze { results, out } => {
            let path = if results.is_dir() {
                results.join("results.csv")
            } else {
                results
            };
            let file = File::open(&path).map_err(|e| io_err(&path, e))?;
            let rows = read_csv(file)?;
            write_text(out.as_deref(), &summary_json(&summarize(&rows)))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
