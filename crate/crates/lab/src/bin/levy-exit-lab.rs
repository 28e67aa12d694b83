use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use levy_exit_lab::run::{EXIT_INVALID_SPEC, EXIT_OK};
use levy_exit_lab::{execute, plotdata, Report, RunOptions, RunSpec};

#[derive(Parser)]
#[command(
    name = "levy-exit-lab",
    version,
    about = "Exit times and potential theory of isotropic unimodal Lévy processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run specification and write the report.
    Run {
        spec: PathBuf,
        /// Master seed (overrides the spec).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "LEVY_EXIT_LAB_THREADS", default_value_t = 0)]
        threads: usize,
        /// Output directory (overrides the spec).
        #[arg(long, env = "LEVY_EXIT_LAB_OUT_DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Extract a long-format CSV series from a report.
    Plotdata {
        report: PathBuf,
        #[arg(long)]
        series: String,
        /// Check name for the `ratio` series.
        #[arg(long)]
        check: Option<String>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            spec,
            seed,
            threads,
            out_dir,
        } => {
            let spec = match RunSpec::from_path(&spec) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID_SPEC as u8);
                }
            };
            let opts = RunOptions { seed, threads, out_dir };
            match execute(&spec, &opts) {
                Ok(outcome) => {
                    print!("{}", outcome.report.summary());
                    println!("artifacts: {}", outcome.out_dir.display());
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_INVALID_SPEC as u8)
                }
            }
        }
        Command::Plotdata {
            report,
            series,
            check,
            out,
        } => match plot(&report, &series, check.as_deref(), out.as_deref()) {
            Ok(()) => ExitCode::from(EXIT_OK as u8),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn plot(
    report: &std::path::Path,
    series: &str,
    check: Option<&str>,
    out: Option<&std::path::Path>,
) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let report = Report::from_json(&text).context("parsing report")?;
    let bytes = plotdata::series(&report, series, check)?;
    match out {
        Some(p) => levy_exit_lab::io::write_atomic(p, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(())
}
