use std::fs;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use squeezed_arrays_cli::config::parse_config;
use squeezed_arrays_cli::error::{CliError, ErrorReport, EXIT_CONFIG};
use squeezed_arrays_cli::run::run;

/// Runs one simulation task described by a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Path to the JSON configuration.
    config: PathBuf,
    /// Output directory; overrides `output.dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long)]
    workers: Option<NonZeroUsize>,
    /// Reject keys the task would ignore.
    #[arg(long)]
    strict: bool,
}

fn emit(report: &ErrorReport) {
    let json = serde_json::to_string(report)
        .unwrap_or_else(|_| format!("{{\"message\":{:?}}}", report.message));
    eprintln!("{json}");
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("reading {}", args.config.display()), e))?;
    let parsed = parse_config(&text, args.strict)?;
    for key in &parsed.ignored {
        eprintln!("warning: ignoring unused key `{key}`");
    }
    let out = args
        .out
        .clone()
        .or_else(|| parsed.config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    run(&parsed.config, &out, args.workers.map(NonZeroUsize::get))?;
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit(&ErrorReport {
                kind: "usage",
                message: e.to_string().trim_end().to_string(),
                key: None,
                line: None,
                column: None,
                alpha_bar_minus: None,
            });
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit(&e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
