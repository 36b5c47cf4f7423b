//! `ginprod`: run the Monte Carlo experiments and analytic evaluations and
//! write their results as CSV or JSON.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 usage or validation error,
//! 3 numerical failure.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use ginprod::montecarlo::Engine;

use commands::{CliError, Command};
use output::{Format, Manifest};

#[derive(Parser, Debug)]
#[command(name = "ginprod", version, about = "Real eigenvalues of products of real Ginibre matrices")]
struct Cli {
    /// Master seed; trial t of a run uses stream t of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Never changes the output.
    #[arg(long, global = true, env = "GINPROD_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (default: stdout). A `<out>.manifest.json` sidecar is
    /// written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let engine = Engine::new(cli.threads)?;
    let report = cli.command.run(&engine, cli.seed)?;

    let mut manifest = Manifest::new(cli.command.name(), cli.seed, report.config);
    manifest.failures = report.failures;
    let body = output::render(cli.format, &manifest, &report.tables);
    let seconds = start.elapsed().as_secs_f64();

    match &cli.out {
        Some(path) => {
            std::fs::write(path, body)?;
            output::write_sidecar(path, &manifest, engine.workers(), seconds)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            eprintln!(
                "ginprod {}: {} seed={} workers={} failures={} {:.3}s",
                manifest.tool_version,
                manifest.subcommand,
                manifest.master_seed,
                engine.workers(),
                manifest.failures,
                seconds
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ginprod: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
