use std::process::ExitCode;

use clap::Parser;
use migration_bench::commands::{oracle_report, simulate_report, solve_report};
use migration_bench::config::{resolve, Cli};
use migration_bench::output::{summary_csv, write_text};
use migration_bench::{emit_results, run_beta_sweep, run_compare, BenchError, Invocation, Result};

fn run() -> Result<bool> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(true);
        }
        Err(e) => return Err(BenchError::Usage(e.render().to_string())),
    };
    let file = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|source| BenchError::Usage(format!(
            "--config {}: {source}",
            path.display()
        )))?),
        None => None,
    };
    match resolve(cli.command, file.as_deref())? {
        Invocation::Solve(cfg) => {
            print!("{}", solve_report(&cfg)?);
            Ok(true)
        }
        Invocation::Compare(cfg) => {
            let (records, meta) = run_compare(&cfg)?;
            if meta.contended() {
                eprintln!("note: {} workers, wall times are contended", meta.jobs);
            }
            emit_results(&records, cfg.format, cfg.out.as_deref())?;
            Ok(true)
        }
        Invocation::Sweep(cfg) => {
            let (records, summary) = run_beta_sweep(&cfg)?;
            emit_results(&records, cfg.format, cfg.out.as_deref())?;
            let table = summary_csv(&summary);
            match &cfg.summary {
                Some(path) => write_text(&table, Some(path))?,
                None => eprint!("{table}"),
            }
            Ok(true)
        }
        Invocation::Simulate(cfg) => {
            let (text, agrees) = simulate_report(&cfg)?;
            print!("{text}");
            Ok(agrees)
        }
        Invocation::OracleCheck(cfg) => {
            let (text, ok) = oracle_report(&cfg)?;
            print!("{text}");
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("migbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
