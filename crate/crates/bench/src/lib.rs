//! Benchmark harness for the service-migration solvers: random instances,
//! solver comparison, transmission-cost sweeps, and the `migbench` CLI.

pub mod commands;
pub mod config;
mod error;
pub mod instance;
pub mod output;
pub mod run;

pub use config::{parse_config, ExperimentConfig, Invocation, OutputFormat, PiStart, SolverKind};
pub use error::{BenchError, Result};
pub use instance::{random_instance, InstanceRule};
pub use output::emit_results;
pub use run::{run_beta_sweep, run_compare, RunMeta, SolverOutcome, SweepRecord, SweepSummary};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
