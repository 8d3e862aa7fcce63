//! CSV and JSON writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, OUT_DIR_ENV};
use crate::error::{BenchError, Result};
use crate::run::{SweepRecord, SweepSummary};

pub const CSV_HEADER: &str = "beta,gamma,p,q,seed,solver,v_s0,k1,k2,wall_time_s,iterations,linear_solves";

/// Formats like C's `%.9g`: 9 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-4, 1e9)`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One output line: a record restricted to one solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub solver: &'static str,
    pub v_s0: f64,
    pub k1: Option<i32>,
    pub k2: Option<i32>,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub linear_solves: usize,
}

pub fn rows(records: &[SweepRecord]) -> Vec<Row> {
    records
        .iter()
        .flat_map(|r| {
            r.outcomes.iter().map(move |o| Row {
                beta: r.beta,
                gamma: r.gamma,
                p: r.p,
                q: r.q,
                seed: r.seed,
                solver: o.solver.name(),
                v_s0: o.v_s0,
                k1: o.thresholds.map(|t| t.0),
                k2: o.thresholds.map(|t| t.1),
                wall_time_s: o.wall_time_s,
                iterations: o.iterations,
                linear_solves: o.linear_solves,
            })
        })
        .collect()
}

pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let opt = |k: Option<i32>| k.map(|k| k.to_string()).unwrap_or_default();
    for r in rows(records) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig9(r.beta),
            fmt_sig9(r.gamma),
            fmt_sig9(r.p),
            fmt_sig9(r.q),
            r.seed,
            r.solver,
            fmt_sig9(r.v_s0),
            opt(r.k1),
            opt(r.k2),
            fmt_sig9(r.wall_time_s),
            r.iterations,
            r.linear_solves
        ));
    }
    out
}

/// JSON array of the CSV rows, with floats rounded to the same 9 digits.
pub fn to_json(records: &[SweepRecord]) -> String {
    let round = |x: f64| fmt_sig9(x).parse::<f64>().unwrap_or(x);
    let rows: Vec<Row> = rows(records)
        .into_iter()
        .map(|r| Row {
            beta: round(r.beta),
            gamma: round(r.gamma),
            p: round(r.p),
            q: round(r.q),
            v_s0: round(r.v_s0),
            wall_time_s: round(r.wall_time_s),
            ..r
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn summary_csv(summary: &SweepSummary) -> String {
    let mut out = String::from(
        "gamma,beta,solver,instances,mean_v_s0,mean_wall_time_s,mean_iterations,mean_linear_solves,time_ratio_vs_threshold,timing\n",
    );
    for r in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig9(r.gamma),
            fmt_sig9(r.beta),
            r.solver.name(),
            r.instances,
            fmt_sig9(r.mean_v_s0),
            fmt_sig9(r.mean_wall_time_s),
            fmt_sig9(r.mean_iterations),
            fmt_sig9(r.mean_linear_solves),
            r.time_ratio.map(fmt_sig9).unwrap_or_default(),
            summary.meta.timing_label()
        ));
    }
    out
}

/// Relative paths are taken against `$MIGBENCH_OUT_DIR` when it is set.
pub fn resolve_output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes `text` to `dest`, or to standard output when `dest` is `None`.
pub fn write_text(text: &str, dest: Option<&Path>) -> Result<()> {
    match dest {
        Some(path) => {
            let path = resolve_output_path(path);
            std::fs::write(&path, text).map_err(|source| BenchError::Io { path, source })
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| BenchError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

pub fn emit_results(records: &[SweepRecord], format: OutputFormat, dest: Option<&Path>) -> Result<()> {
    if records.is_empty() {
        return Err(BenchError::Usage("no records to write".into()));
    }
    let text = match format {
        OutputFormat::Csv => to_csv(records),
        OutputFormat::Json => to_json(records),
    };
    write_text(&text, dest)
}
