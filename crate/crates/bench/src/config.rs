//! Command-line and config-file handling.
//!
//! Every flag may also be given in a config file (`--config PATH`), either as
//! `key = value` lines or as a flat JSON object, using the long flag name as
//! key (`min-state`, `betas`, ...). Flags on the command line win over the
//! file; built-in defaults fill the rest.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use migration_mdp::{MigrationMdp, ThresholdPair};

use crate::error::{BenchError, Result};
use crate::instance::InstanceRule;

/// Environment variable naming the directory that relative `--out` and
/// `--summary` paths are resolved against.
pub const OUT_DIR_ENV: &str = "MIGBENCH_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "migbench", version, about = "Service-migration MDP solvers and benchmarks")]
pub struct Cli {
    /// Config file with default flag values (key=value lines or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and print thresholds and values.
    Solve(SolveFlags),
    /// Run every selected solver on random instances.
    Compare(ExperimentFlags),
    /// Like `compare`, over a list of transmission costs, with a summary table.
    Sweep(ExperimentFlags),
    /// Monte-Carlo check of a policy's discounted cost.
    Simulate(SimulateFlags),
    /// Cross-check solvers against brute-force oracles.
    OracleCheck(OracleFlags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct InstanceFlags {
    /// Probability the offset moves up each slot.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Probability the offset moves down each slot.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Most negative offset M (forced migration).
    #[arg(short = 'M', long = "min-state", allow_hyphen_values = true)]
    pub min_state: Option<String>,
    /// Most positive offset N (forced migration).
    #[arg(short = 'N', long = "max-state", allow_hyphen_values = true)]
    pub max_state: Option<String>,
    /// Per-slot transmission cost.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Discount factor.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveFlags {
    #[command(flatten)]
    pub instance: InstanceFlags,
    /// Value-iteration tolerance reported alongside the exact solution.
    #[arg(long)]
    pub epsilon: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentFlags {
    #[arg(short = 'M', long = "min-state", allow_hyphen_values = true)]
    pub min_state: Option<String>,
    #[arg(short = 'N', long = "max-state", allow_hyphen_values = true)]
    pub max_state: Option<String>,
    /// Discount factors, comma separated.
    #[arg(long, alias = "gammas")]
    pub gamma: Option<String>,
    /// Transmission costs: a comma list and/or `start:step:stop` ranges.
    #[arg(long, alias = "beta")]
    pub betas: Option<String>,
    /// Value-iteration tolerance.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Number of random instances per (gamma, beta).
    #[arg(long)]
    pub instances: Option<String>,
    /// Master seed; instance i uses seed + i.
    #[arg(long)]
    pub seed: Option<String>,
    /// How (p, q) is drawn.
    #[arg(long)]
    pub rule: Option<String>,
    /// Solvers to run: threshold, vi, pi, never, always.
    #[arg(long)]
    pub solvers: Option<String>,
    /// State whose value is reported.
    #[arg(long, allow_hyphen_values = true)]
    pub s0: Option<String>,
    /// Starting policy for policy iteration: always or never.
    #[arg(long = "pi-start")]
    pub pi_start: Option<String>,
    /// Worker threads; timings are flagged as contended when above 1.
    #[arg(long)]
    pub jobs: Option<String>,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<String>,
    /// Summary table file (sweep only; default: standard error).
    #[arg(long)]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateFlags {
    #[command(flatten)]
    pub instance: InstanceFlags,
    /// never, always, threshold:K1,K2 or optimal.
    #[arg(long, allow_hyphen_values = true)]
    pub policy: Option<String>,
    #[arg(long)]
    pub runs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s0: Option<String>,
    /// Bound on the truncated tail of each trajectory.
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleFlags {
    #[arg(short = 'M', long = "min-state", allow_hyphen_values = true)]
    pub min_state: Option<String>,
    #[arg(short = 'N', long = "max-state", allow_hyphen_values = true)]
    pub max_state: Option<String>,
    #[arg(long)]
    pub instances: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Threshold,
    ValueIteration,
    PolicyIteration,
    NeverMigrate,
    AlwaysMigrate,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Threshold,
        SolverKind::ValueIteration,
        SolverKind::PolicyIteration,
        SolverKind::NeverMigrate,
        SolverKind::AlwaysMigrate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Threshold => "threshold",
            SolverKind::ValueIteration => "vi",
            SolverKind::PolicyIteration => "pi",
            SolverKind::NeverMigrate => "never",
            SolverKind::AlwaysMigrate => "always",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the solver's value is exact (as opposed to within epsilon).
    pub fn is_exact_optimizer(&self) -> bool {
        matches!(self, SolverKind::Threshold | SolverKind::PolicyIteration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiStart {
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub min_state: i32,
    pub max_state: i32,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub epsilon: f64,
    pub instances: usize,
    pub master_seed: u64,
    pub rule: InstanceRule,
    pub solvers: Vec<SolverKind>,
    pub s0: i32,
    pub pi_start: PiStart,
    pub jobs: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults of the reference experiment: `M = -10`, `N = 10`,
    /// `epsilon = 0.1`, 1000 instances, all solvers.
    pub fn reference(gammas: Vec<f64>, betas: Vec<f64>) -> Self {
        Self {
            min_state: -10,
            max_state: 10,
            gammas,
            betas,
            epsilon: 0.1,
            instances: 1000,
            master_seed: 0,
            rule: InstanceRule::UniformSimplex,
            solvers: SolverKind::ALL.to_vec(),
            s0: 0,
            pi_start: PiStart::Always,
            jobs: 1,
            format: OutputFormat::Csv,
            out: None,
            summary: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(usage("--instances must be at least 1"));
        }
        if self.solvers.is_empty() {
            return Err(usage("--solvers selects no solver"));
        }
        if self.gammas.is_empty() {
            return Err(usage("--gamma is empty"));
        }
        if self.betas.is_empty() {
            return Err(usage("--betas is empty"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(usage("--epsilon must be positive"));
        }
        if self.jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        for &gamma in &self.gammas {
            for &beta in &self.betas {
                MigrationMdp::new(0.0, 0.0, self.min_state, self.max_state, beta, gamma)
                    .map_err(|e| usage(format!("invalid instance parameters: {e}")))?;
            }
        }
        if !(self.min_state..=self.max_state).contains(&self.s0) {
            return Err(usage(format!(
                "--s0 {} outside [{}, {}]",
                self.s0, self.min_state, self.max_state
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub mdp: MigrationMdp,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyChoice {
    Never,
    Always,
    Threshold(ThresholdPair),
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub mdp: MigrationMdp,
    pub policy: PolicyChoice,
    pub runs: usize,
    pub s0: i32,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub min_state: i32,
    pub max_state: i32,
    pub instances: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Solve(SolveConfig),
    Compare(ExperimentConfig),
    Sweep(ExperimentConfig),
    Simulate(SimulateConfig),
    OracleCheck(OracleConfig),
}

fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}

/// Parses command-line arguments (including the program name) with an
/// optional config file's contents.
pub fn parse_config<I, T>(args: I, file: Option<&str>) -> Result<Invocation>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| usage(e.to_string()))?;
    resolve(cli.command, file)
}

/// Merges parsed flags with config-file values and defaults.
pub fn resolve(command: Command, file: Option<&str>) -> Result<Invocation> {
    let file = match file {
        Some(text) => parse_file(text)?,
        None => BTreeMap::new(),
    };
    let src = Source { file: &file };
    match command {
        Command::Solve(f) => Ok(Invocation::Solve(SolveConfig {
            mdp: src.instance(&f.instance)?,
            epsilon: src.get(&f.epsilon, "epsilon")?.unwrap_or(0.1),
        })),
        Command::Compare(f) => {
            let gammas = src.list(&f.gamma, "gamma")?.unwrap_or_else(|| vec![0.9]);
            let betas = src.list(&f.betas, "betas")?.ok_or_else(|| usage("missing required flag --betas"))?;
            src.experiment(&f, gammas, betas).map(Invocation::Compare)
        }
        Command::Sweep(f) => {
            let gammas = src.list(&f.gamma, "gamma")?.unwrap_or_else(|| vec![0.5, 0.9, 0.99]);
            let betas = src
                .list(&f.betas, "betas")?
                .unwrap_or_else(|| vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0]);
            src.experiment(&f, gammas, betas).map(Invocation::Sweep)
        }
        Command::Simulate(f) => {
            let mdp = src.instance(&f.instance)?;
            let policy = match src.text(&f.policy, "policy") {
                Some(text) => parse_policy(&text, &mdp)?,
                None => PolicyChoice::Optimal,
            };
            let cfg = SimulateConfig {
                mdp,
                policy,
                runs: src.get(&f.runs, "runs")?.unwrap_or(100_000),
                s0: src.get(&f.s0, "s0")?.unwrap_or(0),
                tol: src.get(&f.tol, "tol")?.unwrap_or(migration_mdp::sim::DEFAULT_TRUNCATION_TOL),
                seed: src.get(&f.seed, "seed")?.unwrap_or(0),
            };
            if !mdp.contains(cfg.s0) {
                return Err(usage(format!("--s0 {} outside the state range", cfg.s0)));
            }
            if cfg.runs < 2 {
                return Err(usage("--runs must be at least 2"));
            }
            if !(cfg.tol > 0.0) {
                return Err(usage("--tol must be positive"));
            }
            Ok(Invocation::Simulate(cfg))
        }
        Command::OracleCheck(f) => {
            let cfg = OracleConfig {
                min_state: src.get(&f.min_state, "min-state")?.unwrap_or(-10),
                max_state: src.get(&f.max_state, "max-state")?.unwrap_or(10),
                instances: src.get(&f.instances, "instances")?.unwrap_or(200),
                seed: src.get(&f.seed, "seed")?.unwrap_or(0),
            };
            if cfg.min_state >= 0 || cfg.max_state <= 0 {
                return Err(usage("need -M < 0 < -N"));
            }
            if cfg.instances == 0 {
                return Err(usage("--instances must be at least 1"));
            }
            Ok(Invocation::OracleCheck(cfg))
        }
    }
}

struct Source<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Source<'_> {
    fn text(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone().or_else(|| self.file.get(key).cloned())
    }

    fn get<T: std::str::FromStr>(&self, flag: &Option<String>, key: &str) -> Result<Option<T>> {
        self.text(flag, key)
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| usage(format!("invalid value `{v}` for --{key}")))
            })
            .transpose()
    }

    fn require<T: std::str::FromStr>(&self, flag: &Option<String>, key: &str) -> Result<T> {
        self.get(flag, key)?
            .ok_or_else(|| usage(format!("missing required flag --{key}")))
    }

    fn list(&self, flag: &Option<String>, key: &str) -> Result<Option<Vec<f64>>> {
        self.text(flag, key)
            .map(|v| parse_number_list(&v).map_err(|e| usage(format!("--{key}: {e}"))))
            .transpose()
    }

    fn instance(&self, f: &InstanceFlags) -> Result<MigrationMdp> {
        let p = self.require(&f.p, "p")?;
        let q = self.require(&f.q, "q")?;
        let min = self.get(&f.min_state, "min-state")?.unwrap_or(-10);
        let max = self.get(&f.max_state, "max-state")?.unwrap_or(10);
        let beta = self.require(&f.beta, "beta")?;
        let gamma = self.require(&f.gamma, "gamma")?;
        MigrationMdp::new(p, q, min, max, beta, gamma).map_err(|e| usage(e.to_string()))
    }

    fn experiment(&self, f: &ExperimentFlags, gammas: Vec<f64>, betas: Vec<f64>) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::reference(gammas, betas);
        if let Some(v) = self.get(&f.min_state, "min-state")? {
            cfg.min_state = v;
        }
        if let Some(v) = self.get(&f.max_state, "max-state")? {
            cfg.max_state = v;
        }
        if let Some(v) = self.get(&f.epsilon, "epsilon")? {
            cfg.epsilon = v;
        }
        if let Some(v) = self.get(&f.instances, "instances")? {
            cfg.instances = v;
        }
        if let Some(v) = self.get(&f.seed, "seed")? {
            cfg.master_seed = v;
        }
        if let Some(v) = self.text(&f.rule, "rule") {
            cfg.rule = InstanceRule::parse(&v)?;
        }
        if let Some(v) = self.text(&f.solvers, "solvers") {
            cfg.solvers = parse_solvers(&v)?;
        }
        if let Some(v) = self.get(&f.s0, "s0")? {
            cfg.s0 = v;
        }
        if let Some(v) = self.text(&f.pi_start, "pi-start") {
            cfg.pi_start = match v.trim() {
                "always" => PiStart::Always,
                "never" => PiStart::Never,
                other => return Err(usage(format!("invalid value `{other}` for --pi-start"))),
            };
        }
        if let Some(v) = self.get(&f.jobs, "jobs")? {
            cfg.jobs = v;
        }
        if let Some(v) = self.text(&f.format, "format") {
            cfg.format = match v.trim() {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => return Err(usage(format!("invalid value `{other}` for --format"))),
            };
        }
        cfg.out = self.text(&f.out, "out").map(PathBuf::from);
        cfg.summary = self.text(&f.summary, "summary").map(PathBuf::from);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_solvers(text: &str) -> Result<Vec<SolverKind>> {
    let mut out = Vec::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = SolverKind::parse(name)
            .ok_or_else(|| usage(format!("unknown solver `{name}` in --solvers")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(usage("--solvers selects no solver"));
    }
    out.sort();
    Ok(out)
}

fn parse_policy(text: &str, mdp: &MigrationMdp) -> Result<PolicyChoice> {
    match text.trim() {
        "never" => Ok(PolicyChoice::Never),
        "always" => Ok(PolicyChoice::Always),
        "optimal" => Ok(PolicyChoice::Optimal),
        other => {
            let pair = other
                .strip_prefix("threshold:")
                .ok_or_else(|| usage(format!("invalid value `{other}` for --policy")))?;
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| usage("--policy threshold:K1,K2 needs two values"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<i32>()
                    .map_err(|_| usage(format!("invalid threshold `{s}` in --policy")))
            };
            ThresholdPair::new(mdp, parse(a)?, parse(b)?)
                .map(PolicyChoice::Threshold)
                .map_err(|e| usage(e.to_string()))
        }
    }
}

/// Parses `0.1,0.5,1` and `start:step:stop` (inclusive) items.
pub fn parse_number_list(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("invalid number `{s}`"));
        match parts.as_slice() {
            [single] => out.push(num(single)?),
            [start, step, stop] => {
                let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
                if !(step > 0.0) || stop < start {
                    return Err(format!("invalid range `{item}`"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                // Round away accumulated binary noise (0.30000000000000004).
                out.extend((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12));
            }
            _ => return Err(format!("invalid item `{item}`")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Reads `key = value` lines (with `#` comments) or a flat JSON object.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let trimmed = text.trim_start();
    let mut map = BTreeMap::new();
    if trimmed.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| usage(format!("config file: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| usage("config file: expected a JSON object"))?;
        for (k, v) in obj {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            map.insert(normalize_key(k), text);
        }
    } else {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config file line {}: expected key=value", n + 1)))?;
            map.insert(normalize_key(k.trim()), v.trim().to_string());
        }
    }
    Ok(map)
}

fn normalize_key(key: &str) -> String {
    match key {
        "M" => "min-state".into(),
        "N" => "max-state".into(),
        "beta" => "betas".into(),
        "gammas" => "gamma".into(),
        other => other.replace('_', "-"),
    }
}
