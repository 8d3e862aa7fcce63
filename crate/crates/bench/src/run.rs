//! Solver comparison and transmission-cost sweeps.

use std::time::Instant;

use migration_mdp::{
    always_migrate_policy, evaluate_fixed_policy, find_optimal_thresholds, never_migrate_policy,
    policy_iteration, policy_iteration_from, value_iteration, MigrationMdp,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PiStart, SolverKind};
use crate::error::{BenchError, Result};
use crate::instance::instance_params;

/// Exact solvers must agree to this on every record.
pub const EXACT_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub solver: SolverKind,
    pub v_s0: f64,
    /// Optimal `(k1, k2)`; only the threshold search reports it.
    pub thresholds: Option<(i32, i32)>,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub linear_solves: usize,
}

/// One instance at one `(beta, gamma)`, with every selected solver's result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub outcomes: Vec<SolverOutcome>,
}

impl SweepRecord {
    pub fn outcome(&self, solver: SolverKind) -> Option<&SolverOutcome> {
        self.outcomes.iter().find(|o| o.solver == solver)
    }
}

/// Timing conditions of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunMeta {
    pub jobs: usize,
}

impl RunMeta {
    /// Several workers share the machine, so wall times are not comparable
    /// to an idle run.
    pub fn contended(&self) -> bool {
        self.jobs > 1
    }

    pub fn timing_label(&self) -> &'static str {
        if self.contended() {
            "contended"
        } else {
            "idle"
        }
    }
}

fn run_solver(
    mdp: &MigrationMdp,
    solver: SolverKind,
    cfg: &ExperimentConfig,
) -> migration_mdp::Result<SolverOutcome> {
    let s0 = cfg.s0;
    let start = Instant::now();
    let (values, thresholds, iterations, linear_solves) = match solver {
        SolverKind::Threshold => {
            let r = find_optimal_thresholds(mdp)?;
            let t = (r.thresholds.lower(), r.thresholds.upper());
            (r.values, Some(t), r.outer_iterations, r.linear_solves)
        }
        SolverKind::ValueIteration => {
            let r = value_iteration(mdp, cfg.epsilon)?;
            (r.values, None, r.iterations, r.linear_solves)
        }
        SolverKind::PolicyIteration => {
            let r = match cfg.pi_start {
                PiStart::Always => policy_iteration(mdp)?,
                PiStart::Never => policy_iteration_from(mdp, never_migrate_policy(mdp))?,
            };
            (r.values, None, r.iterations, r.linear_solves)
        }
        SolverKind::NeverMigrate => (evaluate_fixed_policy(mdp, &never_migrate_policy(mdp))?, None, 0, 1),
        SolverKind::AlwaysMigrate => (evaluate_fixed_policy(mdp, &always_migrate_policy(mdp))?, None, 0, 1),
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(SolverOutcome {
        solver,
        v_s0: values.get(s0),
        thresholds,
        wall_time_s,
        iterations,
        linear_solves,
    })
}

fn solve_instance(cfg: &ExperimentConfig, gamma: f64, beta: f64, index: u64) -> Result<SweepRecord> {
    let (seed, p, q) = instance_params(cfg.rule, cfg.master_seed, index);
    let attach = |source| BenchError::Solver { seed, beta, gamma, source };
    let mdp = MigrationMdp::new(p, q, cfg.min_state, cfg.max_state, beta, gamma).map_err(attach)?;
    let outcomes = cfg
        .solvers
        .iter()
        .map(|&s| run_solver(&mdp, s, cfg).map_err(attach))
        .collect::<Result<Vec<_>>>()?;
    let record = SweepRecord { beta, gamma, p, q, seed, outcomes };
    check_consistency(&record, cfg.epsilon)?;
    Ok(record)
}

/// Exact solvers within [`EXACT_AGREEMENT`] of each other, value iteration
/// within `epsilon` of them.
pub fn check_consistency(record: &SweepRecord, epsilon: f64) -> Result<()> {
    let fail = |message: String| BenchError::Inconsistent {
        seed: record.seed,
        beta: record.beta,
        gamma: record.gamma,
        message,
    };
    let exact: Vec<&SolverOutcome> = record.outcomes.iter().filter(|o| o.solver.is_exact_optimizer()).collect();
    if let Some(first) = exact.first() {
        for o in &exact[1..] {
            if (o.v_s0 - first.v_s0).abs() > EXACT_AGREEMENT {
                return Err(fail(format!(
                    "{} gives {} but {} gives {}",
                    first.solver.name(),
                    first.v_s0,
                    o.solver.name(),
                    o.v_s0
                )));
            }
        }
        if let Some(vi) = record.outcome(SolverKind::ValueIteration) {
            if (vi.v_s0 - first.v_s0).abs() > epsilon {
                return Err(fail(format!(
                    "value iteration gives {} but {} gives {} (epsilon {epsilon})",
                    vi.v_s0,
                    first.solver.name(),
                    first.v_s0
                )));
            }
        }
    }
    Ok(())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Usage(format!("--jobs {jobs}: {e}")))
}

/// Solves every instance at every `(gamma, beta)` of the config.
///
/// Records come back ordered by `(gamma, beta, seed)` whatever the number of
/// workers. Instance `i` has the same `(p, q)` at every `(gamma, beta)`.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<(Vec<SweepRecord>, RunMeta)> {
    cfg.validate()?;
    let tasks: Vec<(f64, f64, u64)> = cfg
        .gammas
        .iter()
        .flat_map(|&g| cfg.betas.iter().flat_map(move |&b| (0..cfg.instances as u64).map(move |i| (g, b, i))))
        .collect();
    let records = pool(cfg.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(g, b, i)| solve_instance(cfg, g, b, i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((records, RunMeta { jobs: cfg.jobs }))
}

/// Mean results of one solver at one `(gamma, beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub gamma: f64,
    pub beta: f64,
    pub solver: SolverKind,
    pub instances: usize,
    pub mean_v_s0: f64,
    pub mean_wall_time_s: f64,
    pub mean_iterations: f64,
    pub mean_linear_solves: f64,
    /// Mean wall time relative to the threshold search, if it ran.
    pub time_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub meta: RunMeta,
    pub rows: Vec<SummaryRow>,
}

impl SweepSummary {
    pub fn row(&self, gamma: f64, beta: f64, solver: SolverKind) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.gamma == gamma && r.beta == beta && r.solver == solver)
    }
}

pub fn summarize(records: &[SweepRecord], meta: RunMeta) -> SweepSummary {
    let mut rows = Vec::new();
    // Records are grouped by (gamma, beta) already.
    for group in records.chunk_by(|a, b| a.gamma == b.gamma && a.beta == b.beta) {
        let first = &group[0];
        let mut means = Vec::new();
        for o in &first.outcomes {
            let of = |f: &dyn Fn(&SolverOutcome) -> f64| {
                group.iter().map(|r| f(r.outcome(o.solver).expect("same solvers in every record"))).sum::<f64>()
                    / group.len() as f64
            };
            means.push((
                o.solver,
                of(&|x| x.v_s0),
                of(&|x| x.wall_time_s),
                of(&|x| x.iterations as f64),
                of(&|x| x.linear_solves as f64),
            ));
        }
        let reference = means.iter().find(|m| m.0 == SolverKind::Threshold).map(|m| m.2);
        for (solver, v, t, it, ls) in means {
            rows.push(SummaryRow {
                gamma: first.gamma,
                beta: first.beta,
                solver,
                instances: group.len(),
                mean_v_s0: v,
                mean_wall_time_s: t,
                mean_iterations: it,
                mean_linear_solves: ls,
                time_ratio: reference.filter(|&r| r > 0.0).map(|r| t / r),
            });
        }
    }
    SweepSummary { meta, rows }
}

/// [`run_compare`] plus per-solver means for each `(gamma, beta)`.
pub fn run_beta_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRecord>, SweepSummary)> {
    let (records, meta) = run_compare(cfg)?;
    let summary = summarize(&records, meta);
    Ok((records, summary))
}
