//! Acceptance run: one PASS/FAIL line per criterion, then a nonzero exit if
//! anything failed. Runs without the libtest harness so the lines are always
//! printed, e.g. `cargo test -p migration-bench --test acceptance`.

use std::time::Instant;

use migration_bench::config::{ExperimentConfig, SolverKind};
use migration_bench::instance::{instance_params, InstanceRule};
use migration_bench::output::to_csv;
use migration_bench::{run_beta_sweep, run_compare};
use migration_mdp::threshold::outer_iteration_bound;
use migration_mdp::*;

// Pinned tolerances.
const ORACLE_TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-9;
const VI_EPSILON: f64 = 0.1;
const LEMMA_EPSILON: f64 = 1e-4;
const MC_RUNS: usize = 100_000;
const MC_TRUNCATION: f64 = 1e-3;
const MC_SIGMAS: f64 = 3.5;
const CLOSED_FORM_TOL: f64 = 1e-12;
const BASELINE_REL_GAP: f64 = 0.01;
const SOLVE_SHARE: f64 = 0.90;

const GAMMAS: [f64; 3] = [0.5, 0.9, 0.99];
const BETAS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];
const MAIN_INSTANCES: usize = 240;
const SMALL_INSTANCES: usize = 60;

struct Verdicts {
    failed: Vec<u32>,
}

impl Verdicts {
    fn record(&mut self, id: u32, pass: bool, title: &str, detail: String, started: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2}. {title}: {detail} ({:.1}s)", started.elapsed().as_secs_f64());
        if !pass {
            self.failed.push(id);
        }
    }
}

/// Criterion-1 instances: `|M| = N = 10`, every (gamma, beta) of the grid
/// visited equally often.
fn main_instances() -> Vec<(u64, MigrationMdp)> {
    (0..MAIN_INSTANCES)
        .map(|i| {
            let (seed, p, q) = instance_params(InstanceRule::UniformSimplex, 1_000, i as u64);
            let gamma = GAMMAS[i % GAMMAS.len()];
            let beta = BETAS[(i / GAMMAS.len()) % BETAS.len()];
            (seed, MigrationMdp::new(p, q, -10, 10, beta, gamma).unwrap())
        })
        .collect()
}

struct Solved {
    mdp: MigrationMdp,
    search: ThresholdSolveResult,
    floor: ValueFunction,
    pi: SolverReport,
    pi_never: SolverReport,
    vi: SolverReport,
}

fn main() {
    let mut v = Verdicts { failed: Vec::new() };
    println!("acceptance: {} instances for criteria 1-4 and 9", MAIN_INSTANCES);

    let started = Instant::now();
    let solved: Vec<Solved> = main_instances()
        .into_iter()
        .map(|(_, mdp)| Solved {
            mdp,
            search: find_optimal_thresholds(&mdp).unwrap(),
            floor: exhaustive_threshold_search(&mdp).unwrap().1,
            pi: policy_iteration(&mdp).unwrap(),
            pi_never: policy_iteration_from(&mdp, never_migrate_policy(&mdp)).unwrap(),
            vi: value_iteration(&mdp, VI_EPSILON).unwrap(),
        })
        .collect();

    // 1
    let worst = solved.iter().map(|s| s.search.values.max_abs_diff(&s.floor)).fold(0.0, f64::max);
    v.record(
        1,
        worst <= ORACLE_TOL,
        "threshold search equals exhaustive enumeration",
        format!("worst gap {worst:.2e} over {} instances (tol {ORACLE_TOL:e})", solved.len()),
        started,
    );

    // 2
    let started = Instant::now();
    let pi_gap = solved.iter().map(|s| s.pi.values.max_abs_diff(&s.search.values)).fold(0.0, f64::max);
    let vi_gap = solved.iter().map(|s| s.vi.values.max_abs_diff(&s.search.values)).fold(0.0, f64::max);
    v.record(
        2,
        pi_gap <= EXACT_TOL && vi_gap <= VI_EPSILON,
        "exact and approximate solvers agree",
        format!("policy iteration {pi_gap:.2e} (tol {EXACT_TOL:e}), value iteration {vi_gap:.4} (tol {VI_EPSILON})"),
        started,
    );

    // 3
    let started = Instant::now();
    let shaped = solved.iter().filter(|s| is_threshold_policy(&s.pi.policy)).count();
    v.record(
        3,
        shaped == solved.len(),
        "policy iteration optima have threshold form",
        format!("{shaped}/{}", solved.len()),
        started,
    );

    // 4
    let started = Instant::now();
    let within = solved
        .iter()
        .filter(|s| s.search.outer_iterations <= outer_iteration_bound(&s.mdp))
        .count();
    let at_099: Vec<&Solved> = solved.iter().filter(|s| s.mdp.gamma() == 0.99).collect();
    let max_099 = at_099.iter().map(|s| s.search.outer_iterations).max().unwrap();
    let mut vi_sweeps: Vec<usize> = at_099.iter().map(|s| s.vi.iterations).collect();
    vi_sweeps.sort_unstable();
    v.record(
        4,
        within == solved.len() && max_099 <= 10 * 10 + 1,
        "outer iterations within |M|*N+1",
        format!(
            "{within}/{} within bound 101; max at gamma 0.99 is {max_099}; value iteration median {} sweeps at gamma 0.99",
            solved.len(),
            vi_sweeps[vi_sweeps.len() / 2]
        ),
        started,
    );

    // 5
    let started = Instant::now();
    let mut matched = 0;
    let mut one_sided = 0;
    let mut worst = 0.0f64;
    for i in 0..SMALL_INSTANCES {
        let (_, p, q) = instance_params(InstanceRule::UniformSimplex, 5_000, i as u64);
        let gamma = GAMMAS[i % GAMMAS.len()];
        let beta = BETAS[(i / GAMMAS.len()) % BETAS.len()];
        let mdp = MigrationMdp::new(p, q, -3, 3, beta, gamma).unwrap();
        let ext = extended_action_value_iteration(&mdp, LEMMA_EPSILON).unwrap().values;
        let two = find_optimal_thresholds(&mdp).unwrap().values;
        let gap = ext.max_abs_diff(&two);
        worst = worst.max(gap);
        matched += (gap <= 2.0 * LEMMA_EPSILON) as usize;
        one_sided += mdp.states().all(|s| ext.get(s) <= two.get(s) + LEMMA_EPSILON) as usize;
    }
    v.record(
        5,
        matched == SMALL_INSTANCES,
        "enlarged action set matches the two-action optimum",
        format!(
            "{matched}/{SMALL_INSTANCES} within 2*epsilon (worst gap {worst:.4}); enlarged <= two-action on {one_sided}/{SMALL_INSTANCES}"
        ),
        started,
    );

    // 6
    let started = Instant::now();
    let mc_cases = [
        (0.3, 0.2, -10, 10, 0.5, 0.9, 0),
        (0.1, 0.6, -6, 8, 0.2, 0.8, 2),
        (0.45, 0.45, -5, 5, 1.5, 0.7, -1),
        (0.05, 0.05, -4, 4, 3.0, 0.95, 1),
        (0.4, 0.1, -8, 5, 0.05, 0.9, 0),
        (0.25, 0.25, -10, 10, 1.0, 0.5, 3),
        (0.0, 0.7, -3, 9, 0.8, 0.85, -2),
    ];
    let mut pairs = 0;
    let mut agree = 0;
    // Gap as a fraction of what the criterion allows.
    let mut worst_use = 0.0f64;
    for (k, &(p, q, min, max, beta, gamma, s0)) in mc_cases.iter().enumerate() {
        let mdp = MigrationMdp::new(p, q, min, max, beta, gamma).unwrap();
        let policies = [
            never_migrate_policy(&mdp),
            always_migrate_policy(&mdp),
            find_optimal_thresholds(&mdp).unwrap().thresholds.to_policy(&mdp),
        ];
        for (j, pol) in policies.iter().enumerate() {
            let exact = evaluate_fixed_policy(&mdp, pol).unwrap().get(s0);
            let est = monte_carlo_value(&mdp, pol, s0, MC_RUNS, MC_TRUNCATION, (100 * k + j) as u64).unwrap();
            let gap = (est.mean - exact).abs();
            pairs += 1;
            agree += (gap <= MC_SIGMAS * est.std_err + MC_TRUNCATION) as usize;
            worst_use = worst_use.max(gap / (MC_SIGMAS * est.std_err + MC_TRUNCATION));
        }
    }
    v.record(
        6,
        pairs >= 20 && agree == pairs,
        "Monte-Carlo estimates match exact values",
        format!("{agree}/{pairs} pairs within 3.5 s.e. + {MC_TRUNCATION}, {MC_RUNS} runs each; largest gap uses {:.0}% of the allowance", 100.0 * worst_use),
        started,
    );

    // 7
    let started = Instant::now();
    let mut worst = 0.0f64;
    for &(beta, gamma) in &[(0.5, 0.9), (1.0, 0.5), (3.0, 0.99)] {
        let mdp = MigrationMdp::new(0.0, 0.0, -5, 5, beta, gamma).unwrap();
        let vals = evaluate_thresholds(&mdp, ThresholdPair::new(&mdp, -2, 2).unwrap()).unwrap();
        worst = worst.max((vals.get(1) - beta / (1.0 - gamma)).abs());
    }
    for &(p, q, gamma) in &[(0.25, 0.25, 0.5), (0.1, 0.6, 0.9), (0.3, 0.3, 0.99), (0.5, 0.5, 0.7)] {
        let mdp = MigrationMdp::new(p, q, -10, 10, 1.0, gamma).unwrap();
        let vals = evaluate_thresholds(&mdp, ThresholdPair::always_migrate()).unwrap();
        // Relative check: at gamma 0.99 the value is near 60.
        let closed = gamma * (p + q) / (1.0 - gamma);
        worst = worst.max((vals.get(0) - closed).abs() / closed.max(1.0));
    }
    v.record(
        7,
        worst <= CLOSED_FORM_TOL,
        "closed-form spot checks",
        format!("worst deviation {worst:.2e} (tol {CLOSED_FORM_TOL:e})"),
        started,
    );

    // 8
    let started = Instant::now();
    let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut cfg = ExperimentConfig::reference(GAMMAS.to_vec(), vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0]);
    cfg.solvers = vec![SolverKind::Threshold, SolverKind::NeverMigrate, SolverKind::AlwaysMigrate];
    cfg.master_seed = 42;
    cfg.jobs = jobs;
    let (_, summary) = run_beta_sweep(&cfg).unwrap();
    let mean = |g: f64, b: f64, s: SolverKind| summary.row(g, b, s).unwrap().mean_v_s0;
    let mut dominance = true;
    let mut gaps = Vec::new();
    for &g in &GAMMAS {
        for &b in &cfg.betas {
            let opt = mean(g, b, SolverKind::Threshold);
            let floor = mean(g, b, SolverKind::NeverMigrate).min(mean(g, b, SolverKind::AlwaysMigrate));
            dominance &= opt <= floor + 1e-12;
        }
        let small = mean(g, 0.01, SolverKind::Threshold);
        let never = mean(g, 0.01, SolverKind::NeverMigrate);
        let large = mean(g, 100.0, SolverKind::Threshold);
        let always = mean(g, 100.0, SolverKind::AlwaysMigrate);
        gaps.push(((never - small).abs() / never, (always - large).abs() / always));
    }
    let gap_ok = gaps.iter().all(|&(a, b)| a < BASELINE_REL_GAP && b < BASELINE_REL_GAP);
    let gap_text: Vec<String> = GAMMAS
        .iter()
        .zip(&gaps)
        .map(|(g, (a, b))| format!("gamma {g}: {:.4}%/{:.4}%", 100.0 * a, 100.0 * b))
        .collect();
    v.record(
        8,
        dominance && gap_ok,
        "sweep reproduces the baseline envelope",
        format!(
            "{} instances, dominance {}, relative gap to never at beta 0.01 / always at beta 100: {}",
            cfg.instances,
            if dominance { "holds" } else { "violated" },
            gap_text.join(", ")
        ),
        started,
    );

    // 9
    let started = Instant::now();
    let fewer = solved.iter().filter(|s| s.search.linear_solves <= s.pi.linear_solves).count();
    let fewer_never = solved.iter().filter(|s| s.search.linear_solves <= s.pi_never.linear_solves).count();
    let share = fewer as f64 / solved.len() as f64;
    v.record(
        9,
        share >= SOLVE_SHARE,
        "threshold search needs no more linear solves than policy iteration",
        format!(
            "{fewer}/{} ({:.1}%, need {:.0}%); against policy iteration started from never-migrate: {fewer_never}/{} (information)",
            solved.len(),
            100.0 * share,
            100.0 * SOLVE_SHARE,
            solved.len()
        ),
        started,
    );

    // 10
    let started = Instant::now();
    let mut cfg = ExperimentConfig::reference(GAMMAS.to_vec(), vec![0.1, 1.0, 10.0]);
    cfg.instances = 100;
    cfg.master_seed = 7;
    let first = to_csv(&run_compare(&cfg).unwrap().0);
    cfg.jobs = jobs.max(4);
    let second = to_csv(&run_compare(&cfg).unwrap().0);
    let strip = |csv: &str| -> Vec<String> {
        csv.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(9);
                f.join(",")
            })
            .collect()
    };
    let (a, b) = (strip(&first), strip(&second));
    v.record(
        10,
        a == b,
        "repeated sweep is identical apart from wall time",
        format!("{} rows compared, serial vs {} workers", a.len(), cfg.jobs),
        started,
    );

    if v.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", v.failed);
        std::process::exit(1);
    }
}
