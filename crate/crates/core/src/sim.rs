//! Monte-Carlo simulation of the offset random walk under a fixed policy.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), whose output is specified
//! bit-for-bit and is the same on every platform. Run `i` of an estimate uses
//! stream `i` of the generator seeded with the master seed, so runs can be
//! executed in any order or in parallel without changing the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{Action, MigrationMdp, StatePolicy};

/// Default bound on the discarded infinite-horizon tail.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-3;

/// A seeded, portable random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "ChaCha8";

    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Independent stream `index` under the same seed.
    pub fn child(&self, index: u64) -> Self {
        Self::with_stream(self.seed, index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<i32>,
    pub actions: Vec<Action>,
    pub costs: Vec<f64>,
    pub discounted_total: f64,
}

struct Walker<'a> {
    mdp: &'a MigrationMdp,
    policy: &'a StatePolicy,
    down: f64,
    stay_end: f64,
}

impl<'a> Walker<'a> {
    fn new(mdp: &'a MigrationMdp, policy: &'a StatePolicy) -> Self {
        let m = mdp.movement();
        Self {
            mdp,
            policy,
            down: m.down,
            stay_end: m.down + m.stay,
        }
    }

    /// Plays one slot from `s`: returns the action, its cost and the next
    /// state. One uniform draw per slot: `[0, q)` moves down,
    /// `[q, 1 - p)` stays, the rest moves up.
    fn step(&self, s: i32, rng: &mut RngStream) -> (Action, f64, i32) {
        let a = self.policy.action(s);
        let cost = match (s, a) {
            (0, _) => 0.0,
            (_, Action::NoMigrate) => self.mdp.beta(),
            (_, Action::Migrate) => 1.0,
        };
        let base = if a == Action::Migrate { 0 } else { s };
        let u = rng.uniform();
        let next = if u < self.down {
            base - 1
        } else if u < self.stay_end {
            base
        } else {
            base + 1
        };
        assert!(self.mdp.contains(next), "walk left the state range at {next}");
        (a, cost, next)
    }
}

fn check_inputs(mdp: &MigrationMdp, pol: &StatePolicy, s0: i32) -> Result<()> {
    if pol.min_state() != mdp.min_state() || pol.max_state() != mdp.max_state() {
        return Err(Error::PolicyLength {
            expected: mdp.num_states(),
            got: pol.actions().len(),
        });
    }
    if !mdp.contains(s0) {
        return Err(Error::OutOfRange {
            state: s0,
            min: mdp.min_state(),
            max: mdp.max_state(),
        });
    }
    Ok(())
}

/// Simulates `horizon` slots starting from offset `s0`.
pub fn sample_trajectory(
    mdp: &MigrationMdp,
    pol: &StatePolicy,
    s0: i32,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    check_inputs(mdp, pol, s0)?;
    if horizon == 0 {
        return Err(Error::InvalidHorizon);
    }
    let walker = Walker::new(mdp, pol);
    let mut t = Trajectory {
        states: Vec::with_capacity(horizon),
        actions: Vec::with_capacity(horizon),
        costs: Vec::with_capacity(horizon),
        discounted_total: 0.0,
    };
    let mut s = s0;
    let mut weight = 1.0;
    for _ in 0..horizon {
        let (a, cost, next) = walker.step(s, rng);
        t.states.push(s);
        t.actions.push(a);
        t.costs.push(cost);
        t.discounted_total += weight * cost;
        weight *= mdp.gamma();
        s = next;
    }
    Ok(t)
}

/// Smallest horizon `T >= 1` with `gamma^T * max(beta, 1) / (1 - gamma) <= tol`.
pub fn truncation_horizon(mdp: &MigrationMdp, tol: f64) -> usize {
    let cap = mdp.beta().max(1.0) / (1.0 - mdp.gamma());
    let mut horizon = 1;
    let mut tail = mdp.gamma() * cap;
    while tail > tol {
        tail *= mdp.gamma();
        horizon += 1;
    }
    horizon
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub runs: usize,
    pub horizon: usize,
}

/// Estimates the discounted cost of `pol` from `s0` by averaging `runs`
/// independent truncated trajectories.
pub fn monte_carlo_value(
    mdp: &MigrationMdp,
    pol: &StatePolicy,
    s0: i32,
    runs: usize,
    truncation_tol: f64,
    rng_seed: u64,
) -> Result<McEstimate> {
    if !(truncation_tol > 0.0 && truncation_tol.is_finite()) {
        return Err(Error::InvalidTolerance(truncation_tol));
    }
    monte_carlo_with_horizon(mdp, pol, s0, runs, truncation_horizon(mdp, truncation_tol), rng_seed)
}

/// Like [`monte_carlo_value`] with an explicit horizon.
pub fn monte_carlo_with_horizon(
    mdp: &MigrationMdp,
    pol: &StatePolicy,
    s0: i32,
    runs: usize,
    horizon: usize,
    rng_seed: u64,
) -> Result<McEstimate> {
    check_inputs(mdp, pol, s0)?;
    if runs < 2 {
        return Err(Error::TooFewRuns { min: 2, got: runs });
    }
    if horizon == 0 {
        return Err(Error::InvalidHorizon);
    }
    let walker = Walker::new(mdp, pol);
    let master = RngStream::new(rng_seed);

    let totals: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = master.child(i);
            let mut s = s0;
            let mut weight = 1.0;
            let mut total = 0.0;
            for _ in 0..horizon {
                let (_, cost, next) = walker.step(s, &mut rng);
                total += weight * cost;
                weight *= mdp.gamma();
                s = next;
            }
            total
        })
        .collect();

    let n = runs as f64;
    let mean = pairwise_sum(&totals) / n;
    let squares: Vec<f64> = totals.iter().map(|x| (x - mean) * (x - mean)).collect();
    let variance = pairwise_sum(&squares) / (n - 1.0);
    Ok(McEstimate {
        mean,
        std_err: (variance / n).sqrt(),
        runs,
        horizon,
    })
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{always_migrate_policy, never_migrate_policy};

    fn mdp(p: f64, q: f64, min: i32, max: i32, beta: f64, gamma: f64) -> MigrationMdp {
        MigrationMdp::new(p, q, min, max, beta, gamma).unwrap()
    }

    #[test]
    fn static_user_at_origin_costs_nothing() {
        let m = mdp(0.0, 0.0, -4, 4, 1.0, 0.5);
        let t = sample_trajectory(&m, &never_migrate_policy(&m), 0, 50, &mut RngStream::new(1)).unwrap();
        assert!(t.costs.iter().all(|&c| c == 0.0));
        assert_eq!(t.discounted_total, 0.0);
    }

    #[test]
    fn static_user_off_origin_pays_geometric_series() {
        let m = mdp(0.0, 0.0, -4, 4, 1.0, 0.5);
        let t = sample_trajectory(&m, &never_migrate_policy(&m), 1, 20, &mut RngStream::new(1)).unwrap();
        let want: f64 = (0..20).map(|k| 0.5f64.powi(k)).sum();
        assert!((t.discounted_total - want).abs() < 1e-15);
        assert!((t.discounted_total - 1.999998).abs() < 1e-6);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let m = mdp(0.35, 0.3, -5, 5, 0.4, 0.9);
        let pol = never_migrate_policy(&m);
        let a = sample_trajectory(&m, &pol, 2, 500, &mut RngStream::new(99)).unwrap();
        let b = sample_trajectory(&m, &pol, 2, 500, &mut RngStream::new(99)).unwrap();
        assert_eq!(a, b);
        let c = sample_trajectory(&m, &pol, 2, 500, &mut RngStream::new(100)).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn trajectory_respects_forced_migration() {
        let m = mdp(0.5, 0.5, -2, 2, 0.4, 0.9);
        let pol = never_migrate_policy(&m);
        let t = sample_trajectory(&m, &pol, 0, 2000, &mut RngStream::new(5)).unwrap();
        for (&s, &a) in t.states.iter().zip(&t.actions) {
            assert!(m.contains(s));
            if m.is_forced(s) {
                assert_eq!(a, Action::Migrate);
            }
        }
        assert!(t.states.iter().any(|&s| m.is_forced(s)));
    }

    #[test]
    fn child_streams_differ() {
        let root = RngStream::new(7);
        let mut a = root.child(0);
        let mut b = root.child(1);
        assert_ne!(a.uniform(), b.uniform());
        assert_eq!(root.child(3).uniform(), RngStream::new(7).child(3).uniform());
    }

    #[test]
    fn bad_inputs() {
        let m = mdp(0.3, 0.3, -2, 2, 0.4, 0.9);
        let pol = never_migrate_policy(&m);
        assert!(matches!(
            sample_trajectory(&m, &pol, 3, 10, &mut RngStream::new(0)),
            Err(Error::OutOfRange { .. })
        ));
        assert_eq!(
            sample_trajectory(&m, &pol, 0, 0, &mut RngStream::new(0)),
            Err(Error::InvalidHorizon)
        );
        assert!(monte_carlo_value(&m, &pol, 0, 1, 1e-3, 0).is_err());
        assert!(monte_carlo_value(&m, &pol, 0, 10, 0.0, 0).is_err());
    }

    #[test]
    fn horizon_bounds_the_tail() {
        let m = mdp(0.3, 0.3, -2, 2, 2.0, 0.9);
        let t = truncation_horizon(&m, 1e-3);
        let cap = 2.0 / 0.1;
        assert!(0.9f64.powi(t as i32) * cap <= 1e-3);
        assert!(0.9f64.powi(t as i32 - 1) * cap > 1e-3);
    }

    #[test]
    fn always_migrate_closed_form() {
        let m = mdp(0.25, 0.25, -10, 10, 0.7, 0.5);
        let est = monte_carlo_value(&m, &always_migrate_policy(&m), 0, 100_000, 1e-3, 11).unwrap();
        assert!((est.mean - 0.5).abs() <= 3.5 * est.std_err + 1e-3, "{est:?}");
    }

    #[test]
    fn estimate_is_deterministic() {
        let m = mdp(0.3, 0.2, -5, 5, 0.6, 0.9);
        let pol = never_migrate_policy(&m);
        let a = monte_carlo_value(&m, &pol, 1, 2000, 1e-3, 3).unwrap();
        let b = monte_carlo_value(&m, &pol, 1, 2000, 1e-3, 3).unwrap();
        assert_eq!(a, b);
    }
}
