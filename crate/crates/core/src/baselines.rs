//! Reference solvers: value iteration, policy iteration, and the two fixed
//! policies the threshold search is compared against.

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, DenseMatrix};
use crate::mdp::{bellman_backup, Action, MigrationMdp, StatePolicy, ValueFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub values: ValueFunction,
    pub policy: StatePolicy,
    pub iterations: usize,
    pub linear_solves: usize,
}

/// Migrate only at the forced states `M` and `N`.
pub fn never_migrate_policy(mdp: &MigrationMdp) -> StatePolicy {
    StatePolicy::from_fn(mdp, |_| Action::NoMigrate)
}

/// Migrate at every nonzero offset.
pub fn always_migrate_policy(mdp: &MigrationMdp) -> StatePolicy {
    StatePolicy::from_fn(mdp, |s| if s == 0 { Action::NoMigrate } else { Action::Migrate })
}

/// Exact discounted cost of an arbitrary policy over the full state range.
pub fn evaluate_fixed_policy(mdp: &MigrationMdp, pol: &StatePolicy) -> Result<ValueFunction> {
    if pol.min_state() != mdp.min_state() || pol.max_state() != mdp.max_state() {
        return Err(Error::PolicyLength {
            expected: mdp.num_states(),
            got: pol.actions().len(),
        });
    }
    let n = mdp.num_states();
    let kernel = mdp.movement().as_array();
    let mut p = DenseMatrix::zeros(n, n);
    let mut c = vec![0.0; n];
    for (s, a) in pol.iter() {
        let row = mdp.index(s);
        c[row] = mdp.slot_cost(s, a)?;
        let origin = match a {
            Action::Migrate => 0,
            Action::NoMigrate => s,
        };
        for (step, &prob) in (-1..=1).zip(&kernel) {
            p[(row, mdp.index(origin + step))] += prob;
        }
    }
    let v = solve_dense(&p.identity_minus_scaled(mdp.gamma()), &c)?;
    ValueFunction::from_values(mdp, v)
}

/// Value iteration from `V = 0`.
///
/// Stops once `gamma / (1 - gamma) * ||V_{n+1} - V_n|| <= epsilon`, which
/// bounds the distance of the returned values from the optimum by `epsilon`.
pub fn value_iteration(mdp: &MigrationMdp, epsilon: f64) -> Result<SolverReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidTolerance(epsilon));
    }
    let scale = mdp.gamma() / (1.0 - mdp.gamma());
    let mut v = ValueFunction::zeros(mdp);
    let mut iterations = 0;
    loop {
        let (next, policy) = bellman_backup(mdp, &v);
        iterations += 1;
        let delta = next.max_abs_diff(&v);
        v = next;
        if scale * delta <= epsilon {
            return Ok(SolverReport {
                values: v,
                policy,
                iterations,
                linear_solves: 0,
            });
        }
    }
}

/// Greedy policy with respect to `v` (ties stay, state 0 stays).
pub fn greedy_policy(mdp: &MigrationMdp, v: &ValueFunction) -> StatePolicy {
    bellman_backup(mdp, v).1
}

/// Howard policy iteration starting from the always-migrate policy, the
/// same starting point as [`crate::threshold::find_optimal_thresholds`].
pub fn policy_iteration(mdp: &MigrationMdp) -> Result<SolverReport> {
    policy_iteration_from(mdp, always_migrate_policy(mdp))
}

/// Howard policy iteration from an arbitrary starting policy: evaluate
/// exactly, improve greedily, stop when the policy no longer changes.
pub fn policy_iteration_from(mdp: &MigrationMdp, initial: StatePolicy) -> Result<SolverReport> {
    // Far above anything a 2-action chain of this size can need.
    let limit = 4 * mdp.num_states() + 16;
    let mut policy = initial;
    for iteration in 1..=limit {
        let values = evaluate_fixed_policy(mdp, &policy)?;
        let improved = greedy_policy(mdp, &values);
        if improved == policy {
            return Ok(SolverReport {
                values,
                policy,
                iterations: iteration,
                linear_solves: iteration,
            });
        }
        policy = improved;
    }
    Err(Error::IterationLimit {
        solver: "policy iteration",
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::{evaluate_thresholds, find_optimal_thresholds, ThresholdPair};
    use Action::*;

    fn mdp(p: f64, q: f64, min: i32, max: i32, beta: f64, gamma: f64) -> MigrationMdp {
        MigrationMdp::new(p, q, min, max, beta, gamma).unwrap()
    }

    #[test]
    fn fixed_policies_shape() {
        let m = mdp(0.3, 0.2, -2, 2, 0.5, 0.9);
        assert_eq!(
            never_migrate_policy(&m).actions(),
            &[Migrate, NoMigrate, NoMigrate, NoMigrate, Migrate]
        );
        assert_eq!(
            always_migrate_policy(&m).actions(),
            &[Migrate, Migrate, NoMigrate, Migrate, Migrate]
        );
        let m = mdp(0.3, 0.2, -1, 1, 0.5, 0.9);
        assert_eq!(never_migrate_policy(&m).actions(), &[Migrate, NoMigrate, Migrate]);
    }

    #[test]
    fn fixed_policy_closed_forms() {
        let m = mdp(0.25, 0.25, -10, 10, 0.7, 0.5);
        let v = evaluate_fixed_policy(&m, &always_migrate_policy(&m)).unwrap();
        assert!((v.get(0) - 0.5).abs() < 1e-12);

        let m = mdp(0.0, 0.0, -5, 5, 1.0, 0.5);
        let v = evaluate_fixed_policy(&m, &never_migrate_policy(&m)).unwrap();
        assert!((v.get(1) - 2.0).abs() < 1e-12);
        assert_eq!(v.get(0), 0.0);
    }

    #[test]
    fn always_migrate_matches_zero_thresholds() {
        let m = mdp(0.31, 0.17, -7, 9, 0.8, 0.9);
        let a = evaluate_fixed_policy(&m, &always_migrate_policy(&m)).unwrap();
        let b = evaluate_thresholds(&m, ThresholdPair::always_migrate()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn static_user_value_iteration() {
        let m = mdp(0.0, 0.0, -2, 2, 1.0, 0.5);
        let r = value_iteration(&m, 0.1).unwrap();
        assert_eq!(r.values.get(0), 0.0);
    }

    #[test]
    fn value_iteration_rejects_bad_tolerance() {
        let m = mdp(0.3, 0.2, -2, 2, 1.0, 0.5);
        assert!(value_iteration(&m, 0.0).is_err());
        assert!(value_iteration(&m, f64::NAN).is_err());
    }

    #[test]
    fn value_iteration_within_epsilon_of_optimum() {
        for &(p, q, beta, gamma) in &[(0.3, 0.2, 0.5, 0.9), (0.1, 0.6, 2.0, 0.5), (0.4, 0.4, 0.2, 0.99)] {
            let m = mdp(p, q, -10, 10, beta, gamma);
            let exact = find_optimal_thresholds(&m).unwrap().values;
            let vi = value_iteration(&m, 0.1).unwrap();
            assert!(vi.values.max_abs_diff(&exact) <= 0.1);
        }
    }

    #[test]
    fn value_iteration_sweeps_grow_with_discount() {
        let m = mdp(0.3, 0.3, -10, 10, 0.5, 0.99);
        let vi = value_iteration(&m, 0.1).unwrap();
        assert!(vi.iterations > 100, "{} sweeps", vi.iterations);
        let th = find_optimal_thresholds(&m).unwrap();
        assert!(th.outer_iterations <= 101);
    }

    #[test]
    fn zero_beta_policy_iteration() {
        let m = mdp(0.3, 0.2, -10, 10, 0.0, 0.9);
        for r in [
            policy_iteration(&m).unwrap(),
            policy_iteration_from(&m, never_migrate_policy(&m)).unwrap(),
        ] {
            assert_eq!(r.policy, never_migrate_policy(&m));
            let v = evaluate_thresholds(&m, ThresholdPair::never_migrate(&m)).unwrap();
            assert!(r.values.max_abs_diff(&v) < 1e-9);
        }
        let r = policy_iteration_from(&m, never_migrate_policy(&m)).unwrap();
        assert_eq!(r.linear_solves, 1);
        let v = evaluate_thresholds(&m, ThresholdPair::never_migrate(&m)).unwrap();
        assert!(r.values.max_abs_diff(&v) < 1e-9);
    }

    #[test]
    fn fixed_point_of_backup_matches_greedy_evaluation() {
        let m = mdp(0.3, 0.2, -10, 10, 0.5, 0.9);
        let mut v = ValueFunction::zeros(&m);
        let mut pol = never_migrate_policy(&m);
        for _ in 0..2000 {
            let (next, p) = bellman_backup(&m, &v);
            let done = next.max_abs_diff(&v) < 1e-14;
            v = next;
            pol = p;
            if done {
                break;
            }
        }
        let exact = evaluate_fixed_policy(&m, &pol).unwrap();
        assert!(v.max_abs_diff(&exact) < 1e-6);
    }

    #[test]
    fn policy_iteration_values_only_decrease() {
        let m = mdp(0.35, 0.15, -10, 10, 0.6, 0.95);
        for start in [never_migrate_policy(&m), always_migrate_policy(&m)] {
            let mut pol = start;
            let mut prev = evaluate_fixed_policy(&m, &pol).unwrap();
            loop {
                let next_pol = greedy_policy(&m, &prev);
                if next_pol == pol {
                    break;
                }
                let next = evaluate_fixed_policy(&m, &next_pol).unwrap();
                assert!(next.iter().all(|(s, v)| v <= prev.get(s) + 1e-12));
                assert!(next.iter().any(|(s, v)| v < prev.get(s) - 1e-12));
                pol = next_pol;
                prev = next;
            }
        }
    }

    #[test]
    fn mismatched_policy_is_rejected() {
        let small = mdp(0.3, 0.2, -1, 1, 0.5, 0.9);
        let big = mdp(0.3, 0.2, -2, 2, 0.5, 0.9);
        assert!(evaluate_fixed_policy(&big, &never_migrate_policy(&small)).is_err());
    }
}
