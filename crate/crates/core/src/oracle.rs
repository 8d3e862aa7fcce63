//! Brute-force checks that do not share code paths with the solvers they
//! verify: exhaustive threshold enumeration, a threshold-shape test for
//! arbitrary policies, and value iteration over an enlarged action set in
//! which the service may be moved to any offset, not just to the user.

use crate::error::{Error, Result};
use crate::mdp::{Action, MigrationMdp, StatePolicy, ValueFunction};
use crate::threshold::{evaluate_thresholds, ThresholdPair};

/// Largest number of threshold pairs [`exhaustive_threshold_search`] will
/// evaluate.
pub const ENUMERATION_BUDGET: usize = 10_000;

/// Values within this distance count as equal when checking that one pair
/// minimizes every state at once.
pub const UNIFORM_MINIMUM_TOLERANCE: f64 = 1e-9;

/// Evaluates every feasible threshold pair and returns the one whose value
/// function is minimal at every state.
///
/// Fails with [`Error::NoUniformMinimizer`] if no single pair attains the
/// pointwise minimum everywhere. Among minimizers the pair with the smallest
/// `|k1|`, then the smallest `k2`, wins.
pub fn exhaustive_threshold_search(mdp: &MigrationMdp) -> Result<(ThresholdPair, ValueFunction)> {
    let pairs = ThresholdPair::count(mdp);
    if pairs > ENUMERATION_BUDGET {
        return Err(Error::TooLarge {
            pairs,
            budget: ENUMERATION_BUDGET,
        });
    }
    let evaluated = ThresholdPair::all(mdp)
        .map(|t| evaluate_thresholds(mdp, t).map(|v| (t, v)))
        .collect::<Result<Vec<_>>>()?;

    let mut floor = vec![f64::INFINITY; mdp.num_states()];
    for (_, v) in &evaluated {
        for (f, &x) in floor.iter_mut().zip(v.as_slice()) {
            *f = f.min(x);
        }
    }

    // `ThresholdPair::all` already yields pairs in tie-break order.
    evaluated
        .into_iter()
        .find(|(_, v)| {
            v.as_slice()
                .iter()
                .zip(&floor)
                .all(|(x, f)| x - f <= UNIFORM_MINIMUM_TOLERANCE)
        })
        .ok_or(Error::NoUniformMinimizer)
}

/// True iff, after forcing `NoMigrate` at state 0, the states that do not
/// migrate form one contiguous band.
pub fn is_threshold_policy(pol: &StatePolicy) -> bool {
    let canonical = pol.canonicalized();
    let stay: Vec<i32> = canonical
        .iter()
        .filter(|&(_, a)| a == Action::NoMigrate)
        .map(|(s, _)| s)
        .collect();
    stay.windows(2).all(|w| w[1] == w[0] + 1)
}

/// An action of the enlarged model: keep the service where it is, or move it
/// so that it sits at offset `d` from the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtendedAction {
    Stay,
    MigrateTo(i32),
}

impl ExtendedAction {
    /// Whether the action is available in the two-action model.
    pub fn is_basic(&self) -> bool {
        matches!(self, ExtendedAction::Stay | ExtendedAction::MigrateTo(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSolution {
    pub values: ValueFunction,
    pub sweeps: usize,
}

/// Actions available in state `s` with their one-step values under `v`.
///
/// Migration targets are limited to `[M + 1, N - 1]` so the following step
/// cannot leave `[M, N]`. Moving the service to the offset it already has is
/// the same as staying and is not listed twice.
pub fn extended_action_values(
    mdp: &MigrationMdp,
    v: &ValueFunction,
    s: i32,
) -> Vec<(ExtendedAction, f64)> {
    let gamma = mdp.gamma();
    let mut out = Vec::new();
    if !mdp.is_forced(s) {
        let cost = if s == 0 { 0.0 } else { mdp.beta() };
        out.push((ExtendedAction::Stay, cost + gamma * mdp.expected_next(s, v)));
    }
    for d in mdp.min_state() + 1..mdp.max_state() {
        if d == s {
            continue;
        }
        let cost = if d == 0 { 1.0 } else { 1.0 + mdp.beta() };
        out.push((ExtendedAction::MigrateTo(d), cost + gamma * mdp.expected_next(d, v)));
    }
    out
}

/// Value iteration over the enlarged action set, with the same stopping
/// rule as [`crate::baselines::value_iteration`].
pub fn extended_action_value_iteration(mdp: &MigrationMdp, epsilon: f64) -> Result<ExtendedSolution> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidTolerance(epsilon));
    }
    let scale = mdp.gamma() / (1.0 - mdp.gamma());
    let mut v = ValueFunction::zeros(mdp);
    let mut sweeps = 0;
    loop {
        let next = mdp
            .states()
            .map(|s| {
                extended_action_values(mdp, &v, s)
                    .into_iter()
                    .map(|(_, x)| x)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let next = ValueFunction::from_values(mdp, next)?;
        sweeps += 1;
        let delta = next.max_abs_diff(&v);
        v = next;
        if scale * delta <= epsilon {
            return Ok(ExtendedSolution { values: v, sweeps });
        }
    }
}
