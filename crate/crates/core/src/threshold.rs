//! Threshold policies: exact evaluation and the optimal-threshold search.
//!
//! A threshold pair `(k1, k2)` with `M < k1 <= 0 <= k2 < N` keeps the service
//! in place while the offset stays inside `[k1, k2]` and migrates otherwise.
//! Outside the band every state migrates, so all states `s <= k1 - 1` share one
//! value, as do all states `s >= k2 + 1`. Evaluation therefore only solves for
//! the window `k1 - 1 ..= k2 + 1` and copies the edge values outwards.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, DenseMatrix, DenseVector};
use crate::mdp::{Action, MigrationMdp, StatePolicy, ValueFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThresholdPair {
    lower: i32,
    upper: i32,
}

impl ThresholdPair {
    /// Requires `M < lower <= 0 <= upper < N`.
    pub fn new(mdp: &MigrationMdp, lower: i32, upper: i32) -> Result<Self> {
        if lower > mdp.min_state() && lower <= 0 && upper >= 0 && upper < mdp.max_state() {
            Ok(Self { lower, upper })
        } else {
            Err(Error::InvalidThresholds {
                lower,
                upper,
                min: mdp.min_state(),
                max: mdp.max_state(),
            })
        }
    }

    /// `(0, 0)`: migrate at every nonzero offset.
    pub fn always_migrate() -> Self {
        Self { lower: 0, upper: 0 }
    }

    /// `(M + 1, N - 1)`: migrate only where forced.
    pub fn never_migrate(mdp: &MigrationMdp) -> Self {
        Self {
            lower: mdp.min_state() + 1,
            upper: mdp.max_state() - 1,
        }
    }

    /// `k1`, the lowest offset that is still served remotely.
    pub fn lower(&self) -> i32 {
        self.lower
    }

    /// `k2`, the highest offset that is still served remotely.
    pub fn upper(&self) -> i32 {
        self.upper
    }

    pub fn action(&self, s: i32) -> Action {
        if (self.lower..=self.upper).contains(&s) {
            Action::NoMigrate
        } else {
            Action::Migrate
        }
    }

    pub fn to_policy(&self, mdp: &MigrationMdp) -> StatePolicy {
        StatePolicy::from_fn(mdp, |s| self.action(s))
    }

    /// Every feasible pair, ordered by `|k1|` and then `k2`.
    pub fn all(mdp: &MigrationMdp) -> impl Iterator<Item = ThresholdPair> {
        let (min, max) = (mdp.min_state(), mdp.max_state());
        (0..-min).flat_map(move |a| (0..max).map(move |upper| ThresholdPair { lower: -a, upper }))
    }

    /// `|M| * N`.
    pub fn count(mdp: &MigrationMdp) -> usize {
        (-mdp.min_state()) as usize * mdp.max_state() as usize
    }

    /// Number of states in the evaluation window, `k2 - k1 + 3`.
    pub fn window_len(&self) -> usize {
        (self.upper - self.lower + 3) as usize
    }
}

impl fmt::Display for ThresholdPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// Transition matrix and cost vector of a threshold policy on its window.
///
/// Row and column `i` correspond to state `k1 - 1 + i`. The two edge rows
/// migrate, so they carry the kernel from state 0; the interior rows carry the
/// random-walk kernel of their own state.
pub fn build_policy_system(mdp: &MigrationMdp, t: ThresholdPair) -> (DenseMatrix, DenseVector) {
    let first = t.lower - 1;
    let last = t.upper + 1;
    assert!(
        first >= mdp.min_state() && last <= mdp.max_state(),
        "window [{first}, {last}] exceeds the state range"
    );
    let n = t.window_len();
    let col = |s: i32| {
        debug_assert!((first..=last).contains(&s));
        (s - first) as usize
    };
    let kernel = mdp.movement().as_array();

    let mut p = DenseMatrix::zeros(n, n);
    let mut c = vec![0.0; n];
    for s in first..=last {
        let row = col(s);
        let origin = if s == first || s == last {
            c[row] = 1.0;
            0
        } else {
            c[row] = if s == 0 { 0.0 } else { mdp.beta() };
            s
        };
        for (step, &prob) in (-1..=1).zip(&kernel) {
            p[(row, col(origin + step))] += prob;
        }
    }
    (p, c)
}

/// Exact discounted cost of the threshold policy `t` from every state.
pub fn evaluate_thresholds(mdp: &MigrationMdp, t: ThresholdPair) -> Result<ValueFunction> {
    let (p, c) = build_policy_system(mdp, t);
    let window = solve_dense(&p.identity_minus_scaled(mdp.gamma()), &c)?;
    let first = t.lower - 1;
    let last = t.upper + 1;
    let values = mdp
        .states()
        .map(|s| window[(s.clamp(first, last) - first) as usize])
        .collect();
    ValueFunction::from_values(mdp, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSolveResult {
    pub thresholds: ThresholdPair,
    pub values: ValueFunction,
    pub outer_iterations: usize,
    pub linear_solves: usize,
    /// Thresholds evaluated at the start of each outer iteration, in order.
    pub history: Vec<ThresholdPair>,
}

/// Largest number of outer iterations the search can take: `|M| * N + 1`.
pub fn outer_iteration_bound(mdp: &MigrationMdp) -> usize {
    ThresholdPair::count(mdp) + 1
}

/// Searches for the optimal thresholds by threshold-restricted policy
/// iteration.
///
/// Starting from `(0, 0)`, each outer iteration evaluates the current pair
/// exactly, then for each side decides whether migrating at the current
/// threshold beats staying. If it does, the threshold steps toward 0 and the
/// scan keeps moving it inward while migrating stays strictly better. If it
/// does not, the scan moves outward, adopting each state where staying is
/// strictly better. A strictly worse state ends the scan; equality neither
/// updates nor stops it. The search ends once a full iteration leaves the
/// pair unchanged.
pub fn find_optimal_thresholds(mdp: &MigrationMdp) -> Result<ThresholdSolveResult> {
    let limit = outer_iteration_bound(mdp);
    let (min, max) = (mdp.min_state(), mdp.max_state());
    let mut k = [0i32, 0i32];
    let mut history = Vec::new();
    let mut linear_solves = 0;

    loop {
        if history.len() == limit {
            return Err(Error::IterationLimit {
                solver: "threshold search",
                limit,
            });
        }
        let previous = k;
        let current = ThresholdPair {
            lower: k[0],
            upper: k[1],
        };
        history.push(current);
        let v = evaluate_thresholds(mdp, current)?;
        linear_solves += 1;
        let migrate = mdp.migrate_value(&v);

        for side in 0..2 {
            let ki = k[side];
            // Scan states toward 0 (inward) or toward the boundary (outward).
            let (inward, scan): (bool, Vec<i32>) = if migrate < v.get(ki) {
                let scan = if side == 0 {
                    (ki + 1..=0).collect()
                } else {
                    (0..ki).rev().collect()
                };
                k[side] -= ki.signum();
                (true, scan)
            } else {
                let scan = if side == 0 {
                    (min + 1..ki).rev().collect()
                } else {
                    (ki + 1..max).collect()
                };
                (false, scan)
            };

            for s in scan {
                let candidate = if inward { migrate } else { mdp.stay_value(s, &v) };
                if candidate < v.get(s) {
                    k[side] = if inward { s - s.signum() } else { s };
                } else if candidate > v.get(s) {
                    break;
                }
            }
        }

        if k == previous {
            return Ok(ThresholdSolveResult {
                thresholds: current,
                values: v,
                outer_iterations: history.len(),
                linear_solves,
                history,
            });
        }
    }
}
