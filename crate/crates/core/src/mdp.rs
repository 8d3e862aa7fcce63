//! The two-action migration MDP over offset states `[M, N]`.
//!
//! A state `s` is the offset between the user's area and the area of the
//! cloud hosting its service, observed at the start of a slot. Each slot the
//! controller either leaves the service in place ([`Action::NoMigrate`]) or
//! moves it to the user ([`Action::Migrate`]), after which the user takes one
//! random-walk step. States `M` and `N` force a migration.
//!
//! Every per-state array in this crate stores state `s` at index `s - M`.

use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// A validated problem instance. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MigrationMdp {
    p: f64,
    q: f64,
    min_state: i32,
    max_state: i32,
    beta: f64,
    gamma: f64,
}

impl MigrationMdp {
    /// Validates the raw parameters.
    ///
    /// `p` and `q` are the per-slot probabilities of the offset moving up and
    /// down by one, `min_state`/`max_state` are the forced-migration offsets
    /// `M < 0 < N`, `beta` is the per-slot transmission cost (in units of the
    /// migration cost) and `gamma` the discount factor.
    pub fn new(
        p: f64,
        q: f64,
        min_state: i32,
        max_state: i32,
        beta: f64,
        gamma: f64,
    ) -> Result<Self> {
        // Written as negated comparisons so that NaN is rejected too.
        if !(p >= 0.0 && q >= 0.0 && p + q <= 1.0) {
            return Err(Error::InvalidProbability { p, q });
        }
        if min_state >= 0 || max_state <= 0 {
            return Err(Error::InvalidBounds {
                min: min_state,
                max: max_state,
            });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidDiscount(gamma));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidCost(beta));
        }
        Ok(Self {
            p,
            q,
            min_state,
            max_state,
            beta,
            gamma,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `M`, the most negative offset.
    pub fn min_state(&self) -> i32 {
        self.min_state
    }

    /// `N`, the most positive offset.
    pub fn max_state(&self) -> i32 {
        self.max_state
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same instance with a different transmission cost.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.p, self.q, self.min_state, self.max_state, beta, self.gamma)
    }

    /// `|M| + N + 1`.
    pub fn num_states(&self) -> usize {
        (self.max_state - self.min_state + 1) as usize
    }

    pub fn states(&self) -> RangeInclusive<i32> {
        self.min_state..=self.max_state
    }

    pub fn contains(&self, s: i32) -> bool {
        self.states().contains(&s)
    }

    /// Array index of state `s`. Panics if `s` is outside `[M, N]`.
    pub fn index(&self, s: i32) -> usize {
        assert!(self.contains(s), "state {s} outside [{}, {}]", self.min_state, self.max_state);
        (s - self.min_state) as usize
    }

    pub fn state_at(&self, index: usize) -> i32 {
        self.min_state + index as i32
    }

    pub fn is_forced(&self, s: i32) -> bool {
        s == self.min_state || s == self.max_state
    }

    fn check_state(&self, s: i32) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                state: s,
                min: self.min_state,
                max: self.max_state,
            })
        }
    }

    /// The one-step movement kernel `(q, 1 - p - q, p)`.
    pub fn movement(&self) -> MoveDistribution {
        MoveDistribution {
            down: self.q,
            stay: (1.0 - (self.p + self.q)).max(0.0),
            up: self.p,
        }
    }

    /// Cost paid in state `s` when taking action `a`: zero at the origin,
    /// `beta` for serving remotely, one for migrating.
    pub fn slot_cost(&self, s: i32, a: Action) -> Result<f64> {
        self.check_state(s)?;
        if a == Action::NoMigrate && self.is_forced(s) {
            return Err(Error::ForbiddenAction(s));
        }
        Ok(match (s, a) {
            (0, _) => 0.0,
            (_, Action::NoMigrate) => self.beta,
            (_, Action::Migrate) => 1.0,
        })
    }

    /// `1 + gamma * sum_j p_{0j} V(j)`: the value of migrating from any
    /// nonzero state. It does not depend on the state.
    pub fn migrate_value(&self, v: &ValueFunction) -> f64 {
        1.0 + self.gamma * self.expected_next(0, v)
    }

    /// `beta + gamma * sum_j p_{sj} V(j)` for an interior, nonzero `s`.
    /// At `s = 0` the cost term is zero.
    pub fn stay_value(&self, s: i32, v: &ValueFunction) -> f64 {
        debug_assert!(!self.is_forced(s));
        let cost = if s == 0 { 0.0 } else { self.beta };
        cost + self.gamma * self.expected_next(s, v)
    }

    /// `sum_j p_{sj} V(j)` for the random-walk step taken from offset `s`.
    pub(crate) fn expected_next(&self, s: i32, v: &ValueFunction) -> f64 {
        let m = self.movement();
        m.down * v.get(s - 1) + m.stay * v.get(s) + m.up * v.get(s + 1)
    }
}

/// Probabilities of the offset moving down, staying, and moving up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveDistribution {
    pub down: f64,
    pub stay: f64,
    pub up: f64,
}

impl MoveDistribution {
    pub fn as_array(&self) -> [f64; 3] {
        [self.down, self.stay, self.up]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Action {
    NoMigrate = 0,
    Migrate = 1,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Discounted cost per state over `[M, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    min_state: i32,
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(mdp: &MigrationMdp) -> Self {
        Self {
            min_state: mdp.min_state(),
            values: vec![0.0; mdp.num_states()],
        }
    }

    /// Wraps raw values, stored with state `M` first.
    pub fn from_values(mdp: &MigrationMdp, values: Vec<f64>) -> Result<Self> {
        if values.len() != mdp.num_states() {
            return Err(Error::Dimension(format!(
                "value function has {} entries, instance has {} states",
                values.len(),
                mdp.num_states()
            )));
        }
        Ok(Self {
            min_state: mdp.min_state(),
            values,
        })
    }

    /// Value at state `s`. Panics outside the state range.
    pub fn get(&self, s: i32) -> f64 {
        self.values[(s - self.min_state) as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn min_state(&self) -> i32 {
        self.min_state
    }

    pub fn max_state(&self) -> i32 {
        self.min_state + self.values.len() as i32 - 1
    }

    /// `(state, value)` pairs in increasing state order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        let min = self.min_state;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (min + i as i32, v))
    }

    /// Sup-norm distance. Panics if the state ranges differ.
    pub fn max_abs_diff(&self, other: &ValueFunction) -> f64 {
        assert_eq!(self.min_state, other.min_state);
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One action per state over `[M, N]`, with migration forced at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StatePolicy {
    min_state: i32,
    actions: Vec<Action>,
}

impl StatePolicy {
    pub fn new(mdp: &MigrationMdp, actions: Vec<Action>) -> Result<Self> {
        if actions.len() != mdp.num_states() {
            return Err(Error::PolicyLength {
                expected: mdp.num_states(),
                got: actions.len(),
            });
        }
        if actions[0] != Action::Migrate {
            return Err(Error::ForbiddenAction(mdp.min_state()));
        }
        if actions[actions.len() - 1] != Action::Migrate {
            return Err(Error::ForbiddenAction(mdp.max_state()));
        }
        Ok(Self {
            min_state: mdp.min_state(),
            actions,
        })
    }

    /// Builds a policy from a per-state rule; the rule is ignored at the
    /// forced states.
    pub fn from_fn(mdp: &MigrationMdp, mut rule: impl FnMut(i32) -> Action) -> Self {
        let actions = mdp
            .states()
            .map(|s| if mdp.is_forced(s) { Action::Migrate } else { rule(s) })
            .collect();
        Self {
            min_state: mdp.min_state(),
            actions,
        }
    }

    pub fn action(&self, s: i32) -> Action {
        self.actions[(s - self.min_state) as usize]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn min_state(&self) -> i32 {
        self.min_state
    }

    pub fn max_state(&self) -> i32 {
        self.min_state + self.actions.len() as i32 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, Action)> + '_ {
        let min = self.min_state;
        self.actions
            .iter()
            .enumerate()
            .map(move |(i, &a)| (min + i as i32, a))
    }

    /// Copy with the action at `s = 0` set to `NoMigrate`. Both actions cost
    /// nothing there and lead to the same next-state distribution.
    pub fn canonicalized(&self) -> Self {
        let mut out = self.clone();
        out.actions[(-self.min_state) as usize] = Action::NoMigrate;
        out
    }
}

impl fmt::Display for StatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.actions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// One application of the Bellman optimality operator.
///
/// Returns the backed-up values together with the greedy policy. Ties between
/// staying and migrating resolve to `NoMigrate`, and state 0 always reports
/// `NoMigrate`.
pub fn bellman_backup(mdp: &MigrationMdp, v: &ValueFunction) -> (ValueFunction, StatePolicy) {
    let migrate = mdp.migrate_value(v);
    let mut values = Vec::with_capacity(mdp.num_states());
    let mut actions = Vec::with_capacity(mdp.num_states());
    for s in mdp.states() {
        let (value, action) = if mdp.is_forced(s) {
            (migrate, Action::Migrate)
        } else if s == 0 {
            (mdp.stay_value(0, v), Action::NoMigrate)
        } else {
            let stay = mdp.stay_value(s, v);
            if migrate < stay {
                (migrate, Action::Migrate)
            } else {
                (stay, Action::NoMigrate)
            }
        };
        values.push(value);
        actions.push(action);
    }
    (
        ValueFunction {
            min_state: mdp.min_state(),
            values,
        },
        StatePolicy {
            min_state: mdp.min_state(),
            actions,
        },
    )
}
