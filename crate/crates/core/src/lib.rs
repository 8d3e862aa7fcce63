//! Solvers for the service-migration MDP driven by a one-dimensional random
//! walk of the user.
//!
//! The state is the offset between the user and the cloud hosting its
//! service. Serving remotely costs `beta` per slot, migrating costs 1, and
//! offsets `M` and `N` force a migration. The optimal policy has threshold
//! form: stay while the offset is inside a band `[k1, k2]` around 0, migrate
//! otherwise.
//!
//! - [`mdp`]: the instance, slot costs and the Bellman backup.
//! - [`threshold`]: exact evaluation of a threshold pair and the
//!   optimal-threshold search.
//! - [`baselines`]: value iteration, policy iteration, fixed policies.
//! - [`oracle`]: brute-force verifiers.
//! - [`sim`]: Monte-Carlo estimation of discounted cost.
//!
//! ```
//! use migration_mdp::{find_optimal_thresholds, MigrationMdp};
//!
//! let mdp = MigrationMdp::new(0.3, 0.2, -10, 10, 0.5, 0.9)?;
//! let best = find_optimal_thresholds(&mdp)?;
//! println!("thresholds {} cost from 0: {:.4}", best.thresholds, best.values.get(0));
//! # Ok::<(), migration_mdp::Error>(())
//! ```

pub mod baselines;
mod error;
pub mod linalg;
pub mod mdp;
pub mod oracle;
pub mod sim;
pub mod threshold;

pub use baselines::{
    always_migrate_policy, evaluate_fixed_policy, never_migrate_policy, policy_iteration,
    policy_iteration_from,
    value_iteration, SolverReport,
};
pub use error::{Error, Result};
pub use mdp::{bellman_backup, Action, MigrationMdp, MoveDistribution, StatePolicy, ValueFunction};
pub use oracle::{exhaustive_threshold_search, extended_action_value_iteration, is_threshold_policy};
pub use sim::{monte_carlo_value, sample_trajectory, McEstimate, RngStream, Trajectory};
pub use threshold::{
    build_policy_system, evaluate_thresholds, find_optimal_thresholds, ThresholdPair,
    ThresholdSolveResult,
};

// The book's listings run as doctests, one module per chapter so a failure
// points at its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/threshold-evaluation.md")]
    mod threshold_evaluation {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
