//! Combinatorial semi-bandits under local and central differential privacy.
//!
//! * [`instance`]: super arms, decision sets, reward functions, gaps.
//! * [`privacy`]: Laplace mechanism and the tree-based prefix-sum counter.
//! * [`oracle`]: exact, K-path and greedy coverage oracles.
//! * [`policy`]: CUCB and its LDP / DP variants.
//! * [`env`]: Bernoulli environments and hard-instance factories.
//! * [`harness`]: runs, sweeps, regret curves, CSV/JSON output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod policy;
pub mod privacy;
pub mod rng;

pub use error::{Error, Result};
pub use instance::{DecisionSet, GapProfile, InstanceSpec, RewardFn, SuperArm};
pub use oracle::{flaky_wrap, OracleKind, OracleSpec};
pub use policy::{Algorithm, Feedback, Policy, PolicyConfig};
pub use privacy::{LaplaceScale, TreeAggregator};
