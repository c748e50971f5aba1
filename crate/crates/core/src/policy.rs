//! UCB-style policies for combinatorial semi-bandits under local and
//! central differential privacy.
//!
//! All four algorithms share one loop: build an optimistic index
//! `min(mean + radius, 1)` per base arm, hand it to the oracle, observe the
//! chosen arms, update. They differ in the radius and in what the server
//! gets to see:
//!
//! * [`Algorithm::Cucb`]: raw outcomes of every played arm.
//! * [`Algorithm::Ldp1`]: every played arm's outcome plus `Lap(K/eps)`.
//! * [`Algorithm::Ldp2`]: only the least-pulled played arm's outcome plus
//!   `Lap(1/eps)`.
//! * [`Algorithm::Dp`]: raw outcomes, but means are read from per-arm
//!   tree aggregators with `Lap(2 K ceil(log2 T) / eps)` noise per node.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{DecisionSet, RewardFn, SuperArm};
use crate::oracle::OracleSpec;
use crate::privacy::{dp_node_scale, ldp_scale, sample_laplace, LaplaceScale, TreeAggregator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cucb,
    Ldp1,
    Ldp2,
    Dp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Cucb,
        Algorithm::Ldp1,
        Algorithm::Ldp2,
        Algorithm::Dp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cucb => "cucb",
            Algorithm::Ldp1 => "ldp1",
            Algorithm::Ldp2 => "ldp2",
            Algorithm::Dp => "dp",
        }
    }

    pub fn is_private(self) -> bool {
        self != Algorithm::Cucb
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Log term of the sub-Gaussian part of the central-DP radius.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpLogTerm {
    /// `ln(m T)`, as in the algorithm listing.
    #[default]
    MT,
    /// `ln T`, as in the concentration lemma.
    T,
}

fn ln_horizon(horizon: u64) -> f64 {
    (horizon as f64).ln()
}

/// `4 sqrt(2 ln T / T_i)`: non-private baseline radius.
pub fn radius_cucb(t_i: u64, horizon: u64) -> f64 {
    if t_i == 0 {
        return f64::INFINITY;
    }
    4.0 * (2.0 * ln_horizon(horizon) / t_i as f64).sqrt()
}

/// `4 sqrt(2 K ln T / (eps^2 T_i))`.
pub fn radius_ldp1(t_i: u64, horizon: u64, k: usize, epsilon: f64) -> f64 {
    if t_i == 0 {
        return f64::INFINITY;
    }
    4.0 * (2.0 * k as f64 * ln_horizon(horizon) / (epsilon * epsilon * t_i as f64)).sqrt()
}

/// `4 sqrt(2 ln T / (eps^2 T_i))`.
pub fn radius_ldp2(t_i: u64, horizon: u64, epsilon: f64) -> f64 {
    if t_i == 0 {
        return f64::INFINITY;
    }
    4.0 * (2.0 * ln_horizon(horizon) / (epsilon * epsilon * t_i as f64)).sqrt()
}

/// `sqrt(4 ln(m T) / T_i) + 12 K (ln T)^3 / (T_i eps)`.
pub fn radius_dp(t_i: u64, horizon: u64, m: usize, k: usize, epsilon: f64) -> f64 {
    radius_dp_with(t_i, horizon, m, k, epsilon, DpLogTerm::MT)
}

pub fn radius_dp_with(
    t_i: u64,
    horizon: u64,
    m: usize,
    k: usize,
    epsilon: f64,
    log_term: DpLogTerm,
) -> f64 {
    if t_i == 0 {
        return f64::INFINITY;
    }
    let n = t_i as f64;
    let ln_t = ln_horizon(horizon);
    let sub_gaussian_log = match log_term {
        DpLogTerm::MT => (m as f64 * horizon as f64).ln(),
        DpLogTerm::T => ln_t,
    };
    (4.0 * sub_gaussian_log / n).sqrt() + 12.0 * k as f64 * ln_t.powi(3) / (n * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub algorithm: Algorithm,
    /// Privacy budget; ignored (and conventionally infinite) for CUCB.
    pub epsilon: f64,
    pub horizon: u64,
    /// Disable all privacy noise while keeping the private radii.
    pub noiseless: bool,
    pub dp_log_term: DpLogTerm,
}

impl PolicyConfig {
    pub fn new(algorithm: Algorithm, epsilon: f64, horizon: u64) -> Self {
        PolicyConfig {
            algorithm,
            epsilon,
            horizon,
            noiseless: false,
            dp_log_term: DpLogTerm::default(),
        }
    }

    pub fn noiseless(mut self, on: bool) -> Self {
        self.noiseless = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.algorithm.is_private() && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "{} needs a finite epsilon > 0, got {} (use cucb for the non-private baseline)",
                self.algorithm, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Semi-bandit observation for one round: outcomes of exactly the played
/// arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub round: u64,
    pub chosen: SuperArm,
    pub outcomes: Vec<(usize, f64)>,
}

impl Feedback {
    pub fn new(round: u64, chosen: SuperArm, outcomes: Vec<(usize, f64)>) -> Result<Self> {
        if outcomes.len() != chosen.len()
            || outcomes
                .iter()
                .zip(chosen.iter())
                .any(|(&(i, _), c)| i != c)
        {
            return Err(Error::InvalidInput(
                "feedback must list exactly the chosen arms in order".into(),
            ));
        }
        if let Some(&(i, x)) = outcomes.iter().find(|(_, x)| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidInput(format!(
                "outcome of arm {i} is {x}, outside [0, 1]"
            )));
        }
        Ok(Feedback {
            round,
            chosen,
            outcomes,
        })
    }

    /// Restricts a full outcome vector to the chosen arms.
    pub fn from_outcome(round: u64, chosen: SuperArm, x: &[f64]) -> Result<Self> {
        if let Some(bad) = chosen.iter().find(|&i| i >= x.len()) {
            return Err(Error::InvalidInput(format!(
                "arm {bad} outside outcome vector"
            )));
        }
        let outcomes = chosen.iter().map(|i| (i, x[i])).collect();
        Self::new(round, chosen, outcomes)
    }
}

/// Concentration events that can be audited against the true means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageEvent {
    /// `|mean - mu| <= radius` using the policy's own (non-DP) radius.
    LambdaLdp,
    /// `|signal_sum / T_i - mu| <= sqrt(4 ln T / T_i)` on noise-free sums.
    Lambda1,
    /// `|noise / T_i| <= 12 K (ln T)^3 / (T_i eps)` on the tree noise.
    Lambda2,
}

/// Per-arm outcome of one coverage audit. Arms never pulled are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationRecord {
    pub checked: usize,
    pub violated: Vec<usize>,
}

impl ViolationRecord {
    pub fn any(&self) -> bool {
        !self.violated.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Estimator {
    /// Running sums of the observations the server received.
    Running { received: Vec<f64> },
    /// One private prefix-sum tree per arm.
    Trees(Vec<TreeAggregator>),
}

/// Mutable state of one policy over one run.
#[derive(Debug, Clone)]
pub struct Policy {
    config: PolicyConfig,
    m: usize,
    k: usize,
    rounds: u64,
    pending: Option<SuperArm>,
    pull_counts: Vec<u64>,
    means: Vec<f64>,
    signal_sums: Vec<f64>,
    estimator: Estimator,
    noise_scale: Option<LaplaceScale>,
    noise_draws: u64,
    fallbacks: u64,
    index_buf: Vec<f64>,
}

impl Policy {
    pub fn new(config: PolicyConfig, m: usize, k: usize) -> Result<Self> {
        config.validate()?;
        if m == 0 || k == 0 {
            return Err(Error::Config("policy needs m >= 1 and K >= 1".into()));
        }
        let horizon = usize::try_from(config.horizon)
            .map_err(|_| Error::Config("horizon does not fit in memory".into()))?;
        let (estimator, noise_scale) = match config.algorithm {
            Algorithm::Cucb => (
                Estimator::Running {
                    received: vec![0.0; m],
                },
                None,
            ),
            Algorithm::Ldp1 => (
                Estimator::Running {
                    received: vec![0.0; m],
                },
                Some(ldp_scale(k as f64, config.epsilon)?),
            ),
            Algorithm::Ldp2 => (
                Estimator::Running {
                    received: vec![0.0; m],
                },
                Some(ldp_scale(1.0, config.epsilon)?),
            ),
            Algorithm::Dp => {
                let scale = dp_node_scale(k, horizon, config.epsilon)?;
                let trees = (0..m)
                    .map(|_| {
                        if config.noiseless {
                            TreeAggregator::noiseless(horizon)
                        } else {
                            TreeAggregator::new(horizon, scale)
                        }
                    })
                    .collect::<Result<_>>()?;
                (Estimator::Trees(trees), Some(scale))
            }
        };
        Ok(Policy {
            config,
            m,
            k,
            rounds: 0,
            pending: None,
            pull_counts: vec![0; m],
            means: vec![0.0; m],
            signal_sums: vec![0.0; m],
            estimator,
            noise_scale: if config.noiseless { None } else { noise_scale },
            noise_draws: 0,
            fallbacks: 0,
            index_buf: vec![0.0; m],
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    /// Current (noisy) mean estimates.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Noise scale applied per observation (LDP) or per tree node (DP);
    /// `None` when noise is off.
    pub fn noise_scale(&self) -> Option<LaplaceScale> {
        self.noise_scale
    }

    /// Laplace draws made so far, across all arms.
    pub fn noise_draws(&self) -> u64 {
        match &self.estimator {
            Estimator::Trees(trees) => trees.iter().map(TreeAggregator::draws).sum(),
            Estimator::Running { .. } => self.noise_draws,
        }
    }

    /// Rounds where a negative index forced a random feasible choice.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    pub fn tree(&self, arm: usize) -> Option<&TreeAggregator> {
        match &self.estimator {
            Estimator::Trees(trees) => trees.get(arm),
            Estimator::Running { .. } => None,
        }
    }

    /// Sum of the true outcomes observed for `arm` (diagnostics only).
    pub fn signal_sum(&self, arm: usize) -> f64 {
        self.signal_sums[arm]
    }

    /// Total privacy noise currently inside the estimate of `arm`.
    pub fn noise_total(&self, arm: usize) -> f64 {
        match &self.estimator {
            Estimator::Running { received } => received[arm] - self.signal_sums[arm],
            Estimator::Trees(trees) => {
                let n = self.pull_counts[arm] as usize;
                if n == 0 {
                    0.0
                } else {
                    trees[arm].noise_at(n).expect("count within tree")
                }
            }
        }
    }

    /// Exploration radius of `arm` at its current pull count.
    pub fn radius(&self, arm: usize) -> f64 {
        let n = self.pull_counts[arm];
        let c = &self.config;
        match c.algorithm {
            Algorithm::Cucb => radius_cucb(n, c.horizon),
            Algorithm::Ldp1 => radius_ldp1(n, c.horizon, self.k, c.epsilon),
            Algorithm::Ldp2 => radius_ldp2(n, c.horizon, c.epsilon),
            Algorithm::Dp => radius_dp_with(n, c.horizon, self.m, self.k, c.epsilon, c.dp_log_term),
        }
    }

    /// Optimistic indices `min(mean + radius, 1)`.
    pub fn indices(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.index(i)).collect()
    }

    fn index(&self, arm: usize) -> f64 {
        (self.means[arm] + self.radius(arm)).min(1.0)
    }

    /// Picks this round's super arm. Falls back to a uniformly random
    /// feasible super arm when any index is negative.
    pub fn select<R: Rng + ?Sized>(
        &mut self,
        oracle: &OracleSpec,
        ds: &DecisionSet,
        reward: &RewardFn,
        rng: &mut R,
    ) -> Result<SuperArm> {
        if self.rounds >= self.config.horizon {
            return Err(Error::Lifecycle(format!(
                "select called after the horizon of {} rounds",
                self.config.horizon
            )));
        }
        if ds.m() != self.m {
            return Err(Error::InvalidInput(format!(
                "decision set has {} arms, policy has {}",
                ds.m(),
                self.m
            )));
        }
        let mut buf = std::mem::take(&mut self.index_buf);
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = self.index(i);
        }
        let chosen = if buf.iter().all(|&v| v >= 0.0) {
            oracle.solve(ds, reward, &buf, rng)
        } else {
            self.fallbacks += 1;
            Ok(ds.random_member(rng))
        };
        self.index_buf = buf;
        let chosen = chosen?;
        self.pending = Some(chosen.clone());
        Ok(chosen)
    }

    pub fn update<R: Rng + ?Sized>(&mut self, feedback: &Feedback, rng: &mut R) -> Result<()> {
        match self.pending.take() {
            Some(p) if p == feedback.chosen => {}
            Some(p) => {
                self.pending = Some(p);
                return Err(Error::InvalidInput(
                    "feedback does not match the selected super arm".into(),
                ));
            }
            None => {
                return Err(Error::Lifecycle(
                    "update called without a pending select".into(),
                ))
            }
        }
        match self.config.algorithm {
            Algorithm::Cucb | Algorithm::Ldp1 => {
                for &(i, x) in &feedback.outcomes {
                    self.observe_running(i, x, rng);
                }
            }
            Algorithm::Ldp2 => {
                let &(i, x) = feedback
                    .outcomes
                    .iter()
                    .min_by_key(|(i, _)| self.pull_counts[*i])
                    .expect("super arms are nonempty");
                self.observe_running(i, x, rng);
            }
            Algorithm::Dp => {
                for &(i, x) in &feedback.outcomes {
                    self.observe_tree(i, x, rng)?;
                }
            }
        }
        self.rounds += 1;
        Ok(())
    }

    /// Applies feedback for a super arm chosen elsewhere, skipping the
    /// pending-select check. Lets two estimators be compared on identical
    /// data.
    pub fn replay<R: Rng + ?Sized>(&mut self, feedback: &Feedback, rng: &mut R) -> Result<()> {
        if self.rounds >= self.config.horizon {
            return Err(Error::Lifecycle(format!(
                "replay past the horizon of {} rounds",
                self.config.horizon
            )));
        }
        if let Some(bad) = feedback.chosen.iter().find(|&i| i >= self.m) {
            return Err(Error::InvalidInput(format!(
                "arm {bad} outside the policy's {} arms",
                self.m
            )));
        }
        self.pending = Some(feedback.chosen.clone());
        self.update(feedback, rng)
    }

    fn observe_running<R: Rng + ?Sized>(&mut self, arm: usize, x: f64, rng: &mut R) {
        let y = match self.noise_scale {
            Some(scale) => {
                self.noise_draws += 1;
                x + sample_laplace(scale, rng)
            }
            None => x,
        };
        let Estimator::Running { received } = &mut self.estimator else {
            unreachable!()
        };
        received[arm] += y;
        self.signal_sums[arm] += x;
        self.pull_counts[arm] += 1;
        self.means[arm] = received[arm] / self.pull_counts[arm] as f64;
    }

    fn observe_tree<R: Rng + ?Sized>(&mut self, arm: usize, x: f64, rng: &mut R) -> Result<()> {
        let Estimator::Trees(trees) = &mut self.estimator else {
            unreachable!()
        };
        trees[arm].insert(x, rng)?;
        self.signal_sums[arm] += x;
        self.pull_counts[arm] += 1;
        let n = self.pull_counts[arm];
        self.means[arm] = trees[arm].query(n as usize)? / n as f64;
        Ok(())
    }

    /// Audits one concentration event for every pulled arm against the
    /// true means.
    pub fn coverage_check(&self, true_mu: &[f64], event: CoverageEvent) -> Result<ViolationRecord> {
        if true_mu.len() != self.m {
            return Err(Error::InvalidInput(format!(
                "true mean vector has length {}, policy has {} arms",
                true_mu.len(),
                self.m
            )));
        }
        match (event, self.config.algorithm) {
            (CoverageEvent::LambdaLdp, Algorithm::Dp) => {
                return Err(Error::Config(
                    "the LDP concentration event does not apply to the DP policy".into(),
                ))
            }
            (CoverageEvent::Lambda2, a) if a != Algorithm::Dp => {
                return Err(Error::Config(format!(
                    "the tree-noise event only applies to the DP policy, not {a}"
                )))
            }
            _ => {}
        }
        let ln_t = ln_horizon(self.config.horizon);
        let mut record = ViolationRecord::default();
        for (i, &n) in self.pull_counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let nf = n as f64;
            let ok = match event {
                CoverageEvent::LambdaLdp => (self.means[i] - true_mu[i]).abs() <= self.radius(i),
                CoverageEvent::Lambda1 => {
                    (self.signal_sums[i] / nf - true_mu[i]).abs() <= (4.0 * ln_t / nf).sqrt()
                }
                CoverageEvent::Lambda2 => {
                    (self.noise_total(i) / nf).abs()
                        <= 12.0 * self.k as f64 * ln_t.powi(3) / (nf * self.config.epsilon)
                }
            };
            record.checked += 1;
            if !ok {
                record.violated.push(i);
            }
        }
        Ok(record)
    }

    /// Right-hand side of the per-round gap bound for the DP policy,
    /// `b1 * sum_{i in S} (4 sqrt(ln T / T_i) + 24 K (ln T)^3 / (T_i eps))`,
    /// evaluated at the current (pre-update) pull counts.
    pub fn gap_bound(&self, s: &SuperArm, b1: f64) -> f64 {
        let ln_t = ln_horizon(self.config.horizon);
        let eps = self.config.epsilon;
        b1 * s
            .iter()
            .map(|i| {
                let n = self.pull_counts[i];
                if n == 0 {
                    return f64::INFINITY;
                }
                let n = n as f64;
                4.0 * (ln_t / n).sqrt() + 24.0 * self.k as f64 * ln_t.powi(3) / (n * eps)
            })
            .sum::<f64>()
    }
}
