//! Problem instances for combinatorial semi-bandits.
//!
//! An instance is a set of `m` base arms with Bernoulli means `mu`, a
//! decision set of feasible super arms (subsets of at most `K` base arms),
//! and a reward function mapping a super arm and an outcome vector to a
//! real reward. The expected reward `r_mu(S)` is the mean of the realized
//! reward when outcomes are independent Bernoulli draws.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest arm count for which "all subsets of size at most K" is
/// materialized as an explicit list.
pub const MAX_ENUMERABLE_ARMS: usize = 16;

/// A feasible action: a nonempty set of distinct base-arm indices, kept
/// sorted so that derived ordering is the lexicographic arm-id order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuperArm(Vec<usize>);

impl SuperArm {
    pub fn new(mut ids: Vec<usize>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidInput("super arm must be nonempty".into()));
        }
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "super arm has duplicate arm ids: {ids:?}"
            )));
        }
        Ok(SuperArm(ids))
    }

    pub fn arms(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.0.binary_search(&arm).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

/// Structural tag of a decision set. Oracles use it to check that they are
/// compatible with the feasible region they are asked to search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    /// Arbitrary explicit list.
    Explicit,
    /// `m / K` disjoint paths of `K` consecutive arms.
    KPath,
    /// One optimal super arm plus suboptimal super arms sharing `K - 1`
    /// public arms.
    PublicArm,
    /// Every subset of size `1..=K`.
    Subsets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    m: usize,
    k: usize,
    structure: Structure,
    /// `None` only for subset families too large to enumerate.
    members: Option<Vec<SuperArm>>,
}

impl DecisionSet {
    pub fn explicit(m: usize, members: Vec<SuperArm>) -> Result<Self> {
        let k = members.iter().map(SuperArm::len).max().unwrap_or(0);
        Self::build(m, k, Structure::Explicit, members)
    }

    pub fn k_path(m: usize, k: usize) -> Result<Self> {
        if k == 0 || m == 0 || !m.is_multiple_of(k) {
            return Err(Error::Config(format!(
                "K-path needs m divisible by K (m = {m}, K = {k})"
            )));
        }
        let members = (0..m / k)
            .map(|p| SuperArm((p * k..(p + 1) * k).collect()))
            .collect();
        Self::build(m, k, Structure::KPath, members)
    }

    pub fn public_arm(m: usize, k: usize) -> Result<Self> {
        if k == 0 || m < 2 * k {
            return Err(Error::Config(format!(
                "public-arm instance needs m >= 2K (m = {m}, K = {k})"
            )));
        }
        let mut members = vec![SuperArm((0..k).collect())];
        for extra in 2 * k - 1..m {
            let mut ids: Vec<usize> = (k..2 * k - 1).collect();
            ids.push(extra);
            members.push(SuperArm(ids));
        }
        Self::build(m, k, Structure::PublicArm, members)
    }

    /// All nonempty subsets of at most `k` arms. Materialized when
    /// `m <= MAX_ENUMERABLE_ARMS`, otherwise kept as a descriptor.
    pub fn subsets(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 || k > m {
            return Err(Error::Config(format!(
                "subset family needs 1 <= K <= m (m = {m}, K = {k})"
            )));
        }
        if m > MAX_ENUMERABLE_ARMS {
            return Ok(DecisionSet {
                m,
                k,
                structure: Structure::Subsets,
                members: None,
            });
        }
        let mut members: Vec<SuperArm> = (1u32..1 << m)
            .filter(|mask| mask.count_ones() as usize <= k)
            .map(|mask| SuperArm((0..m).filter(|i| mask >> i & 1 == 1).collect()))
            .collect();
        members.sort();
        Self::build(m, k, Structure::Subsets, members)
    }

    fn build(m: usize, k: usize, structure: Structure, members: Vec<SuperArm>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("decision set must be nonempty".into()));
        }
        for s in &members {
            if s.len() > k {
                return Err(Error::InvalidInput(format!(
                    "super arm {:?} exceeds K = {k}",
                    s.arms()
                )));
            }
            if let Some(&bad) = s.arms().iter().find(|&&i| i >= m) {
                return Err(Error::InvalidInput(format!(
                    "arm id {bad} out of range (m = {m})"
                )));
            }
        }
        Ok(DecisionSet {
            m,
            k,
            structure,
            members: Some(members),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn is_enumerable(&self) -> bool {
        self.members.is_some()
    }

    pub fn members(&self) -> Result<&[SuperArm]> {
        self.members.as_deref().ok_or_else(|| {
            Error::Unsupported(format!(
                "decision set over {} arms is not enumerable",
                self.m
            ))
        })
    }

    pub fn contains(&self, s: &SuperArm) -> bool {
        match &self.members {
            Some(list) => list.contains(s),
            None => s.len() <= self.k && s.arms().iter().all(|&i| i < self.m),
        }
    }

    /// Uniformly random feasible super arm.
    pub fn random_member<R: Rng + ?Sized>(&self, rng: &mut R) -> SuperArm {
        match &self.members {
            Some(list) => list[rng.random_range(0..list.len())].clone(),
            None => {
                // Pick the size with probability proportional to C(m, size),
                // then a uniform subset of that size.
                let weights: Vec<f64> = (1..=self.k).map(|s| binomial(self.m, s)).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut size = self.k;
                for (idx, w) in weights.iter().enumerate() {
                    if u < *w {
                        size = idx + 1;
                        break;
                    }
                    u -= w;
                }
                let ids = sample(rng, self.m, size).into_vec();
                SuperArm::new(ids).expect("sampled indices are distinct")
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Bipartite graph from base arms to items for probabilistic coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGraph {
    num_items: usize,
    /// Items reachable from each arm.
    arm_items: Vec<Vec<usize>>,
    /// Arms covering each item.
    item_arms: Vec<Vec<usize>>,
}

impl CoverageGraph {
    pub fn new(num_arms: usize, num_items: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut arm_items = vec![Vec::new(); num_arms];
        let mut item_arms = vec![Vec::new(); num_items];
        for &(arm, item) in edges {
            if arm >= num_arms || item >= num_items {
                return Err(Error::InvalidInput(format!(
                    "edge ({arm}, {item}) out of range ({num_arms} arms, {num_items} items)"
                )));
            }
            if arm_items[arm].contains(&item) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({arm}, {item})"
                )));
            }
            arm_items[arm].push(item);
            item_arms[item].push(arm);
        }
        for list in arm_items.iter_mut().chain(item_arms.iter_mut()) {
            list.sort_unstable();
        }
        Ok(CoverageGraph {
            num_items,
            arm_items,
            item_arms,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arm_items.len()
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_edges(&self) -> usize {
        self.arm_items.iter().map(Vec::len).sum()
    }

    pub fn items_of(&self, arm: usize) -> &[usize] {
        &self.arm_items[arm]
    }

    pub fn arms_of(&self, item: usize) -> &[usize] {
        &self.item_arms[item]
    }

    /// Expected number of covered items when arm `i` in `chosen` is active
    /// independently with probability `p[i]`.
    pub(crate) fn expected_cover(&self, chosen: &[bool], p: &[f64]) -> f64 {
        self.item_arms
            .iter()
            .map(|arms| {
                let miss: f64 = arms
                    .iter()
                    .filter(|&&i| chosen[i])
                    .map(|&i| 1.0 - p[i])
                    .product();
                1.0 - miss
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RewardKind {
    /// `scale * sum_{i in S} x_i`.
    Linear { scale: f64 },
    /// Number of items covered by the active arms of `S`.
    Coverage(CoverageGraph),
}

/// Reward function with its declared smoothness constants: `b1` bounds the
/// change in expected reward by the L1 distance of the means restricted to
/// `S`, `binf` by the L-infinity distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardFn {
    kind: RewardKind,
    declared_b1: f64,
    declared_binf: f64,
}

impl RewardFn {
    pub fn linear(scale: f64, k: usize) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Config(format!(
                "linear scale must be >= 0, got {scale}"
            )));
        }
        Ok(RewardFn {
            kind: RewardKind::Linear { scale },
            declared_b1: scale,
            declared_binf: k as f64 * scale,
        })
    }

    /// Coverage reward. `binf` is the total edge count (a loose but valid
    /// constant); `b1` is the maximum arm degree.
    pub fn coverage(graph: CoverageGraph) -> Self {
        let b1 = graph.arm_items.iter().map(Vec::len).max().unwrap_or(0) as f64;
        let binf = graph.num_edges() as f64;
        RewardFn {
            kind: RewardKind::Coverage(graph),
            declared_b1: b1,
            declared_binf: binf,
        }
    }

    pub fn kind(&self) -> &RewardKind {
        &self.kind
    }

    pub fn declared_b1(&self) -> f64 {
        self.declared_b1
    }

    pub fn declared_binf(&self) -> f64 {
        self.declared_binf
    }

    fn check_dims(&self, s: &SuperArm, v: &[f64]) -> Result<()> {
        if let RewardKind::Coverage(g) = &self.kind {
            if g.num_arms() != v.len() {
                return Err(Error::InvalidInput(format!(
                    "vector has length {} but coverage graph has {} arms",
                    v.len(),
                    g.num_arms()
                )));
            }
        }
        if let Some(&bad) = s.arms().iter().find(|&&i| i >= v.len()) {
            return Err(Error::InvalidInput(format!(
                "arm {bad} out of range for vector of length {}",
                v.len()
            )));
        }
        Ok(())
    }

    /// Reward of playing `s` when the outcome vector is `x`.
    pub fn realized_reward(&self, s: &SuperArm, x: &[f64]) -> Result<f64> {
        self.check_dims(s, x)?;
        Ok(match &self.kind {
            RewardKind::Linear { scale } => scale * s.iter().map(|i| x[i]).sum::<f64>(),
            RewardKind::Coverage(g) => {
                let active: Vec<usize> = s.iter().filter(|&i| x[i] > 0.0).collect();
                (0..g.num_items)
                    .filter(|&item| g.arms_of(item).iter().any(|a| active.contains(a)))
                    .count() as f64
            }
        })
    }

    /// Expected reward `r_mu(S)` under independent Bernoulli outcomes.
    pub fn expected_reward(&self, s: &SuperArm, mu: &[f64]) -> Result<f64> {
        self.check_dims(s, mu)?;
        Ok(self.expected_unchecked(s, mu))
    }

    pub(crate) fn expected_unchecked(&self, s: &SuperArm, mu: &[f64]) -> f64 {
        match &self.kind {
            RewardKind::Linear { scale } => scale * s.iter().map(|i| mu[i]).sum::<f64>(),
            RewardKind::Coverage(g) => {
                let mut chosen = vec![false; mu.len()];
                for i in s.iter() {
                    chosen[i] = true;
                }
                g.expected_cover(&chosen, mu)
            }
        }
    }
}

/// A complete problem instance. `tie_groups` lists sets of arms whose
/// outcomes are driven by one shared coin flip each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    name: String,
    decision_set: DecisionSet,
    mu: Vec<f64>,
    reward: RewardFn,
    tie_groups: Vec<Vec<usize>>,
}

impl InstanceSpec {
    pub fn new(
        name: impl Into<String>,
        decision_set: DecisionSet,
        mu: Vec<f64>,
        reward: RewardFn,
        tie_groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let m = decision_set.m();
        if mu.len() != m {
            return Err(Error::InvalidInput(format!(
                "mean vector has length {} but instance has {m} arms",
                mu.len()
            )));
        }
        if let Some((i, v)) = mu
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidInput(format!(
                "mu[{i}] = {v} is outside [0, 1]"
            )));
        }
        if let RewardKind::Coverage(g) = reward.kind() {
            if g.num_arms() != m {
                return Err(Error::InvalidInput(format!(
                    "coverage graph has {} arms, decision set has {m}",
                    g.num_arms()
                )));
            }
        }
        let mut seen = vec![false; m];
        for group in &tie_groups {
            for &i in group {
                if i >= m || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "tie group arm {i} out of range or listed twice"
                    )));
                }
                seen[i] = true;
                if mu[i] != mu[group[0]] {
                    return Err(Error::InvalidInput(format!(
                        "tie group {group:?} mixes different means"
                    )));
                }
            }
        }
        Ok(InstanceSpec {
            name: name.into(),
            decision_set,
            mu,
            reward,
            tie_groups,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decision_set(&self) -> &DecisionSet {
        &self.decision_set
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn reward(&self) -> &RewardFn {
        &self.reward
    }

    pub fn tie_groups(&self) -> &[Vec<usize>] {
        &self.tie_groups
    }

    pub fn m(&self) -> usize {
        self.decision_set.m()
    }

    pub fn k(&self) -> usize {
        self.decision_set.k()
    }

    pub fn expected_reward(&self, s: &SuperArm) -> f64 {
        self.reward.expected_unchecked(s, &self.mu)
    }

    /// `(opt_mu, argmax)`, ties resolved to the lexicographically smallest
    /// super arm.
    pub fn opt_value(&self) -> Result<(f64, SuperArm)> {
        let members = self.decision_set.members()?;
        let mut best: Option<(f64, &SuperArm)> = None;
        for s in members {
            let v = self.expected_reward(s);
            best = match best {
                None => Some((v, s)),
                Some((bv, bs)) => match v.partial_cmp(&bv) {
                    Some(Ordering::Greater) => Some((v, s)),
                    Some(Ordering::Equal) if s < bs => Some((v, s)),
                    _ => Some((bv, bs)),
                },
            };
        }
        let (v, s) = best.expect("decision sets are nonempty");
        Ok((v, s.clone()))
    }

    pub fn gap_profile(&self, alpha: f64) -> Result<GapProfile> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be in (0, 1], got {alpha}"
            )));
        }
        let (opt, _) = self.opt_value()?;
        let threshold = alpha * opt;
        let m = self.m();
        let mut worst_bad = vec![None::<f64>; m];
        let mut best_bad = vec![None::<f64>; m];
        for s in self.decision_set.members()? {
            let r = self.expected_reward(s);
            if r >= threshold {
                continue;
            }
            for i in s.iter() {
                best_bad[i] = Some(best_bad[i].map_or(r, |b: f64| b.max(r)));
                worst_bad[i] = Some(worst_bad[i].map_or(r, |w: f64| w.min(r)));
            }
        }
        let delta_min: Vec<Option<f64>> =
            best_bad.iter().map(|r| r.map(|r| threshold - r)).collect();
        let delta_max: Vec<Option<f64>> =
            worst_bad.iter().map(|r| r.map(|r| threshold - r)).collect();
        let delta = delta_min.iter().flatten().copied().reduce(f64::min);
        Ok(GapProfile {
            alpha,
            opt,
            delta_min,
            delta_max,
            delta,
        })
    }
}

/// Per-arm suboptimality gaps relative to `alpha * opt_mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub alpha: f64,
    pub opt: f64,
    /// Smallest gap among bad super arms containing the arm.
    pub delta_min: Vec<Option<f64>>,
    /// Largest gap among bad super arms containing the arm.
    pub delta_max: Vec<Option<f64>>,
    /// Minimum of the defined `delta_min` entries; `None` when no super arm
    /// is bad.
    pub delta: Option<f64>,
}

impl GapProfile {
    pub fn has_bad_arms(&self) -> bool {
        self.delta.is_some()
    }

    pub fn max_gap(&self) -> Option<f64> {
        self.delta_max.iter().flatten().copied().reduce(f64::max)
    }
}
