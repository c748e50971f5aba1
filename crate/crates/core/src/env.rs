//! Instance factories and the Bernoulli outcome sampler.

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{CoverageGraph, DecisionSet, InstanceSpec, RewardFn};

/// Stochastic environment: draws a fresh outcome vector every round.
#[derive(Debug, Clone)]
pub struct EnvState<R> {
    mu: Vec<f64>,
    /// Arms sharing one coin flip, ordered by their first arm.
    flips: Vec<Vec<usize>>,
    rng: R,
}

impl<R: Rng> EnvState<R> {
    /// Environment honouring the instance's tie groups.
    pub fn new(instance: &InstanceSpec, rng: R) -> Self {
        Self::with_flips(instance, rng, false)
    }

    /// With `independent = true` every arm gets its own coin even when the
    /// instance declares tie groups.
    pub fn with_flips(instance: &InstanceSpec, rng: R, independent: bool) -> Self {
        let m = instance.m();
        let mut owner = vec![None; m];
        if !independent {
            for (g, group) in instance.tie_groups().iter().enumerate() {
                for &i in group {
                    owner[i] = Some(g);
                }
            }
        }
        let mut flips: Vec<Vec<usize>> = Vec::new();
        let mut slot: Vec<Option<usize>> = vec![None; instance.tie_groups().len()];
        for (i, o) in owner.iter().enumerate() {
            match o {
                None => flips.push(vec![i]),
                Some(g) => match slot[*g] {
                    Some(idx) => flips[idx].push(i),
                    None => {
                        slot[*g] = Some(flips.len());
                        flips.push(vec![i]);
                    }
                },
            }
        }
        EnvState {
            mu: instance.mu().to_vec(),
            flips,
            rng,
        }
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn rng(&self) -> &R {
        &self.rng
    }

    /// Fills `out` with one outcome vector in `{0, 1}^m`.
    pub fn sample_into(&mut self, out: &mut [f64]) {
        for group in &self.flips {
            let u: f64 = self.rng.random();
            let x = if u < self.mu[group[0]] { 1.0 } else { 0.0 };
            for &i in group {
                out[i] = x;
            }
        }
    }

    pub fn sample_outcome(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.sample_into(&mut out);
        out
    }
}

fn check_regime(name: &str, delta: f64, b1: f64, k: usize) -> Result<f64> {
    if !(delta.is_finite() && b1 > 0.0 && b1.is_finite()) {
        return Err(Error::Config(format!(
            "{name}: need finite delta and b1 > 0 (delta = {delta}, b1 = {b1})"
        )));
    }
    let shift = delta / (b1 * k as f64);
    if !(shift > 0.0 && shift < 0.35) {
        warn!("{name}: delta / (B1 K) = {shift} is outside (0, 0.35)");
    }
    if !(0.0..=0.5).contains(&shift) {
        return Err(Error::Config(format!(
            "{name}: delta / (B1 K) = {shift} would push means outside [0, 1]"
        )));
    }
    Ok(shift)
}

/// `m / K` disjoint paths; path 0 has mean 0.5 per arm, all others
/// `0.5 - delta / (b1 K)`. Each path is one tie group.
pub fn make_kpath(m: usize, k: usize, delta: f64, b1: f64) -> Result<InstanceSpec> {
    let ds = DecisionSet::k_path(m, k)?;
    let shift = check_regime("kpath", delta, b1, k)?;
    let mu = (0..m)
        .map(|i| if i < k { 0.5 } else { 0.5 - shift })
        .collect();
    let groups = (0..m / k).map(|p| (p * k..(p + 1) * k).collect()).collect();
    InstanceSpec::new(
        format!("kpath(m={m},K={k},delta={delta},b1={b1})"),
        ds,
        mu,
        RewardFn::linear(b1, k)?,
        groups,
    )
}

/// Arms `0..K` form the optimal super arm, arms `K..2K-1` are the public
/// arms shared by every suboptimal super arm (one tie group), and each
/// remaining arm completes one suboptimal super arm.
pub fn make_public_arm(m: usize, k: usize, delta: f64, b1: f64) -> Result<InstanceSpec> {
    let ds = DecisionSet::public_arm(m, k)?;
    let shift = check_regime("public_arm", delta, b1, k)?;
    let mu = (0..m)
        .map(|i| if i < k { 0.5 } else { 0.5 - shift })
        .collect();
    let public: Vec<usize> = (k..2 * k - 1).collect();
    let groups = if public.is_empty() {
        vec![]
    } else {
        vec![public]
    };
    InstanceSpec::new(
        format!("public_arm(m={m},K={k},delta={delta},b1={b1})"),
        ds,
        mu,
        RewardFn::linear(b1, k)?,
        groups,
    )
}

/// Probabilistic maximum coverage with every subset of at most `k` arms
/// feasible.
pub fn make_coverage(
    num_arms: usize,
    num_items: usize,
    edges: &[(usize, usize)],
    k: usize,
    mu: Vec<f64>,
) -> Result<InstanceSpec> {
    if num_arms > crate::instance::MAX_ENUMERABLE_ARMS {
        return Err(Error::Config(format!(
            "coverage instance with {num_arms} arms is too large to enumerate (max {})",
            crate::instance::MAX_ENUMERABLE_ARMS
        )));
    }
    if mu.len() != num_arms {
        return Err(Error::Config(format!(
            "coverage instance has {num_arms} arms but {} means",
            mu.len()
        )));
    }
    let graph = CoverageGraph::new(num_arms, num_items, edges)?;
    let ds = DecisionSet::subsets(num_arms, k)?;
    InstanceSpec::new(
        format!("coverage(arms={num_arms},items={num_items},K={k})"),
        ds,
        mu,
        RewardFn::coverage(graph),
        vec![],
    )
}
