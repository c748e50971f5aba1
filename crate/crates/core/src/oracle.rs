//! Offline maximization oracles with an `(alpha, beta)` guarantee.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{DecisionSet, RewardFn, RewardKind, Structure, SuperArm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Exhaustive search over an enumerable decision set.
    Exact,
    /// Linear-time best path on a K-path decision set.
    KPath,
    /// Greedy marginal-gain selection for probabilistic coverage.
    GreedyCoverage,
}

impl OracleKind {
    pub fn alpha(self) -> f64 {
        match self {
            OracleKind::Exact | OracleKind::KPath => 1.0,
            OracleKind::GreedyCoverage => 1.0 - (-1.0f64).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    kind: OracleKind,
    alpha: f64,
    beta: f64,
}

/// Result of one oracle call; `delegated` is false when a flaky oracle took
/// its failure branch.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCall {
    pub arm: SuperArm,
    pub delegated: bool,
}

impl OracleSpec {
    pub fn new(kind: OracleKind) -> Self {
        OracleSpec {
            kind,
            alpha: kind.alpha(),
            beta: 1.0,
        }
    }

    /// The natural oracle for a decision set and reward: the linear path
    /// oracle for K-path, greedy for large coverage families, exact
    /// enumeration otherwise.
    pub fn default_for(ds: &DecisionSet, reward: &RewardFn) -> Self {
        match (ds.structure(), reward.kind()) {
            (Structure::KPath, RewardKind::Linear { .. }) => Self::new(OracleKind::KPath),
            (Structure::Subsets, RewardKind::Coverage(_)) if !ds.is_enumerable() => {
                Self::new(OracleKind::GreedyCoverage)
            }
            _ => Self::new(OracleKind::Exact),
        }
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn check_compatible(&self, ds: &DecisionSet, reward: &RewardFn) -> Result<()> {
        let ok = match self.kind {
            OracleKind::Exact => ds.is_enumerable(),
            OracleKind::KPath => {
                ds.structure() == Structure::KPath
                    && matches!(reward.kind(), RewardKind::Linear { .. })
            }
            OracleKind::GreedyCoverage => {
                ds.structure() == Structure::Subsets
                    && matches!(reward.kind(), RewardKind::Coverage(_))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{:?} oracle cannot handle a {:?} decision set with this reward",
                self.kind,
                ds.structure()
            )))
        }
    }

    pub fn solve<R: Rng + ?Sized>(
        &self,
        ds: &DecisionSet,
        reward: &RewardFn,
        mu_bar: &[f64],
        rng: &mut R,
    ) -> Result<SuperArm> {
        self.solve_traced(ds, reward, mu_bar, rng).map(|c| c.arm)
    }

    /// Like `solve`, also reporting whether the inner oracle was consulted.
    /// A uniform draw is taken from `rng` only when `beta < 1`.
    pub fn solve_traced<R: Rng + ?Sized>(
        &self,
        ds: &DecisionSet,
        reward: &RewardFn,
        mu_bar: &[f64],
        rng: &mut R,
    ) -> Result<OracleCall> {
        if mu_bar.len() != ds.m() {
            return Err(Error::InvalidInput(format!(
                "oracle input has length {} but decision set has {} arms",
                mu_bar.len(),
                ds.m()
            )));
        }
        self.check_compatible(ds, reward)?;
        if self.beta < 1.0 && rng.random::<f64>() >= self.beta {
            return Ok(OracleCall {
                arm: ds.random_member(rng),
                delegated: false,
            });
        }
        let arm = match self.kind {
            OracleKind::Exact => exact(ds, reward, mu_bar)?,
            OracleKind::KPath => best_path(ds, mu_bar),
            OracleKind::GreedyCoverage => greedy_coverage(ds, reward, mu_bar),
        };
        Ok(OracleCall {
            arm,
            delegated: true,
        })
    }
}

/// Oracle that succeeds with probability `beta` and otherwise returns a
/// uniformly random feasible super arm.
pub fn flaky_wrap(oracle: OracleSpec, beta: f64) -> Result<OracleSpec> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Config(format!("beta must be in (0, 1], got {beta}")));
    }
    Ok(OracleSpec {
        beta: oracle.beta * beta,
        ..oracle
    })
}

fn exact(ds: &DecisionSet, reward: &RewardFn, mu_bar: &[f64]) -> Result<SuperArm> {
    // For linear rewards compare raw sums so that a positive scale can never
    // merge two distinct sums into a rounding tie.
    let score = |s: &SuperArm| match reward.kind() {
        RewardKind::Linear { scale } if *scale > 0.0 => s.iter().map(|i| mu_bar[i]).sum(),
        RewardKind::Linear { .. } => 0.0,
        RewardKind::Coverage(_) => reward.expected_unchecked(s, mu_bar),
    };
    let mut best: Option<(f64, &SuperArm)> = None;
    for s in ds.members()? {
        let v = score(s);
        let better = match best {
            None => true,
            Some((bv, bs)) => match v.partial_cmp(&bv) {
                Some(Ordering::Greater) => true,
                Some(Ordering::Equal) => s < bs,
                _ => false,
            },
        };
        if better {
            best = Some((v, s));
        }
    }
    Ok(best.expect("decision sets are nonempty").1.clone())
}

fn best_path(ds: &DecisionSet, mu_bar: &[f64]) -> SuperArm {
    let k = ds.k();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (p, chunk) in mu_bar.chunks(k).enumerate() {
        let v: f64 = chunk.iter().sum();
        if v > best.0 {
            best = (v, p);
        }
    }
    SuperArm::new((best.1 * k..(best.1 + 1) * k).collect()).expect("paths are valid")
}

fn greedy_coverage(ds: &DecisionSet, reward: &RewardFn, mu_bar: &[f64]) -> SuperArm {
    let RewardKind::Coverage(graph) = reward.kind() else {
        unreachable!("compatibility checked by caller")
    };
    let m = ds.m();
    let mut chosen = vec![false; m];
    let mut picked = Vec::with_capacity(ds.k());
    let mut current = 0.0;
    for _ in 0..ds.k() {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if chosen[i] {
                continue;
            }
            chosen[i] = true;
            let gain = graph.expected_cover(&chosen, mu_bar) - current;
            chosen[i] = false;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, i));
            }
        }
        let Some((gain, i)) = best else { break };
        if gain <= 0.0 && !picked.is_empty() {
            break;
        }
        chosen[i] = true;
        picked.push(i);
        current += gain;
    }
    SuperArm::new(picked).expect("greedy picks distinct arms")
}
