//! Run and sweep configuration files (TOML, unknown keys rejected).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{make_coverage, make_kpath, make_public_arm};
use crate::error::{Error, Result};
use crate::instance::InstanceSpec;
use crate::oracle::OracleKind;
use crate::policy::{Algorithm, DpLogTerm};

fn one() -> f64 {
    1.0
}

fn infinity() -> f64 {
    f64::INFINITY
}

/// Named instance factory plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceDescriptor {
    Kpath {
        m: usize,
        k: usize,
        delta: f64,
        #[serde(default = "one")]
        b1: f64,
    },
    PublicArm {
        m: usize,
        k: usize,
        delta: f64,
        #[serde(default = "one")]
        b1: f64,
    },
    Coverage {
        num_arms: usize,
        num_items: usize,
        edges: Vec<(usize, usize)>,
        k: usize,
        mu: Vec<f64>,
    },
}

impl InstanceDescriptor {
    pub fn build(&self) -> Result<InstanceSpec> {
        match self {
            InstanceDescriptor::Kpath { m, k, delta, b1 } => make_kpath(*m, *k, *delta, *b1),
            InstanceDescriptor::PublicArm { m, k, delta, b1 } => {
                make_public_arm(*m, *k, *delta, *b1)
            }
            InstanceDescriptor::Coverage {
                num_arms,
                num_items,
                edges,
                k,
                mu,
            } => make_coverage(*num_arms, *num_items, edges, *k, mu.clone()),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            InstanceDescriptor::Kpath { k, .. }
            | InstanceDescriptor::PublicArm { k, .. }
            | InstanceDescriptor::Coverage { k, .. } => *k,
        }
    }

    /// Same family with super-arm size `new_k`. For the path and
    /// public-arm families `m` is scaled by `new_k / k`, which keeps the
    /// number of suboptimal super arms fixed on K-path.
    pub fn with_k(&self, new_k: usize) -> Result<Self> {
        let scale_m = |m: usize, k: usize| -> Result<usize> {
            if !(m * new_k).is_multiple_of(k) {
                return Err(Error::Config(format!(
                    "cannot rescale m = {m} from K = {k} to K = {new_k}"
                )));
            }
            Ok(m * new_k / k)
        };
        Ok(match self.clone() {
            InstanceDescriptor::Kpath { m, k, delta, b1 } => InstanceDescriptor::Kpath {
                m: scale_m(m, k)?,
                k: new_k,
                delta,
                b1,
            },
            InstanceDescriptor::PublicArm { m, k, delta, b1 } => InstanceDescriptor::PublicArm {
                m: scale_m(m, k)?,
                k: new_k,
                delta,
                b1,
            },
            InstanceDescriptor::Coverage {
                num_arms,
                num_items,
                edges,
                mu,
                ..
            } => InstanceDescriptor::Coverage {
                num_arms,
                num_items,
                edges,
                k: new_k,
                mu,
            },
        })
    }
}

/// One experiment: instance, algorithm, privacy budget, horizon, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceDescriptor,
    pub algorithm: Algorithm,
    #[serde(default = "infinity")]
    pub epsilon: f64,
    /// Approximation ratio used for regret accounting; defaults to the
    /// oracle's guarantee.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Oracle success probability. Values below 1 also make the oracle
    /// fail at that rate.
    #[serde(default = "one")]
    pub beta: f64,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    /// Linear checkpoint spacing; geometric (powers of two plus T) when
    /// absent.
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub oracle: Option<OracleKind>,
    #[serde(default)]
    pub dp_log_term: DpLogTerm,
    /// Give every arm its own coin even inside declared tie groups.
    #[serde(default)]
    pub independent_flips: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(
        instance: InstanceDescriptor,
        algorithm: Algorithm,
        epsilon: f64,
        horizon: u64,
    ) -> Self {
        RunConfig {
            instance,
            algorithm,
            epsilon: if algorithm.is_private() {
                epsilon
            } else {
                f64::INFINITY
            },
            alpha: None,
            beta: 1.0,
            horizon,
            seed: 0,
            checkpoint_every: None,
            noiseless: false,
            oracle: None,
            dp_log_term: DpLogTerm::default(),
            independent_flips: false,
            output: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.algorithm.is_private() {
            if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
                return Err(Error::Config(format!(
                    "{} needs a finite epsilon > 0, got {}",
                    self.algorithm, self.epsilon
                )));
            }
        } else if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("alpha must be in (0, 1], got {a}")));
            }
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!(
                "beta must be in (0, 1], got {}",
                self.beta
            )));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        Ok(())
    }

    /// Ascending checkpoint rounds, always ending at the horizon.
    pub fn checkpoints(&self) -> Vec<u64> {
        let t = self.horizon;
        let mut out: Vec<u64> = match self.checkpoint_every {
            Some(step) => (1..=t / step).map(|j| j * step).collect(),
            None => (0..64).map(|j| 1u64 << j).take_while(|&c| c <= t).collect(),
        };
        if out.last() != Some(&t) {
            out.push(t);
        }
        out
    }
}

/// Parameter grid of a sweep. Absent axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub algorithm: Vec<Algorithm>,
    /// Explicit per-replicate seeds.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Number of replicates with seeds derived from `master_seed`; used
    /// when `seeds` is empty.
    #[serde(default)]
    pub replicates: Option<u64>,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    #[serde(default)]
    pub grid: Grid,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("sweep config: {e}")))?;
        cfg.base.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
