//! Laplace mechanism and the tree-based private prefix-sum aggregator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale `b` of a zero-centred Laplace distribution; its variance is `2 b^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(b: f64) -> Result<Self> {
        if b > 0.0 && b.is_finite() {
            Ok(LaplaceScale(b))
        } else {
            Err(Error::Config(format!(
                "Laplace scale must be positive and finite, got {b}"
            )))
        }
    }

    pub fn b(self) -> f64 {
        self.0
    }

    pub fn variance(self) -> f64 {
        2.0 * self.0 * self.0
    }

    pub fn cdf(self, x: f64) -> f64 {
        0.5 + 0.5 * x.signum() * (1.0 - (-x.abs() / self.0).exp())
    }
}

/// Inverse-CDF transform of `u` in (-1/2, 1/2) to a Laplace(0, b) variate.
pub fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One Laplace draw. Consumes one `f64` from `rng` (two in the measure-zero
/// case `u = -1/2`).
pub fn sample_laplace<R: Rng + ?Sized>(scale: LaplaceScale, rng: &mut R) -> f64 {
    loop {
        let u = rng.random::<f64>() - 0.5;
        if u > -0.5 {
            return laplace_from_uniform(u, scale.0);
        }
    }
}

/// Noise scale `sensitivity / epsilon` of the Laplace mechanism.
pub fn ldp_scale(sensitivity: f64, epsilon: f64) -> Result<LaplaceScale> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(sensitivity > 0.0) {
        return Err(Error::Config(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    LaplaceScale::new(sensitivity / epsilon)
}

/// User-side randomizer: `value + Lap(sensitivity / epsilon)`. The output
/// is not clamped.
pub fn ldp_randomize<R: Rng + ?Sized>(
    value: f64,
    sensitivity: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    let scale = ldp_scale(sensitivity, epsilon)?;
    Ok(value + sample_laplace(scale, rng))
}

/// `ceil(log2(horizon))`, at least 1.
pub fn tree_depth(horizon: usize) -> u32 {
    let d = usize::BITS - horizon.saturating_sub(1).leading_zeros();
    d.max(1)
}

/// Per-node noise scale used by the central-DP policy:
/// `2 K ceil(log2 T) / epsilon`.
pub fn dp_node_scale(k: usize, horizon: usize, epsilon: f64) -> Result<LaplaceScale> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    LaplaceScale::new(2.0 * k as f64 * tree_depth(horizon) as f64 / epsilon)
}

/// Dyadic decomposition of the prefix `1..=t`: `(level, index)` pairs where
/// node `(l, j)` covers leaves `j * 2^l + 1 ..= (j + 1) * 2^l`.
pub fn dyadic_nodes(t: usize) -> impl Iterator<Item = (u32, usize)> {
    let mut covered = 0usize;
    (0..usize::BITS).rev().filter_map(move |level| {
        if t >> level & 1 == 1 {
            let node = (level, covered >> level);
            covered += 1 << level;
            Some(node)
        } else {
            None
        }
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Node {
    sum: f64,
    noise: f64,
}

/// Binary-tree counter over a stream of at most `horizon` values.
///
/// Each node (leaves included) gets one Laplace draw when its subtree
/// becomes complete; a prefix query sums the noisy values of its dyadic
/// nodes, so repeated queries never re-draw noise.
#[derive(Debug, Clone)]
pub struct TreeAggregator {
    horizon: usize,
    scale: LaplaceScale,
    noiseless: bool,
    count: usize,
    levels: Vec<Vec<Node>>,
    draws: u64,
}

impl TreeAggregator {
    pub fn new(horizon: usize, scale: LaplaceScale) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("tree horizon must be positive".into()));
        }
        let depth = tree_depth(horizon) as usize;
        Ok(TreeAggregator {
            horizon,
            scale,
            noiseless: false,
            count: 0,
            levels: vec![Vec::new(); depth + 1],
            draws: 0,
        })
    }

    /// Same structure with all node noise fixed to zero.
    pub fn noiseless(horizon: usize) -> Result<Self> {
        let mut agg = Self::new(horizon, LaplaceScale(1.0))?;
        agg.noiseless = true;
        Ok(agg)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn scale(&self) -> LaplaceScale {
        self.scale
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }

    /// Number of Laplace draws made so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn insert<R: Rng + ?Sized>(&mut self, value: f64, rng: &mut R) -> Result<()> {
        if self.count >= self.horizon {
            return Err(Error::Capacity(format!(
                "tree aggregator is full ({} leaves)",
                self.horizon
            )));
        }
        self.count += 1;
        let leaf = Node {
            sum: value,
            noise: self.draw(rng),
        };
        self.levels[0].push(leaf);
        for level in 1..self.levels.len() {
            if !self.count.is_multiple_of(1 << level) {
                break;
            }
            let children = &self.levels[level - 1];
            let n = children.len();
            let sum = children[n - 2].sum + children[n - 1].sum;
            let noise = self.draw(rng);
            self.levels[level].push(Node { sum, noise });
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if self.noiseless {
            0.0
        } else {
            self.draws += 1;
            sample_laplace(self.scale, rng)
        }
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.count {
            Err(Error::InvalidInput(format!(
                "prefix length {t} outside 1..={}",
                self.count
            )))
        } else {
            Ok(())
        }
    }

    fn nodes(&self, t: usize) -> impl Iterator<Item = &Node> + '_ {
        dyadic_nodes(t).map(move |(l, j)| &self.levels[l as usize][j])
    }

    /// Private prefix sum of the first `t` values.
    pub fn query(&self, t: usize) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.nodes(t).map(|n| n.sum + n.noise).sum())
    }

    /// Noise-free prefix sum assembled from the same nodes as `query`.
    pub fn exact_prefix_sum(&self, t: usize) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.nodes(t).map(|n| n.sum).sum())
    }

    /// Total noise carried by `query(t)`.
    pub fn noise_at(&self, t: usize) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.nodes(t).map(|n| n.noise).sum())
    }

    /// Number of nodes read by `query(t)`.
    pub fn nodes_touched(t: usize) -> usize {
        t.count_ones() as usize
    }
}
