use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Grid, RunConfig};
use super::run::{run, RunResult};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// A cell that failed; the rest of the sweep still runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub run_id: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Successful runs in cell order.
    pub results: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
}

/// Expands the grid into concrete run configs, ordered by K, algorithm,
/// epsilon, then replicate. The non-private baseline appears once per
/// (K, replicate) whatever the epsilon axis holds.
pub fn expand_grid(base: &RunConfig, grid: &Grid) -> Result<Vec<RunConfig>> {
    let ks = if grid.k.is_empty() {
        vec![base.instance.k()]
    } else {
        grid.k.clone()
    };
    let algorithms = if grid.algorithm.is_empty() {
        vec![base.algorithm]
    } else {
        grid.algorithm.clone()
    };
    let epsilons = if grid.epsilon.is_empty() {
        vec![base.epsilon]
    } else {
        grid.epsilon.clone()
    };
    let seeds: Vec<u64> = if !grid.seeds.is_empty() {
        grid.seeds.clone()
    } else if let Some(n) = grid.replicates {
        (0..n).map(|r| derive_seed(grid.master_seed, r)).collect()
    } else {
        vec![base.seed]
    };

    let mut cells = Vec::new();
    for &k in &ks {
        let instance = if k == base.instance.k() {
            base.instance.clone()
        } else {
            base.instance.with_k(k)?
        };
        for &algorithm in &algorithms {
            let eps_axis: &[f64] = if algorithm.is_private() {
                &epsilons
            } else {
                &[f64::INFINITY]
            };
            for &epsilon in eps_axis {
                for &seed in &seeds {
                    let mut cfg = base.clone();
                    cfg.instance = instance.clone();
                    cfg.algorithm = algorithm;
                    cfg.epsilon = epsilon;
                    cfg.seed = seed;
                    cells.push(cfg);
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    Ok(cells)
}

/// Runs every grid cell (in parallel); output order follows the cell order.
pub fn run_sweep(base: &RunConfig, grid: &Grid) -> Result<SweepOutcome> {
    let cells = expand_grid(base, grid)?;
    let outcomes: Vec<(u64, Result<RunResult>)> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, cfg)| {
            let id = idx as u64;
            (
                id,
                run(cfg).map(|mut r| {
                    r.run_id = id;
                    r
                }),
            )
        })
        .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (run_id, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(CellFailure {
                run_id,
                message: e.to_string(),
            }),
        }
    }
    Ok(SweepOutcome { results, failures })
}
