use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized residual above which a log-linear fit is flagged as a misfit.
pub const MISFIT_THRESHOLD: f64 = 0.05;

/// Least-squares fit `regret(t) ~ slope * ln t + intercept` on the curve
/// tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual divided by the mean absolute regret over
    /// the tail.
    pub residual: f64,
    pub points: usize,
}

impl LogFit {
    pub fn is_misfit(&self) -> bool {
        !(self.residual <= MISFIT_THRESHOLD)
    }
}

/// Fits the tail `t >= T / 8` of a `(t, cumulative regret)` curve, where
/// `T` is the last checkpoint. Needs at least four tail points.
pub fn fit_log_slope(curve: &[(u64, f64)]) -> Result<LogFit> {
    let last = curve
        .iter()
        .map(|&(t, _)| t)
        .max()
        .ok_or_else(|| Error::Diagnostics("empty regret curve".into()))?;
    let cutoff = last as f64 / 8.0;
    let tail: Vec<(f64, f64)> = curve
        .iter()
        .filter(|&&(t, _)| t >= 1 && t as f64 >= cutoff)
        .map(|&(t, r)| ((t as f64).ln(), r))
        .collect();
    if tail.len() < 4 {
        return Err(Error::Diagnostics(format!(
            "need at least 4 checkpoints with t >= T/8, have {}",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Diagnostics("tail checkpoints share one t".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = tail
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let scale = tail.iter().map(|p| p.1.abs()).sum::<f64>() / n;
    let rms = (rss / n).sqrt();
    let residual = if scale > 0.0 {
        rms / scale
    } else if rms == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LogFit {
        slope,
        intercept,
        residual,
        points: tail.len(),
    })
}
