//! CSV results and JSON summaries.
//!
//! The CSV is the stable contract: one row per (run, checkpoint), floats
//! written with 17 significant digits so that re-parsing is lossless.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fit::fit_log_slope;
use super::run::RunResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "run_id",
    "algorithm",
    "instance",
    "m",
    "K",
    "epsilon",
    "alpha",
    "beta",
    "seed",
    "t",
    "cum_regret",
    "cum_reward",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Scientific notation with 17 significant digits; `inf` for infinity.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub run_id: u64,
    pub algorithm: String,
    pub instance: String,
    pub m: usize,
    pub k: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub t: u64,
    pub cum_regret: f64,
    pub cum_reward: f64,
}

pub fn rows_from_results(results: &[RunResult]) -> Vec<CsvRow> {
    results
        .iter()
        .flat_map(|r| {
            r.checkpoints.iter().map(move |c| CsvRow {
                run_id: r.run_id,
                algorithm: r.config.algorithm.name().to_string(),
                instance: r.instance.clone(),
                m: r.m,
                k: r.k,
                epsilon: r.config.epsilon,
                alpha: r.alpha,
                beta: r.config.beta,
                seed: r.config.seed,
                t: c.t,
                cum_regret: c.cum_regret,
                cum_reward: c.cum_reward,
            })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.run_id.to_string(),
            r.algorithm.clone(),
            r.instance.clone(),
            r.m.to_string(),
            r.k.to_string(),
            format_float(r.epsilon),
            format_float(r.alpha),
            format_float(r.beta),
            r.seed.to_string(),
            r.t.to_string(),
            format_float(r.cum_regret),
            format_float(r.cum_reward),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv flush: {e}")))?;
    Ok(())
}

pub fn csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "unexpected csv header: {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let bad =
            |i: usize| Error::InvalidInput(format!("bad {} value {:?}", CSV_HEADER[i], field(i)));
        let int = |i: usize| field(i).parse::<u64>().map_err(|_| bad(i));
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        rows.push(CsvRow {
            run_id: int(0)?,
            algorithm: field(1).to_string(),
            instance: field(2).to_string(),
            m: int(3)? as usize,
            k: int(4)? as usize,
            epsilon: float(5)?,
            alpha: float(6)?,
            beta: float(7)?,
            seed: int(8)?,
            t: int(9)?,
            cum_regret: float(10)?,
            cum_reward: float(11)?,
        });
    }
    Ok(rows)
}

/// Aggregate statistics of all runs sharing one configuration apart from
/// the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub instance: String,
    pub m: usize,
    pub k: usize,
    pub epsilon: String,
    pub alpha: f64,
    pub beta: f64,
    pub runs: usize,
    pub horizon: u64,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub stderr_final_regret: f64,
    /// Log-slope of the seed-averaged regret curve, when it has enough
    /// tail checkpoints.
    pub slope: Option<f64>,
    pub residual: Option<f64>,
}

impl CellSummary {
    pub fn label(&self) -> String {
        format!("{}@eps={}", self.algorithm, self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub instance: String,
    pub numerator: String,
    pub denominator: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
    /// Mean-final-regret ratios between cells of the same instance that
    /// differ only in algorithm or only in epsilon.
    pub ratios: Vec<RatioEntry>,
}

fn epsilon_label(eps: f64) -> String {
    if eps.is_infinite() {
        "inf".to_string()
    } else {
        eps.to_string()
    }
}

pub fn summarize(rows: &[CsvRow]) -> Summary {
    type Key = (String, String, usize, usize, u64, u64, u64);
    let key = |r: &CsvRow| -> Key {
        (
            r.algorithm.clone(),
            r.instance.clone(),
            r.m,
            r.k,
            r.epsilon.to_bits(),
            r.alpha.to_bits(),
            r.beta.to_bits(),
        )
    };
    // Cells in order of first appearance; runs keyed by run id.
    let mut order: Vec<Key> = Vec::new();
    let mut cells: BTreeMap<Key, BTreeMap<u64, Vec<&CsvRow>>> = BTreeMap::new();
    for r in rows {
        let k = key(r);
        let entry = cells.entry(k.clone()).or_insert_with(|| {
            order.push(k);
            BTreeMap::new()
        });
        entry.entry(r.run_id).or_default().push(r);
    }

    let summaries: Vec<CellSummary> = order
        .iter()
        .map(|k| {
            let runs = &cells[k];
            let finals: Vec<f64> = runs
                .values()
                .map(|rs| {
                    rs.iter()
                        .max_by_key(|r| r.t)
                        .expect("run has rows")
                        .cum_regret
                })
                .collect();
            let horizon = runs
                .values()
                .flat_map(|rs| rs.iter().map(|r| r.t))
                .max()
                .unwrap_or(0);
            let n = finals.len() as f64;
            let mean = finals.iter().sum::<f64>() / n;
            let var = if finals.len() > 1 {
                finals.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let mut curve: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for rs in runs.values() {
                for r in rs {
                    let e = curve.entry(r.t).or_insert((0.0, 0));
                    e.0 += r.cum_regret;
                    e.1 += 1;
                }
            }
            let mean_curve: Vec<(u64, f64)> = curve
                .into_iter()
                .filter(|(_, (_, c))| *c == runs.len())
                .map(|(t, (s, c))| (t, s / c as f64))
                .collect();
            let fit = fit_log_slope(&mean_curve).ok();
            let first = runs.values().next().expect("cell has runs")[0];
            CellSummary {
                algorithm: first.algorithm.clone(),
                instance: first.instance.clone(),
                m: first.m,
                k: first.k,
                epsilon: epsilon_label(first.epsilon),
                alpha: first.alpha,
                beta: first.beta,
                runs: finals.len(),
                horizon,
                mean_final_regret: mean,
                std_final_regret: var.sqrt(),
                stderr_final_regret: (var / n).sqrt(),
                slope: fit.map(|f| f.slope),
                residual: fit.map(|f| f.residual),
            }
        })
        .collect();

    let mut ratios = Vec::new();
    for (i, a) in summaries.iter().enumerate() {
        for b in &summaries[i + 1..] {
            let same_setting = a.instance == b.instance && a.alpha == b.alpha && a.beta == b.beta;
            let one_axis = (a.algorithm == b.algorithm) != (a.epsilon == b.epsilon);
            if same_setting && one_axis {
                ratios.push(RatioEntry {
                    instance: a.instance.clone(),
                    numerator: a.label(),
                    denominator: b.label(),
                    ratio: a.mean_final_regret / b.mean_final_regret,
                });
            }
        }
    }
    Summary {
        cells: summaries,
        ratios,
    }
}

pub fn summary_json(summary: &Summary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes") + "\n"
}

/// Writes `results` to `path` as CSV rows or as a JSON summary.
pub fn emit_results(results: &[RunResult], format: Format, path: &Path) -> Result<()> {
    let rows = rows_from_results(results);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(&rows, &mut out)?,
        Format::Json => out
            .write_all(summary_json(&summarize(&rows)).as_bytes())
            .map_err(|e| Error::io(path, e))?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}
