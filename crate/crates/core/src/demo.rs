//! Lorenz validation run: peak series of the x-component tested against all
//! three surrogate nulls with all three quantifiers.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{make_lorenz_peak_ensemble, LorenzParams};
use crate::error::{Error, Result};
use crate::quantifiers::{QuantifyOptions, Statistic};
use crate::series::{save_series, EmbeddingParams, TimeSeries};
use crate::surrogates::{run_battery_all_statistics, Algorithm, BatteryReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzDemoConfig {
    pub lorenz: LorenzParams,
    pub n_series: usize,
    pub n_peaks: usize,
    pub params: EmbeddingParams,
    pub algorithms: Vec<Algorithm>,
    pub n_surrogates: usize,
    pub surrogate_seed: u64,
}

impl Default for LorenzDemoConfig {
    fn default() -> Self {
        Self {
            lorenz: LorenzParams::default(),
            n_series: 10,
            n_peaks: 1490,
            params: EmbeddingParams { m: 3, tau: 1 },
            algorithms: Algorithm::ALL.to_vec(),
            n_surrogates: 100,
            surrogate_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionSummary {
    pub algorithm: Algorithm,
    pub statistic: Statistic,
    pub rejected: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzDemoReport {
    pub config: LorenzDemoConfig,
    pub batteries: Vec<BatteryReport>,
    pub summary: Vec<RejectionSummary>,
    #[serde(skip)]
    pub series: Vec<TimeSeries>,
}

impl LorenzDemoReport {
    pub fn summary_for(&self, algorithm: Algorithm, statistic: Statistic) -> Option<&RejectionSummary> {
        self.summary
            .iter()
            .find(|s| s.algorithm == algorithm && s.statistic == statistic)
    }
}

pub fn run_lorenz_demo(config: &LorenzDemoConfig) -> Result<LorenzDemoReport> {
    let series = make_lorenz_peak_ensemble(&config.lorenz, config.n_series, config.n_peaks)?;
    let options = QuantifyOptions::default();
    let jobs: Vec<(&TimeSeries, Algorithm)> = series
        .iter()
        .flat_map(|s| config.algorithms.iter().map(move |&a| (s, a)))
        .collect();
    let batteries: Vec<BatteryReport> = jobs
        .par_iter()
        .map(|&(s, a)| run_battery_all_statistics(s, config.params, a, config.n_surrogates, config.surrogate_seed, &options))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let summary = config
        .algorithms
        .iter()
        .flat_map(|&a| Statistic::ALL.iter().map(move |&s| (a, s)))
        .map(|(algorithm, statistic)| {
            let runs: Vec<&BatteryReport> = batteries
                .iter()
                .filter(|b| b.algorithm == algorithm && b.statistic == statistic)
                .collect();
            RejectionSummary {
                algorithm,
                statistic,
                rejected: runs.iter().filter(|b| b.result.rejected).count(),
                total: runs.len(),
            }
        })
        .collect();
    Ok(LorenzDemoReport {
        config: config.clone(),
        batteries,
        summary,
        series,
    })
}

/// Writes `peaks/<id>.txt`, `batteries.csv` (one row per series, algorithm and
/// statistic with the statistic quantiles of the surrogates) and `lorenz_demo.json`.
pub fn write_lorenz_demo(report: &LorenzDemoReport, dir: &Path) -> Result<()> {
    let peaks = dir.join("peaks");
    fs::create_dir_all(&peaks).map_err(|e| Error::io(&peaks, e))?;
    for s in &report.series {
        save_series(s, &peaks.join(format!("{}.txt", s.id())))?;
    }
    let csv_path = dir.join("batteries.csv");
    let mut csv = Vec::new();
    let io = |e| Error::io(&csv_path, e);
    writeln!(csv, "series_id,algorithm,statistic,q_d,surr_min,surr_median,surr_max,rank,alpha,rejected").map_err(io)?;
    for b in &report.batteries {
        let mut q = b.result.q_surr.clone();
        q.sort_by(f64::total_cmp);
        let alpha = if b.result.alpha_degenerate {
            "inf".to_string()
        } else {
            format!("{}", b.result.alpha)
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            b.series_id,
            b.algorithm,
            b.statistic,
            b.result.q_d,
            q[0],
            q[q.len() / 2],
            q[q.len() - 1],
            b.result.rank,
            alpha,
            b.result.rejected
        )
        .map_err(io)?;
    }
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    let json_path = dir.join("lorenz_demo.json");
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))
}
