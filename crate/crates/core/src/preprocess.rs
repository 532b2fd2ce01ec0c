//! Adaptive RR-interval filter.
//!
//! Pass 1 drops beats outside the physiological window `[350, 1200]` ms.
//! Pass 2 walks the surviving beats left to right and replaces an interior
//! beat that differs by more than 20% from both neighbours with the mean of
//! the last few accepted beats. The left neighbour is taken from the output
//! already produced, so a replaced outlier does not drag its successor along.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_ms: f64,
    pub max_ms: f64,
    /// Relative difference to both neighbours above which a beat is replaced.
    pub adjacency_threshold: f64,
    /// Number of trailing accepted beats averaged into a replacement.
    pub window: usize,
    /// Series whose modified fraction exceeds this are not accepted.
    pub reject_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_ms: 350.0,
            max_ms: 1200.0,
            adjacency_threshold: 0.20,
            window: 5,
            reject_threshold: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub series_id: String,
    pub original_length: usize,
    pub removed_count: usize,
    pub replaced_count: usize,
    pub modified_fraction: f64,
    pub accepted: bool,
}

pub fn adaptive_filter(series: &TimeSeries) -> Result<(TimeSeries, FilterReport)> {
    adaptive_filter_with(series, &FilterConfig::default())
}

pub fn adaptive_filter_with(
    series: &TimeSeries,
    config: &FilterConfig,
) -> Result<(TimeSeries, FilterReport)> {
    if config.window == 0 {
        return Err(Error::InvalidArgument("filter window must be >= 1".into()));
    }
    let original_length = series.len();
    if original_length < 3 {
        return Err(Error::TooShort {
            len: original_length,
            needed: 3,
        });
    }

    let kept: Vec<f64> = series
        .values()
        .iter()
        .copied()
        .filter(|&v| v >= config.min_ms && v <= config.max_ms)
        .collect();
    let removed_count = original_length - kept.len();
    if kept.len() < 2 {
        return Err(Error::TooShort {
            len: kept.len(),
            needed: 2,
        });
    }

    let n = kept.len();
    let mut out: Vec<f64> = Vec::with_capacity(n);
    let mut accepted: Vec<f64> = Vec::with_capacity(n);
    let mut replaced_count = 0;
    for i in 0..n {
        let x = kept[i];
        let outlier = i > 0 && i + 1 < n && {
            let prev = out[i - 1];
            let next = kept[i + 1];
            ((x - prev) / prev).abs() > config.adjacency_threshold
                && ((x - next) / next).abs() > config.adjacency_threshold
        };
        if outlier {
            let tail = &accepted[accepted.len().saturating_sub(config.window)..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            out.push(mean);
            replaced_count += 1;
        } else {
            out.push(x);
            accepted.push(x);
        }
    }

    let modified_fraction = (removed_count + replaced_count) as f64 / original_length as f64;
    let report = FilterReport {
        series_id: series.id().to_string(),
        original_length,
        removed_count,
        replaced_count,
        modified_fraction,
        accepted: modified_fraction <= config.reject_threshold,
    };
    Ok((series.with_values(out)?, report))
}
