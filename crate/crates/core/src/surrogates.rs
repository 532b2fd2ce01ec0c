//! Surrogate generators for the three classical null hypotheses and the
//! rank-order significance test.
//!
//! * `Alg0`: random shuffle (i.i.d. noise).
//! * `Alg1`: Fourier phase randomisation (linearly correlated Gaussian noise).
//! * `Alg2`: amplitude adjusted Fourier transform (static monotone transform
//!   of linearly correlated Gaussian noise).
//!
//! Transforms run at the exact series length; nothing is zero-padded.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantifiers::{forward_statistic, quantify_with, QuantifyOptions, Statistic};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::series::{Direction, EmbeddingParams, TimeSeries};

/// Smallest ensemble for a two-sided rank test at the 5% level.
pub const MIN_SURROGATES_TWO_SIDED: usize = 39;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Alg0,
    Alg1,
    Alg2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Alg0, Algorithm::Alg1, Algorithm::Alg2];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Alg0 => "alg0",
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
        }
    }

    pub fn generate(&self, series: &TimeSeries, rng: &mut StreamRng) -> Result<TimeSeries> {
        match self {
            Algorithm::Alg0 => Ok(alg0_shuffle(series, rng)),
            Algorithm::Alg1 => alg1_phase_randomize(series, rng),
            Algorithm::Alg2 => alg2_aaft(series, rng),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alg0" | "0" | "shuffle" => Ok(Algorithm::Alg0),
            "alg1" | "1" | "ft" | "phase" => Ok(Algorithm::Alg1),
            "alg2" | "2" | "aaft" => Ok(Algorithm::Alg2),
            other => Err(Error::InvalidArgument(format!("unknown surrogate algorithm {other:?}"))),
        }
    }
}

pub fn alg0_shuffle(series: &TimeSeries, rng: &mut StreamRng) -> TimeSeries {
    let mut values = series.values().to_vec();
    values.shuffle(rng);
    series.with_values(values).expect("permutation keeps length and finiteness")
}

fn check_fourier_length(series: &TimeSeries) -> Result<()> {
    if series.len() < 4 {
        return Err(Error::TooShort {
            len: series.len(),
            needed: 4,
        });
    }
    Ok(())
}

fn phase_randomized(values: &[f64], rng: &mut StreamRng) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut spectrum: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spectrum);

    // bins 1..ceil(n/2) get fresh phases; their mirrors get the conjugate.
    // DC and, for even n, the Nyquist bin are left untouched.
    for k in 1..n.div_ceil(2) {
        let phase: f64 = rng.random::<f64>() * TAU;
        let z = Complex::from_polar(spectrum[k].norm(), phase);
        spectrum[k] = z;
        spectrum[n - k] = z.conj();
    }

    planner.plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    spectrum.iter().map(|z| z.re * scale).collect()
}

pub fn alg1_phase_randomize(series: &TimeSeries, rng: &mut StreamRng) -> Result<TimeSeries> {
    check_fourier_length(series)?;
    series.with_values(phase_randomized(series.values(), rng))
}

/// Indices that sort `values` ascending; equal values keep their order.
fn stable_argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Places the ascending `sorted` values at the rank positions of `template`.
fn rank_match(template: &[f64], sorted: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; template.len()];
    for (r, &pos) in stable_argsort(template).iter().enumerate() {
        out[pos] = sorted[r];
    }
    out
}

pub fn alg2_aaft(series: &TimeSeries, rng: &mut StreamRng) -> Result<TimeSeries> {
    check_fourier_length(series)?;
    let x = series.values();
    let mut gauss: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
    gauss.sort_by(f64::total_cmp);
    let gaussianized = rank_match(x, &gauss);
    let shuffled = phase_randomized(&gaussianized, rng);
    let mut sorted_x = x.to_vec();
    sorted_x.sort_by(f64::total_cmp);
    series.with_values(rank_match(&shuffled, &sorted_x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateEnsemble {
    pub algorithm: Algorithm,
    pub source_id: String,
    pub seed: u64,
    pub members: Vec<TimeSeries>,
}

/// Stream tag for the surrogates of one source series.
pub fn ensemble_tag(algorithm: Algorithm, source_id: &str) -> String {
    format!("{}:{source_id}", algorithm.as_str())
}

impl SurrogateEnsemble {
    /// Member `k` is drawn from `stream(seed, "<alg>:<id>", k)`, so the ensemble
    /// does not depend on thread scheduling.
    pub fn generate(series: &TimeSeries, algorithm: Algorithm, n: usize, seed: u64) -> Result<Self> {
        let tag = ensemble_tag(algorithm, series.id());
        let members = (0..n as u64)
            .into_par_iter()
            .map(|k| algorithm.generate(series, &mut stream(seed, &tag, k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            algorithm,
            source_id: series.id().to_string(),
            seed,
            members,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTestResult {
    pub q_d: f64,
    pub q_surr: Vec<f64>,
    /// 1-based position of `q_d` among the `N + 1` pooled statistics.
    pub rank: usize,
    /// `|q_d - mean| / sd` over the surrogate statistics (sample sd).
    /// Infinite when the surrogate spread is zero; serialised as `null`.
    pub alpha: f64,
    pub alpha_degenerate: bool,
    pub rejected: bool,
}

impl SurrogateTestResult {
    /// Two-sided significance level of the rank criterion, `2 / (N + 1)`.
    pub fn significance_level(&self) -> f64 {
        2.0 / (self.q_surr.len() + 1) as f64
    }
}

/// Two-sided rank-order criterion.
///
/// The null is rejected only when `q_d` is strictly below or strictly above
/// every surrogate statistic. A tie with a surrogate never produces a
/// rejection and moves the reported rank off the extremes.
pub fn rank_order_test(q_d: f64, q_surr: &[f64]) -> Result<SurrogateTestResult> {
    let n = q_surr.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "rank-order test needs at least 2 surrogate statistics, got {n}"
        )));
    }
    if !q_d.is_finite() || q_surr.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite test statistic".into()));
    }
    let less = q_surr.iter().filter(|&&q| q < q_d).count();
    let equal = q_surr.iter().filter(|&&q| q == q_d).count();
    let rank = if equal == 0 {
        less + 1
    } else {
        (1 + less + equal / 2).clamp(2, n)
    };
    let rejected = rank == 1 || rank == n + 1;

    let mean = q_surr.iter().sum::<f64>() / n as f64;
    let var = q_surr.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let (alpha, alpha_degenerate) = if sd == 0.0 {
        (f64::INFINITY, true)
    } else {
        ((q_d - mean).abs() / sd, false)
    };
    Ok(SurrogateTestResult {
        q_d,
        q_surr: q_surr.to_vec(),
        rank,
        alpha,
        alpha_degenerate,
        rejected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub series_id: String,
    pub algorithm: Algorithm,
    pub statistic: Statistic,
    pub params: EmbeddingParams,
    pub seed: u64,
    pub result: SurrogateTestResult,
}

/// Statistic of the original series versus `n_surrogates` surrogates,
/// forward direction only.
pub fn run_surrogate_battery(
    series: &TimeSeries,
    params: EmbeddingParams,
    algorithm: Algorithm,
    n_surrogates: usize,
    statistic: Statistic,
    seed: u64,
) -> Result<BatteryReport> {
    run_surrogate_battery_with(
        series,
        params,
        algorithm,
        n_surrogates,
        statistic,
        seed,
        &QuantifyOptions::default(),
    )
}

pub fn run_surrogate_battery_with(
    series: &TimeSeries,
    params: EmbeddingParams,
    algorithm: Algorithm,
    n_surrogates: usize,
    statistic: Statistic,
    seed: u64,
    options: &QuantifyOptions,
) -> Result<BatteryReport> {
    if n_surrogates < MIN_SURROGATES_TWO_SIDED {
        log::warn!(
            "{n_surrogates} surrogates cannot reach a two-sided 5% rank test (need {MIN_SURROGATES_TWO_SIDED})"
        );
    }
    params.check_length(series.len())?;
    let q_d = forward_statistic(series, params, statistic, options)?;
    let tag = ensemble_tag(algorithm, series.id());
    let q_surr = (0..n_surrogates as u64)
        .into_par_iter()
        .map(|k| {
            let surrogate = algorithm.generate(series, &mut stream(seed, &tag, k))?;
            forward_statistic(&surrogate, params, statistic, options)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatteryReport {
        series_id: series.id().to_string(),
        algorithm,
        statistic,
        params,
        seed,
        result: rank_order_test(q_d, &q_surr)?,
    })
}

/// All three statistics against one ensemble. Equivalent to three calls of
/// [`run_surrogate_battery_with`] with the same seed, but each surrogate is
/// generated and mapped once.
pub fn run_battery_all_statistics(
    series: &TimeSeries,
    params: EmbeddingParams,
    algorithm: Algorithm,
    n_surrogates: usize,
    seed: u64,
    options: &QuantifyOptions,
) -> Result<Vec<BatteryReport>> {
    if n_surrogates < MIN_SURROGATES_TWO_SIDED {
        log::warn!(
            "{n_surrogates} surrogates cannot reach a two-sided 5% rank test (need {MIN_SURROGATES_TWO_SIDED})"
        );
    }
    let original = quantify_with(series, params, Direction::Forward, options)?;
    let tag = ensemble_tag(algorithm, series.id());
    let surr = (0..n_surrogates as u64)
        .into_par_iter()
        .map(|k| {
            let surrogate = algorithm.generate(series, &mut stream(seed, &tag, k))?;
            quantify_with(&surrogate, params, Direction::Forward, options)
        })
        .collect::<Result<Vec<_>>>()?;
    Statistic::ALL
        .iter()
        .map(|&statistic| {
            let q_surr: Vec<f64> = surr.iter().map(|q| q.get(statistic)).collect();
            Ok(BatteryReport {
                series_id: series.id().to_string(),
                algorithm,
                statistic,
                params,
                seed,
                result: rank_order_test(original.get(statistic), &q_surr)?,
            })
        })
        .collect()
}

/// Seed of surrogate `index` in an ensemble, exposed for provenance records.
pub fn member_seed(seed: u64, algorithm: Algorithm, source_id: &str, index: u64) -> u64 {
    derive_seed(seed, &ensemble_tag(algorithm, source_id), index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new("s", v).unwrap()
    }

    fn sorted(v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, "test-noise", 0);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn shuffle_keeps_multiset() {
        let s = ts(noise(300, 1));
        let out = alg0_shuffle(&s, &mut stream(5, "t", 0));
        assert_eq!(sorted(out.values()), sorted(s.values()));
        assert_ne!(out.values(), s.values());
    }

    #[test]
    fn shuffle_of_constant_is_identity() {
        let s = ts(vec![3.5; 40]);
        assert_eq!(alg0_shuffle(&s, &mut stream(5, "t", 0)), s);
        assert_eq!(alg2_aaft(&s, &mut stream(5, "t", 0)).unwrap(), s);
    }

    #[test]
    fn shuffle_moves_distinct_values() {
        let s = ts((0..1000).map(f64::from).collect());
        for k in 0..100 {
            let out = alg0_shuffle(&s, &mut stream(9, "moves", k));
            assert_ne!(out.values(), s.values());
        }
    }

    #[test]
    fn phase_randomized_keeps_mean() {
        for n in [4, 5, 64, 1490] {
            let s = ts(noise(n, n as u64));
            let out = alg1_phase_randomize(&s, &mut stream(3, "m", 0)).unwrap();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean(out.values()) - mean(s.values())).abs() < 1e-9);
        }
    }

    #[test]
    fn fourier_methods_need_four_samples() {
        let s = ts(vec![1.0, 2.0, 3.0]);
        assert!(alg1_phase_randomize(&s, &mut stream(0, "x", 0)).is_err());
        assert!(alg2_aaft(&s, &mut stream(0, "x", 0)).is_err());
    }

    #[test]
    fn aaft_keeps_multiset_with_ties() {
        let v: Vec<f64> = noise(257, 4).iter().map(|x| (x * 3.0).round()).collect();
        let s = ts(v);
        let out = alg2_aaft(&s, &mut stream(1, "a", 0)).unwrap();
        assert_eq!(sorted(out.values()), sorted(s.values()));
    }

    #[test]
    fn ensembles_are_deterministic() {
        let s = ts(noise(128, 2));
        for alg in Algorithm::ALL {
            let a = SurrogateEnsemble::generate(&s, alg, 5, 77).unwrap();
            let b = SurrogateEnsemble::generate(&s, alg, 5, 77).unwrap();
            assert_eq!(a, b);
            let c = SurrogateEnsemble::generate(&s, alg, 5, 78).unwrap();
            assert_ne!(a.members, c.members);
            assert!(a.members.iter().all(|m| m.len() == s.len()));
        }
    }

    #[test]
    fn rank_test_rejects_extreme() {
        let surr: Vec<f64> = (0..39).map(|i| 0.2 + i as f64 * 0.01).collect();
        let r = rank_order_test(0.1, &surr).unwrap();
        assert!(r.rejected);
        assert_eq!(r.rank, 1);
        assert!((r.significance_level() - 0.05).abs() < 1e-15);
        let r = rank_order_test(9.0, &surr).unwrap();
        assert!(r.rejected);
        assert_eq!(r.rank, 40);
    }

    #[test]
    fn rank_test_median_not_rejected() {
        let surr: Vec<f64> = (0..39).map(f64::from).collect();
        let r = rank_order_test(19.0, &surr).unwrap();
        assert!(!r.rejected);
        assert_eq!(r.alpha, 0.0);
        assert!(!r.alpha_degenerate);
    }

    #[test]
    fn rank_test_ties_accept() {
        let surr = vec![1.0, 1.0, 2.0, 3.0];
        let r = rank_order_test(1.0, &surr).unwrap();
        assert!(!r.rejected);
        assert!(r.rank > 1);
        let r = rank_order_test(3.0, &surr).unwrap();
        assert!(!r.rejected);
        assert!(r.rank <= 4);
    }

    #[test]
    fn rank_test_zero_spread() {
        let r = rank_order_test(0.5, &[1.0, 1.0, 1.0]).unwrap();
        assert!(r.alpha.is_infinite());
        assert!(r.alpha_degenerate);
        assert!(r.rejected);
        assert!(rank_order_test(0.5, &[1.0]).is_err());
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("alg3".parse::<Algorithm>().is_err());
    }
}
