//! Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest `n1 * n2` for which the exact null distribution is enumerated.
pub const EXACT_MAX_PRODUCT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    /// `U` of the first sample: pairs `(a, b)` with `a > b`, ties counting 1/2.
    pub u_statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: MwMethod,
}

/// Midranks (1-based) of the pooled sample plus the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn validate(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Mann-Whitney test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("Mann-Whitney samples must be finite".into()));
    }
    Ok(())
}

struct RankSummary {
    u: f64,
    n1: usize,
    n2: usize,
    ties: Vec<usize>,
}

fn rank_summary(a: &[f64], b: &[f64]) -> RankSummary {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let n1 = a.len();
    let r1: f64 = ranks[..n1].iter().sum();
    RankSummary {
        u: r1 - (n1 * (n1 + 1)) as f64 / 2.0,
        n1,
        n2: b.len(),
        ties,
    }
}

/// Two-sided test; exact when `n1 * n2 <= 400` and the pooled sample has no
/// ties, tie-corrected normal approximation with continuity correction
/// otherwise.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitneyResult> {
    validate(a, b)?;
    let summary = rank_summary(a, b);
    if summary.ties.is_empty() && summary.n1 * summary.n2 <= EXACT_MAX_PRODUCT {
        Ok(exact(&summary))
    } else {
        Ok(normal(&summary))
    }
}

/// Exact test; fails on tied samples, where the enumerated distribution does
/// not apply.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitneyResult> {
    validate(a, b)?;
    let summary = rank_summary(a, b);
    if !summary.ties.is_empty() {
        return Err(Error::InvalidArgument("exact Mann-Whitney test requires tie-free samples".into()));
    }
    Ok(exact(&summary))
}

pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitneyResult> {
    validate(a, b)?;
    Ok(normal(&rank_summary(a, b)))
}

/// Number of rank arrangements giving each value of `U`, for sample sizes
/// `n1`, `n2`. Index `u` holds the count for `U = u`.
pub fn u_distribution(n1: usize, n2: usize) -> Vec<u64> {
    let max_u = n1 * n2;
    // layer[j][u]: arrangements of i first-sample and j second-sample items
    let mut prev: Vec<Vec<u64>> = (0..=n2)
        .map(|_| {
            let mut row = vec![0u64; max_u + 1];
            row[0] = 1;
            row
        })
        .collect();
    for _ in 1..=n1 {
        let mut cur: Vec<Vec<u64>> = vec![vec![0u64; max_u + 1]; n2 + 1];
        for j in 0..=n2 {
            for u in 0..=max_u {
                // largest item from the first sample: it beats all j others
                let mut c = if u >= j { prev[j][u - j] } else { 0 };
                if j > 0 {
                    c += cur[j - 1][u];
                }
                cur[j][u] = c;
            }
        }
        prev = cur;
    }
    prev.swap_remove(n2)
}

fn exact(s: &RankSummary) -> MannWhitneyResult {
    let dist = u_distribution(s.n1, s.n2);
    let total: u64 = dist.iter().sum();
    // without ties U is an integer
    let u = s.u.round() as usize;
    let lower: u64 = dist[..=u].iter().sum();
    let upper: u64 = dist[u..].iter().sum();
    let p = (2.0 * lower.min(upper) as f64 / total as f64).min(1.0);
    MannWhitneyResult {
        u_statistic: s.u,
        p_value: p,
        method: MwMethod::Exact,
    }
}

fn normal(s: &RankSummary) -> MannWhitneyResult {
    let n1 = s.n1 as f64;
    let n2 = s.n2 as f64;
    let n = n1 + n2;
    let mean = n1 * n2 / 2.0;
    let tie_term: f64 = s.ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = if n > 1.0 {
        n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((s.u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    MannWhitneyResult {
        u_statistic: s.u,
        p_value: p,
        method: MwMethod::NormalApprox,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let r = mann_whitney(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert_eq!(r.method, MwMethod::Exact);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn five_by_five() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [6.0, 7.0, 8.0, 9.0, 10.0];
        let r = mann_whitney(&a, &b).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert!((r.p_value - 2.0 / 252.0).abs() < 1e-15);
        let flipped = mann_whitney(&b, &a).unwrap();
        assert_eq!(flipped.u_statistic, 25.0);
        assert_eq!(flipped.p_value, r.p_value);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.1, 0.7, 0.5];
        let r = mann_whitney(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = mann_whitney(&[2.0; 30], &[2.0; 30]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, MwMethod::NormalApprox);
    }

    #[test]
    fn distribution_totals_binomial() {
        let d = u_distribution(5, 5);
        assert_eq!(d.iter().sum::<u64>(), 252);
        assert_eq!(d.len(), 26);
        assert_eq!(d[0], 1);
        assert_eq!(d[25], 1);
        let d = u_distribution(20, 20);
        assert_eq!(d.iter().sum::<u64>(), 137_846_528_820);
        assert_eq!(u_distribution(0, 3), vec![1]);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(mann_whitney(&[], &[1.0]).is_err());
        assert!(mann_whitney(&[1.0], &[]).is_err());
    }

    #[test]
    fn exact_refuses_ties() {
        assert!(mann_whitney_exact(&[1.0, 2.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn midranks_with_ties() {
        let (r, t) = midranks(&[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(t, vec![2]);
    }

    #[test]
    fn large_samples_use_normal() {
        let a: Vec<f64> = (0..30).map(f64::from).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 100.5).collect();
        let r = mann_whitney(&a, &b).unwrap();
        assert_eq!(r.method, MwMethod::NormalApprox);
        assert!(r.p_value < 1e-9);
    }
}
