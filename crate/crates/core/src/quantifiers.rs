//! Entropy quantifiers of an ordinal partition network, in nats.
//!
//! * permutation entropy: Shannon entropy of the symbol frequencies;
//! * conditional permutation entropy: row entropies of the transition
//!   matrix (self-loops included) weighted by symbol frequency;
//! * global node entropy: row entropies of the self-loop-free transition
//!   matrix weighted by each node's share of the self-loop-free out-strength.
//!
//! `0 ln 0` is taken as 0 throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::{build_network, extract_patterns, OrdinalNetwork, PatternSequence};
use crate::series::{Direction, EmbeddingParams, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "h_pe")]
    PermutationEntropy,
    #[serde(rename = "h_cpe")]
    ConditionalEntropy,
    #[serde(rename = "h_gne")]
    GlobalNodeEntropy,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [
        Statistic::PermutationEntropy,
        Statistic::ConditionalEntropy,
        Statistic::GlobalNodeEntropy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Statistic::PermutationEntropy => "h_pe",
            Statistic::ConditionalEntropy => "h_cpe",
            Statistic::GlobalNodeEntropy => "h_gne",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h_pe" | "pe" => Ok(Statistic::PermutationEntropy),
            "h_cpe" | "cpe" => Ok(Statistic::ConditionalEntropy),
            "h_gne" | "gne" => Ok(Statistic::GlobalNodeEntropy),
            other => Err(Error::InvalidArgument(format!("unknown statistic {other:?}"))),
        }
    }
}

/// How node weights in the global node entropy are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeWeighting {
    /// Out-strength after removing self-loops.
    #[default]
    ExcludeSelfLoops,
    /// Out-strength including self-loops.
    IncludeSelfLoops,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantifierTriple {
    pub series_id: String,
    pub params: EmbeddingParams,
    pub direction: Direction,
    pub h_pe: f64,
    pub h_cpe: f64,
    pub h_gne: f64,
}

impl QuantifierTriple {
    pub fn get(&self, statistic: Statistic) -> f64 {
        match statistic {
            Statistic::PermutationEntropy => self.h_pe,
            Statistic::ConditionalEntropy => self.h_cpe,
            Statistic::GlobalNodeEntropy => self.h_gne,
        }
    }
}

fn plogp_sum<I: IntoIterator<Item = u64>>(counts: I, total: u64) -> f64 {
    let total = total as f64;
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.ln();
        }
    }
    h
}

/// Occurrences of each distinct symbol, sorted by code.
fn symbol_counts(codes: &[u64]) -> Vec<(u64, u64)> {
    let mut sorted = codes.to_vec();
    sorted.sort_unstable();
    sorted
        .chunk_by(|a, b| a == b)
        .map(|run| (run[0], run.len() as u64))
        .collect()
}

pub fn permutation_entropy(symbols: &PatternSequence) -> f64 {
    // Summing over counts in sorted order makes the result depend only on
    // the frequency multiset, not on how the patterns are labelled.
    let mut counts: Vec<u64> = symbol_counts(symbols.codes()).into_iter().map(|(_, c)| c).collect();
    counts.sort_unstable();
    plogp_sum(counts, symbols.len() as u64)
}

pub fn conditional_entropy(symbols: &PatternSequence, network: &OrdinalNetwork) -> f64 {
    let counts = symbol_counts(symbols.codes());
    let n = symbols.len() as f64;
    let mut h = 0.0;
    for (node, row) in network.rows() {
        let Ok(idx) = counts.binary_search_by_key(&node, |&(c, _)| c) else {
            continue;
        };
        let p_i = counts[idx].1 as f64 / n;
        let out: u64 = row.iter().map(|e| e.weight).sum();
        h += p_i * plogp_sum(row.iter().map(|e| e.weight), out);
    }
    h
}

pub fn global_node_entropy(network: &OrdinalNetwork) -> f64 {
    global_node_entropy_with(network, NodeWeighting::default())
}

pub fn global_node_entropy_with(network: &OrdinalNetwork, weighting: NodeWeighting) -> f64 {
    // (node weight, local node entropy) for every node with a non-self-loop
    // out-edge; nodes leaving only through self-loops are dead ends
    let contributing: Vec<(u64, f64)> = network
        .rows()
        .filter_map(|(_, row)| {
            let off: u64 = row.iter().filter(|e| !e.is_self_loop()).map(|e| e.weight).sum();
            if off == 0 {
                return None;
            }
            let local = plogp_sum(
                row.iter().filter(|e| !e.is_self_loop()).map(|e| e.weight),
                off,
            );
            let weight = match weighting {
                NodeWeighting::ExcludeSelfLoops => off,
                NodeWeighting::IncludeSelfLoops => row.iter().map(|e| e.weight).sum(),
            };
            Some((weight, local))
        })
        .collect();
    let total: u64 = contributing.iter().map(|&(w, _)| w).sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    contributing
        .iter()
        .map(|&(w, local)| w as f64 / total * local)
        .sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantifyOptions {
    pub node_weighting: NodeWeighting,
}

pub fn quantify(
    series: &TimeSeries,
    params: EmbeddingParams,
    direction: Direction,
) -> Result<QuantifierTriple> {
    quantify_with(series, params, direction, &QuantifyOptions::default())
}

pub fn quantify_with(
    series: &TimeSeries,
    params: EmbeddingParams,
    direction: Direction,
    options: &QuantifyOptions,
) -> Result<QuantifierTriple> {
    let symbols = extract_patterns(series, params, direction)?;
    let network = build_network(&symbols)?;
    Ok(QuantifierTriple {
        series_id: series.id().to_string(),
        params,
        direction,
        h_pe: permutation_entropy(&symbols),
        h_cpe: conditional_entropy(&symbols, &network),
        h_gne: global_node_entropy_with(&network, options.node_weighting),
    })
}

/// One statistic of the forward network; the discriminating statistic used by
/// the surrogate tests.
pub fn forward_statistic(
    series: &TimeSeries,
    params: EmbeddingParams,
    statistic: Statistic,
    options: &QuantifyOptions,
) -> Result<f64> {
    let symbols = extract_patterns(series, params, Direction::Forward)?;
    if statistic == Statistic::PermutationEntropy {
        return Ok(permutation_entropy(&symbols));
    }
    let network = build_network(&symbols)?;
    Ok(match statistic {
        Statistic::ConditionalEntropy => conditional_entropy(&symbols, &network),
        _ => global_node_entropy_with(&network, options.node_weighting),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn seq(codes: &[u64]) -> PatternSequence {
        // m=3 leaves room for three distinct labels A=0, B=1, C=2
        PatternSequence::from_codes(codes.to_vec(), EmbeddingParams::new(3, 1).unwrap(), Direction::Forward)
            .unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn pe_examples() {
        close(permutation_entropy(&seq(&[4, 4, 4, 4])), 0.0);
        close(permutation_entropy(&seq(&[0, 1, 0, 1])), LN2);
        let s = TimeSeries::new("x", vec![0.5, 0.2, 0.9, 0.1]).unwrap();
        let p = extract_patterns(&s, EmbeddingParams::new(2, 1).unwrap(), Direction::Forward).unwrap();
        let expected = 3f64.ln() - 2.0 / 3.0 * LN2;
        close(permutation_entropy(&p), expected);
        assert!((expected - 0.636514).abs() < 1e-6);
    }

    #[test]
    fn cpe_examples() {
        let s = seq(&[0, 1, 0, 1, 0]);
        close(conditional_entropy(&s, &build_network(&s).unwrap()), 0.0);

        let s = seq(&[0, 1, 0, 0, 1]);
        let expected = 0.6 * (3f64.ln() - 2.0 / 3.0 * LN2);
        close(conditional_entropy(&s, &build_network(&s).unwrap()), expected);
        assert!((expected - 0.381908).abs() < 1e-6);
    }

    #[test]
    fn gne_examples() {
        let s = seq(&[0, 1, 0, 1]);
        close(global_node_entropy(&build_network(&s).unwrap()), 0.0);
        let s = seq(&[0, 0, 0, 0]);
        assert_eq!(global_node_entropy(&build_network(&s).unwrap()), 0.0);
        let s = seq(&[0, 1, 2, 0, 2, 1]);
        let expected = 0.8 * LN2;
        close(global_node_entropy(&build_network(&s).unwrap()), expected);
        assert!((expected - 0.554518).abs() < 1e-6);
    }

    #[test]
    fn gne_weighting_variants() {
        // A->A, A->A, A->B, B->A: A has out-strength 3 with self-loops, 1 without
        let s = seq(&[0, 0, 0, 1, 0]);
        let net = build_network(&s).unwrap();
        // every self-loop-free row is a point mass: both variants give 0
        assert_eq!(global_node_entropy_with(&net, NodeWeighting::ExcludeSelfLoops), 0.0);
        assert_eq!(global_node_entropy_with(&net, NodeWeighting::IncludeSelfLoops), 0.0);

        // A->A, A->B, A->C, B->A, C->A: only A has a spread row
        let s = seq(&[0, 0, 1, 0, 2, 0]);
        let net = build_network(&s).unwrap();
        close(global_node_entropy_with(&net, NodeWeighting::ExcludeSelfLoops), 0.5 * LN2);
        close(global_node_entropy_with(&net, NodeWeighting::IncludeSelfLoops), 0.6 * LN2);
    }

    #[test]
    fn dead_end_self_loop_node_is_excluded() {
        // B only loops to itself: contributes nothing and carries no weight
        let s = seq(&[0, 2, 0, 1, 1, 1]);
        let net = build_network(&s).unwrap();
        // A: {C:1, B:1} -> ln 2 with off-weight 2; C: {A:1} -> 0 with weight 1
        close(global_node_entropy(&net), 2.0 / 3.0 * LN2);
    }

    #[test]
    fn monotone_series_is_all_zero() {
        let s = TimeSeries::new("up", (0..50).map(f64::from).collect()).unwrap();
        let q = quantify(&s, EmbeddingParams::new(4, 2).unwrap(), Direction::Forward).unwrap();
        assert_eq!((q.h_pe, q.h_cpe, q.h_gne), (0.0, 0.0, 0.0));
        assert_eq!(q.get(Statistic::ConditionalEntropy), 0.0);
    }

    #[test]
    fn reversal_identity_exact() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let s = TimeSeries::new("r", v).unwrap();
        let p = EmbeddingParams::new(3, 2).unwrap();
        let a = quantify(&s, p, Direction::Reverse).unwrap();
        let b = quantify(&s.reversed(), p, Direction::Forward).unwrap();
        assert_eq!(a.h_pe.to_bits(), b.h_pe.to_bits());
        assert_eq!(a.h_cpe.to_bits(), b.h_cpe.to_bits());
        assert_eq!(a.h_gne.to_bits(), b.h_gne.to_bits());
    }

    #[test]
    fn statistic_names_round_trip() {
        for s in Statistic::ALL {
            assert_eq!(s.as_str().parse::<Statistic>().unwrap(), s);
        }
    }
}
