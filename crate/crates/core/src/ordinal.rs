//! Ordinal patterns and ordinal partition networks.
//!
//! A window `(x_i, x_{i+tau}, ..., x_{i+(m-1)tau})` is ranked so that rank 1
//! marks the smallest amplitude; equal amplitudes are ranked by order of
//! appearance. Patterns are keyed by their Lehmer code, which keeps the
//! network sparse: only observed patterns and transitions are stored, never
//! an `m! x m!` matrix.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Direction, EmbeddingParams, TimeSeries};

/// Largest `m` whose `m!` fits in a `u64`.
pub const MAX_ENCODABLE_M: usize = 20;

const FACTORIALS: [u64; MAX_ENCODABLE_M + 1] = {
    let mut f = [1u64; MAX_ENCODABLE_M + 1];
    let mut i = 1;
    while i <= MAX_ENCODABLE_M {
        f[i] = f[i - 1] * i as u64;
        i += 1;
    }
    f
};

pub fn factorial(n: usize) -> Option<u64> {
    FACTORIALS.get(n).copied()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrdinalPattern {
    ranks: Vec<u8>,
}

impl OrdinalPattern {
    /// Validates that `ranks` is a permutation of `1..=m`.
    pub fn new(ranks: Vec<u8>) -> Result<Self> {
        let m = ranks.len();
        if m == 0 {
            return Err(Error::InvalidArgument("empty pattern".into()));
        }
        let mut seen = vec![false; m];
        for &r in &ranks {
            let r = r as usize;
            if r == 0 || r > m || seen[r - 1] {
                return Err(Error::InvalidArgument(format!(
                    "{ranks:?} is not a permutation of 1..={m}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(Self { ranks })
    }

    /// Ranks a window; ties go to the earlier sample.
    pub fn from_window(window: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..window.len()).collect();
        order.sort_by(|&a, &b| {
            window[a]
                .partial_cmp(&window[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut ranks = vec![0u8; window.len()];
        for (r, &pos) in order.iter().enumerate() {
            ranks[pos] = (r + 1) as u8;
        }
        Self { ranks }
    }

    pub fn ranks(&self) -> &[u8] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

impl fmt::Display for OrdinalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, r) in self.ranks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("}")
    }
}

/// Lehmer-code index of a pattern in `0..m!`.
pub fn encode_pattern(pattern: &OrdinalPattern) -> Result<u64> {
    let ranks = pattern.ranks();
    let m = ranks.len();
    if m > MAX_ENCODABLE_M {
        return Err(Error::PatternTooLong(m));
    }
    let mut code = 0u64;
    for k in 0..m {
        let smaller_after = ranks[k + 1..].iter().filter(|&&r| r < ranks[k]).count() as u64;
        code += smaller_after * FACTORIALS[m - 1 - k];
    }
    Ok(code)
}

pub fn decode_pattern(code: u64, m: usize) -> Result<OrdinalPattern> {
    if m > MAX_ENCODABLE_M {
        return Err(Error::PatternTooLong(m));
    }
    if m == 0 || code >= FACTORIALS[m] {
        return Err(Error::InvalidArgument(format!("code {code} out of range for m={m}")));
    }
    let mut remaining: Vec<u8> = (1..=m as u8).collect();
    let mut rest = code;
    let mut ranks = Vec::with_capacity(m);
    for k in 0..m {
        let f = FACTORIALS[m - 1 - k];
        let digit = (rest / f) as usize;
        rest %= f;
        ranks.push(remaining.remove(digit));
    }
    Ok(OrdinalPattern { ranks })
}

/// Lehmer code of the window's pattern, computed without materialising the
/// ranks: digit `k` counts later samples strictly below sample `k`, which is
/// exactly the number of later ranks below rank `k` under the tie rule.
#[inline]
fn window_code(values: &[f64], start: usize, m: usize, tau: usize) -> u64 {
    let mut code = 0u64;
    for k in 0..m {
        let x = values[start + k * tau];
        let mut smaller = 0u64;
        for j in k + 1..m {
            if values[start + j * tau] < x {
                smaller += 1;
            }
        }
        code += smaller * FACTORIALS[m - 1 - k];
    }
    code
}

/// The symbol sequence `S` of a series, stored as Lehmer codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSequence {
    codes: Vec<u64>,
    params: EmbeddingParams,
    direction: Direction,
}

impl PatternSequence {
    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn params(&self) -> EmbeddingParams {
        self.params
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn pattern(&self, i: usize) -> OrdinalPattern {
        decode_pattern(self.codes[i], self.params.m).expect("stored codes are valid")
    }

    pub fn patterns(&self) -> impl Iterator<Item = OrdinalPattern> + '_ {
        (0..self.len()).map(|i| self.pattern(i))
    }

    /// Builds a sequence from explicit codes (used for hand-made symbol
    /// sequences in tests and tools).
    pub fn from_codes(codes: Vec<u64>, params: EmbeddingParams, direction: Direction) -> Result<Self> {
        let limit = factorial(params.m).ok_or(Error::PatternTooLong(params.m))?;
        if let Some(&bad) = codes.iter().find(|&&c| c >= limit) {
            return Err(Error::InvalidArgument(format!("code {bad} out of range for m={}", params.m)));
        }
        Ok(Self {
            codes,
            params,
            direction,
        })
    }
}

pub fn extract_patterns(
    series: &TimeSeries,
    params: EmbeddingParams,
    direction: Direction,
) -> Result<PatternSequence> {
    if params.m > MAX_ENCODABLE_M {
        return Err(Error::PatternTooLong(params.m));
    }
    let count = params.check_length(series.len())?;
    let reversed;
    let values = match direction {
        Direction::Forward => series.values(),
        Direction::Reverse => {
            reversed = series.reversed();
            reversed.values()
        }
    };
    let codes = (0..count)
        .map(|i| window_code(values, i, params.m, params.tau))
        .collect();
    Ok(PatternSequence {
        codes,
        params,
        direction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: u64,
    pub to: u64,
    pub weight: u64,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Weighted directed transition network over the observed patterns.
///
/// Nodes and edges are kept sorted by code, which makes lookups a binary
/// search and every traversal order deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalNetwork {
    nodes: Vec<u64>,
    edges: Vec<Edge>,
    params: EmbeddingParams,
    direction: Direction,
}

impl OrdinalNetwork {
    pub fn nodes(&self) -> &[u64] {
        &self.nodes
    }

    /// Edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn params(&self) -> EmbeddingParams {
        self.params
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn weight(&self, from: u64, to: u64) -> u64 {
        self.edges
            .binary_search_by(|e| (e.from, e.to).cmp(&(from, to)))
            .map_or(0, |i| self.edges[i].weight)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Outgoing edges grouped by source node, in source order.
    pub fn rows(&self) -> impl Iterator<Item = (u64, &[Edge])> + '_ {
        self.edges
            .chunk_by(|a, b| a.from == b.from)
            .map(|row| (row[0].from, row))
    }

    /// Writes `from,to,weight` with patterns spelled out as rank lists.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "from,to,weight")?;
        for e in &self.edges {
            let a = decode_pattern(e.from, self.params.m).expect("valid code");
            let b = decode_pattern(e.to, self.params.m).expect("valid code");
            writeln!(out, "\"{a}\",\"{b}\",{}", e.weight)?;
        }
        Ok(())
    }
}

pub fn build_network(symbols: &PatternSequence) -> Result<OrdinalNetwork> {
    let codes = symbols.codes();
    if codes.len() < 2 {
        return Err(Error::TooShort {
            len: codes.len(),
            needed: 2,
        });
    }
    let mut nodes = codes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();

    let mut pairs: Vec<(u64, u64)> = codes.windows(2).map(|w| (w[0], w[1])).collect();
    pairs.sort_unstable();
    let edges = pairs
        .chunk_by(|a, b| a == b)
        .map(|run| Edge {
            from: run[0].0,
            to: run[0].1,
            weight: run.len() as u64,
        })
        .collect();
    Ok(OrdinalNetwork {
        nodes,
        edges,
        params: symbols.params(),
        direction: symbols.direction(),
    })
}
