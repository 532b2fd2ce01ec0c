//! Group-comparison sweeps over `(m, tau)`, producing p-value grids.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantifiers::{quantify_with, QuantifierTriple, QuantifyOptions, Statistic};
use crate::rng::stream;
use crate::series::{Direction, EmbeddingParams, GroupedDataset, TimeSeries};
use crate::stats::{mann_whitney, MannWhitneyResult, MwMethod};
use crate::surrogates::{ensemble_tag, Algorithm};

/// Inclusive ranges of embedding dimension and lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sweep {
    pub m_min: usize,
    pub m_max: usize,
    pub tau_min: usize,
    pub tau_max: usize,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            m_min: 1,
            m_max: 16,
            tau_min: 1,
            tau_max: 4,
        }
    }
}

impl Sweep {
    pub fn new(m: (usize, usize), tau: (usize, usize)) -> Result<Self> {
        let s = Self {
            m_min: m.0,
            m_max: m.1,
            tau_min: tau.0,
            tau_max: tau.1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn single(params: EmbeddingParams) -> Self {
        Self {
            m_min: params.m,
            m_max: params.m,
            tau_min: params.tau,
            tau_max: params.tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_min == 0 || self.tau_min == 0 {
            return Err(Error::Config("m and tau ranges must start at 1 or above".into()));
        }
        if self.m_min > self.m_max || self.tau_min > self.tau_max {
            return Err(Error::Config("empty m or tau range".into()));
        }
        if self.m_max > crate::ordinal::MAX_ENCODABLE_M {
            return Err(Error::Config(format!(
                "m_max {} exceeds {}",
                self.m_max,
                crate::ordinal::MAX_ENCODABLE_M
            )));
        }
        Ok(())
    }

    /// Cells ordered by `m`, then `tau`.
    pub fn cells(&self) -> Vec<EmbeddingParams> {
        (self.m_min..=self.m_max)
            .flat_map(|m| (self.tau_min..=self.tau_max).map(move |tau| EmbeddingParams { m, tau }))
            .collect()
    }

    pub fn len(&self) -> usize {
        (self.m_max - self.m_min + 1) * (self.tau_max - self.tau_min + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    IntragroupFwdVsRev,
    Intergroup,
    OrigVsSurrogate,
}

impl Comparison {
    pub fn as_str(&self) -> &'static str {
        match self {
            Comparison::IntragroupFwdVsRev => "intragroup_fwd_vs_rev",
            Comparison::Intergroup => "intergroup",
            Comparison::OrigVsSurrogate => "orig_vs_surrogate",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the surrogate side of an original-versus-surrogate comparison is
/// summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateMode {
    /// One value per subject: the mean over that subject's surrogates.
    #[default]
    SubjectMeans,
    /// Every surrogate value of every subject.
    Pooled,
}

impl SurrogateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurrogateMode::SubjectMeans => "subject_means",
            SurrogateMode::Pooled => "pooled",
        }
    }
}

impl FromStr for SurrogateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subject_means" | "means" => Ok(SurrogateMode::SubjectMeans),
            "pooled" => Ok(SurrogateMode::Pooled),
            other => Err(Error::InvalidArgument(format!("unknown surrogate mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub m: usize,
    pub tau: usize,
    /// `None` when the cell could not be evaluated; `note` says why.
    pub p_value: Option<f64>,
    pub u_statistic: Option<f64>,
    pub method: Option<MwMethod>,
    pub note: Option<String>,
}

impl GridCell {
    fn from_test(params: EmbeddingParams, r: MannWhitneyResult) -> Self {
        Self {
            m: params.m,
            tau: params.tau,
            p_value: Some(r.p_value),
            u_statistic: Some(r.u_statistic),
            method: Some(r.method),
            note: None,
        }
    }

    fn invalid(params: EmbeddingParams, note: String) -> Self {
        Self {
            m: params.m,
            tau: params.tau,
            p_value: None,
            u_statistic: None,
            method: None,
            note: Some(note),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueGrid {
    pub comparison: Comparison,
    pub statistic: Statistic,
    pub groups: Vec<String>,
    pub direction: Option<Direction>,
    pub algorithm: Option<Algorithm>,
    pub surrogate_mode: Option<SurrogateMode>,
    pub cells: Vec<GridCell>,
}

impl PValueGrid {
    pub fn p_value(&self, m: usize, tau: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.m == m && c.tau == tau)
            .and_then(|c| c.p_value)
    }

    pub fn valid_cells(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.p_value.is_some())
    }

    /// File-name friendly identifier, e.g. `intergroup_PNB_vs_FNB_forward_h_pe`.
    pub fn name(&self) -> String {
        let mut parts = vec![self.comparison.as_str().to_string()];
        parts.push(self.groups.join("_vs_"));
        if let Some(a) = self.algorithm {
            parts.push(a.as_str().to_string());
        }
        if let Some(m) = self.surrogate_mode {
            parts.push(m.as_str().to_string());
        }
        if let Some(d) = self.direction {
            parts.push(d.as_str().to_string());
        }
        parts.push(self.statistic.as_str().to_string());
        parts
            .join("_")
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '-' })
            .collect()
    }

    /// CSV with header `m,tau,p_value,statistic,comparison,direction`; invalid
    /// cells and a missing direction are written as `NA`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,tau,p_value,statistic,comparison,direction")?;
        let direction = self.direction.map_or("NA", |d| d.as_str());
        for c in &self.cells {
            let p = c.p_value.map_or_else(|| "NA".to_string(), |p| format!("{p}"));
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.m,
                c.tau,
                p,
                self.statistic.as_str(),
                self.comparison.as_str(),
                direction
            )?;
        }
        Ok(())
    }
}

type TableKey = (String, EmbeddingParams, Direction);

/// Quantifier triples for a set of series over a sweep, with the reason for
/// every cell that could not be computed.
#[derive(Debug, Clone, Default)]
pub struct QuantifierTable {
    index: BTreeMap<TableKey, usize>,
    rows: Vec<QuantifierTriple>,
    invalid: Vec<(String, EmbeddingParams, Direction, String)>,
}

impl QuantifierTable {
    pub fn compute(
        series: &[&TimeSeries],
        sweep: &Sweep,
        directions: &[Direction],
        options: &QuantifyOptions,
    ) -> Self {
        let items: Vec<(&TimeSeries, EmbeddingParams, Direction)> = series
            .iter()
            .flat_map(|s| {
                sweep
                    .cells()
                    .into_iter()
                    .flat_map(move |p| directions.iter().map(move |&d| (*s, p, d)))
            })
            .collect();
        let results: Vec<_> = items
            .par_iter()
            .map(|&(s, p, d)| (s.id().to_string(), p, d, quantify_with(s, p, d, options)))
            .collect();
        let mut table = Self::default();
        for (id, p, d, r) in results {
            match r {
                Ok(q) => table.insert(q),
                Err(e) => table.invalid.push((id, p, d, e.to_string())),
            }
        }
        table
    }

    fn insert(&mut self, q: QuantifierTriple) {
        let key = (q.series_id.clone(), q.params, q.direction);
        self.index.insert(key, self.rows.len());
        self.rows.push(q);
    }

    pub fn get(&self, id: &str, params: EmbeddingParams, direction: Direction) -> Option<&QuantifierTriple> {
        self.index
            .get(&(id.to_string(), params, direction))
            .map(|&i| &self.rows[i])
    }

    pub fn rows(&self) -> &[QuantifierTriple] {
        &self.rows
    }

    pub fn invalid(&self) -> &[(String, EmbeddingParams, Direction, String)] {
        &self.invalid
    }

    fn invalid_reason(&self, id: &str, params: EmbeddingParams, direction: Direction) -> String {
        self.invalid
            .iter()
            .find(|(i, p, d, _)| i == id && *p == params && *d == direction)
            .map_or_else(
                || format!("no quantifiers for {id} at m={}, tau={}", params.m, params.tau),
                |(_, _, _, r)| format!("{id}: {r}"),
            )
    }

    /// Statistic values of `members` in one cell, or the first reason a
    /// member is missing.
    fn sample(
        &self,
        members: &[&TimeSeries],
        params: EmbeddingParams,
        direction: Direction,
        statistic: Statistic,
    ) -> std::result::Result<Vec<f64>, String> {
        members
            .iter()
            .map(|s| {
                self.get(s.id(), params, direction)
                    .map(|q| q.get(statistic))
                    .ok_or_else(|| self.invalid_reason(s.id(), params, direction))
            })
            .collect()
    }
}

fn mw_cell(params: EmbeddingParams, a: &[f64], b: &[f64]) -> GridCell {
    match mann_whitney(a, b) {
        Ok(r) => GridCell::from_test(params, r),
        Err(e) => GridCell::invalid(params, e.to_string()),
    }
}

fn members_at_least<'a>(dataset: &'a GroupedDataset, group: &str, min: usize) -> Result<Vec<&'a TimeSeries>> {
    let members = dataset.members(group)?;
    if members.len() < min {
        return Err(Error::Dataset(format!(
            "group {group:?} has {} member(s), need >= {min} members",
            members.len()
        )));
    }
    Ok(members)
}

/// Forward versus reverse quantifiers within one group.
pub fn intragroup_asymmetry_grid(
    dataset: &GroupedDataset,
    group: &str,
    sweep: &Sweep,
    statistic: Statistic,
) -> Result<PValueGrid> {
    let members = members_at_least(dataset, group, 2)?;
    let table = QuantifierTable::compute(&members, sweep, &Direction::BOTH, &QuantifyOptions::default());
    intragroup_from_table(dataset, &table, group, sweep, statistic)
}

pub fn intragroup_from_table(
    dataset: &GroupedDataset,
    table: &QuantifierTable,
    group: &str,
    sweep: &Sweep,
    statistic: Statistic,
) -> Result<PValueGrid> {
    let members = members_at_least(dataset, group, 2)?;
    let cells = sweep
        .cells()
        .into_iter()
        .map(|p| {
            let fwd = table.sample(&members, p, Direction::Forward, statistic);
            let rev = table.sample(&members, p, Direction::Reverse, statistic);
            match (fwd, rev) {
                (Ok(a), Ok(b)) => mw_cell(p, &a, &b),
                (Err(e), _) | (_, Err(e)) => GridCell::invalid(p, e),
            }
        })
        .collect();
    Ok(PValueGrid {
        comparison: Comparison::IntragroupFwdVsRev,
        statistic,
        groups: vec![group.to_string()],
        direction: None,
        algorithm: None,
        surrogate_mode: None,
        cells,
    })
}

/// Same-direction quantifiers of two groups.
pub fn intergroup_grid(
    dataset: &GroupedDataset,
    group_a: &str,
    group_b: &str,
    direction: Direction,
    sweep: &Sweep,
    statistic: Statistic,
) -> Result<PValueGrid> {
    let mut members = members_at_least(dataset, group_a, 2)?;
    members.extend(members_at_least(dataset, group_b, 2)?);
    let table = QuantifierTable::compute(&members, sweep, &[direction], &QuantifyOptions::default());
    intergroup_from_table(dataset, &table, group_a, group_b, direction, sweep, statistic)
}

pub fn intergroup_from_table(
    dataset: &GroupedDataset,
    table: &QuantifierTable,
    group_a: &str,
    group_b: &str,
    direction: Direction,
    sweep: &Sweep,
    statistic: Statistic,
) -> Result<PValueGrid> {
    let a_members = members_at_least(dataset, group_a, 2)?;
    let b_members = members_at_least(dataset, group_b, 2)?;
    let cells = sweep
        .cells()
        .into_iter()
        .map(|p| {
            let a = table.sample(&a_members, p, direction, statistic);
            let b = table.sample(&b_members, p, direction, statistic);
            match (a, b) {
                (Ok(a), Ok(b)) => mw_cell(p, &a, &b),
                (Err(e), _) | (_, Err(e)) => GridCell::invalid(p, e),
            }
        })
        .collect();
    Ok(PValueGrid {
        comparison: Comparison::Intergroup,
        statistic,
        groups: vec![group_a.to_string(), group_b.to_string()],
        direction: Some(direction),
        algorithm: None,
        surrogate_mode: None,
        cells,
    })
}

/// Forward quantifiers of every surrogate of every subject in a group.
#[derive(Debug, Clone, Default)]
pub struct SurrogateTable {
    pub algorithm: Option<Algorithm>,
    pub seed: u64,
    pub n_surrogates: usize,
    /// `(subject id, params)` to one triple per surrogate, in surrogate order.
    values: BTreeMap<(String, EmbeddingParams), Vec<QuantifierTriple>>,
    invalid: BTreeMap<(String, EmbeddingParams), String>,
}

impl SurrogateTable {
    /// Surrogate `k` of subject `id` uses stream `(seed, "<alg>:<id>", k)` and
    /// is generated once, then quantified for every cell of the sweep.
    pub fn compute(
        members: &[&TimeSeries],
        algorithm: Algorithm,
        n_surrogates: usize,
        seed: u64,
        sweep: &Sweep,
        options: &QuantifyOptions,
    ) -> Result<Self> {
        let cells = sweep.cells();
        let jobs: Vec<(&TimeSeries, u64)> = members
            .iter()
            .flat_map(|s| (0..n_surrogates as u64).map(move |k| (*s, k)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(s, k)| {
                let surrogate = algorithm.generate(s, &mut stream(seed, &ensemble_tag(algorithm, s.id()), k))?;
                Ok(cells
                    .iter()
                    .map(|&p| (p, quantify_with(&surrogate, p, Direction::Forward, options)))
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = SurrogateTable {
            algorithm: Some(algorithm),
            seed,
            n_surrogates,
            ..Default::default()
        };
        for ((s, _), per_cell) in jobs.iter().zip(results) {
            for (p, r) in per_cell {
                let key = (s.id().to_string(), p);
                match r {
                    Ok(mut q) => {
                        q.series_id = s.id().to_string();
                        table.values.entry(key).or_default().push(q);
                    }
                    Err(e) => {
                        table.invalid.entry(key).or_insert_with(|| e.to_string());
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn values(&self, id: &str, params: EmbeddingParams) -> Option<&[QuantifierTriple]> {
        self.values.get(&(id.to_string(), params)).map(Vec::as_slice)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn surrogate_comparison_grid(
    dataset: &GroupedDataset,
    group: &str,
    algorithm: Algorithm,
    sweep: &Sweep,
    statistic: Statistic,
    n_surrogates: usize,
    mode: SurrogateMode,
    seed: u64,
) -> Result<PValueGrid> {
    let members = members_at_least(dataset, group, 1)?;
    let options = QuantifyOptions::default();
    let table = QuantifierTable::compute(&members, sweep, &[Direction::Forward], &options);
    let surr = SurrogateTable::compute(&members, algorithm, n_surrogates, seed, sweep, &options)?;
    surrogate_from_tables(dataset, &table, &surr, group, sweep, statistic, mode)
}

pub fn surrogate_from_tables(
    dataset: &GroupedDataset,
    table: &QuantifierTable,
    surrogates: &SurrogateTable,
    group: &str,
    sweep: &Sweep,
    statistic: Statistic,
    mode: SurrogateMode,
) -> Result<PValueGrid> {
    let members = members_at_least(dataset, group, 1)?;
    let algorithm = surrogates
        .algorithm
        .ok_or_else(|| Error::InvalidArgument("surrogate table has no algorithm".into()))?;
    let cells = sweep
        .cells()
        .into_iter()
        .map(|p| {
            let original = match table.sample(&members, p, Direction::Forward, statistic) {
                Ok(v) => v,
                Err(e) => return GridCell::invalid(p, e),
            };
            let mut surr = Vec::new();
            for s in &members {
                let key = (s.id().to_string(), p);
                let Some(vals) = surrogates.values.get(&key).filter(|v| !v.is_empty()) else {
                    let why = surrogates
                        .invalid
                        .get(&key)
                        .cloned()
                        .unwrap_or_else(|| "no surrogate quantifiers".into());
                    return GridCell::invalid(p, format!("{}: {why}", s.id()));
                };
                match mode {
                    SurrogateMode::SubjectMeans => {
                        surr.push(vals.iter().map(|q| q.get(statistic)).sum::<f64>() / vals.len() as f64)
                    }
                    SurrogateMode::Pooled => surr.extend(vals.iter().map(|q| q.get(statistic))),
                }
            }
            mw_cell(p, &original, &surr)
        })
        .collect();
    Ok(PValueGrid {
        comparison: Comparison::OrigVsSurrogate,
        statistic,
        groups: vec![group.to_string()],
        direction: Some(Direction::Forward),
        algorithm: Some(algorithm),
        surrogate_mode: Some(mode),
        cells,
    })
}
