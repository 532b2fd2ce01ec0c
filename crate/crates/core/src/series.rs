//! Time series, embedding parameters and grouped datasets.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled sequence of finite samples. RR tachograms are in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    id: String,
    group: Option<String>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if values.len() < 2 {
            return Err(Error::TooShort {
                len: values.len(),
                needed: 2,
            });
        }
        Ok(Self {
            id: id.into(),
            group: None,
            values,
        })
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn group(&self) -> Option<&str> {
        self.group.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same id and group, new samples. Used by transforms that keep identity
    /// (filtering, surrogates, reversal).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = TimeSeries::new(self.id.clone(), values)?;
        out.group = self.group.clone();
        Ok(out)
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            id: self.id.clone(),
            group: self.group.clone(),
            values,
        }
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "truncation length {n} is below 2"
            )));
        }
        if self.len() < n {
            return Err(Error::TooShort {
                len: self.len(),
                needed: n,
            });
        }
        self.with_values(self.values[..n].to_vec())
    }
}

/// Embedding dimension `m` and lag `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub m: usize,
    pub tau: usize,
}

impl EmbeddingParams {
    pub fn new(m: usize, tau: usize) -> Result<Self> {
        if m == 0 || tau == 0 {
            return Err(Error::InvalidEmbedding(format!(
                "m and tau must be >= 1 (got m={m}, tau={tau})"
            )));
        }
        Ok(Self { m, tau })
    }

    /// Number of embedding vectors for a series of length `n`, if any.
    pub fn vector_count(&self, n: usize) -> Option<usize> {
        n.checked_sub((self.m - 1) * self.tau)
    }

    /// Ok when a series of length `n` yields at least two embedding vectors.
    pub fn check_length(&self, n: usize) -> Result<usize> {
        match self.vector_count(n) {
            Some(k) if k >= 2 => Ok(k),
            _ => Err(Error::TooShort {
                len: n,
                needed: (self.m - 1) * self.tau + 2,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Reverse];

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward" | "fwd" => Ok(Direction::Forward),
            "reverse" | "rev" => Ok(Direction::Reverse),
            other => Err(Error::InvalidArgument(format!("unknown direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Plain,
    Csv,
}

impl SeriesFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SeriesFormat::Csv,
            _ => SeriesFormat::Plain,
        }
    }
}

fn parse_plain(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: "non-finite value".into(),
            });
        }
        values.push(v);
    }
    Ok(values)
}

fn parse_csv(text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let Some(field) = record.get(0).map(str::trim) else {
            continue;
        };
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Error::Parse {
                    line,
                    message: "non-finite value".into(),
                })
            }
            // a non-numeric first row is a header
            Err(_) if values.is_empty() && i == 0 => {}
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    message: format!("not a number: {field:?}"),
                })
            }
        }
    }
    Ok(values)
}

/// Reads a series from a plain (one value per line) or single-column CSV
/// file. The id is the file stem.
pub fn load_series(path: &Path, format: SeriesFormat) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let values = match format {
        SeriesFormat::Plain => parse_plain(&text)?,
        SeriesFormat::Csv => parse_csv(&text)?,
    };
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TimeSeries::new(id, values)
}

/// Writes one value per line using the shortest representation that parses
/// back to the same `f64`.
pub fn save_series(series: &TimeSeries, path: &Path) -> Result<()> {
    let mut text = String::with_capacity(series.len() * 8);
    for v in series.values() {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub group: String,
    pub path: PathBuf,
}

/// Parses a manifest CSV with columns `id,group[,path]`. A missing path
/// defaults to `<id>.txt` next to the manifest; relative paths resolve
/// against the manifest directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.get(0) == Some("id") {
            continue;
        }
        let (Some(id), Some(group)) = (record.get(0), record.get(1)) else {
            return Err(Error::Parse {
                line,
                message: "expected id,group[,path]".into(),
            });
        };
        if id.is_empty() || group.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty id or group".into(),
            });
        }
        let file = match record.get(2) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => PathBuf::from(format!("{id}.txt")),
        };
        let file = if file.is_absolute() { file } else { base.join(file) };
        entries.push(ManifestEntry {
            id: id.to_string(),
            group: group.to_string(),
            path: file,
        });
    }
    Ok(entries)
}

/// Series together with their group membership.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GroupedDataset {
    series: Vec<TimeSeries>,
    groups: BTreeMap<String, Vec<String>>,
}

impl GroupedDataset {
    /// Builds a dataset, grouping series by their group label. Series without
    /// a label are kept but belong to no group.
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in &series {
            if !seen.insert(s.id().to_string()) {
                return Err(Error::Dataset(format!("duplicate series id {:?}", s.id())));
            }
            if let Some(g) = s.group() {
                groups.entry(g.to_string()).or_default().push(s.id().to_string());
            }
        }
        Ok(Self { series, groups })
    }

    /// Loads every manifest entry. All missing files are reported together.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let entries = read_manifest(path)?;
        let missing: Vec<String> = entries
            .iter()
            .filter(|e| !e.path.is_file())
            .map(|e| e.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingSeries(missing));
        }
        let series = entries
            .iter()
            .map(|e| {
                let s = load_series(&e.path, SeriesFormat::from_path(&e.path))?;
                Ok(TimeSeries {
                    id: e.id.clone(),
                    group: Some(e.group.clone()),
                    values: s.values,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(series)
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn groups(&self) -> &BTreeMap<String, Vec<String>> {
        &self.groups
    }

    pub fn get(&self, id: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.id() == id)
    }

    /// Members of `group`, in dataset order.
    pub fn members(&self, group: &str) -> Result<Vec<&TimeSeries>> {
        let ids = self
            .groups
            .get(group)
            .ok_or_else(|| Error::Dataset(format!("unknown group {group:?}")))?;
        Ok(ids.iter().filter_map(|id| self.get(id)).collect())
    }

    /// Rebuilds the dataset from transformed series, keeping only those for
    /// which `f` returns `Some`.
    pub fn filter_map<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&TimeSeries) -> Option<TimeSeries>,
    {
        Self::new(self.series.iter().filter_map(f).collect())
    }
}
