//! Batch analysis: ingest, filter, sweep, quantify, compare, report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    intergroup_from_table, intragroup_from_table, surrogate_from_tables, PValueGrid, QuantifierTable, Sweep,
    SurrogateMode, SurrogateTable,
};
use crate::plot;
use crate::preprocess::{adaptive_filter_with, FilterConfig, FilterReport};
use crate::quantifiers::{NodeWeighting, QuantifierTriple, QuantifyOptions, Statistic};
use crate::series::{Direction, GroupedDataset, TimeSeries};
use crate::surrogates::Algorithm;

pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    pub enabled: bool,
    pub window: usize,
    pub reject_threshold: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        let d = FilterConfig::default();
        Self {
            enabled: true,
            window: d.window,
            reject_threshold: d.reject_threshold,
        }
    }
}

impl FilterSettings {
    pub fn to_config(&self) -> FilterConfig {
        FilterConfig {
            window: self.window,
            reject_threshold: self.reject_threshold,
            ..FilterConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSettings {
    pub enabled: bool,
    pub algorithms: Vec<Algorithm>,
    pub count: usize,
    pub seed: u64,
    pub mode: SurrogateMode,
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            algorithms: Algorithm::ALL.to_vec(),
            count: 100,
            seed: 1,
            mode: SurrogateMode::SubjectMeans,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComparisonSpec {
    Intragroup { group: String },
    Intergroup { group_a: String, group_b: String },
    Surrogate { group: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub m_range: [usize; 2],
    pub tau_range: [usize; 2],
    pub directions: Vec<Direction>,
    /// Every accepted series is cut to this many samples; `0` keeps full length.
    pub series_length: usize,
    pub statistics: Vec<Statistic>,
    pub node_weighting: NodeWeighting,
    pub filter: FilterSettings,
    pub surrogates: SurrogateSettings,
    /// Empty means: every group's intragroup grid, every pair of groups, and
    /// (when surrogates are enabled) every group against its surrogates.
    pub comparisons: Vec<ComparisonSpec>,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::from("manifest.csv"),
            output_dir: PathBuf::from("out"),
            m_range: [1, 16],
            tau_range: [1, 4],
            directions: Direction::BOTH.to_vec(),
            series_length: 1490,
            statistics: Statistic::ALL.to_vec(),
            node_weighting: NodeWeighting::ExcludeSelfLoops,
            filter: FilterSettings::default(),
            surrogates: SurrogateSettings::default(),
            comparisons: Vec::new(),
            plot: false,
        }
    }
}

impl RunConfig {
    /// Parses a TOML config; relative paths resolve against the file's directory.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if config.manifest.is_relative() {
            config.manifest = base.join(&config.manifest);
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn sweep(&self) -> Result<Sweep> {
        Sweep::new(
            (self.m_range[0], self.m_range[1]),
            (self.tau_range[0], self.tau_range[1]),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep()?;
        if self.directions.is_empty() {
            return Err(Error::Config("no directions requested".into()));
        }
        if self.statistics.is_empty() {
            return Err(Error::Config("no statistics requested".into()));
        }
        if self.series_length == 1 {
            return Err(Error::Config("series_length must be 0 or >= 2".into()));
        }
        if self.filter.window == 0 {
            return Err(Error::Config("filter window must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.filter.reject_threshold) {
            return Err(Error::Config("filter reject threshold must be in [0, 1]".into()));
        }
        if self.surrogates.enabled {
            if self.surrogates.algorithms.is_empty() {
                return Err(Error::Config("surrogates enabled without algorithms".into()));
            }
            if self.surrogates.count < 2 {
                return Err(Error::Config("surrogate count must be >= 2".into()));
            }
        }
        for c in &self.comparisons {
            match c {
                ComparisonSpec::Intragroup { .. } => {
                    if !(self.directions.contains(&Direction::Forward) && self.directions.contains(&Direction::Reverse)) {
                        return Err(Error::Config("intragroup comparison needs both directions".into()));
                    }
                }
                ComparisonSpec::Surrogate { .. } if !self.surrogates.enabled => {
                    return Err(Error::Config("surrogate comparison requested but surrogates are disabled".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Requested comparisons, with the default set filled in. Fails when a
    /// comparison names a group the dataset does not have.
    pub fn resolve_comparisons(&self, dataset: &GroupedDataset) -> Result<Vec<ComparisonSpec>> {
        let groups: Vec<&String> = dataset.groups().keys().collect();
        if !self.comparisons.is_empty() {
            let known = |g: &str| {
                if dataset.groups().contains_key(g) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("comparison names unknown group {g:?}")))
                }
            };
            for c in &self.comparisons {
                match c {
                    ComparisonSpec::Intragroup { group } | ComparisonSpec::Surrogate { group } => known(group)?,
                    ComparisonSpec::Intergroup { group_a, group_b } => {
                        known(group_a)?;
                        known(group_b)?;
                    }
                }
            }
            return Ok(self.comparisons.clone());
        }
        let mut out = Vec::new();
        let both = self.directions.contains(&Direction::Forward) && self.directions.contains(&Direction::Reverse);
        for g in &groups {
            if both {
                out.push(ComparisonSpec::Intragroup { group: g.to_string() });
            }
        }
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                out.push(ComparisonSpec::Intergroup {
                    group_a: a.to_string(),
                    group_b: b.to_string(),
                });
            }
        }
        if self.surrogates.enabled {
            for g in &groups {
                out.push(ComparisonSpec::Surrogate { group: g.to_string() });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedSeries {
    pub series_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidCell {
    pub series_id: String,
    pub m: usize,
    pub tau: usize,
    pub direction: Direction,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub surrogate_seed: Option<u64>,
    pub seed_derivation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub provenance: Provenance,
    pub filter_reports: Vec<FilterReport>,
    pub rejected: Vec<RejectedSeries>,
    pub accepted: Vec<String>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub quantifiers: Vec<QuantifierTriple>,
    pub invalid_cells: Vec<InvalidCell>,
    pub grids: Vec<PValueGrid>,
}

/// Applies the filter and length equalisation; returns the accepted dataset.
pub fn prepare_dataset(
    dataset: &GroupedDataset,
    config: &RunConfig,
) -> Result<(GroupedDataset, Vec<FilterReport>, Vec<RejectedSeries>)> {
    let filter = config.filter.to_config();
    let mut reports = Vec::new();
    let mut rejected = Vec::new();
    let mut kept: Vec<TimeSeries> = Vec::new();
    for s in dataset.series() {
        let filtered = if config.filter.enabled {
            match adaptive_filter_with(s, &filter) {
                Ok((out, report)) => {
                    let accepted = report.accepted;
                    let fraction = report.modified_fraction;
                    reports.push(report);
                    if !accepted {
                        rejected.push(RejectedSeries {
                            series_id: s.id().to_string(),
                            reason: format!(
                                "filter modified {:.1}% of beats (limit {:.1}%)",
                                100.0 * fraction,
                                100.0 * filter.reject_threshold
                            ),
                        });
                        continue;
                    }
                    out
                }
                Err(e) => {
                    rejected.push(RejectedSeries {
                        series_id: s.id().to_string(),
                        reason: format!("filter failed: {e}"),
                    });
                    continue;
                }
            }
        } else {
            s.clone()
        };
        let sized = if config.series_length >= 2 {
            match filtered.truncate(config.series_length) {
                Ok(t) => t,
                Err(e) => {
                    rejected.push(RejectedSeries {
                        series_id: s.id().to_string(),
                        reason: format!("cannot equalise length: {e}"),
                    });
                    continue;
                }
            }
        } else {
            filtered
        };
        kept.push(sized);
    }
    if kept.is_empty() {
        return Err(Error::NothingAccepted(
            rejected.iter().map(|r| format!("{}: {}", r.series_id, r.reason)).collect(),
        ));
    }
    Ok((GroupedDataset::new(kept)?, reports, rejected))
}

pub fn run_pipeline(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let dataset = GroupedDataset::from_manifest(&config.manifest)?;
    run_pipeline_on(&dataset, config)
}

/// Pipeline over an already loaded dataset.
pub fn run_pipeline_on(dataset: &GroupedDataset, config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let comparisons = config.resolve_comparisons(dataset)?;
    let sweep = config.sweep()?;
    let (accepted, filter_reports, rejected) = prepare_dataset(dataset, config)?;
    let options = QuantifyOptions {
        node_weighting: config.node_weighting,
    };
    let series: Vec<&TimeSeries> = accepted.series().iter().collect();

    let mut directions: Vec<Direction> = config.directions.clone();
    directions.sort();
    directions.dedup();
    let table = QuantifierTable::compute(&series, &sweep, &directions, &options);

    let mut grids = Vec::new();
    let mut surrogate_cache: BTreeMap<(String, Algorithm), SurrogateTable> = BTreeMap::new();
    for spec in &comparisons {
        match spec {
            ComparisonSpec::Intragroup { group } => {
                for &stat in &config.statistics {
                    grids.push(intragroup_from_table(&accepted, &table, group, &sweep, stat)?);
                }
            }
            ComparisonSpec::Intergroup { group_a, group_b } => {
                for &dir in &directions {
                    for &stat in &config.statistics {
                        grids.push(intergroup_from_table(&accepted, &table, group_a, group_b, dir, &sweep, stat)?);
                    }
                }
            }
            ComparisonSpec::Surrogate { group } => {
                let members = accepted.members(group)?;
                if members.is_empty() {
                    return Err(Error::Dataset(format!("group {group:?} has no accepted members")));
                }
                for &alg in &config.surrogates.algorithms {
                    let key = (group.clone(), alg);
                    if !surrogate_cache.contains_key(&key) {
                        let t = SurrogateTable::compute(
                            &members,
                            alg,
                            config.surrogates.count,
                            config.surrogates.seed,
                            &sweep,
                            &options,
                        )?;
                        surrogate_cache.insert(key.clone(), t);
                    }
                    let surr = &surrogate_cache[&key];
                    for &stat in &config.statistics {
                        grids.push(surrogate_from_tables(
                            &accepted,
                            &table,
                            surr,
                            group,
                            &sweep,
                            stat,
                            config.surrogates.mode,
                        )?);
                    }
                }
            }
        }
    }

    let invalid_cells = table
        .invalid()
        .iter()
        .map(|(id, p, d, reason)| InvalidCell {
            series_id: id.clone(),
            m: p.m,
            tau: p.tau,
            direction: *d,
            reason: reason.clone(),
        })
        .collect();

    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        provenance: Provenance {
            tool: "ordnet".to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config: config.clone(),
            surrogate_seed: config.surrogates.enabled.then_some(config.surrogates.seed),
            seed_derivation: "surrogate k of series <id> under <alg> is drawn from ChaCha8(derive_seed(seed, \"<alg>:<id>\", k))"
                .to_string(),
        },
        filter_reports,
        rejected,
        accepted: accepted.series().iter().map(|s| s.id().to_string()).collect(),
        groups: accepted.groups().clone(),
        quantifiers: table.rows().to_vec(),
        invalid_cells,
        grids,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// `series_id,group,m,tau,direction,h_pe,h_cpe,h_gne`, one row per triple.
pub fn write_quantifier_csv<W: Write>(report: &AnalysisReport, mut out: W) -> std::io::Result<()> {
    let group_of: BTreeMap<&str, &str> = report
        .groups
        .iter()
        .flat_map(|(g, ids)| ids.iter().map(move |id| (id.as_str(), g.as_str())))
        .collect();
    writeln!(out, "series_id,group,m,tau,direction,h_pe,h_cpe,h_gne")?;
    for q in &report.quantifiers {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            q.series_id,
            group_of.get(q.series_id.as_str()).copied().unwrap_or("NA"),
            q.params.m,
            q.params.tau,
            q.direction,
            q.h_pe,
            q.h_cpe,
            q.h_gne
        )?;
    }
    Ok(())
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct OutputFiles {
    pub report_json: PathBuf,
    pub quantifier_csv: PathBuf,
    pub grid_csvs: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// One CSV per grid under `<dir>/grids/`, plus SVG plots and their metadata
/// under `<dir>/plots/` when `render` is set.
pub fn emit_plot_data(report: &AnalysisReport, dir: &Path, render: bool) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
    let grid_dir = dir.join("grids");
    create_dir(&grid_dir)?;
    let mut csvs = Vec::new();
    let mut seen = BTreeSet::new();
    for grid in &report.grids {
        let name = grid.name();
        if !seen.insert(name.clone()) {
            return Err(Error::Serialize(format!("duplicate grid name {name}")));
        }
        let path = grid_dir.join(format!("{name}.csv"));
        write_file(&path, |w| grid.write_csv(w))?;
        csvs.push(path);
    }
    let mut plots = Vec::new();
    if render {
        let plot_dir = dir.join("plots");
        create_dir(&plot_dir)?;
        let mut entries = Vec::new();
        for grid in &report.grids {
            let name = grid.name();
            let path = plot_dir.join(format!("{name}.svg"));
            let svg = plot::render_grid_svg(grid);
            fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            entries.push(serde_json::json!({ "grid": name, "file": format!("{name}.svg") }));
            plots.push(path);
        }
        let meta = serde_json::json!({
            "reference_p_value": plot::REFERENCE_P,
            "reference_line": format!("p = {}", plot::REFERENCE_P),
            "x_axis": "m",
            "y_axis": "p_value",
            "series": "tau",
            "plots": entries,
        });
        let path = plot_dir.join("plots.json");
        let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Serialize(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        plots.push(path);
    }
    Ok((csvs, plots))
}

pub fn write_outputs(report: &AnalysisReport, dir: &Path, render: bool) -> Result<OutputFiles> {
    create_dir(dir)?;
    let quantifier_csv = dir.join("quantifiers.csv");
    write_file(&quantifier_csv, |w| write_quantifier_csv(report, w))?;
    let report_json = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(&report_json, text + "\n").map_err(|e| Error::io(&report_json, e))?;
    let (grid_csvs, plots) = emit_plot_data(report, dir, render)?;
    Ok(OutputFiles {
        report_json,
        quantifier_csv,
        grid_csvs,
        plots,
    })
}
