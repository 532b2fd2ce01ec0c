use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use ordnet::demo::{run_lorenz_demo, write_lorenz_demo, LorenzDemoConfig};
use ordnet::grid::SurrogateMode;
use ordnet::pipeline::{run_pipeline, write_outputs, RunConfig};
use ordnet::preprocess::{adaptive_filter_with, FilterConfig};
use ordnet::quantifiers::{NodeWeighting, QuantifyOptions};
use ordnet::series::{load_series, save_series, SeriesFormat};
use ordnet::surrogates::{run_surrogate_battery_with, Algorithm, BatteryReport};
use ordnet::{Direction, EmbeddingParams, Error, Statistic};

#[derive(Parser, Debug)]
#[command(name = "ordnet", version, about = "Ordinal partition networks, time-reversal quantifiers and surrogate tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline over a manifest of series.
    Analyze(AnalyzeArgs),
    /// Lorenz peak series tested against the three surrogate nulls.
    LorenzDemo(LorenzArgs),
    /// Apply the adaptive RR filter to one series.
    Filter(FilterArgs),
    /// Rank-order surrogate battery for one series.
    Surrogate(SurrogateArgs),
}

/// Either a single algorithm or `all`.
#[derive(Debug, Clone)]
struct AlgorithmSet(Vec<Algorithm>);

fn parse_algorithms(s: &str) -> std::result::Result<AlgorithmSet, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(AlgorithmSet(Algorithm::ALL.to_vec()));
    }
    let mut algs = Vec::new();
    for part in s.split(',') {
        let a: Algorithm = part.trim().parse().map_err(|e: Error| e.to_string())?;
        if !algs.contains(&a) {
            algs.push(a);
        }
    }
    Ok(AlgorithmSet(algs))
}

fn parse_range(s: &str) -> std::result::Result<[usize; 2], String> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    Ok([lo, hi])
}

#[derive(Args, Debug)]
struct FilterFlags {
    /// Trailing accepted beats averaged into a replacement.
    #[arg(long)]
    filter_window: Option<usize>,
    /// Maximum modified fraction for a series to be accepted.
    #[arg(long)]
    filter_reject_threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct SurrogateFlags {
    /// Surrogate null(s): alg0, alg1, alg2 or all.
    #[arg(long, value_parser = parse_algorithms)]
    surrogate_alg: Option<AlgorithmSet>,
    /// Surrogates per series [default: 100].
    #[arg(long)]
    n_surrogates: Option<usize>,
    /// Root seed for all surrogate streams.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Manifest CSV with `id,group[,path]` rows.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Embedding dimensions, e.g. `1..16` or `3`.
    #[arg(long, value_parser = parse_range)]
    m_range: Option<[usize; 2]>,
    /// Lags, e.g. `1..4`.
    #[arg(long, value_parser = parse_range)]
    tau_range: Option<[usize; 2]>,
    /// Restrict to one direction (repeatable).
    #[arg(long = "direction")]
    directions: Vec<Direction>,
    /// Restrict to one statistic (repeatable): h_pe, h_cpe, h_gne.
    #[arg(long = "statistic")]
    statistics: Vec<Statistic>,
    /// Truncate accepted series to this many samples; 0 keeps all.
    #[arg(long)]
    series_length: Option<usize>,
    /// Skip the RR filter.
    #[arg(long)]
    no_filter: bool,
    #[command(flatten)]
    filter: FilterFlags,
    /// Run the surrogate comparison grids.
    #[arg(long)]
    surrogates: bool,
    #[command(flatten)]
    surrogate: SurrogateFlags,
    /// How surrogate values enter the comparison: subject_means or pooled.
    #[arg(long)]
    surrogate_mode: Option<SurrogateMode>,
    /// Count self-loop weight in the node probabilities of h_gne.
    #[arg(long)]
    include_self_loops: bool,
    /// Render SVG plots of every grid.
    #[arg(long)]
    plot: bool,
}

#[derive(Args, Debug)]
struct LorenzArgs {
    #[arg(long, short, default_value = "lorenz-out")]
    output: PathBuf,
    #[arg(long, default_value_t = 10)]
    n_series: usize,
    #[arg(long, default_value_t = 1490)]
    n_peaks: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    /// Seed for the initial conditions.
    #[arg(long)]
    lorenz_seed: Option<u64>,
    #[command(flatten)]
    surrogate: SurrogateFlags,
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// Input series (plain text or CSV).
    input: PathBuf,
    /// Where to write the filtered series.
    #[arg(long, short)]
    output: PathBuf,
    #[command(flatten)]
    filter: FilterFlags,
}

#[derive(Args, Debug)]
struct SurrogateArgs {
    /// Input series (plain text or CSV).
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    /// Statistic to test (repeatable); all three by default.
    #[arg(long = "statistic")]
    statistics: Vec<Statistic>,
    #[command(flatten)]
    surrogate: SurrogateFlags,
    #[arg(long)]
    include_self_loops: bool,
    /// Write the JSON result here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn weighting(include_self_loops: bool) -> NodeWeighting {
    if include_self_loops {
        NodeWeighting::IncludeSelfLoops
    } else {
        NodeWeighting::ExcludeSelfLoops
    }
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.manifest {
        config.manifest = m;
    } else if args.config.is_none() {
        bail!("either --config or --manifest is required");
    }
    if let Some(o) = args.output {
        config.output_dir = o;
    }
    if let Some(r) = args.m_range {
        config.m_range = r;
    }
    if let Some(r) = args.tau_range {
        config.tau_range = r;
    }
    if !args.directions.is_empty() {
        config.directions = args.directions;
    }
    if !args.statistics.is_empty() {
        config.statistics = args.statistics;
    }
    if let Some(n) = args.series_length {
        config.series_length = n;
    }
    if args.no_filter {
        config.filter.enabled = false;
    }
    if let Some(w) = args.filter.filter_window {
        config.filter.window = w;
    }
    if let Some(t) = args.filter.filter_reject_threshold {
        config.filter.reject_threshold = t;
    }
    if args.surrogates {
        config.surrogates.enabled = true;
    }
    if let Some(AlgorithmSet(a)) = args.surrogate.surrogate_alg {
        config.surrogates.algorithms = a;
    }
    if let Some(n) = args.surrogate.n_surrogates {
        config.surrogates.count = n;
    }
    if let Some(s) = args.surrogate.seed {
        config.surrogates.seed = s;
    }
    if let Some(mode) = args.surrogate_mode {
        config.surrogates.mode = mode;
    }
    if args.include_self_loops {
        config.node_weighting = NodeWeighting::IncludeSelfLoops;
    }
    if args.plot {
        config.plot = true;
    }

    let report = run_pipeline(&config)?;
    for r in &report.rejected {
        log::warn!("rejected {}: {}", r.series_id, r.reason);
    }
    let files = write_outputs(&report, &config.output_dir, config.plot)?;
    println!(
        "{} series accepted, {} rejected, {} grids written to {}",
        report.accepted.len(),
        report.rejected.len(),
        files.grid_csvs.len(),
        config.output_dir.display()
    );
    Ok(())
}

fn lorenz_demo(args: LorenzArgs) -> Result<()> {
    let mut config = LorenzDemoConfig {
        n_series: args.n_series,
        n_peaks: args.n_peaks,
        params: EmbeddingParams::new(args.m, args.tau)?,
        ..Default::default()
    };
    if let Some(s) = args.lorenz_seed {
        config.lorenz.seed = s;
    }
    if let Some(AlgorithmSet(a)) = args.surrogate.surrogate_alg {
        config.algorithms = a;
    }
    if let Some(n) = args.surrogate.n_surrogates {
        config.n_surrogates = n;
    }
    if let Some(s) = args.surrogate.seed {
        config.surrogate_seed = s;
    }
    info!("integrating {} Lorenz realizations", config.n_series);
    let report = run_lorenz_demo(&config)?;
    write_lorenz_demo(&report, &args.output)?;
    println!("algorithm statistic rejected/total");
    for s in &report.summary {
        println!("{} {} {}/{}", s.algorithm, s.statistic, s.rejected, s.total);
    }
    Ok(())
}

fn filter(args: FilterArgs) -> Result<()> {
    let mut config = FilterConfig::default();
    if let Some(w) = args.filter.filter_window {
        config.window = w;
    }
    if let Some(t) = args.filter.filter_reject_threshold {
        config.reject_threshold = t;
    }
    let series = load_series(&args.input, SeriesFormat::from_path(&args.input))?;
    let (filtered, report) = adaptive_filter_with(&series, &config)?;
    save_series(&filtered, &args.output)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.accepted {
        bail!(
            "series {} rejected: modified fraction {:.4} exceeds {}",
            report.series_id,
            report.modified_fraction,
            config.reject_threshold
        );
    }
    Ok(())
}

fn surrogate(args: SurrogateArgs) -> Result<()> {
    let series = load_series(&args.input, SeriesFormat::from_path(&args.input))?;
    let params = EmbeddingParams::new(args.m, args.tau)?;
    let algorithms = args
        .surrogate
        .surrogate_alg
        .map(|a| a.0)
        .unwrap_or_else(|| Algorithm::ALL.to_vec());
    let statistics = if args.statistics.is_empty() {
        Statistic::ALL.to_vec()
    } else {
        args.statistics
    };
    let n = args.surrogate.n_surrogates.unwrap_or(100);
    let seed = args.surrogate.seed.unwrap_or(1);
    let options = QuantifyOptions {
        node_weighting: weighting(args.include_self_loops),
    };
    let mut reports: Vec<BatteryReport> = Vec::new();
    for &alg in &algorithms {
        for &stat in &statistics {
            reports.push(run_surrogate_battery_with(&series, params, alg, n, stat, seed, &options)?);
        }
    }
    let text = serde_json::to_string_pretty(&reports)? + "\n";
    match &args.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    for r in &reports {
        eprintln!(
            "{} {} rank {}/{} {}",
            r.algorithm,
            r.statistic,
            r.result.rank,
            r.result.q_surr.len() + 1,
            if r.result.rejected { "rejected" } else { "not rejected" }
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::LorenzDemo(a) => lorenz_demo(a),
        Command::Filter(a) => filter(a),
        Command::Surrogate(a) => surrogate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
