//! Command-line surface: `simulate`, `fit`, `summarize` and `gradcheck`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::inference::{amse, default_grid, fitted_intensity, summarize_function, FunctionSelector, FunctionSummary};
use crate::io::{
    load_count_series, read_draws_csv, write_draws_csv, write_intensity_csv, write_json, write_series_csv,
    write_summary_csv, write_truth_csv, CountFormat, FitArtifacts, InputLayout,
};
use crate::model::{check_constraints, ModelKind};
use crate::posterior::gradcheck;
use crate::sampler::{run_chains, BlockScheme, BoundaryRule, ChainDiagnostics, FitResult};
use crate::simgen::{simulate, TrueFunctions};

#[derive(Debug, Parser)]
#[command(name = "tvcount", version, about = "Time-varying Bayesian Poisson AR / INGARCH models for count series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a series from one of the preset designs.
    Simulate(SimulateArgs),
    /// Fit a model to a count series and write draws and summaries.
    Fit(Box<FitArgs>),
    /// Recompute summaries from an existing fit directory.
    Summarize(SummarizeArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(crate::simgen::PRESETS))]
    preset: String,
    /// Series length.
    #[arg(long = "T", alias = "len")]
    len: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "sim")]
    region: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    model: Option<ModelKind>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long = "iter")]
    n_iter: Option<usize>,
    #[arg(long = "burnin")]
    n_burnin: Option<usize>,
    #[arg(long = "leapfrog")]
    n_leapfrog: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    adapt_interval: Option<usize>,
    #[arg(long, value_parser = parse_scheme)]
    block_scheme: Option<BlockScheme>,
    /// Damp the step-size adaptation factor on direction reversals.
    #[arg(long)]
    damping: Option<bool>,
    #[arg(long, value_parser = parse_boundary)]
    boundary: Option<BoundaryRule>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    region: Option<String>,
    /// First date to keep (inclusive).
    #[arg(long = "from")]
    date_from: Option<String>,
    /// Last date to keep (inclusive).
    #[arg(long = "to")]
    date_to: Option<String>,
    #[arg(long, value_parser = parse_format)]
    format: Option<CountFormat>,
    #[arg(long)]
    date_column: Option<String>,
    #[arg(long)]
    region_column: Option<String>,
    #[arg(long)]
    count_column: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    /// Directory holding `fit.json` and `draws.csv`.
    #[arg(long)]
    dir: PathBuf,
    /// Number of equidistant grid points on [0, 1]; defaults to t/T.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, value_parser = parse_kind, default_value = "ar")]
    model: ModelKind,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    #[arg(long, default_value_t = 50)]
    states: usize,
    #[arg(long, default_value_t = 3)]
    series: usize,
    #[arg(long = "T", alias = "len", default_value_t = 200)]
    len: usize,
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    match s {
        "ar" => Ok(ModelKind::Ar),
        "ingarch" => Ok(ModelKind::Ingarch),
        _ => Err(format!("unknown model `{s}` (expected ar or ingarch)")),
    }
}

fn parse_scheme(s: &str) -> std::result::Result<BlockScheme, String> {
    match s {
        "merged" => Ok(BlockScheme::Merged),
        "joint" => Ok(BlockScheme::Joint),
        "split" => Ok(BlockScheme::Split),
        _ => Err(format!("unknown block scheme `{s}`")),
    }
}

fn parse_boundary(s: &str) -> std::result::Result<BoundaryRule, String> {
    match s {
        "clamp" => Ok(BoundaryRule::Clamp),
        "reflect" => Ok(BoundaryRule::Reflect),
        _ => Err(format!("unknown boundary rule `{s}`")),
    }
}

fn parse_format(s: &str) -> std::result::Result<CountFormat, String> {
    match s {
        "auto" => Ok(CountFormat::Auto),
        "daily" => Ok(CountFormat::Daily),
        "cumulative" => Ok(CountFormat::Cumulative),
        _ => Err(format!("unknown count format `{s}`")),
    }
}

impl FitArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        over!(model, p, q, degree, knots, c1, c2, d1, n_iter, n_burnin, n_leapfrog, step_size,
              adapt_interval, damping, block_scheme, boundary, seed, chains, format, date_column,
              region_column, count_column);
        if self.input.is_some() {
            c.input = self.input;
        }
        if self.region.is_some() {
            c.region = self.region;
        }
        if self.date_from.is_some() {
            c.date_from = self.date_from;
        }
        if self.date_to.is_some() {
            c.date_to = self.date_to;
        }
        if self.out.is_some() {
            c.output_dir = self.out;
        }
        if c.model == ModelKind::Ar && c.q != 0 {
            return Err(Error::Config("--q is only valid with --model ingarch".into()));
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataReport {
    pub input: PathBuf,
    pub region: Option<String>,
    pub length: usize,
    pub layout: InputLayout,
    pub differenced: bool,
    pub clamped: Vec<usize>,
}

/// Contents of `fit.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub config: RunConfig,
    pub data: DataReport,
    pub draws: usize,
    pub amse: f64,
    pub constraint_violations: usize,
    pub chains: Vec<ChainDiagnostics>,
}

#[derive(Debug)]
pub struct FitOutcome {
    pub report: FitReport,
    pub artifacts: FitArtifacts,
    pub fit: FitResult,
}

fn write_summaries(dir: &Path, fit: &FitResult, grid: &[f64]) -> Result<Vec<(PathBuf, FunctionSummary)>> {
    FunctionSelector::all_for(&fit.spec)
        .into_iter()
        .map(|which| {
            let s = summarize_function(fit, which, grid)?;
            let path = dir.join(format!("summary_{which}.csv"));
            write_summary_csv(&path, &s)?;
            Ok((path, s))
        })
        .collect()
}

/// Loads data, samples, and writes every fit artifact into the output directory.
pub fn run_fit(config: &RunConfig) -> Result<FitOutcome> {
    config.validate()?;
    let input = config
        .input
        .clone()
        .ok_or_else(|| Error::Config("no input file given".into()))?;
    let loaded = load_count_series(&input, &config.load_options()?)?;
    let spec = config.model_spec()?;
    let sampler = config.sampler_config()?;
    let fit = run_chains(&spec, &loaded.series, &sampler, config.chains)?;

    let mut violations = 0;
    for s in fit.states() {
        if !check_constraints(s, &spec, 1001)?.pass {
            violations += 1;
        }
    }
    let lambda_hat = fitted_intensity(&fit, &loaded.series)?;
    let score = amse(&loaded.series, &lambda_hat)?;

    let dir = config.resolved_output_dir();
    std::fs::create_dir_all(&dir)?;
    let draws = dir.join("draws.csv");
    write_draws_csv(&draws, &fit)?;
    let summaries = write_summaries(&dir, &fit, &default_grid(loaded.series.len()))?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let intensity = dir.join("intensity.csv");
    write_intensity_csv(&intensity, &loaded.series, &lambda_hat)?;

    let report = FitReport {
        config: config.clone(),
        data: DataReport {
            input,
            region: config.region.clone(),
            length: loaded.series.len(),
            layout: loaded.layout,
            differenced: loaded.differenced,
            clamped: loaded.clamped,
        },
        draws: fit.len(),
        amse: score,
        constraint_violations: violations,
        chains: fit.chains.clone(),
    };
    let report_path = dir.join("fit.json");
    write_json(&report_path, &report)?;
    Ok(FitOutcome {
        report,
        artifacts: FitArtifacts {
            draws,
            summaries,
            intensity,
            report: report_path,
        },
        fit,
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let truth = TrueFunctions::preset(&a.preset)?;
    let kind = if truth.q() > 0 { ModelKind::Ingarch } else { ModelKind::Ar };
    let sim = simulate(&truth, kind, a.len, a.seed)?;
    let dir = a.out.unwrap_or_else(|| RunConfig::default().resolved_output_dir());
    let series = dir.join("series.csv");
    let truth_path = dir.join("truth.csv");
    write_series_csv(&series, &sim.series, &a.region)?;
    write_truth_csv(&truth_path, &sim, &truth)?;
    println!("wrote {} ({} counts)", series.display(), sim.series.len());
    println!("wrote {}", truth_path.display());
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let config = a.into_config()?;
    let out = run_fit(&config)?;
    let r = &out.report;
    for c in &r.chains {
        for (name, (acc, step)) in c.blocks.iter().zip(c.acceptance.iter().zip(&c.step_sizes)) {
            println!("chain {} block {name:<8} acceptance {acc:.3} step {step:.5}", c.chain);
        }
    }
    println!("draws: {}", r.draws);
    println!("constraint violations: {}", r.constraint_violations);
    println!("wrote {}", out.artifacts.report.parent().unwrap_or(Path::new(".")).display());
    println!("AMSE: {:.4}", r.amse);
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<()> {
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.dir.join("fit.json"))?)?;
    let config: RunConfig = serde_json::from_value(report["config"].clone())?;
    let spec = config.model_spec()?;
    let fit = read_draws_csv(&a.dir.join("draws.csv"), &spec)?;
    let len = report["data"]["length"].as_u64().unwrap_or(0) as usize;
    let grid = match (a.grid, len) {
        (Some(n), _) if n >= 2 => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        (Some(n), _) => return Err(Error::Config(format!("grid needs at least 2 points, got {n}"))),
        (None, 0) => return Err(Error::Config("fit.json lacks the series length; pass --grid".into())),
        (None, n) => default_grid(n),
    };
    let out = a.out.unwrap_or(a.dir);
    std::fs::create_dir_all(&out)?;
    println!("{:<10} {:>10} {:>10} {:>12}", "function", "min mean", "max mean", "median width");
    for (path, s) in write_summaries(&out, &fit, &grid)? {
        let lo = s.mean.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{:<10} {lo:>10.4} {hi:>10.4} {:>12.4}  {}", s.which.to_string(), s.median_band_width(), path.display());
    }
    if let Some(amse) = report["amse"].as_f64() {
        println!("AMSE: {amse:.4}");
    }
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<bool> {
    if a.model == ModelKind::Ar && a.q != 0 {
        return Err(Error::Config("--q is only valid with --model ingarch".into()));
    }
    let spec = match a.model {
        ModelKind::Ar => crate::model::ModelSpec::ar(a.p),
        ModelKind::Ingarch => crate::model::ModelSpec::ingarch(a.p, a.q),
    };
    let r = gradcheck(&spec, a.series, a.states, a.len, a.h, a.seed)?;
    println!(
        "{}({},{}): {} states x {} series, h = {:e}",
        a.model, a.p, a.q, r.n_states, r.n_series, a.h
    );
    println!("max relative error: {:.3e}", r.max_relative_error);
    let ok = r.max_relative_error < a.tol;
    println!("{}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Fit(a) => cmd_fit(*a).map(|_| true),
        Command::Summarize(a) => cmd_summarize(a).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
