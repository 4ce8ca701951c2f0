//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for filesystem errors.
//! With `--json`, results go to stdout as JSON and errors to stderr as a
//! single JSON line. Run metadata (seed, prior, measures, RNG, version) is
//! written next to any `--out` file as `<out>.meta.json`, or embedded in
//! JSON output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::binary_density::{default_grid, density_curve, BinaryCounts};
use crate::dataset_io::{
    import_reports_csv, load_counts, load_records, rank_and_filter, score_items, write_reports, ItemReport,
    RankKey, RecordFormat, ReportFormat, ScoreConfig,
};
use crate::error::{Error, Result};
use crate::frequentist::{bias_curve, BiasConfig, CountVector, Estimator};
use crate::measures::{CategorySchema, MeasureKind, ProbabilityVector};
use crate::numerics::rng::{derive_seed, RNG_ALGORITHM};
use crate::numerics::{DirichletParams, Quadrature};
use crate::posterior_analytics::{moments, posterior_update};
use crate::posterior_sampling::{density_with_uncertainty, sample_transformed, summarize, DensityConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ambiq", version, about = "Ambiguity measures for soft labels with a can't-solve category")]
pub struct Cli {
    /// Machine-readable output and single-line JSON errors.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate measures on a probability vector or on empirical frequencies.
    Measure(MeasureArgs),
    /// Posterior summary of one measure given counts.
    Posterior(PosteriorArgs),
    /// Bias of plug-in and Bayesian estimators against sample size, as CSV.
    BiasCurve(BiasCurveArgs),
    /// Prior mean and spread of a measure across Dirichlet hyperparameters.
    PriorExplore(PriorExploreArgs),
    /// Score every item of an annotation dataset.
    Score(ScoreArgs),
    /// Score (or load reports) then sort and filter items.
    Rank(RankArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    New,
    Modified,
    Old,
}

impl From<MeasureArg> for MeasureKind {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::New => MeasureKind::New,
            MeasureArg::Modified => MeasureKind::Modified,
            MeasureArg::Old => MeasureKind::Old,
        }
    }
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Base seed of every random stream.
    #[arg(long, env = "AMBIQ_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VectorInput {
    /// Probabilities; without --cs the last entry is the can't-solve mass.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "counts")]
    pub q: Option<Vec<f64>>,

    /// Counts; without --cs the last entry is the can't-solve count.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub counts: Option<Vec<String>>,

    /// Can't-solve probability (with --q) or count (with --counts).
    #[arg(long, allow_hyphen_values = true)]
    pub cs: Option<String>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub input: VectorInput,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MeasureArg::New, MeasureArg::Modified, MeasureArg::Old])]
    pub measure: Vec<MeasureArg>,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[command(flatten)]
    pub input: VectorInput,

    /// Symmetric Dirichlet prior concentration.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    #[arg(long, value_enum, default_value_t = MeasureArg::New)]
    pub measure: MeasureArg,

    /// Monte-Carlo draws for the summary.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,

    /// Credible interval mass.
    #[arg(long, default_value_t = 0.95)]
    pub mass: f64,

    /// Write a density curve as CSV to this path.
    #[arg(long)]
    pub density: Option<PathBuf>,

    /// Histogram repeats for Monte-Carlo density bands.
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,

    /// Draws per repeat for Monte-Carlo density bands.
    #[arg(long, default_value_t = 100_000)]
    pub samples_per_repeat: usize,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Plugin,
    Mean,
    Mode,
}

#[derive(Debug, Args)]
pub struct BiasCurveArgs {
    /// Probabilities; without --cs the last entry is the can't-solve mass.
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<f64>,

    #[arg(long)]
    pub cs: Option<f64>,

    /// Sample sizes, strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 5, 10, 20, 50, 100, 200, 500])]
    pub n: Vec<u64>,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EstimatorArg::Plugin, EstimatorArg::Mean, EstimatorArg::Mode])]
    pub estimators: Vec<EstimatorArg>,

    /// Prior concentrations for the Bayesian estimators.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
    pub betas: Vec<f64>,

    #[arg(long, value_enum, default_value_t = MeasureArg::New)]
    pub measure: MeasureArg,

    /// Simulated count vectors per sample size.
    #[arg(long, default_value_t = 1000)]
    pub mc_repeats: usize,

    /// Posterior draws behind each Bayesian estimate.
    #[arg(long, default_value_t = 2000)]
    pub posterior_samples: usize,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct PriorExploreArgs {
    /// Number of proper categories.
    #[arg(long)]
    pub categories: usize,

    /// Explicit list of prior concentrations.
    #[arg(long, value_delimiter = ',', conflicts_with = "beta_grid")]
    pub betas: Option<Vec<f64>>,

    /// Log-spaced grid `start:stop:count`.
    #[arg(long)]
    pub beta_grid: Option<String>,

    #[arg(long, value_enum, default_value_t = MeasureArg::New)]
    pub measure: MeasureArg,

    /// Prior draws behind the Monte-Carlo columns.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,

    /// Write histogram density bands (long format) to this path.
    #[arg(long)]
    pub density_out: Option<PathBuf>,

    #[arg(long, default_value_t = 100)]
    pub repeats: usize,

    #[arg(long, default_value_t = 100_000)]
    pub samples_per_repeat: usize,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Raw annotation records (CSV or JSON lines).
    #[arg(long, conflicts_with = "counts_file")]
    pub input: Option<PathBuf>,

    /// Pre-aggregated counts CSV.
    #[arg(long)]
    pub counts_file: Option<PathBuf>,

    /// Proper category labels.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,

    /// Label of the can't-solve response.
    #[arg(long, default_value = "cs")]
    pub cs_label: String,

    /// Drop rows with unknown labels instead of failing.
    #[arg(long)]
    pub skip_unknown: bool,

    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    #[arg(long, default_value_t = 0.95)]
    pub mass: f64,

    #[arg(long, default_value_t = 10_000)]
    pub mc_samples: usize,

    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DatasetArgs,

    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MeasureArg::New, MeasureArg::Modified, MeasureArg::Old])]
    pub measure: Vec<MeasureArg>,

    /// Report path; `.json` for JSON, CSV otherwise. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KeyArg {
    Plugin,
    PosteriorMean,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DatasetArgs,

    /// Rank an existing CSV report instead of scoring a dataset.
    #[arg(long, conflicts_with_all = ["input", "counts_file"])]
    pub reports: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = KeyArg::PosteriorMean)]
    pub key: KeyArg,

    #[arg(long, value_enum, default_value_t = MeasureArg::New)]
    pub measure: MeasureArg,

    /// Keep items scoring at least this much (at most, with --ascending).
    #[arg(long)]
    pub threshold: Option<f64>,

    #[arg(long)]
    pub ascending: bool,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    beta: Option<f64>,
    measures: Vec<MeasureKind>,
    rng: &'a str,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    details: serde_json::Value,
}

impl<'a> Metadata<'a> {
    fn new(command: &'a str, seed: Option<u64>, beta: Option<f64>, measures: Vec<MeasureKind>) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            beta,
            measures,
            rng: RNG_ALGORITHM,
            details: serde_json::Value::Null,
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    json: bool,
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else if json {
                let _ = writeln!(err, "{}", json!({"error": "usage", "message": e.kind().to_string(), "exit_code": code}));
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return code;
        }
    };
    let mut io = Io { out, err, json: cli.json };
    match dispatch(&cli.command, &mut io) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
            if io.json {
                let kind = if code == EXIT_IO { "io" } else { "validation" };
                let _ = writeln!(io.err, "{}", json!({"error": kind, "message": e.to_string(), "exit_code": code}));
            } else {
                let _ = writeln!(io.err, "error: {e}");
            }
            code
        }
    }
}

fn dispatch(command: &Command, io: &mut Io) -> Result<()> {
    match command {
        Command::Measure(a) => cmd_measure(a, io),
        Command::Posterior(a) => cmd_posterior(a, io),
        Command::BiasCurve(a) => cmd_bias_curve(a, io),
        Command::PriorExplore(a) => cmd_prior_explore(a, io),
        Command::Score(a) => cmd_score(a, io),
        Command::Rank(a) => cmd_rank(a, io),
    }
}

fn measures_of(list: &[MeasureArg]) -> Vec<MeasureKind> {
    let mut v: Vec<MeasureKind> = list.iter().map(|&m| m.into()).collect();
    v.dedup();
    v
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("--beta must be positive, got {beta}")));
    }
    Ok(())
}

/// Splits the trailing can't-solve entry off when `cs` is not given separately.
fn split_cs<T: Clone>(mut values: Vec<T>, cs: Option<T>, what: &str) -> Result<(Vec<T>, T)> {
    match cs {
        Some(c) => Ok((values, c)),
        None => {
            if values.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "{what} needs the can't-solve entry last or --cs"
                )));
            }
            let c = values.pop().expect("len >= 2");
            Ok((values, c))
        }
    }
}

fn parse_count(s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| Error::InvalidParameter(format!("invalid count {s:?}")))
}

fn parse_prob(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidParameter(format!("invalid probability {s:?}")))
}

enum Vector {
    Probabilities(ProbabilityVector),
    Counts(CountVector),
}

fn read_vector(input: &VectorInput) -> Result<Vector> {
    match (&input.q, &input.counts) {
        (Some(q), None) => {
            let cs = input.cs.as_deref().map(parse_prob).transpose()?;
            let (proper, cs) = split_cs(q.clone(), cs, "--q")?;
            Ok(Vector::Probabilities(ProbabilityVector::new(proper, cs)?))
        }
        (None, Some(c)) => {
            let parsed = c.iter().map(|s| parse_count(s)).collect::<Result<Vec<_>>>()?;
            let cs = input.cs.as_deref().map(parse_count).transpose()?;
            let (proper, cs) = split_cs(parsed, cs, "--counts")?;
            Ok(Vector::Counts(CountVector::new(proper, cs)))
        }
        _ => Err(Error::InvalidParameter("give exactly one of --q or --counts".into())),
    }
}

fn read_counts(input: &VectorInput) -> Result<CountVector> {
    match read_vector(input)? {
        Vector::Counts(c) => Ok(c),
        Vector::Probabilities(_) => Err(Error::InvalidParameter("this command needs --counts".into())),
    }
}

fn write_json<T: Serialize>(io: &mut Io, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *io.out, value)?;
    writeln!(io.out)?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Writes `body` to `out` (plus the metadata sidecar) or to stdout; in the
/// stdout case the metadata goes to stderr as one JSON line.
fn emit(io: &mut Io, out: Option<&Path>, body: &[u8], meta: &Metadata) -> Result<()> {
    let meta_json = serde_json::to_string_pretty(meta)?;
    match out {
        Some(path) => {
            write_file(path, body)?;
            write_file(&sidecar_path(path), format!("{meta_json}\n").as_bytes())?;
        }
        None => {
            io.out.write_all(body)?;
            writeln!(io.err, "metadata: {}", serde_json::to_string(meta)?)?;
        }
    }
    Ok(())
}

fn cmd_measure(args: &MeasureArgs, io: &mut Io) -> Result<()> {
    let measures = measures_of(&args.measure);
    let (q, source) = match read_vector(&args.input)? {
        Vector::Probabilities(q) => (q, "probabilities"),
        Vector::Counts(c) => (ProbabilityVector::from_counts(&c)?, "counts"),
    };
    let mut values = Vec::with_capacity(measures.len());
    for &m in &measures {
        values.push((m, m.evaluate(&q)?));
    }
    if io.json {
        let map: serde_json::Map<String, serde_json::Value> =
            values.iter().map(|(m, v)| (m.to_string(), json!(v))).collect();
        write_json(io, &json!({"input": source, "q": q.to_vec(), "values": map}))?;
    } else {
        for (m, v) in values {
            writeln!(io.out, "{:<9} {v:.6}", m.as_str())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ClosedForm {
    mean: f64,
    sd: f64,
}

fn cmd_posterior(args: &PosteriorArgs, io: &mut Io) -> Result<()> {
    check_beta(args.beta)?;
    let counts = read_counts(&args.input)?;
    let measure: MeasureKind = args.measure.into();
    let prior = DirichletParams::symmetric(counts.num_categories(), args.beta)?;
    let post = posterior_update(&prior, &counts)?;
    let seed = args.seed.seed;
    let closed = match moments(&post, measure) {
        Ok(m) => Some(ClosedForm { mean: m.mean, sd: m.sd() }),
        Err(Error::NoClosedForm(_)) => None,
        Err(e) => return Err(e),
    };
    let draws = sample_transformed(&post, measure, args.samples, derive_seed(seed, 0))?;
    let summary = summarize(&draws, args.mass)?;
    let method = if closed.is_some() { "closed_form+monte_carlo" } else { "monte_carlo" };

    let mut density = serde_json::Value::Null;
    if let Some(path) = &args.density {
        let analytic = counts.num_categories() == 2 && measure != MeasureKind::Old;
        let mut csv = String::new();
        if analytic {
            let bc = BinaryCounts::try_from(&counts)?;
            let curve = density_curve(bc, args.beta, measure, &default_grid(), Quadrature::default())?;
            csv.push_str("a,density,cdf\n");
            for ((a, d), c) in curve.a.iter().zip(&curve.density).zip(&curve.cdf) {
                csv.push_str(&format!("{a},{d},{c}\n"));
            }
            density = json!({"method": "analytic", "path": path, "grid_points": curve.a.len(),
                             "normalization": curve.normalization});
        } else {
            let config =
                DensityConfig { samples_per_repeat: args.samples_per_repeat, bins: 256, repeats: args.repeats };
            let d = density_with_uncertainty(&post, measure, config, derive_seed(seed, 1))?;
            csv.push_str("bin_lo,bin_hi,median_density,iqr_lo,iqr_hi\n");
            for i in 0..d.median_density.len() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    d.bin_edges[i],
                    d.bin_edges[i + 1],
                    d.median_density[i],
                    d.iqr_lo[i],
                    d.iqr_hi[i]
                ));
            }
            density = json!({"method": "monte_carlo_histogram", "path": path, "bins": 256,
                             "repeats": args.repeats, "samples_per_repeat": args.samples_per_repeat});
        }
        write_file(path, csv.as_bytes())?;
    }

    let mut meta = Metadata::new("posterior", Some(seed), Some(args.beta), vec![measure]);
    meta.details = json!({"samples": args.samples});
    let report = json!({
        "measure": measure,
        "counts": counts,
        "posterior_alpha": post.to_vec(),
        "method": method,
        "closed_form": closed,
        "monte_carlo": summary,
        "density": density,
        "metadata": meta,
    });
    if io.json {
        write_json(io, &report)?;
    } else {
        writeln!(io.out, "measure         {measure}")?;
        writeln!(io.out, "method          {method}")?;
        if let Some(c) = &closed {
            writeln!(io.out, "mean            {:.6}", c.mean)?;
            writeln!(io.out, "sd              {:.6}", c.sd)?;
        }
        writeln!(io.out, "mc mean         {:.6} (se {:.6})", summary.mean, summary.stderr())?;
        writeln!(io.out, "mc sd           {:.6}", summary.sd)?;
        writeln!(io.out, "mode            {:.6}", summary.mode)?;
        let ci = summary.credible_interval;
        writeln!(io.out, "{:<15} [{:.6}, {:.6}]", format!("{}% interval", ci.mass * 100.0), ci.lo, ci.hi)?;
        writeln!(io.out, "seed            {seed}")?;
    }
    Ok(())
}

fn cmd_bias_curve(args: &BiasCurveArgs, io: &mut Io) -> Result<()> {
    let (proper, cs) = split_cs(args.q.clone(), args.cs, "--q")?;
    let q = ProbabilityVector::new(proper, cs)?;
    for &b in &args.betas {
        check_beta(b)?;
    }
    let mut estimators = Vec::new();
    for e in &args.estimators {
        match e {
            EstimatorArg::Plugin => estimators.push(Estimator::Plugin),
            EstimatorArg::Mean => estimators.extend(args.betas.iter().map(|&b| Estimator::BayesMean(b))),
            EstimatorArg::Mode => estimators.extend(args.betas.iter().map(|&b| Estimator::BayesMode(b))),
        }
    }
    let measure: MeasureKind = args.measure.into();
    let config =
        BiasConfig { measure, estimators, mc_repeats: args.mc_repeats, posterior_samples: args.posterior_samples };
    let seed = args.seed.seed;
    let series = bias_curve(&q, &args.n, &config, seed)?;
    let mut csv = String::from("n,estimator,bias,stderr\n");
    for (i, n) in series.n_values.iter().enumerate() {
        for c in &series.curves {
            csv.push_str(&format!("{n},{},{},{}\n", c.label, c.bias[i], c.stderr[i]));
        }
    }
    let mut meta = Metadata::new("bias-curve", Some(seed), None, vec![measure]);
    meta.details = json!({
        "q": q.to_vec(),
        "truth": series.truth,
        "mc_repeats": args.mc_repeats,
        "posterior_samples": args.posterior_samples,
        "methods": series.curves.iter().map(|c| json!({"estimator": c.label, "method": c.method})).collect::<Vec<_>>(),
    });
    if io.json && args.out.is_none() {
        return write_json(io, &json!({"series": series, "metadata": meta}));
    }
    emit(io, args.out.as_deref(), csv.as_bytes(), &meta)
}

fn parse_beta_grid(raw: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("--beta-grid expects start:stop:count, got {raw:?}"));
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(start > 0.0 && stop >= start) || count == 0 {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

fn cmd_prior_explore(args: &PriorExploreArgs, io: &mut Io) -> Result<()> {
    let measure: MeasureKind = args.measure.into();
    if args.categories < measure.min_categories() {
        return Err(Error::SingleCategoryUnsupported);
    }
    let betas = match (&args.betas, &args.beta_grid) {
        (Some(b), _) => b.clone(),
        (None, Some(g)) => parse_beta_grid(g)?,
        (None, None) => vec![0.5, 1.0, 2.0],
    };
    if betas.is_empty() {
        return Err(Error::InvalidParameter("no prior concentrations given".into()));
    }
    let seed = args.seed.seed;
    let mut csv = String::from("beta,mean,sd,method,mc_mean,mc_sd,mc_stderr,mode\n");
    let mut bands = String::from("beta,bin_lo,bin_hi,median_density,iqr_lo,iqr_hi\n");
    for (i, &beta) in betas.iter().enumerate() {
        check_beta(beta)?;
        let prior = DirichletParams::symmetric(args.categories, beta)?;
        let draws = sample_transformed(&prior, measure, args.mc_samples, derive_seed(seed, i as u64))?;
        let s = summarize(&draws, 0.95)?;
        let (mean, sd, method) = match moments(&prior, measure) {
            Ok(m) => (m.mean, m.sd(), "closed_form"),
            Err(Error::NoClosedForm(_)) => (s.mean, s.sd, "monte_carlo"),
            Err(e) => return Err(e),
        };
        csv.push_str(&format!("{beta},{mean},{sd},{method},{},{},{},{}\n", s.mean, s.sd, s.stderr(), s.mode));
        if args.density_out.is_some() {
            let config =
                DensityConfig { samples_per_repeat: args.samples_per_repeat, bins: 256, repeats: args.repeats };
            let d = density_with_uncertainty(&prior, measure, config, derive_seed(derive_seed(seed, i as u64), 1))?;
            for k in 0..d.median_density.len() {
                bands.push_str(&format!(
                    "{beta},{},{},{},{},{}\n",
                    d.bin_edges[k],
                    d.bin_edges[k + 1],
                    d.median_density[k],
                    d.iqr_lo[k],
                    d.iqr_hi[k]
                ));
            }
        }
    }
    if let Some(path) = &args.density_out {
        write_file(path, bands.as_bytes())?;
    }
    let mut meta = Metadata::new("prior-explore", Some(seed), None, vec![measure]);
    meta.details = json!({"categories": args.categories, "betas": betas, "mc_samples": args.mc_samples});
    emit(io, args.out.as_deref(), csv.as_bytes(), &meta)
}

struct Scored {
    reports: Vec<ItemReport>,
    details: serde_json::Value,
}

fn score_dataset(data: &DatasetArgs, measures: Vec<MeasureKind>, io: &mut Io) -> Result<Scored> {
    check_beta(data.beta)?;
    if data.labels.is_empty() {
        return Err(Error::InvalidParameter("--labels is required".into()));
    }
    let schema = CategorySchema::new(data.labels.clone(), data.cs_label.clone())?;
    let (items, duplicates, skipped) = match (&data.input, &data.counts_file) {
        (Some(path), None) => {
            let loaded = load_records(path, RecordFormat::from_path(path), &schema, data.skip_unknown)?;
            (loaded.items, loaded.duplicate_pairs, loaded.skipped_rows)
        }
        (None, Some(path)) => (load_counts(path, &schema)?, 0, vec![]),
        _ => return Err(Error::InvalidParameter("give exactly one of --input or --counts-file".into())),
    };
    if duplicates > 0 {
        writeln!(io.err, "warning: {duplicates} repeated (item, annotator) pairs kept")?;
    }
    for (row, label) in &skipped {
        writeln!(io.err, "warning: row {row}: skipped unknown label {label:?}")?;
    }
    let config =
        ScoreConfig { prior_beta: data.beta, measures, credible_mass: data.mass, mc_samples: data.mc_samples };
    let reports = score_items(&items, &config, data.seed.seed)?;
    let details = json!({
        "items": reports.len(),
        "duplicate_pairs": duplicates,
        "skipped_rows": skipped.len(),
        "credible_mass": data.mass,
        "mc_samples": data.mc_samples,
        "labels": schema.labels(),
        "cs_label": schema.cs_label(),
    });
    Ok(Scored { reports, details })
}

fn render_reports(reports: &[ItemReport], format: ReportFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_reports(reports, &mut buf, format)?;
    Ok(buf)
}

fn report_format(out: Option<&Path>, json: bool) -> ReportFormat {
    match out {
        Some(p) => ReportFormat::from_path(p),
        None if json => ReportFormat::Json,
        None => ReportFormat::Csv,
    }
}

fn cmd_score(args: &ScoreArgs, io: &mut Io) -> Result<()> {
    let measures = measures_of(&args.measure);
    let scored = score_dataset(&args.data, measures.clone(), io)?;
    let mut meta = Metadata::new("score", Some(args.data.seed.seed), Some(args.data.beta), measures);
    meta.details = scored.details;
    let body = render_reports(&scored.reports, report_format(args.out.as_deref(), io.json))?;
    emit(io, args.out.as_deref(), &body, &meta)
}

fn cmd_rank(args: &RankArgs, io: &mut Io) -> Result<()> {
    let measure: MeasureKind = args.measure.into();
    let key = match args.key {
        KeyArg::Plugin => RankKey::Plugin,
        KeyArg::PosteriorMean => RankKey::PosteriorMean,
    };
    let (reports, mut meta) = match &args.reports {
        Some(path) => {
            let mut meta = Metadata::new("rank", None, None, vec![measure]);
            meta.details = json!({"reports": path});
            (import_reports_csv(path)?, meta)
        }
        None => {
            let scored = score_dataset(&args.data, vec![measure], io)?;
            let mut meta = Metadata::new("rank", Some(args.data.seed.seed), Some(args.data.beta), vec![measure]);
            meta.details = scored.details;
            (scored.reports, meta)
        }
    };
    let ranked = rank_and_filter(&reports, key, measure, args.threshold, !args.ascending)?;
    if let serde_json::Value::Object(map) = &mut meta.details {
        map.insert("key".into(), json!(key));
        map.insert("threshold".into(), json!(args.threshold));
        map.insert("descending".into(), json!(!args.ascending));
        map.insert("kept".into(), json!(ranked.len()));
    }
    let body = render_reports(&ranked, report_format(args.out.as_deref(), io.json))?;
    emit(io, args.out.as_deref(), &body, &meta)
}
