//! Command-line front end: `denoise`, `diagnose` and `bench`.

pub mod io;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{run_scenario, write_long_csv, write_summary_csv, Estimator, ScenarioConfig, ScenarioResult};
use crate::diagnostics::{exponential_fit_report, FitReport};
use crate::dwt::{dyadic_exponent, forward, inverse, Wavelet};
use crate::error::{Error, Result};
use crate::noise::{NoiseFamily, NoiseModel};
use crate::posterior::PosteriorTarget;
use crate::priors::{PriorConfig, PriorSpec, DEFAULT_ALPHA_R, DEFAULT_BETA_SHAPE, DEFAULT_SPIKE_WIDTH, DEFAULT_TAU};
use crate::ram::{run_posterior_chain, write_trace_csv, RamConfig};
use crate::shrink::{posterior_mean, EstimatorSpec};

use self::io::{read_table, AtomicBatch, Series};

pub const DENOISED_FILE: &str = "denoised.csv";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const LONG_FILE: &str = "mse_long.csv";

/// Preferred coarsest level; lowered for short inputs.
pub const DEFAULT_DENOISE_PRIMARY_LEVEL: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "poswave", version, about = "Wavelet shrinkage under positive noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Denoise a CSV series with the posterior-mean rule
    Denoise(DenoiseArgs),
    /// Exponential fit of residuals between observed and denoised series
    Diagnose(DiagnoseArgs),
    /// Run benchmark scenarios from a JSON manifest
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorArg {
    Logistic,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    #[value(alias = "exponential")]
    Exp,
    Lognormal,
}

impl From<NoiseArg> for NoiseFamily {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Exp => NoiseFamily::Exponential,
            NoiseArg::Lognormal => NoiseFamily::LogNormal,
        }
    }
}

fn parse_wavelet(s: &str) -> std::result::Result<Wavelet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    /// Single-column or (label, value) CSV
    #[arg(long, env = "POSWAVE_INPUT")]
    pub input: PathBuf,
    #[arg(long, env = "POSWAVE_FILTER", default_value = "daub10", value_parser = parse_wavelet)]
    pub filter: Wavelet,
    #[arg(long, env = "POSWAVE_PRIOR", value_enum, default_value_t = PriorArg::Logistic)]
    pub prior: PriorArg,
    /// Logistic scale
    #[arg(long, env = "POSWAVE_TAU", default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Beta shape a
    #[arg(long, env = "POSWAVE_A", default_value_t = DEFAULT_BETA_SHAPE)]
    pub a: f64,
    /// Beta shape b
    #[arg(long, env = "POSWAVE_B", default_value_t = DEFAULT_BETA_SHAPE)]
    pub b: f64,
    #[arg(long, env = "POSWAVE_NOISE", value_enum, default_value_t = NoiseArg::Exp)]
    pub noise: NoiseArg,
    /// Exponential rate; required with `--noise exp`
    #[arg(long, env = "POSWAVE_LAMBDA")]
    pub lambda: Option<f64>,
    /// Lognormal log-scale sd; required with `--noise lognormal`
    #[arg(long, env = "POSWAVE_SIGMA")]
    pub sigma: Option<f64>,
    #[arg(long = "alpha-r", env = "POSWAVE_ALPHA_R", default_value_t = DEFAULT_ALPHA_R)]
    pub alpha_r: f64,
    /// Coarsest resolution level J0
    #[arg(long = "primary-level", env = "POSWAVE_PRIMARY_LEVEL")]
    pub primary_level: Option<usize>,
    /// Retained draws
    #[arg(long, env = "POSWAVE_ITERATIONS", default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, env = "POSWAVE_BURNIN", default_value_t = 1_000)]
    pub burnin: usize,
    /// Half-width of the uniform spike surrogate
    #[arg(long = "epsilon-spike", env = "POSWAVE_EPSILON_SPIKE", default_value_t = DEFAULT_SPIKE_WIDTH)]
    pub epsilon_spike: f64,
    #[arg(long, env = "POSWAVE_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "out-dir", env = "POSWAVE_OUT_DIR", default_value = "poswave-out")]
    pub out_dir: PathBuf,
    /// Keep the most recent 2^J points of a longer series
    #[arg(long = "truncate-to-dyadic", env = "POSWAVE_TRUNCATE_TO_DYADIC")]
    pub truncate_to_dyadic: bool,
    /// Also write the chain's log-posterior trace
    #[arg(long, env = "POSWAVE_TRACE")]
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// Observed series, or a denoise output with `observed` and `denoised` columns
    #[arg(long, env = "POSWAVE_INPUT")]
    pub input: PathBuf,
    /// Fitted series; a `denoised` column is used when present
    #[arg(long, env = "POSWAVE_DENOISED")]
    pub denoised: Option<PathBuf>,
    /// Write the report as JSON here as well as to stdout
    #[arg(long = "out-dir", env = "POSWAVE_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// JSON scenario manifest
    #[arg(long, env = "POSWAVE_MANIFEST")]
    pub manifest: PathBuf,
    #[arg(long = "out-dir", env = "POSWAVE_OUT_DIR", default_value = "poswave-bench")]
    pub out_dir: PathBuf,
    /// Overrides every scenario's seed
    #[arg(long, env = "POSWAVE_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "POSWAVE_ITERATIONS")]
    pub iterations: Option<usize>,
    #[arg(long, env = "POSWAVE_BURNIN")]
    pub burnin: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Denoise,
    Bench,
    Diagnose,
}

/// Fully resolved configuration of a `denoise` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub input: PathBuf,
    pub filter: Wavelet,
    pub prior: PriorConfig,
    pub noise: NoiseModel,
    pub sampler: RamConfig,
    /// `None` picks `min(3, J - 1)`.
    pub primary_level: Option<usize>,
    pub out_dir: PathBuf,
    pub seed: u64,
    #[serde(default)]
    pub truncate_to_dyadic: bool,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if !self.input.is_file() {
            return Err(Error::Input(format!(
                "input file {} does not exist",
                self.input.display()
            )));
        }
        self.noise.validate()?;
        self.sampler.validate()?;
        Ok(())
    }
}

impl DenoiseArgs {
    pub fn manifest(&self) -> Result<RunManifest> {
        let noise = match self.noise {
            NoiseArg::Exp => NoiseModel::exponential(
                self.lambda
                    .ok_or_else(|| Error::InvalidParameter("exponential noise needs --lambda".into()))?,
            )?,
            NoiseArg::Lognormal => NoiseModel::lognormal(
                self.sigma
                    .ok_or_else(|| Error::InvalidParameter("lognormal noise needs --sigma".into()))?,
            )?,
        };
        let prior = match self.prior {
            PriorArg::Logistic => PriorConfig::logistic(self.tau),
            PriorArg::Beta => PriorConfig::beta(self.a, self.b),
        }
        .with_alpha_r(self.alpha_r)
        .with_spike_width(self.epsilon_spike);
        Ok(RunManifest {
            command: CommandKind::Denoise,
            input: self.input.clone(),
            filter: self.filter,
            prior,
            noise,
            sampler: RamConfig {
                iterations: self.iterations,
                burn_in: self.burnin,
                seed: self.seed,
                record_trace: self.trace,
                ..RamConfig::default()
            },
            primary_level: self.primary_level,
            out_dir: self.out_dir.clone(),
            seed: self.seed,
            truncate_to_dyadic: self.truncate_to_dyadic,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseMetadata {
    pub manifest: RunManifest,
    pub n: usize,
    /// Leading points removed by `--truncate-to-dyadic`.
    pub dropped_points: usize,
    pub primary_level: usize,
    pub prior: PriorSpec,
    pub acceptance_rate: f64,
    pub clamped_steps: u64,
    /// Exponential fit of the residuals; absent when their sum is not positive.
    pub residual_fit: Option<FitReport>,
}

#[derive(Debug, Clone)]
pub struct DenoiseOutcome {
    pub observed: Series,
    pub denoised: Vec<f64>,
    pub metadata: DenoiseMetadata,
    pub files: Vec<PathBuf>,
}

fn check_dyadic(series: &mut Series, truncate: bool) -> Result<usize> {
    let n = series.values.len();
    if dyadic_exponent(n).is_ok() {
        return Ok(0);
    }
    if truncate && n >= 2 {
        series.truncate_to_dyadic();
        return Ok(n - series.values.len());
    }
    Err(Error::Input(format!(
        "series length {n} is not a power of two; truncate or pad the input, \
         or pass --truncate-to-dyadic to keep the most recent points"
    )))
}

pub fn denoise_command(manifest: &RunManifest) -> Result<DenoiseOutcome> {
    manifest.validate()?;
    let mut series = read_table(&manifest.input)?.series(None)?;
    let dropped_points = check_dyadic(&mut series, manifest.truncate_to_dyadic)?;
    let n = series.values.len();
    let levels = dyadic_exponent(n)?;
    if levels == 0 {
        return Err(Error::Input("series needs at least two points".into()));
    }
    let primary_level = manifest
        .primary_level
        .unwrap_or(DEFAULT_DENOISE_PRIMARY_LEVEL.min(levels - 1));

    let filter = manifest.filter.filter();
    let d = forward(&series.values, &filter, primary_level)?;
    let prior = manifest.prior.elicit(&d)?;
    let target = PosteriorTarget::new(d.clone(), filter.clone(), manifest.noise, prior.clone())?;
    let sampler = RamConfig {
        seed: manifest.seed,
        ..manifest.sampler.clone()
    };
    let chain = run_posterior_chain(&target, &sampler)?;
    let theta = posterior_mean(&chain.draws, &d)?;
    let denoised = inverse(&theta, &filter);
    let residual_fit = exponential_fit_report(&series.values, &denoised).ok();

    let metadata = DenoiseMetadata {
        manifest: manifest.clone(),
        n,
        dropped_points,
        primary_level,
        prior,
        acceptance_rate: chain.acceptance_rate,
        clamped_steps: chain.clamped_steps,
        residual_fit,
    };

    let mut batch = AtomicBatch::new(&manifest.out_dir)?;
    batch.add(DENOISED_FILE, |w| write_denoised_csv(&series, &denoised, w))?;
    batch.add(COEFFICIENTS_FILE, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["kind", "level", "index", "empirical", "estimate", "difference"])?;
        for i in 0..d.len() {
            let (kind, level, index) = match d.level_of(i) {
                Some(j) => ("detail", j, i - (1usize << j)),
                None => ("coarse", primary_level, i),
            };
            let (e, t) = (d.as_slice()[i], theta.as_slice()[i]);
            csv.write_record([
                kind.to_string(),
                level.to_string(),
                index.to_string(),
                e.to_string(),
                t.to_string(),
                (e - t).to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    batch.add(METADATA_FILE, |w| {
        serde_json::to_writer_pretty(&mut *w, &metadata)?;
        Ok(w.write_all(b"\n")?)
    })?;
    if let Some(trace) = chain.trace.as_ref() {
        batch.add(TRACE_FILE, |w| write_trace_csv(trace, w))?;
    }
    let files = batch.commit()?;
    Ok(DenoiseOutcome {
        observed: series,
        denoised,
        metadata,
        files,
    })
}

fn write_denoised_csv(series: &Series, denoised: &[f64], w: &mut dyn Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["index", "label", "observed", "denoised", "residual"])?;
    for (i, (y, f)) in series.values.iter().zip(denoised).enumerate() {
        let label = series
            .labels
            .as_ref()
            .map(|l| l[i].clone())
            .unwrap_or_else(|| i.to_string());
        csv.write_record([i.to_string(), label, y.to_string(), f.to_string(), (y - f).to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn diagnose_command(args: &DiagnoseArgs) -> Result<FitReport> {
    let input = read_table(&args.input)?;
    let (observed, denoised) = match &args.denoised {
        Some(path) => {
            let fitted = read_table(path)?;
            let observed = if input.header.as_ref().is_some_and(|h| h.iter().any(|c| c == "observed")) {
                input.series(Some("observed"))?
            } else {
                input.series(None)?
            };
            let column = fitted
                .header
                .as_ref()
                .is_some_and(|h| h.iter().any(|c| c == "denoised"))
                .then_some("denoised");
            (observed.values, fitted.series(column)?.values)
        }
        None => (
            input.series(Some("observed"))?.values,
            input.series(Some("denoised"))?.values,
        ),
    };
    let report = exponential_fit_report(&observed, &denoised)?;
    if let Some(dir) = &args.out_dir {
        let mut batch = AtomicBatch::new(dir)?;
        batch.add(DIAGNOSTICS_FILE, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            Ok(w.write_all(b"\n")?)
        })?;
        batch.commit()?;
    }
    Ok(report)
}

/// Scenario matrix for `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub scenarios: Vec<ScenarioConfig>,
    /// Short names, see [`crate::shrink::ESTIMATOR_NAMES`].
    pub estimators: Vec<String>,
    #[serde(default)]
    pub sampler: RamConfig,
}

impl BenchManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn estimator_specs(&self) -> Result<Vec<EstimatorSpec>> {
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("manifest lists no estimators".into()));
        }
        self.estimators
            .iter()
            .map(|name| EstimatorSpec::from_name(name, &self.sampler))
            .collect()
    }
}

pub fn bench_command(manifest: &BenchManifest, out_dir: &Path) -> Result<Vec<ScenarioResult>> {
    let specs = manifest.estimator_specs()?;
    let estimators: Vec<&dyn Estimator> = specs.iter().map(|s| s as &dyn Estimator).collect();
    let mut results = Vec::new();
    for scenario in &manifest.scenarios {
        results.extend(run_scenario(scenario, &estimators)?);
    }
    let mut batch = AtomicBatch::new(out_dir)?;
    batch.add(SUMMARY_FILE, |w| write_summary_csv(&results, w))?;
    batch.add(LONG_FILE, |w| write_long_csv(&results, w))?;
    batch.commit()?;
    Ok(results)
}

impl BenchArgs {
    pub fn manifest(&self) -> Result<BenchManifest> {
        let mut m = BenchManifest::from_path(&self.manifest)?;
        if let Some(seed) = self.seed {
            m.scenarios.iter_mut().for_each(|s| s.seed = seed);
        }
        if let Some(it) = self.iterations {
            m.sampler.iterations = it;
        }
        if let Some(b) = self.burnin {
            m.sampler.burn_in = b;
        }
        Ok(m)
    }
}

/// Runs a parsed command line, writing human-readable progress to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Denoise(args) => {
            let outcome = denoise_command(&args.manifest()?)?;
            writeln!(
                out,
                "denoised {} points (acceptance {:.3})",
                outcome.metadata.n, outcome.metadata.acceptance_rate
            )?;
            if let Some(fit) = &outcome.metadata.residual_fit {
                writeln!(
                    out,
                    "residual rate {:.4}, KS D = {:.4}, p = {:.4}",
                    fit.rate, fit.ks_statistic, fit.p_value
                )?;
            }
            for f in &outcome.files {
                writeln!(out, "wrote {}", f.display())?;
            }
        }
        Command::Diagnose(args) => {
            let report = diagnose_command(args)?;
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
        Command::Bench(args) => {
            let results = bench_command(&args.manifest()?, &args.out_dir)?;
            for r in &results {
                writeln!(
                    out,
                    "{} n={} snr={} {} {}: amse {:.4}",
                    r.function.name(),
                    r.n,
                    r.snr,
                    r.family.name(),
                    r.estimator,
                    r.amse
                )?;
            }
        }
    }
    Ok(())
}
