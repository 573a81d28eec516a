//! The `ginreal` command line.

use crate::asy::{self, AsyRow};
use crate::clt::{clt_report_on, CltReport, CltThresholds};
use crate::error::{CliError, Result, EXIT_CONVERGENCE, EXIT_OK, EXIT_USAGE};
use crate::montecarlo::{self, EnsembleSpec, Observable, RunSummary, SampleMoments, TestFn};
use crate::output::{self, Cell, Format, Meta, Record, Sections, Table};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ginreal::fredholm::{edge_cdf, finite_n_gap, origin_survival_with, GapProbResult};
use ginreal::kernel::{
    bulk_limit_kernel, edge_limit_kernel, make_context, matrix_kernel, normalized_kernel, rho_density, scaled_kernel,
    KernelContext, KernelSample2x2, OriginLimitKernel, Regime,
};
use ginreal::special_fn::WeightConfig;
use ginreal::statistics::{
    clustering_report, expected_count, finite_n_variance_over, truncation_region, variance_prediction, VarianceRegime,
};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_607;
/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GINREAL_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ginreal", version, about = "Real eigenvalues of products of real Ginibre matrices")]
pub struct Cli {
    /// Output file (standard output when absent).
    #[arg(short, long, global = true)]
    pub output: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Cap on data-parallel worker threads.
    #[arg(long, env = WORKERS_ENV, default_value_t = 1, global = true)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid of kernel entries D, S, I in any regime.
    KernelEval(KernelEvalArgs),
    /// Finite-N one-point density against its limit.
    Density(DensityArgs),
    /// Expected number of real eigenvalues.
    ExpectedCount(ExpectedCountArgs),
    /// Predicted, finite-N and (optionally) sampled variance of a linear statistic.
    Variance(VarianceArgs),
    /// Finite-N probability of no real eigenvalue in an interval.
    Gap(GapArgs),
    /// Limiting CDF of the rescaled largest real eigenvalue.
    EdgeCdf(EdgeCdfArgs),
    /// Limiting law of the rescaled smallest positive real eigenvalue.
    OriginCdf(OriginCdfArgs),
    /// Raw Monte Carlo ensemble run.
    Mc(McArgs),
    /// Normal-approximation report for a linear statistic.
    Clt(CltArgs),
    /// Error tables of the leading-order asymptotics.
    AsyCheck(AsyCheckArgs),
    /// Decay of the normalized kernel between rescaled bulk points.
    Cluster(ClusterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelRegime {
    /// Finite-N kernel in the original variable.
    Finite,
    /// Finite-N kernel divided by the local density.
    Normalized,
    /// Finite-N kernel zoomed at energy E.
    Bulk,
    /// Finite-N kernel zoomed at the edge x = 1.
    Edge,
    /// Finite-N kernel zoomed at the origin.
    Origin,
    BulkLimit,
    EdgeLimit,
    OriginLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    One,
    X,
    X2,
    Abs,
    /// `e^{−x²}`
    Gauss,
    /// `(2/π)^{1/4} e^{−x²}`, unit L² norm.
    Bump,
    Cos,
}

impl TestFunction {
    pub fn function(self) -> TestFn {
        match self {
            TestFunction::One => Arc::new(|_| 1.0),
            TestFunction::X => Arc::new(|x| x),
            TestFunction::X2 => Arc::new(|x| x * x),
            TestFunction::Abs => Arc::new(f64::abs),
            TestFunction::Gauss => Arc::new(|x| (-x * x).exp()),
            TestFunction::Bump => Arc::new(|x| (2.0 / std::f64::consts::PI).powf(0.25) * (-x * x).exp()),
            TestFunction::Cos => Arc::new(f64::cos),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatRegime {
    Global,
    MesoBulk,
    MesoOrigin,
}

#[derive(Debug, Args, Serialize)]
pub struct SizeArgs {
    #[arg(long = "N", alias = "n", default_value_t = 100)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct RegimeArgs {
    #[arg(long, value_enum, default_value = "global")]
    pub regime: StatRegime,
    /// Energy of the mesoscopic bulk regime.
    #[arg(long = "E", alias = "e", default_value_t = 0.5)]
    #[serde(rename = "E")]
    pub e: f64,
    /// Zoom exponent of the mesoscopic regimes.
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
}

impl RegimeArgs {
    fn regime(&self) -> VarianceRegime {
        match self.regime {
            StatRegime::Global => VarianceRegime::Global,
            StatRegime::MesoBulk => VarianceRegime::MesoBulk { e: self.e, tau: self.tau },
            StatRegime::MesoOrigin => VarianceRegime::MesoOrigin { tau: self.tau },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct KernelEvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    #[arg(long, value_enum, default_value = "finite")]
    pub regime: KernelRegime,
    /// Energy of the bulk regimes.
    #[arg(long = "E", alias = "e", default_value_t = 0.5)]
    #[serde(rename = "E")]
    pub e: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    /// y grid; defaults to the x grid.
    #[arg(long, allow_hyphen_values = true)]
    pub y_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub y_step: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    #[arg(long, default_value_t = -1.2, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1.2, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpectedCountArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    /// Also count over the truncation region with this exponent.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Also count over the interval (a, b).
    #[arg(long, allow_hyphen_values = true, requires = "b")]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "a")]
    pub b: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    #[arg(long, value_enum, default_value = "one")]
    pub f: TestFunction,
    #[command(flatten)]
    #[serde(flatten)]
    pub regime: RegimeArgs,
    /// Exponent of the truncation region used by the finite-N formula.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8)]
    pub quad_order: usize,
    /// Monte Carlo trials for the sampled variance (0 = none).
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    /// Integer seed, or `auto` for entropy.
    #[arg(long, default_value_t = DEFAULT_SEED.to_string())]
    pub seed: String,
}

#[derive(Debug, Args, Serialize)]
pub struct GapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 8)]
    pub grid_order: usize,
    #[arg(long, default_value_t = 8)]
    pub ell_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EdgeCdfArgs {
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub s_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub s_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 40)]
    pub grid_order: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct OriginCdfArgs {
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long, default_value_t = 0.1)]
    pub s_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 16)]
    pub grid_order: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Use the interval [−s, s] instead of [0, s].
    #[arg(long)]
    pub symmetric: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Integer seed, or `auto` for entropy.
    #[arg(long, default_value_t = DEFAULT_SEED.to_string())]
    pub seed: String,
    /// Linear statistic to aggregate besides the count and the extremes.
    #[arg(long, value_enum)]
    pub f: Option<TestFunction>,
    /// With `--f`, also aggregate the mesoscopic statistic at this zoom exponent.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "E", alias = "e", default_value_t = 0.5)]
    #[serde(rename = "E")]
    pub e: f64,
    /// Also aggregate the count over the truncation region with this exponent.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Append the per-trial table (count and extremes).
    #[arg(long)]
    pub per_trial: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CltArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    #[arg(long, value_enum, default_value = "one")]
    pub f: TestFunction,
    #[command(flatten)]
    #[serde(flatten)]
    pub regime: RegimeArgs,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Integer seed, or `auto` for entropy.
    #[arg(long, default_value_t = DEFAULT_SEED.to_string())]
    pub seed: String,
    #[arg(long, default_value_t = 16)]
    pub quad_order: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AsyCheckArgs {
    /// Sizes for the weight, bulk-series and global checks.
    #[arg(long, value_delimiter = ',', default_value = "100,400")]
    pub sizes: Vec<usize>,
    /// Sizes for the edge-window check.
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub edge_sizes: Vec<usize>,
    #[arg(long = "m", value_delimiter = ',', default_value = "1,2,3")]
    pub factors: Vec<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub size: SizeArgs,
    /// Rescaled coordinates `ξ = sgn(x)√N|x|^{1/m}`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "8,10,14,-11")]
    pub points: Vec<f64>,
}

/// Everything a command produced.
struct Artifact {
    parameters: Record,
    seed: Option<u64>,
    data: Sections,
    converged: bool,
}

fn parameters<T: Serialize>(args: &T) -> Record {
    fn cell(v: &serde_json::Value) -> Cell {
        match v {
            serde_json::Value::Null => Cell::Missing,
            serde_json::Value::Bool(b) => Cell::Bool(*b),
            serde_json::Value::Number(n) => match (n.as_i64(), n.as_u64()) {
                (Some(i), _) => Cell::Int(i),
                (None, Some(u)) => Cell::UInt(u),
                _ => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
            serde_json::Value::String(s) => Cell::Text(s.clone()),
            other => Cell::Text(other.to_string()),
        }
    }
    let mut r = Record::default();
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in &map {
            r.push(k.clone(), cell(v));
        }
    }
    r
}

fn resolve_seed(s: &str) -> Result<u64> {
    if s == "auto" {
        Ok(rand::random())
    } else {
        s.parse().map_err(|_| CliError::Input(format!("seed must be an unsigned integer or `auto`, got `{s}`")))
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Input(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(CliError::Input(format!("grid of {count} points is too large")));
    }
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

fn kernel_row(x: f64, y: f64, k: KernelSample2x2) -> Vec<Cell> {
    vec![x.into(), y.into(), k.d.into(), k.s_xy.into(), k.s_yx.into(), k.i.into()]
}

fn kernel_eval(a: &KernelEvalArgs) -> Result<Artifact> {
    let xs = grid(a.x_min, a.x_max, a.step)?;
    let ys = grid(a.y_min.unwrap_or(a.x_min), a.y_max.unwrap_or(a.x_max), a.y_step.unwrap_or(a.step))?;
    let (n, m) = (a.size.n, a.size.m);
    let needs_ctx = !matches!(a.regime, KernelRegime::BulkLimit | KernelRegime::EdgeLimit | KernelRegime::OriginLimit);
    let ctx = if needs_ctx { Some(make_context(n, m)?) } else { None };
    let origin = if a.regime == KernelRegime::OriginLimit { Some(OriginLimitKernel::new(WeightConfig::new(m))?) } else { None };
    let mut t = Table::new(&["x", "y", "d", "s_xy", "s_yx", "i"]);
    for &x in &xs {
        for &y in &ys {
            let k = match a.regime {
                KernelRegime::Finite => matrix_kernel(x, y, ctx.as_ref().unwrap())?,
                KernelRegime::Normalized => normalized_kernel(x, y, ctx.as_ref().unwrap())?,
                KernelRegime::Bulk => scaled_kernel(Regime::Bulk(a.e), x, y, ctx.as_ref().unwrap())?,
                KernelRegime::Edge => scaled_kernel(Regime::Edge, x, y, ctx.as_ref().unwrap())?,
                KernelRegime::Origin => scaled_kernel(Regime::Origin, x, y, ctx.as_ref().unwrap())?,
                KernelRegime::BulkLimit => bulk_limit_kernel(x, y),
                KernelRegime::EdgeLimit => edge_limit_kernel(x, y)?,
                KernelRegime::OriginLimit => origin.as_ref().unwrap().sample(x, y)?,
            };
            t.push(kernel_row(x, y, k));
        }
    }
    Ok(Artifact { parameters: parameters(a), seed: None, data: Sections(vec![("kernel".into(), t)]), converged: true })
}

fn density(a: &DensityArgs) -> Result<Artifact> {
    let (n, m) = (a.size.n, a.size.m);
    let ctx = make_context(n, m)?;
    let scale = (2.0 * n as f64 * m as f64 / std::f64::consts::PI).sqrt();
    let mut t = Table::new(&["x", "finite", "limit", "rho"]);
    for x in grid(a.x_min, a.x_max, a.step)? {
        let s = ginreal::kernel::s_kernel(x, x, &ctx)?;
        let rho = if x.abs() < 1.0 { rho_density(x, m) } else { 0.0 };
        t.push(vec![x.into(), s.into(), (scale * rho).into(), rho.into()]);
    }
    Ok(Artifact { parameters: parameters(a), seed: None, data: Sections(vec![("density".into(), t)]), converged: true })
}

fn expected(a: &ExpectedCountArgs) -> Result<Artifact> {
    let (n, m) = (a.size.n, a.size.m);
    let ctx = make_context(n, m)?;
    let full = expected_count(&ctx, None)?;
    let asym = (2.0 * n as f64 * m as f64 / std::f64::consts::PI).sqrt();
    let mut r = Record::default();
    r.push("full_line", full).push("asymptotic", asym).push("ratio", full / asym);
    if let Some(eps) = a.epsilon {
        let region = truncation_region(n, m, eps)?;
        r.push("truncated", expected_count(&ctx, Some(&region.intervals()))?);
    }
    if let (Some(lo), Some(hi)) = (a.a, a.b) {
        r.push("interval", expected_count(&ctx, Some(&[(lo, hi)]))?);
    }
    Ok(Artifact { parameters: parameters(a), seed: None, data: Sections(vec![("count".into(), Table::from_record(&r))]), converged: true })
}

fn moments_row(name: &str, excluded: usize, m: Option<SampleMoments>) -> Vec<Cell> {
    let mut row = vec![name.into(), Cell::from(m.map(|m| m.count)), excluded.into()];
    let fields = |m: &SampleMoments| {
        [m.mean, m.variance, m.cumulants[2], m.cumulants[3], m.skewness, m.excess_kurtosis, m.se_mean, m.se_variance, m.se_skewness, m.se_excess_kurtosis]
    };
    match m {
        Some(m) => row.extend(fields(&m).into_iter().map(Cell::Num)),
        None => row.extend(std::iter::repeat_n(Cell::Missing, 10)),
    }
    row
}

const MOMENT_COLUMNS: [&str; 13] = [
    "observable",
    "samples",
    "excluded",
    "mean",
    "variance",
    "k3",
    "k4",
    "skewness",
    "excess_kurtosis",
    "se_mean",
    "se_variance",
    "se_skewness",
    "se_excess_kurtosis",
];

/// Tables of a [`RunSummary`]: `run`, `observables` and `ecdf`.
pub fn summary_sections(s: &RunSummary) -> Sections {
    let mut run = Record::default();
    run.push("N", s.spec.n)
        .push("m", s.spec.m)
        .push("trials", s.spec.trials)
        .push("seed", s.spec.seed)
        .push("failures", s.failures);
    let mut obs = Table::new(&MOMENT_COLUMNS);
    for o in &s.observables {
        obs.push(moments_row(&o.name, o.excluded, o.moments));
    }
    let mut ecdf = Table::new(&["observable", "x", "cdf"]);
    for e in &s.ecdf {
        for (&x, &c) in e.x.iter().zip(&e.cdf) {
            ecdf.push(vec![e.name.as_str().into(), x.into(), c.into()]);
        }
    }
    Sections(vec![("run".into(), Table::from_record(&run)), ("observables".into(), obs), ("ecdf".into(), ecdf)])
}

fn mc(a: &McArgs, workers: usize) -> Result<Artifact> {
    let seed = resolve_seed(&a.seed)?;
    let spec = EnsembleSpec::new(a.size.n, a.size.m, a.trials, seed, workers)?;
    let mut observables = vec![Observable::Count, Observable::LambdaMax, Observable::LambdaMinPositive];
    if let Some(eps) = a.epsilon {
        let region = truncation_region(a.size.n, a.size.m, eps)?;
        observables.push(Observable::Truncated { intervals: region.intervals(), inner: Box::new(Observable::Count) });
    }
    if let Some(f) = a.f {
        let name = format!("{f:?}").to_lowercase();
        observables.push(Observable::Linear { name: name.clone(), f: f.function() });
        if let Some(tau) = a.tau {
            observables.push(Observable::Mesoscopic { name, f: f.function(), e: a.e, tau });
        }
    } else if a.tau.is_some() {
        return Err(CliError::Input("--tau needs --f".into()));
    }
    let ensemble = montecarlo::sample_ensemble(&spec)?;
    let summary = montecarlo::summarize(&ensemble, &observables)?;
    let mut data = summary_sections(&summary);
    if a.per_trial {
        let mut t = Table::new(&["trial", "n_real", "lambda_max", "lambda_min_positive"]);
        for s in &ensemble.samples {
            let (hi, lo) = montecarlo::extremes(s);
            t.push(vec![s.trial_index.into(), s.n_real.into(), hi.into(), lo.into()]);
        }
        data.0.push(("per_trial".into(), t));
    }
    let mut params = parameters(a);
    params.push("workers", workers);
    Ok(Artifact { parameters: params, seed: Some(seed), data, converged: true })
}

/// Key/value view of a [`CltReport`].
pub fn clt_record(r: &CltReport) -> Record {
    let mut rec = Record::default();
    rec.push("regime", r.regime.as_str())
        .push("N", r.n)
        .push("m", r.m)
        .push("trials", r.trials)
        .push("excluded", r.excluded)
        .push("predicted_sigma2", r.predicted_sigma2)
        .push("normalization_exponent", r.normalization_exponent)
        .push("sample_mean", r.moments.map(|m| m.mean))
        .push("sample_variance", r.moments.map(|m| m.variance))
        .push("se_variance", r.moments.map(|m| m.se_variance))
        .push("variance_ratio", r.variance_ratio)
        .push("skewness", r.moments.map(|m| m.skewness))
        .push("se_skewness", r.moments.map(|m| m.se_skewness))
        .push("excess_kurtosis", r.moments.map(|m| m.excess_kurtosis))
        .push("se_excess_kurtosis", r.moments.map(|m| m.se_excess_kurtosis))
        .push("ks_to_normal", r.ks_to_normal)
        .push("lattice_spacing", r.lattice_spacing)
        .push("zero_variance", r.zero_variance)
        .push("threshold_skewness", r.thresholds.skewness)
        .push("threshold_excess_kurtosis", r.thresholds.excess_kurtosis)
        .push("threshold_ks", r.thresholds.ks)
        .push("threshold_variance_ratio", r.thresholds.variance_ratio)
        .push("skewness_ok", r.skewness_ok)
        .push("kurtosis_ok", r.kurtosis_ok)
        .push("ks_ok", r.ks_ok)
        .push("variance_ok", r.variance_ok)
        .push("pass", r.pass);
    rec
}

fn clt(a: &CltArgs, workers: usize) -> Result<Artifact> {
    let seed = resolve_seed(&a.seed)?;
    let spec = EnsembleSpec::new(a.size.n, a.size.m, a.trials, seed, workers)?;
    let ensemble = montecarlo::sample_ensemble(&spec)?;
    let report = clt_report_on(&ensemble, &a.f.function(), a.regime.regime(), a.quad_order, CltThresholds::default())?;
    let mut params = parameters(a);
    params.push("workers", workers);
    let data = Sections(vec![("clt".into(), Table::from_record(&clt_record(&report)))]);
    Ok(Artifact { parameters: params, seed: Some(seed), data, converged: true })
}

/// Statistic `g` on the original variable for a regime, `f(N^τ(E − x))` etc.
fn zoomed(f: TestFn, regime: VarianceRegime, n: usize) -> TestFn {
    let nf = n as f64;
    match regime {
        VarianceRegime::Global => f,
        VarianceRegime::MesoBulk { e, tau } => {
            let z = nf.powf(tau);
            Arc::new(move |x| f(z * (e - x)))
        }
        VarianceRegime::MesoOrigin { tau } => {
            let z = nf.powf(tau);
            Arc::new(move |x| f(z * x))
        }
    }
}

fn variance(a: &VarianceArgs, workers: usize) -> Result<Artifact> {
    let (n, m) = (a.size.n, a.size.m);
    let regime = a.regime.regime();
    let f = a.f.function();
    let prediction = variance_prediction(regime, |x| f(x), m, 16)?;
    let norm = (n as f64).powf(2.0 * prediction.normalization_exponent);
    let ctx = make_context(n, m)?;
    let region = truncation_region(n, m, a.epsilon)?;
    let g = zoomed(f.clone(), regime, n);
    let finite = finite_n_variance_over(|x| g(x), &ctx, &region.intervals(), a.quad_order)?;
    let mut r = Record::default();
    r.push("predicted_sigma2", prediction.sigma2)
        .push("normalization_exponent", prediction.normalization_exponent)
        .push("finite_n_variance", finite)
        .push("finite_n_normalized", finite / norm);
    let mut seed = None;
    if a.trials > 0 {
        let s = resolve_seed(&a.seed)?;
        seed = Some(s);
        let spec = EnsembleSpec::new(n, m, a.trials, s, workers)?;
        let ensemble = montecarlo::sample_ensemble(&spec)?;
        let obs = Observable::Truncated {
            intervals: region.intervals(),
            inner: Box::new(Observable::Linear { name: "g".into(), f: g }),
        };
        let (values, excluded) = obs.values(&ensemble)?;
        let mo = SampleMoments::from_values(&values);
        r.push("mc_trials", values.len())
            .push("mc_excluded", excluded)
            .push("mc_variance", mo.map(|m| m.variance))
            .push("mc_se_variance", mo.map(|m| m.se_variance))
            .push("mc_normalized", mo.map(|m| m.variance / norm))
            .push("mc_z", mo.map(|m| (m.variance - finite) / m.se_variance));
    }
    let mut params = parameters(a);
    params.push("workers", workers);
    Ok(Artifact { parameters: params, seed, data: Sections(vec![("variance".into(), Table::from_record(&r))]), converged: true })
}

fn gap_record(g: &GapProbResult) -> Record {
    let mut r = Record::default();
    r.push("value", g.value)
        .push("tail_estimate", g.tail_estimate)
        .push("ell_max", g.ell_max)
        .push("clipped", g.clipped)
        .push("converged", g.converged);
    r
}

fn terms_table(g: &GapProbResult) -> Table {
    let mut t = Table::new(&["ell", "term"]);
    for (l, &v) in g.terms.iter().enumerate() {
        t.push(vec![(l + 1).into(), v.into()]);
    }
    t
}

fn gap(a: &GapArgs) -> Result<Artifact> {
    let ctx: KernelContext = make_context(a.size.n, a.size.m)?;
    let g = finite_n_gap(&ctx, (a.a, a.b), a.grid_order, a.ell_max)?;
    let data = Sections(vec![("gap".into(), Table::from_record(&gap_record(&g))), ("terms".into(), terms_table(&g))]);
    Ok(Artifact { parameters: parameters(a), seed: None, data, converged: g.converged })
}

fn edge(a: &EdgeCdfArgs) -> Result<Artifact> {
    let mut t = Table::new(&["s", "cdf", "tail_estimate", "ell_max", "converged"]);
    let mut converged = true;
    for s in grid(a.s_min, a.s_max, a.step)? {
        let g = edge_cdf(s, a.grid_order, a.tol)?;
        converged &= g.converged;
        t.push(vec![s.into(), g.value.into(), g.tail_estimate.into(), g.ell_max.into(), g.converged.into()]);
    }
    Ok(Artifact { parameters: parameters(a), seed: None, data: Sections(vec![("edge_cdf".into(), t)]), converged })
}

fn origin(a: &OriginCdfArgs) -> Result<Artifact> {
    let kernel = OriginLimitKernel::new(WeightConfig::new(a.m))?;
    let mut t = Table::new(&["s", "survival", "cdf", "tail_estimate", "ell_max", "converged"]);
    let mut converged = true;
    for s in grid(a.s_min, a.s_max, a.step)? {
        let g = origin_survival_with(&kernel, s, a.grid_order, a.tol, a.symmetric)?;
        converged &= g.converged;
        t.push(vec![s.into(), g.value.into(), (1.0 - g.value).into(), g.tail_estimate.into(), g.ell_max.into(), g.converged.into()]);
    }
    Ok(Artifact { parameters: parameters(a), seed: None, data: Sections(vec![("origin_cdf".into(), t)]), converged })
}

/// Table view of asymptotic error rows.
pub fn asy_table(rows: &[AsyRow]) -> Table {
    let mut t = Table::new(&["check", "N", "m", "x", "y", "approx", "exact", "rel_err", "bound", "pass"]);
    for r in rows {
        let y = if r.y.is_nan() { Cell::Missing } else { r.y.into() };
        t.push(vec![
            r.check.into(),
            r.n.into(),
            r.m.into(),
            r.x.into(),
            y,
            r.approx.into(),
            r.exact.into(),
            r.rel_err.into(),
            r.bound.into(),
            r.pass().into(),
        ]);
    }
    t
}

fn asy_check(a: &AsyCheckArgs) -> Result<Artifact> {
    let rows = asy::asymptotics_table(&a.sizes, &a.edge_sizes, &a.factors)?;
    Ok(Artifact { parameters: parameters(a), seed: None, data: Sections(vec![("asymptotics".into(), asy_table(&rows))]), converged: true })
}

fn cluster(a: &ClusterArgs) -> Result<Artifact> {
    let ctx = make_context(a.size.n, a.size.m)?;
    let report = clustering_report(&ctx, &a.points)?;
    let mut t =
        Table::new(&["xi1", "xi2", "x1", "x2", "separation", "mixed_sign", "max_entry", "cluster", "bound", "within_bound"]);
    for r in &report.rows {
        t.push(vec![
            r.xi.0.into(),
            r.xi.1.into(),
            r.x.0.into(),
            r.x.1.into(),
            r.separation.into(),
            r.mixed_sign.into(),
            r.max_entry.into(),
            r.cluster.into(),
            r.bound.into(),
            (r.max_entry <= r.bound && r.cluster.abs() <= r.bound).into(),
        ]);
    }
    let mut fit = Record::default();
    fit.push("fitted_rate", report.fitted_rate).push("all_within_bound", report.all_within_bound());
    Ok(Artifact {
        parameters: parameters(a),
        seed: None,
        data: Sections(vec![("decay".into(), t), ("fit".into(), Table::from_record(&fit))]),
        converged: true,
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::KernelEval(_) => "kernel-eval",
        Command::Density(_) => "density",
        Command::ExpectedCount(_) => "expected-count",
        Command::Variance(_) => "variance",
        Command::Gap(_) => "gap",
        Command::EdgeCdf(_) => "edge-cdf",
        Command::OriginCdf(_) => "origin-cdf",
        Command::Mc(_) => "mc",
        Command::Clt(_) => "clt",
        Command::AsyCheck(_) => "asy-check",
        Command::Cluster(_) => "cluster",
    }
}

/// Runs a parsed invocation and writes its artifact; returns the exit status.
pub fn run(cli: &Cli, argv: Vec<String>) -> Result<i32> {
    if cli.workers == 0 {
        return Err(CliError::Input("--workers must be at least 1".into()));
    }
    let start = Instant::now();
    let artifact = match &cli.command {
        Command::KernelEval(a) => kernel_eval(a)?,
        Command::Density(a) => density(a)?,
        Command::ExpectedCount(a) => expected(a)?,
        Command::Variance(a) => variance(a, cli.workers)?,
        Command::Gap(a) => gap(a)?,
        Command::EdgeCdf(a) => edge(a)?,
        Command::OriginCdf(a) => origin(a)?,
        Command::Mc(a) => mc(a, cli.workers)?,
        Command::Clt(a) => clt(a, cli.workers)?,
        Command::AsyCheck(a) => asy_check(a)?,
        Command::Cluster(a) => cluster(a)?,
    };
    let meta = Meta {
        command: command_name(&cli.command).into(),
        argv,
        parameters: artifact.parameters,
        seed: artifact.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        converged: artifact.converged,
    };
    match &cli.output {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            output::write(&mut file, cli.format, &meta, &artifact.data)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            output::write(&mut lock, cli.format, &meta, &artifact.data)?;
        }
    }
    Ok(if artifact.converged { EXIT_OK } else { EXIT_CONVERGENCE })
}

/// Entry point: parses `args`, runs, and maps every outcome to an exit code.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
