//! Ground-truth sampling of real spectra of `N^{−m/2} G_1⋯G_m`.
//!
//! Every factor of every trial is drawn from its own ChaCha20 substream: the
//! generator is keyed by the run seed, the ChaCha stream id is the trial index
//! and the word position selects `(attempt, factor)`. Entries are
//! `rand_distr::StandardNormal` variates (ziggurat) filled in column-major
//! order. Results are therefore a pure function of `(seed, trial)` and do not
//! depend on how trials are spread over workers.

use crate::error::{CliError, Result};
use crate::linalg::{self, EigenWorkspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::sync::Arc;

/// Words reserved per `(attempt, factor)` substream.
const SUBSTREAM_SHIFT: u32 = 40;
/// `(attempt, factor)` pairs addressable within ChaCha's 68-bit word counter.
const MAX_SUBSTREAMS: u64 = 1 << (68 - SUBSTREAM_SHIFT);
/// Resampling attempts before a trial is declared lost.
pub const MAX_ATTEMPTS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub m: u32,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl EnsembleSpec {
    /// Odd `N` is accepted for exploration; the theory covers even `N`.
    pub fn new(n: usize, m: u32, trials: u64, seed: u64, workers: usize) -> Result<Self> {
        if n == 0 || m == 0 || trials == 0 || workers == 0 {
            return Err(CliError::Precondition(format!(
                "ensemble needs N, m, trials, workers ≥ 1 (got N={n}, m={m}, trials={trials}, workers={workers})"
            )));
        }
        if MAX_ATTEMPTS as u64 * m as u64 > MAX_SUBSTREAMS {
            return Err(CliError::Precondition(format!("m = {m} exhausts the substream space")));
        }
        Ok(EnsembleSpec { n, m, trials, seed, workers })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    /// Ascending.
    pub real_eigs: Vec<f64>,
    pub n_real: usize,
    pub trial_index: u64,
    /// Eigensolver failures absorbed by resampling before this sample.
    pub failed_attempts: u32,
}

fn substream(seed: u64, trial: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos((index as u128) << SUBSTREAM_SHIFT);
    rng
}

fn fill_factor(buf: &mut [f64], seed: u64, trial: u64, index: u64) {
    let mut rng = substream(seed, trial, index);
    for v in buf.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Per-worker scratch space.
#[derive(Debug, Default)]
pub struct Sampler {
    factor: Vec<f64>,
    product: Vec<f64>,
    tmp: Vec<f64>,
    eig: EigenWorkspace,
}

impl Sampler {
    pub fn sample(&mut self, spec: &EnsembleSpec, trial: u64) -> Result<SpectralSample> {
        if trial >= spec.trials {
            return Err(CliError::Precondition(format!("trial {trial} ≥ trials {}", spec.trials)));
        }
        let n = spec.n;
        let scale = 1.0 / (n as f64).sqrt();
        for attempt in 0..MAX_ATTEMPTS {
            let base = attempt as u64 * spec.m as u64;
            self.product.resize(n * n, 0.0);
            fill_factor(&mut self.product, spec.seed, trial, base);
            self.product.iter_mut().for_each(|v| *v *= scale);
            for factor in 1..spec.m as u64 {
                self.factor.resize(n * n, 0.0);
                self.tmp.resize(n * n, 0.0);
                fill_factor(&mut self.factor, spec.seed, trial, base + factor);
                linalg::gemm(n, scale, &self.product, &self.factor, &mut self.tmp);
                std::mem::swap(&mut self.product, &mut self.tmp);
            }
            if let Ok(real_eigs) = linalg::real_eigenvalues(n, &mut self.product, &mut self.eig) {
                return Ok(SpectralSample { n_real: real_eigs.len(), real_eigs, trial_index: trial, failed_attempts: attempt });
            }
        }
        Err(CliError::Core(ginreal::Error::NoConvergence { estimate: f64::NAN, error: f64::INFINITY }))
    }
}

/// One trial of the ensemble; deterministic in `(spec.seed, trial)`.
pub fn sample_spectrum(spec: &EnsembleSpec, trial: u64) -> Result<SpectralSample> {
    linalg::single_threaded_blas();
    Sampler::default().sample(spec, trial)
}

/// All trials of a run, in trial order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub spec: EnsembleSpec,
    pub samples: Vec<SpectralSample>,
}

impl Ensemble {
    pub fn failures(&self) -> u64 {
        self.samples.iter().map(|s| s.failed_attempts as u64).sum()
    }
}

/// Samples every trial, spreading them round-robin over `spec.workers` threads.
pub fn sample_ensemble(spec: &EnsembleSpec) -> Result<Ensemble> {
    linalg::single_threaded_blas();
    let workers = spec.workers.min(spec.trials as usize).max(1);
    let per_worker: Vec<Result<Vec<SpectralSample>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut sampler = Sampler::default();
                    (w as u64..spec.trials).step_by(workers).map(|t| sampler.sample(spec, t)).collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
    });
    let mut slots: Vec<Option<SpectralSample>> = vec![None; spec.trials as usize];
    for chunk in per_worker {
        for s in chunk? {
            let t = s.trial_index as usize;
            slots[t] = Some(s);
        }
    }
    let samples = slots.into_iter().map(|s| s.expect("every trial sampled")).collect();
    Ok(Ensemble { spec: *spec, samples })
}

/// `Σ_j f(λ_j)`; `None` when `f` is non-finite at an eigenvalue.
pub fn linear_statistic(sample: &SpectralSample, f: &dyn Fn(f64) -> f64) -> Option<f64> {
    let mut s = CompensatedSum::default();
    for &x in &sample.real_eigs {
        let v = f(x);
        if !v.is_finite() {
            return None;
        }
        s.add(v);
    }
    Some(s.value())
}

/// `Σ_j f(N^τ (E − λ_j))`.
pub fn mesoscopic_statistic(sample: &SpectralSample, n: usize, f: &dyn Fn(f64) -> f64, e: f64, tau: f64) -> Result<Option<f64>> {
    if !(tau >= 0.0) {
        return Err(CliError::Precondition(format!("mesoscopic exponent τ = {tau} must be ≥ 0")));
    }
    let zoom = (n as f64).powf(tau);
    Ok(linear_statistic(sample, &|x| f(zoom * (e - x))))
}

/// `(λ_max, smallest strictly positive λ)`.
pub fn extremes(sample: &SpectralSample) -> (Option<f64>, Option<f64>) {
    let max = sample.real_eigs.last().copied();
    let min_pos = sample.real_eigs.iter().copied().find(|&x| x > 0.0);
    (max, min_pos)
}

/// Largest gap between the empirical CDF of `sorted` and `cdf`, checking both
/// one-sided gaps at every sample point. The probes of `cdf` must be
/// nondecreasing up to `1e−9`.
pub fn ks_distance(sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(CliError::Input("ks_distance needs at least one sample".into()));
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(CliError::Input("ks_distance samples must be sorted and finite".into()));
    }
    let n = sorted.len() as f64;
    let mut last = f64::NEG_INFINITY;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        if !f.is_finite() || f < last - 1e-9 {
            return Err(CliError::Input(format!("cdf is not monotone at {x}: {f} after {last}")));
        }
        last = last.max(f);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Common spacing `h` of the distinct values in `sorted` when they all lie on
/// one lattice `x₀ + hℤ` and there are at most `sorted.len()/10` of them.
pub fn lattice_spacing(sorted: &[f64]) -> Option<f64> {
    let mut distinct: Vec<f64> = sorted.to_vec();
    distinct.dedup();
    if distinct.len() < 2 || distinct.len() > sorted.len() / 10 {
        return None;
    }
    let h = distinct.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let scale = distinct[0].abs().max(distinct[distinct.len() - 1].abs()).max(h);
    let on_lattice = distinct.iter().all(|&v| {
        let k = (v - distinct[0]) / h;
        (k - k.round()).abs() * h <= 1e-9 * scale
    });
    on_lattice.then_some(h)
}

/// Kolmogorov distance for lattice-valued samples (spacing `h`) against a
/// continuous `cdf`, with continuity correction: at every lattice value `v`
/// the empirical `P(X ≤ v)` is compared with `cdf(v + h/2)` and `P(X < v)`
/// with `cdf(v − h/2)`.
pub fn lattice_ks_distance(sorted: &[f64], h: f64, cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(CliError::Input(format!("lattice spacing {h} must be positive")));
    }
    if sorted.is_empty() || sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(CliError::Input("lattice_ks_distance needs sorted finite samples".into()));
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let j = sorted.partition_point(|&u| u <= v);
        let (lo, hi) = (cdf(v - 0.5 * h), cdf(v + 0.5 * h));
        if !(lo.is_finite() && hi.is_finite()) || hi < lo - 1e-9 {
            return Err(CliError::Input(format!("cdf is not monotone near {v}")));
        }
        d = d.max((i as f64 / n - lo).abs()).max((j as f64 / n - hi).abs());
        i = j;
    }
    Ok(d)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Sample moments and k-statistics of i.i.d. trial values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance (`k₂`).
    pub variance: f64,
    /// k-statistics `k₁..k₄` (unbiased cumulant estimators); `k₃`/`k₄` need 3/4 samples.
    pub cumulants: [f64; 4],
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_skewness: f64,
    pub se_excess_kurtosis: f64,
}

impl SampleMoments {
    /// Values are reduced in the given order with compensated sums.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let count = values.len();
        if count == 0 {
            return None;
        }
        let n = count as f64;
        let mut s = CompensatedSum::default();
        values.iter().for_each(|&v| s.add(v));
        let mean = s.value() / n;
        let (mut s2, mut s3, mut s4) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
        for &v in values {
            let d = v - mean;
            s2.add(d * d);
            s3.add(d * d * d);
            s4.add(d * d * d * d);
        }
        let (m2, m3, m4) = (s2.value() / n, s3.value() / n, s4.value() / n);
        let variance = if count > 1 { m2 * n / (n - 1.0) } else { 0.0 };
        let k3 = if count > 2 { n * n * m3 / ((n - 1.0) * (n - 2.0)) } else { f64::NAN };
        let k4 = if count > 3 {
            n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0))
        } else {
            f64::NAN
        };
        let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (f64::NAN, f64::NAN) };
        let se_skewness = if count > 2 { (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt() } else { f64::NAN };
        let se_excess_kurtosis =
            if count > 3 { 2.0 * se_skewness * ((n * n - 1.0) / ((n - 3.0) * (n + 5.0))).sqrt() } else { f64::NAN };
        let se_variance = if count > 1 { ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)).max(0.0) / n).sqrt() } else { f64::NAN };
        Some(SampleMoments {
            count,
            mean,
            variance,
            cumulants: [mean, variance, k3, k4],
            skewness,
            excess_kurtosis,
            se_mean: (variance / n).sqrt(),
            se_variance,
            se_skewness,
            se_excess_kurtosis,
        })
    }
}

pub type TestFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named per-trial statistic.
#[derive(Clone)]
pub enum Observable {
    Count,
    Linear { name: String, f: TestFn },
    Mesoscopic { name: String, f: TestFn, e: f64, tau: f64 },
    LambdaMax,
    LambdaMinPositive,
    /// The inner observable evaluated on the eigenvalues inside `intervals` only.
    Truncated { intervals: Vec<(f64, f64)>, inner: Box<Observable> },
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Count => "count".into(),
            Observable::Linear { name, .. } => format!("linear({name})"),
            Observable::Mesoscopic { name, e, tau, .. } => format!("meso({name},E={e},tau={tau})"),
            Observable::LambdaMax => "lambda_max".into(),
            Observable::LambdaMinPositive => "lambda_min_positive".into(),
            Observable::Truncated { inner, .. } => format!("truncated:{}", inner.name()),
        }
    }

    /// `Ok(None)` means the trial is excluded (empty extreme or non-finite value).
    pub fn eval(&self, sample: &SpectralSample, n: usize) -> Result<Option<f64>> {
        Ok(match self {
            Observable::Count => Some(sample.n_real as f64),
            Observable::Linear { f, .. } => linear_statistic(sample, f.as_ref()),
            Observable::Mesoscopic { f, e, tau, .. } => mesoscopic_statistic(sample, n, f.as_ref(), *e, *tau)?,
            Observable::LambdaMax => extremes(sample).0,
            Observable::LambdaMinPositive => extremes(sample).1,
            Observable::Truncated { intervals, inner } => {
                let real_eigs: Vec<f64> =
                    sample.real_eigs.iter().copied().filter(|&x| intervals.iter().any(|&(a, b)| a <= x && x <= b)).collect();
                let restricted = SpectralSample {
                    n_real: real_eigs.len(),
                    real_eigs,
                    trial_index: sample.trial_index,
                    failed_attempts: sample.failed_attempts,
                };
                return inner.eval(&restricted, n);
            }
        })
    }

    /// Per-trial values in trial order, with the number of excluded trials.
    pub fn values(&self, ensemble: &Ensemble) -> Result<(Vec<f64>, usize)> {
        let mut out = Vec::with_capacity(ensemble.samples.len());
        let mut excluded = 0;
        for s in &ensemble.samples {
            match self.eval(s, ensemble.spec.n)? {
                Some(v) => out.push(v),
                None => excluded += 1,
            }
        }
        Ok((out, excluded))
    }
}

#[derive(Debug, Clone)]
pub struct ObservableSummary {
    pub name: String,
    /// Trials without a value (empty extreme set or non-finite statistic).
    pub excluded: usize,
    pub moments: Option<SampleMoments>,
}

/// Empirical CDF tabulated at the `k/(points−1)` sample quantiles.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    pub name: String,
    pub samples: usize,
    pub excluded: usize,
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
}

pub const ECDF_POINTS: usize = 101;

impl EmpiricalCdf {
    pub fn new(name: &str, mut values: Vec<f64>, excluded: usize) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let (mut x, mut cdf) = (Vec::new(), Vec::new());
        if n > 0 {
            for k in 0..ECDF_POINTS {
                let idx = ((k * (n - 1)) as f64 / (ECDF_POINTS - 1) as f64).round() as usize;
                let v = values[idx];
                if x.last() == Some(&v) {
                    continue;
                }
                // fraction of samples ≤ v
                let below = values.partition_point(|&u| u <= v);
                x.push(v);
                cdf.push(below as f64 / n as f64);
            }
        }
        EmpiricalCdf { name: name.into(), samples: n, excluded, x, cdf }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub spec: EnsembleSpec,
    pub failures: u64,
    pub observables: Vec<ObservableSummary>,
    pub ecdf: Vec<EmpiricalCdf>,
}

/// Summary of an already-sampled ensemble; independent of the worker count.
pub fn summarize(ensemble: &Ensemble, observables: &[Observable]) -> Result<RunSummary> {
    let mut summaries = Vec::with_capacity(observables.len());
    for o in observables {
        let (values, excluded) = o.values(ensemble)?;
        summaries.push(ObservableSummary { name: o.name(), excluded, moments: SampleMoments::from_values(&values) });
    }
    let mut ecdf = Vec::new();
    for o in [Observable::LambdaMax, Observable::LambdaMinPositive, Observable::Count] {
        let (values, excluded) = o.values(ensemble)?;
        ecdf.push(EmpiricalCdf::new(&o.name(), values, excluded));
    }
    Ok(RunSummary { spec: ensemble.spec, failures: ensemble.failures(), observables: summaries, ecdf })
}

pub fn run_ensemble(spec: &EnsembleSpec, observables: &[Observable]) -> Result<RunSummary> {
    summarize(&sample_ensemble(spec)?, observables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(eigs: &[f64]) -> SpectralSample {
        SpectralSample { real_eigs: eigs.to_vec(), n_real: eigs.len(), trial_index: 0, failed_attempts: 0 }
    }

    #[test]
    fn linear_statistic_examples() {
        assert_eq!(linear_statistic(&sample(&[]), &|x| x), Some(0.0));
        assert!((linear_statistic(&sample(&[-0.2, 0.5]), &|x| x).unwrap() - 0.3).abs() < 1e-15);
        let ind = |x: f64| if x > 0.0 && x < 1.0 { 1.0 } else { 0.0 };
        assert_eq!(linear_statistic(&sample(&[-0.5, 0.2, 0.7, 1.3]), &ind), Some(2.0));
        assert_eq!(linear_statistic(&sample(&[0.0]), &|x| 1.0 / x), None);
    }

    #[test]
    fn mesoscopic_statistic_examples() {
        let s = sample(&[-0.3, 0.1, 0.55]);
        let f = |x: f64| x * x;
        let flipped = linear_statistic(&s, &|x| f(-x)).unwrap();
        assert_eq!(mesoscopic_statistic(&s, 100, &f, 0.0, 0.0).unwrap().unwrap(), flipped);
        let window = |x: f64| if x.abs() <= 1.0 { 1.0 } else { 0.0 };
        let s = sample(&[0.35, 0.41, 0.45, 0.59, 0.62]);
        assert_eq!(mesoscopic_statistic(&s, 10_000, &window, 0.5, 0.25).unwrap(), Some(3.0));
        assert!(mesoscopic_statistic(&s, 100, &window, 0.5, -0.1).is_err());
    }

    #[test]
    fn extremes_examples() {
        assert_eq!(extremes(&sample(&[-0.5, 0.1, 0.9])), (Some(0.9), Some(0.1)));
        assert_eq!(extremes(&sample(&[-0.5])), (Some(-0.5), None));
        assert_eq!(extremes(&sample(&[])), (None, None));
    }

    #[test]
    fn ks_examples() {
        let normal = |x: f64| 0.5 * ginreal::special_fn::erfc(-x / std::f64::consts::SQRT_2);
        assert!((ks_distance(&[0.0], &normal).unwrap() - 0.5).abs() < 1e-15);
        let d = ks_distance(&[1.0, 2.0, 3.0], &|_| 1.0).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!(ks_distance(&[0.0, 1.0], &|x| -x).is_err());
        assert!(ks_distance(&[], &normal).is_err());
        assert!(ks_distance(&[1.0, 0.0], &normal).is_err());
    }

    #[test]
    fn lattice_detection_and_distance() {
        let mut v: Vec<f64> = (0..200).map(|k| (2 * (k % 5)) as f64).collect();
        v.sort_by(f64::total_cmp);
        assert_eq!(lattice_spacing(&v), Some(2.0));
        assert_eq!(lattice_spacing(&[0.1, 0.25, 0.3]), None);
        // uniform on {0,2,4,6,8} against the uniform law on [−1, 9]
        let d = lattice_ks_distance(&v, 2.0, &|x: f64| ((x + 1.0) / 10.0).clamp(0.0, 1.0)).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn moments_of_a_small_set() {
        let m = SampleMoments::from_values(&[1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        assert_eq!(m.mean, 4.0);
        assert!((m.variance - 12.5).abs() < 1e-12);
        // m2 = 10, m3 = 36: g1 = 36/10^1.5
        assert!((m.skewness - 36.0 / 10f64.powf(1.5)).abs() < 1e-12);
        // k3 = n² m3 / ((n−1)(n−2)) = 25·36/12
        assert!((m.cumulants[2] - 75.0).abs() < 1e-12);
        assert!(SampleMoments::from_values(&[]).is_none());
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = CompensatedSum::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn ecdf_grid_is_monotone() {
        let values: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1000) as f64).collect();
        let e = EmpiricalCdf::new("x", values, 3);
        assert_eq!(e.x.len(), ECDF_POINTS);
        assert!(e.x.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*e.cdf.last().unwrap(), 1.0);
        assert_eq!(e.excluded, 3);
    }
}
