//! Normal-approximation report for linear statistics of the real spectrum.

use crate::error::Result;
use crate::montecarlo::{self, Ensemble, EnsembleSpec, SampleMoments, TestFn};
use ginreal::special_fn::erfc;
use ginreal::statistics::{variance_prediction, VarianceRegime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltThresholds {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks: f64,
    /// Allowed `|sample/predicted − 1|` of the normalized variance.
    pub variance_ratio: f64,
}

impl Default for CltThresholds {
    fn default() -> Self {
        CltThresholds { skewness: 0.1, excess_kurtosis: 0.2, ks: 0.02, variance_ratio: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub regime: String,
    pub n: usize,
    pub m: u32,
    pub trials: usize,
    pub excluded: usize,
    pub predicted_sigma2: f64,
    pub normalization_exponent: f64,
    pub moments: Option<SampleMoments>,
    /// `sample variance / N^{2·exponent} / σ²`.
    pub variance_ratio: f64,
    /// Kolmogorov distance of the statistic, centred by its sample mean and
    /// scaled by the predicted `N^{exponent} σ`, to the standard normal.
    pub ks_to_normal: f64,
    /// Set when the statistic is lattice valued (the count); the distance
    /// then uses the continuity correction.
    pub lattice_spacing: Option<f64>,
    /// The statistic never varied (or σ² = 0): no normality test is made.
    pub zero_variance: bool,
    pub thresholds: CltThresholds,
    pub skewness_ok: bool,
    pub kurtosis_ok: bool,
    pub ks_ok: bool,
    pub variance_ok: bool,
    pub pass: bool,
}

fn regime_name(r: VarianceRegime) -> String {
    match r {
        VarianceRegime::Global => "global".into(),
        VarianceRegime::MesoBulk { e, tau } => format!("meso_bulk(E={e},tau={tau})"),
        VarianceRegime::MesoOrigin { tau } => format!("meso_origin(tau={tau})"),
    }
}

/// Per-trial values of the statistic whose limit `regime` describes.
pub fn regime_values(ensemble: &Ensemble, f: &TestFn, regime: VarianceRegime) -> Result<(Vec<f64>, usize)> {
    let n = ensemble.spec.n;
    let mut out = Vec::with_capacity(ensemble.samples.len());
    let mut excluded = 0;
    for s in &ensemble.samples {
        let v = match regime {
            VarianceRegime::Global => montecarlo::linear_statistic(s, f.as_ref()),
            VarianceRegime::MesoBulk { e, tau } => montecarlo::mesoscopic_statistic(s, n, f.as_ref(), e, tau)?,
            VarianceRegime::MesoOrigin { tau } => montecarlo::mesoscopic_statistic(s, n, &|x| f(-x), 0.0, tau)?,
        };
        match v {
            Some(v) => out.push(v),
            None => excluded += 1,
        }
    }
    Ok((out, excluded))
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Report on an already-sampled ensemble.
pub fn clt_report_on(
    ensemble: &Ensemble,
    f: &TestFn,
    regime: VarianceRegime,
    quad_order: usize,
    thresholds: CltThresholds,
) -> Result<CltReport> {
    let EnsembleSpec { n, m, .. } = ensemble.spec;
    let prediction = variance_prediction(regime, |x| f(x), m, quad_order)?;
    let (values, excluded) = regime_values(ensemble, f, regime)?;
    let moments = SampleMoments::from_values(&values);
    let scale2 = (n as f64).powf(2.0 * prediction.normalization_exponent) * prediction.sigma2;
    let zero_variance = moments.is_none_or(|mo| mo.variance == 0.0) || prediction.sigma2 == 0.0;
    let mut report = CltReport {
        regime: regime_name(regime),
        n,
        m,
        trials: values.len(),
        excluded,
        predicted_sigma2: prediction.sigma2,
        normalization_exponent: prediction.normalization_exponent,
        moments,
        variance_ratio: f64::NAN,
        ks_to_normal: f64::NAN,
        lattice_spacing: None,
        zero_variance,
        thresholds,
        skewness_ok: false,
        kurtosis_ok: false,
        ks_ok: false,
        variance_ok: false,
        pass: false,
    };
    let Some(mo) = moments.filter(|_| !zero_variance) else {
        return Ok(report);
    };
    report.variance_ratio = mo.variance / scale2;
    let sd = scale2.sqrt();
    let mut sorted = values;
    sorted.sort_by(f64::total_cmp);
    report.lattice_spacing = montecarlo::lattice_spacing(&sorted);
    let z: Vec<f64> = sorted.iter().map(|v| (v - mo.mean) / sd).collect();
    report.ks_to_normal = match report.lattice_spacing {
        Some(h) => montecarlo::lattice_ks_distance(&z, h / sd, &std_normal_cdf)?,
        None => montecarlo::ks_distance(&z, &std_normal_cdf)?,
    };
    report.skewness_ok = mo.skewness.abs() <= thresholds.skewness;
    report.kurtosis_ok = mo.excess_kurtosis.abs() <= thresholds.excess_kurtosis;
    report.ks_ok = report.ks_to_normal <= thresholds.ks;
    report.variance_ok = (report.variance_ratio - 1.0).abs() <= thresholds.variance_ratio;
    report.pass = report.skewness_ok && report.kurtosis_ok && report.ks_ok && report.variance_ok;
    Ok(report)
}

/// Samples `spec` and reports on the statistic `f` in `regime`.
pub fn clt_report(spec: &EnsembleSpec, f: &TestFn, regime: VarianceRegime, quad_order: usize) -> Result<CltReport> {
    let ensemble = montecarlo::sample_ensemble(spec)?;
    clt_report_on(&ensemble, f, regime, quad_order, CltThresholds::default())
}
