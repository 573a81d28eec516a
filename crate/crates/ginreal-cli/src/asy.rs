//! Error tables of the leading-order asymptotics against their exact
//! counterparts.

use crate::error::Result;
use ginreal::kernel::{d_kernel, global_approx, i_kernel, make_context, s_kernel, DEFAULT_REGION_EPS};
use ginreal::special_fn::{
    f_asym_bulk, f_edge, f_inf, f_series, weight, weight_asym, SignedLog, WeightConfig, VALIDITY_M,
};

/// Multiple of the nominal `O(·)` error scale accepted for the weight and
/// `f_∞` asymptotics.
pub const SCALE_MULTIPLE: f64 = 2.0;
/// Relative tolerance for the edge formula and the global approximation.
pub const WINDOW_TOL: f64 = 0.05;
/// Half-width of the edge window in units of `1/√N`.
pub const EDGE_WINDOW: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AsyRow {
    pub check: &'static str,
    pub n: usize,
    pub m: u32,
    pub x: f64,
    pub y: f64,
    pub approx: f64,
    pub exact: f64,
    pub rel_err: f64,
    pub bound: f64,
}

impl AsyRow {
    pub fn pass(&self) -> bool {
        self.rel_err <= self.bound
    }
}

fn log_rel_err(approx: SignedLog, exact: SignedLog) -> f64 {
    if approx.sign != exact.sign {
        return f64::INFINITY;
    }
    (approx.log_mag - exact.log_mag).exp_m1().abs()
}

fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs()
}

/// `w(N^{m/2}x)` against its leading term, bound `SCALE_MULTIPLE/(N x^{2/m})`,
/// at the sample points inside the validity window `x ≥ M N^{−m/2}`.
pub fn weight_rows(n: usize, m: u32) -> Result<Vec<AsyRow>> {
    let cfg = WeightConfig::new(m);
    let threshold = VALIDITY_M * (n as f64).powf(-0.5 * m as f64);
    let mut rows = Vec::new();
    for &x in [0.25, 0.5, 0.75, 1.0, 1.5].iter().filter(|&&x| x >= threshold) {
        let approx = weight_asym(x, n, &cfg)?;
        let exact = weight((n as f64).powf(0.5 * m as f64) * x, &cfg)?;
        rows.push(AsyRow {
            check: "weight",
            n,
            m,
            x,
            y: f64::NAN,
            approx: approx.log_mag,
            exact: exact.log_mag,
            rel_err: log_rel_err(approx, exact),
            bound: SCALE_MULTIPLE / (n as f64 * x.powf(2.0 / m as f64)),
        });
    }
    Ok(rows)
}

/// `f_∞(N^m x)` against its leading term, bound `SCALE_MULTIPLE/(x^{1/m} N)`,
/// inside the validity window `x > M N^{−m}`.
pub fn series_rows(n: usize, m: u32) -> Result<Vec<AsyRow>> {
    let threshold = VALIDITY_M * (n as f64).powf(-(m as f64));
    let mut rows = Vec::new();
    for &x in [0.1, 0.25, 0.5, 0.9].iter().filter(|&&x| x > threshold) {
        let approx = f_asym_bulk(x, n, m)?;
        let a = SignedLog::from_real(x).mul_exp(m as f64 * (n as f64).ln());
        let exact = f_inf(a, m, 1e-15)?;
        rows.push(AsyRow {
            check: "series_bulk",
            n,
            m,
            x,
            y: f64::NAN,
            approx: approx.log_mag,
            exact: exact.log_mag,
            rel_err: log_rel_err(approx, exact),
            bound: SCALE_MULTIPLE / (x.powf(1.0 / m as f64) * n as f64),
        });
    }
    Ok(rows)
}

/// `f_{N−2}(N^m x)` against the uniform erfc formula on
/// `x ∈ (1 − 3/√N, 1 + 3/√N)`.
pub fn edge_rows(n: usize, m: u32) -> Result<Vec<AsyRow>> {
    let h = EDGE_WINDOW / (n as f64).sqrt();
    let mut rows = Vec::new();
    for k in -5..=5 {
        let x = 1.0 + h * k as f64 / 5.5;
        let approx = f_edge(x, n, m, 10.0)?;
        let a = SignedLog::from_real(x).mul_exp(m as f64 * (n as f64).ln());
        let exact = f_series(a, n, m)?;
        rows.push(AsyRow {
            check: "series_edge",
            n,
            m,
            x,
            y: f64::NAN,
            approx: approx.log_mag,
            exact: exact.log_mag,
            rel_err: log_rel_err(approx, exact),
            bound: WINDOW_TOL,
        });
    }
    Ok(rows)
}

/// Global bulk approximation of the three kernels at root coordinates
/// `(x, x + δ/√(Nm))`. `D` and `I` are compared off the diagonal only.
pub fn global_rows(n: usize, m: u32) -> Result<Vec<AsyRow>> {
    let ctx = make_context(n, m)?;
    let mf = m as f64;
    let mut rows = Vec::new();
    for &x in &[0.3, 0.5, 0.7] {
        for &delta in &[0.0, 0.5, 1.0] {
            let y = x + delta / (n as f64 * mf).sqrt();
            let g = global_approx(x, y, &ctx, DEFAULT_REGION_EPS)?;
            let (xm, ym) = (x.powi(m as i32), y.powi(m as i32));
            let s = x.powi(m as i32 - 1) * s_kernel(xm, ym, &ctx)?;
            rows.push(AsyRow { check: "global_s", n, m, x, y, approx: g.s, exact: s, rel_err: rel_err(g.s, s), bound: WINDOW_TOL });
            if delta > 0.0 {
                let d = (x * y).powi(m as i32 - 1) * d_kernel(xm, ym, &ctx);
                rows.push(AsyRow { check: "global_d", n, m, x, y, approx: g.d, exact: d, rel_err: rel_err(g.d, d), bound: WINDOW_TOL });
                let i = i_kernel(xm, ym, &ctx)?;
                rows.push(AsyRow { check: "global_i", n, m, x, y, approx: g.i, exact: i, rel_err: rel_err(g.i, i), bound: WINDOW_TOL });
            }
        }
    }
    Ok(rows)
}

/// The full suite: weight and bulk-series rows at `sizes`, edge rows at
/// `edge_sizes` (the edge formula carries an `O(N^{−1/2})` relative error, so
/// 5% across the window needs `N` of order `10^4`), and the global
/// approximation at the largest of `sizes`.
pub fn asymptotics_table(sizes: &[usize], edge_sizes: &[usize], factors: &[u32]) -> Result<Vec<AsyRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        for &m in factors {
            rows.extend(weight_rows(n, m)?);
            rows.extend(series_rows(n, m)?);
        }
    }
    for &n in edge_sizes {
        for &m in factors {
            rows.extend(edge_rows(n, m)?);
        }
    }
    if let Some(&n) = sizes.iter().max() {
        for &m in factors {
            rows.extend(global_rows(n, m)?);
        }
    }
    Ok(rows)
}
