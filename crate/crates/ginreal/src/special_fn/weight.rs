//! The product weight `w(x) = ∫ exp(−½Σλ_j²) δ(x − λ_1⋯λ_m) dλ`.
//!
//! Eliminating the delta against the last factor and writing `λ = e^t`
//! gives the recursion
//!
//! ```text
//! w_m(x) = 2 ∫ exp(−e^{2t}/2) w_{m−1}(|x| e^{−t}) dt,    w_1(x) = e^{−x²/2},
//! ```
//!
//! whose integrand is log-concave in `t`. Each level locates the mode,
//! brackets the region within `domain_cut²/2` e-folds of it and applies
//! Gauss–Legendre in log-domain. Hot paths use [`LogWeight`], which caches
//! every level as a cubic spline of the smooth remainder
//! `ln w(e^u) + (m/2) e^{2u/m}`.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;


use super::SignedLog;
use crate::error::{Error, Result};
use crate::quad::{log_peak_integrate, GaussLegendre};
use crate::real::{self, ln_gamma_half};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightConfig {
    /// Number of Ginibre factors.
    pub m: u32,
    /// Gauss–Legendre nodes per one-dimensional integral.
    pub quad_order: usize,
    /// Half-width of the retained region in standard deviations of a factor.
    pub domain_cut: f64,
}

impl WeightConfig {
    pub fn new(m: u32) -> Self {
        WeightConfig { m, quad_order: 200, domain_cut: 12.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::domain("the number of factors m must be positive"));
        }
        if self.quad_order < 16 {
            return Err(Error::input("quad_order must be at least 16"));
        }
        if !(self.domain_cut >= 8.0) {
            return Err(Error::input("domain_cut must be at least 8"));
        }
        Ok(())
    }

    /// Log-magnitude drop at which the integration region is cut.
    pub fn efolds(&self) -> f64 {
        0.5 * self.domain_cut * self.domain_cut
    }
}

/// `ln w_1` in terms of `ln|x|`.
fn ln_w1<R: real::Real>(lnx: R) -> R {
    -(lnx + lnx).exp() * R::from_f64(0.5)
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// One level of the recursion: `ln w_m(e^{lnx})` given `ln w_{m−1}`.
pub fn log_weight_step<R: real::Real>(lnx: R, inner: &dyn Fn(R) -> R, gl: &GaussLegendre<R>, efolds: f64) -> R {
    let half = R::from_f64(0.5);
    let h = |t: R| -> R { -(t + t).exp() * half + inner(lnx - t) };

    let l = lnx.to_f64().abs();
    let (mut a, mut b) = (-l - 25.0, l + 25.0);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut hc = h(R::from_f64(c));
    let mut hd = h(R::from_f64(d));
    for _ in 0..100 {
        if hc > hd {
            b = d;
            d = c;
            hd = hc;
            c = b - GOLDEN * (b - a);
            hc = h(R::from_f64(c));
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + GOLDEN * (b - a);
            hd = h(R::from_f64(d));
        }
        if b - a < 1e-13 * (1.0 + l) {
            break;
        }
    }
    let mode = 0.5 * (a + b);
    let hmax = h(R::from_f64(mode));
    let thr = hmax.to_f64() - efolds;

    let cut = |dir: f64| -> f64 {
        let mut step = 1e-3;
        while h(R::from_f64(mode + dir * step)).to_f64() >= thr && step < 1e3 {
            step *= 2.0;
        }
        let (mut inside, mut outside) = (step * 0.5, step);
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if h(R::from_f64(mode + dir * mid)).to_f64() >= thr {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        mode + dir * outside
    };
    let (lo, hi) = (cut(-1.0), cut(1.0));

    let mut acc = R::zero();
    for (t, w) in gl.mapped(R::from_f64(lo), R::from_f64(hi)) {
        acc += w * (h(t) - hmax).exp();
    }
    R::from_f64(2.0).ln() + hmax + acc.ln()
}

/// `ln w_m(e^{lnx})` by the full recursion, in any working precision.
pub fn log_weight_direct<R: real::Real>(m: u32, lnx: R, gl: &GaussLegendre<R>, efolds: f64) -> R {
    match m {
        0 => panic!("m must be positive"),
        1 => ln_w1(lnx),
        _ => log_weight_step(lnx, &|s| log_weight_direct(m - 1, s, gl, efolds), gl, efolds),
    }
}

/// `w(x)` by direct nested quadrature; closed form for `m = 1`.
pub fn weight(x: f64, cfg: &WeightConfig) -> Result<SignedLog> {
    cfg.validate()?;
    if !x.is_finite() {
        return Err(Error::domain("weight requires a finite argument"));
    }
    if cfg.m == 1 {
        return Ok(SignedLog::from_log(-0.5 * x * x));
    }
    if x == 0.0 {
        return Ok(SignedLog::from_log(f64::INFINITY));
    }
    let gl = GaussLegendre::<f64>::new(cfg.quad_order);
    Ok(SignedLog::from_log(log_weight_direct(cfg.m, x.abs().ln(), &gl, cfg.efolds())))
}

const TABLE_LO: f64 = -45.0;
const TABLE_HI: f64 = 15.0;
const TABLE_STEP: f64 = 0.01;
const VALID_LO: f64 = -40.0;
const VALID_HI: f64 = 12.0;

/// Natural cubic spline of the smooth remainder of one level.
#[derive(Clone, Debug)]
struct WeightTable {
    level: u32,
    r: Vec<f64>,
    d2: Vec<f64>,
}

impl WeightTable {
    fn remainder_shift(level: u32, u: f64) -> f64 {
        0.5 * level as f64 * (2.0 * u / level as f64).exp()
    }

    fn build(level: u32, lower: &[WeightTable], gl: &GaussLegendre<f64>, efolds: f64) -> Self {
        let n = ((TABLE_HI - TABLE_LO) / TABLE_STEP).round() as usize + 1;
        let mut r = Vec::with_capacity(n);
        for i in 0..n {
            let u = TABLE_LO + TABLE_STEP * i as f64;
            let lw = log_weight_step(u, &|s| eval_level(lower, gl, efolds, level - 1, s), gl, efolds);
            r.push(lw + Self::remainder_shift(level, u));
        }
        // natural spline: tridiagonal system for the second derivatives
        let mut d2 = alloc::vec![0.0; n];
        let mut c = alloc::vec![0.0; n];
        let h = TABLE_STEP;
        for i in 1..n - 1 {
            let rhs = 6.0 * (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (h * h);
            let denom = 4.0 - c[i - 1];
            c[i] = 1.0 / denom;
            d2[i] = (rhs - d2[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            d2[i] -= c[i] * d2[i + 1];
        }
        WeightTable { level, r, d2 }
    }

    fn eval(&self, u: f64) -> f64 {
        let pos = (u - TABLE_LO) / TABLE_STEP;
        let i = (pos.floor() as usize).min(self.r.len() - 2);
        let t = pos - i as f64;
        let s = 1.0 - t;
        let h2 = TABLE_STEP * TABLE_STEP / 6.0;
        let rem = s * self.r[i]
            + t * self.r[i + 1]
            + h2 * ((s * s * s - s) * self.d2[i] + (t * t * t - t) * self.d2[i + 1]);
        rem - Self::remainder_shift(self.level, u)
    }
}

fn eval_level(tables: &[WeightTable], gl: &GaussLegendre<f64>, efolds: f64, level: u32, lnx: f64) -> f64 {
    if level == 1 {
        return ln_w1(lnx);
    }
    if lnx == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let idx = level as usize - 2;
    if idx < tables.len() && (VALID_LO..=VALID_HI).contains(&lnx) {
        return tables[idx].eval(lnx);
    }
    log_weight_step(lnx, &|s| eval_level(tables, gl, efolds, level - 1, s), gl, efolds)
}

/// Cached evaluator of `ln w` for a fixed `m`.
#[derive(Clone, Debug)]
pub struct LogWeight {
    cfg: WeightConfig,
    gl: GaussLegendre<f64>,
    tables: Vec<WeightTable>,
}

impl LogWeight {
    pub fn new(cfg: WeightConfig) -> Result<Self> {
        cfg.validate()?;
        let gl = GaussLegendre::new(cfg.quad_order);
        let mut tables = Vec::new();
        for level in 2..=cfg.m {
            let t = WeightTable::build(level, &tables, &gl, cfg.efolds());
            tables.push(t);
        }
        Ok(LogWeight { cfg, gl, tables })
    }

    pub fn config(&self) -> &WeightConfig {
        &self.cfg
    }

    pub fn m(&self) -> u32 {
        self.cfg.m
    }

    /// `ln w(e^{lnx})`.
    pub fn ln_w(&self, lnx: f64) -> f64 {
        eval_level(&self.tables, &self.gl, self.cfg.efolds(), self.cfg.m, lnx)
    }

    /// `ln w(x)` for real `x` (−∞ never occurs; `+∞` at `x = 0` for `m ≥ 2`).
    pub fn ln_w_at(&self, x: f64) -> f64 {
        if self.cfg.m == 1 {
            -0.5 * x * x
        } else {
            self.ln_w(x.abs().ln())
        }
    }

    pub fn eval(&self, x: f64) -> SignedLog {
        SignedLog::from_log(self.ln_w_at(x))
    }
}

/// `∫_0^∞ v^k w(N^{m/2} v) dv` by quadrature in `s = ln v`.
pub fn weight_moment(k: u32, n: f64, lw: &LogWeight) -> Result<SignedLog> {
    let m = lw.m() as f64;
    let shift = 0.5 * m * n.ln();
    let kp1 = k as f64 + 1.0;
    // the integrand peaks near v ~ (k/N)^{m/2}; scan generously around it
    let centre = 0.5 * m * (kp1.max(1.0) / n).ln();
    log_peak_integrate(
        |s| SignedLog::from_log(kp1 * s + lw.ln_w(shift + s)),
        centre - 60.0,
        centre + 20.0,
        4000,
        45.0,
        1e-13,
        f64::NEG_INFINITY,
    )
}

/// Closed form `½ (2/N)^{m(k+1)/2} Γ((k+1)/2)^m`.
pub fn weight_moment_exact(k: u32, n: f64, m: u32) -> SignedLog {
    let mf = m as f64;
    let kp1 = k as f64 + 1.0;
    let l = -core::f64::consts::LN_2 + 0.5 * mf * kp1 * (2.0 / n).ln() + mf * ln_gamma_half::<f64>(k + 1);
    SignedLog::from_log(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_for_single_factor() {
        let w = weight(1.0, &WeightConfig::new(1)).unwrap();
        assert!((w.to_real() - (-0.5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn zero_factors_rejected() {
        assert!(weight(1.0, &WeightConfig::new(0)).is_err());
        let mut cfg = WeightConfig::new(2);
        cfg.quad_order = 4;
        assert!(weight(1.0, &cfg).is_err());
    }

    #[test]
    fn table_tracks_direct_evaluation() {
        for m in 2..=3 {
            let cfg = WeightConfig::new(m);
            let lw = LogWeight::new(cfg).unwrap();
            for &x in &[1e-12, 3e-5, 0.01, 0.5, 1.0, 2.7, 40.0, 1500.0, 9e4] {
                let direct = weight(x, &cfg).unwrap().log_mag;
                let tab = lw.ln_w_at(x);
                assert!((direct - tab).abs() < 1e-9 * direct.abs().max(1.0), "m={m} x={x}: {direct} vs {tab}");
            }
        }
    }

    #[test]
    fn out_of_table_range_falls_back() {
        let lw = LogWeight::new(WeightConfig::new(2)).unwrap();
        let x = (-41.0f64).exp();
        let direct = weight(x, &WeightConfig::new(2)).unwrap().log_mag;
        assert!((lw.ln_w_at(x) - direct).abs() < 1e-12);
    }
}
