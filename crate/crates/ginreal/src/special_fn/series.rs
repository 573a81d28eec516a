//! `f_{N−2}(a) = Σ_{j=0}^{N−2} a^j/(j!)^m` and its entire limit `f_∞`.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;


use super::signed_log::LogSum;
use super::SignedLog;
use crate::error::{Error, Result};
use crate::real::{self, ln_factorials};

/// Terms more than this many e-folds below the largest are dropped.
const WINDOW: f64 = 40.0;

/// The truncated series with cached log-factorials.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    jmax: usize,
    m: u32,
    lnfact: Vec<f64>,
}

impl TruncatedSeries {
    /// Series truncated after the term `a^{jmax}`.
    pub fn new(jmax: usize, m: u32) -> Self {
        TruncatedSeries { jmax, m, lnfact: ln_factorials::<f64>(jmax + 1) }
    }

    /// The `f_{N−2}` of an `N × N` problem.
    pub fn for_size(n: usize, m: u32) -> Self {
        Self::new(n.saturating_sub(2), m)
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    #[inline]
    fn log_term(&self, j: usize, la: f64) -> f64 {
        j as f64 * la - self.m as f64 * self.lnfact[j]
    }

    /// Index range whose terms lie within the window of the largest one.
    fn window(&self, la: f64) -> (usize, usize, f64) {
        let guess = (la / self.m as f64).exp();
        let mut j = if guess.is_finite() { (guess as usize).min(self.jmax) } else { self.jmax };
        // the log-terms are concave in j: walk to the top
        while j < self.jmax && self.log_term(j + 1, la) > self.log_term(j, la) {
            j += 1;
        }
        while j > 0 && self.log_term(j - 1, la) > self.log_term(j, la) {
            j -= 1;
        }
        let peak = self.log_term(j, la);
        let mut lo = j;
        while lo > 0 && self.log_term(lo - 1, la) > peak - WINDOW {
            lo -= 1;
        }
        let mut hi = j;
        while hi < self.jmax && self.log_term(hi + 1, la) > peak - WINDOW {
            hi += 1;
        }
        (lo, hi, peak)
    }

    pub fn eval(&self, a: SignedLog) -> SignedLog {
        if a.is_zero() {
            return SignedLog::ONE;
        }
        let la = a.log_mag;
        let (lo, hi, _) = self.window(la);
        if a.sign > 0 {
            let mut s = LogSum::default();
            for j in lo..=hi {
                s.push(self.log_term(j, la));
            }
            return SignedLog::from_log(s.log());
        }
        // past the largest term the tail beyond the truncation alternates with
        // decreasing terms, so f_{N−2}(−A) = f_∞(−A) − tail is the stable split
        let mf = self.m as f64;
        let interior = la < mf * ((self.jmax + 2) as f64).ln();
        if interior && self.m == 1 {
            return SignedLog::from_log(-la.exp()) - self.tail(la);
        }
        let direct = self.alternating(lo, hi, la);
        if !interior {
            return direct;
        }
        // |f_∞(−A)| ≲ e^{m A^{1/m} cos(π/m)}
        let log_bound = mf * (la / mf).exp() * (core::f64::consts::PI / mf).cos() + 2.0;
        let tail = self.tail(la);
        if tail.log_mag > log_bound + 36.0 || direct.is_zero() {
            -tail
        } else {
            direct
        }
    }

    /// The alternating sum over `lo..=hi`, flushed to zero when cancellation
    /// leaves less than ~8 significant digits.
    fn alternating(&self, lo: usize, hi: usize, la: f64) -> SignedLog {
        // group t_{2k} − t_{2k+1} = t_{2k}(1 − |a|/(2k+1)^m) before
        // accumulating the positive and negative groups separately
        let (mut pos, mut neg) = (LogSum::default(), LogSum::default());
        let mf = self.m as f64;
        let mut j = lo - lo % 2;
        while j <= hi {
            let t = self.log_term(j, la);
            if j + 1 > self.jmax {
                pos.push(t);
            } else {
                let d = la - mf * ((j + 1) as f64).ln();
                if d < 0.0 {
                    pos.push(t + (-d.exp_m1()).ln());
                } else if d > 0.0 {
                    neg.push(t + d.exp_m1().ln());
                }
            }
            j += 2;
        }
        let scale = hi as f64 * la.abs() + mf * self.lnfact[hi];
        clamp_cancellation(pos.log(), neg.log(), scale)
    }

    /// `Σ_{j>n} (−A)^j/(j!)^m` for `A < (n+2)^m`, where its terms decrease.
    fn tail(&self, la: f64) -> SignedLog {
        let mf = self.m as f64;
        let n = self.jmax;
        let mut acc = LogSum::default();
        let mut k = n + 1;
        loop {
            let t = k as f64 * la - mf * libm::lgamma(k as f64 + 1.0);
            let r = (la - mf * ((k + 1) as f64).ln()).exp();
            acc.push(t + (-r).ln_1p());
            if t - acc.log() < -45.0 {
                break;
            }
            k += 2;
        }
        let sign = if (n + 1) % 2 == 0 { 1 } else { -1 };
        SignedLog::new(sign, acc.log())
    }
}

/// `e^{pos} − e^{neg}`, flushed to zero unless the difference is known to a
/// relative accuracy of about 1e−8 (below that, even its sign can be noise).
/// `log_scale` bounds the magnitude of the log-terms, whose absolute
/// rounding errors become relative errors of the sums.
fn clamp_cancellation(pos: f64, neg: f64, log_scale: f64) -> SignedLog {
    let d = SignedLog::from_log(pos) - SignedLog::from_log(neg);
    let noise = (1e8 * f64::EPSILON * (1.0 + log_scale.abs())).ln();
    if d.log_mag < pos.max(neg) + noise {
        SignedLog::ZERO
    } else {
        d
    }
}

/// `f_{N−2}(a)`, summed exactly up to `j = N − 2`.
pub fn f_series(a: SignedLog, n: usize, m: u32) -> Result<SignedLog> {
    if n < 2 {
        return Err(Error::domain("f_series needs N ≥ 2"));
    }
    if m == 0 {
        return Err(Error::domain("the number of factors m must be positive"));
    }
    Ok(TruncatedSeries::for_size(n, m).eval(a))
}

/// `f_∞(a) = Σ_k a^k/(k!)^m`, summed until the tail bound relative to the
/// partial sum falls below `tol`.
pub fn f_inf(a: SignedLog, m: u32, tol: f64) -> Result<SignedLog> {
    if !(tol > 0.0) {
        return Err(Error::input("f_inf tolerance must be positive"));
    }
    if m == 0 {
        return Err(Error::domain("the number of factors m must be positive"));
    }
    if a.is_zero() {
        return Ok(SignedLog::ONE);
    }
    if m == 1 && a.sign < 0 {
        return Ok(SignedLog::from_log(-a.log_mag.exp()));
    }
    let mf = m as f64;
    let la = a.log_mag;
    // beyond k > 2|a|^{1/m} successive ratios are below 2^{−m}
    let geometric_from = 2.0 * (la / mf).exp();
    let ln_tol = tol.ln();
    let mut t = 0.0; // ln t_k
    let mut k = 0usize;
    if a.sign > 0 {
        let mut s = LogSum::default();
        loop {
            s.push(t);
            let next = t + la - mf * ((k + 1) as f64).ln();
            if k as f64 > geometric_from {
                let ratio = (la - mf * ((k + 2) as f64).ln()).exp();
                let tail = next - (1.0 - ratio).ln();
                if tail - s.log() < ln_tol {
                    break;
                }
            }
            t = next;
            k += 1;
        }
        return Ok(SignedLog::from_log(s.log()));
    }
    let (mut pos, mut neg) = (LogSum::default(), LogSum::default());
    let mut peak = f64::NEG_INFINITY;
    loop {
        // pair (k, k+1) with k even
        let d = la - mf * ((k + 1) as f64).ln();
        if d < 0.0 {
            pos.push(t + (-d.exp_m1()).ln());
        } else if d > 0.0 {
            neg.push(t + d.exp_m1().ln());
        }
        peak = peak.max(t);
        let next = t + 2.0 * la - mf * (((k + 1) * (k + 2)) as f64).ln();
        if k as f64 > geometric_from {
            let partial = clamp_cancellation(pos.log(), neg.log(), k as f64 * la.abs() + t.abs());
            if next - partial.log_abs() < ln_tol || next < peak - 2.0 * WINDOW {
                return Ok(partial);
            }
        }
        t = next;
        k += 2;
    }
}

/// `ln f_{N−2}` in arbitrary precision for positive and negative `a` given
/// as (sign, ln|a|); used by the extended-precision identity checks.
pub fn f_series_generic<R: real::Real>(sign: i8, la: R, jmax: usize, m: u32, lnfact: &[R]) -> (i8, R) {
    let mf = R::from_i64(m as i64);
    let terms: Vec<R> = (0..=jmax).map(|j| R::from_i64(j as i64) * la - mf * lnfact[j]).collect();
    let mut peak = terms[0];
    for &t in &terms {
        if t > peak {
            peak = t;
        }
    }
    let mut acc = R::zero();
    for (j, &t) in terms.iter().enumerate() {
        let v = (t - peak).exp();
        if sign < 0 && j % 2 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    let s = if acc > R::zero() { 1 } else if acc < R::zero() { -1 } else { 0 };
    (s, peak + acc.abs().ln())
}
