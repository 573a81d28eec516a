//! Leading-order asymptotics of the weight and of the series, with the
//! validity windows under which they are meant to be used.


#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use super::erfc::log_erfc;
use super::series::f_inf;
use super::weight::WeightConfig;
use super::SignedLog;
use crate::error::{Error, Result};

/// The unspecified "large constant" of the validity windows.
pub const VALIDITY_M: f64 = 10.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Leading term of `w(N^{m/2} x)` for `|x| ≥ M N^{−m/2}`:
/// `N^{−(m−1)/2} e^{−Nm|x|^{2/m}/2} (4π)^{(m−1)/2} m^{−1/2} |x|^{−(m−1)/m}`.
pub fn weight_asym(x: f64, n: usize, cfg: &WeightConfig) -> Result<SignedLog> {
    cfg.validate()?;
    let nf = n as f64;
    let m = cfg.m as f64;
    let threshold = VALIDITY_M * nf.powf(-0.5 * m);
    if !(x.abs() >= threshold) {
        return Err(Error::precondition("weight_asym needs |x| ≥ M·N^{−m/2}", threshold));
    }
    let lx = x.abs().ln();
    let l = -0.5 * (m - 1.0) * nf.ln() - 0.5 * nf * m * (2.0 * lx / m).exp()
        + 0.5 * (m - 1.0) * (4.0 * core::f64::consts::PI).ln()
        - 0.5 * m.ln()
        - (m - 1.0) / m * lx;
    Ok(SignedLog::from_log(l))
}

/// Leading term of `f_∞(N^m x)` for `x > M N^{−m}`:
/// `(2π)^{−(m−1)/2} x^{−(m−1)/(2m)} e^{Nm x^{1/m}} N^{−(m−1)/2} m^{−1/2}`.
pub fn f_asym_bulk(x: f64, n: usize, m: u32) -> Result<SignedLog> {
    if m == 0 {
        return Err(Error::domain("the number of factors m must be positive"));
    }
    let nf = n as f64;
    let mf = m as f64;
    let threshold = VALIDITY_M * nf.powf(-mf);
    if !(x > threshold) {
        return Err(Error::precondition("f_asym_bulk needs x > M·N^{−m}", threshold));
    }
    let lx = x.ln();
    let l = -0.5 * (mf - 1.0) * LN_2PI - (mf - 1.0) / (2.0 * mf) * lx + nf * mf * (lx / mf).exp()
        - 0.5 * (mf - 1.0) * nf.ln()
        - 0.5 * mf.ln();
    Ok(SignedLog::from_log(l))
}

/// Uniform erfc asymptotic of `f_{N−2}(N^m x)` near and above `x = 1`,
/// valid for `x > 1 − s/√N` (`s` = `window`).
pub fn f_edge(x: f64, n: usize, m: u32, window: f64) -> Result<SignedLog> {
    if m == 0 {
        return Err(Error::domain("the number of factors m must be positive"));
    }
    let nf = n as f64;
    let mf = m as f64;
    let threshold = 1.0 - window / nf.sqrt();
    if !(x > threshold) || x <= 0.0 {
        return Err(Error::precondition("f_edge needs x > 1 − s/√N", threshold));
    }
    let z = nf.sqrt() * (x - 1.0) / (2.0 * mf).sqrt();
    let l = nf * mf - 0.5 * mf * LN_2PI + 0.5 * (core::f64::consts::PI / (2.0 * mf)).ln()
        - 0.5 * (mf - 1.0) * nf.ln()
        + (nf - 1.0) * x.ln()
        + nf * (x - 1.0) * (x - 1.0) / (2.0 * mf);
    Ok(log_erfc(z)?.mul_exp(l))
}

/// Two-branch approximation of `f_{N−2}(N^m x)` away from the transition
/// window `((1−ω)^m, (1+ω)^m)`, `ω = N^{−1/2}`: the `f_∞` branch on
/// `−(1+ω)^m < x < (1−ω)^m` plus the saddle term
/// `x^{N−1} e^{mN} / ((2πN)^{m/2}(x−1))`.
pub fn f_transition(x: f64, n: usize, m: u32) -> Result<SignedLog> {
    if m == 0 {
        return Err(Error::domain("the number of factors m must be positive"));
    }
    let nf = n as f64;
    let mf = m as f64;
    let omega = nf.powf(-0.5);
    let (lo, hi) = ((1.0 - omega).powf(mf), (1.0 + omega).powf(mf));
    if x > lo && x < hi {
        return Err(Error::precondition("f_transition excludes the window around x = 1; use f_edge", lo));
    }
    let saddle = if x == 0.0 {
        SignedLog::ZERO
    } else {
        let sign_pow = if x < 0.0 && (n - 1) % 2 == 1 { -1 } else { 1 };
        let sign = sign_pow * if x < 1.0 { -1 } else { 1 };
        let l = (nf - 1.0) * x.abs().ln() + mf * nf - 0.5 * mf * (LN_2PI + nf.ln()) - (x - 1.0).abs().ln();
        SignedLog::new(sign, l)
    };
    let bulk = if -hi < x && x < lo {
        let a = SignedLog::from_real(x).mul_exp(mf * nf.ln());
        f_inf(a, m, 1e-16)?
    } else {
        SignedLog::ZERO
    };
    Ok(bulk + saddle)
}

/// Whether the `f_∞` branch of [`f_transition`] is active at `x`.
pub fn transition_uses_bulk_branch(x: f64, n: usize, m: u32) -> bool {
    let omega = (n as f64).powf(-0.5);
    let mf = m as f64;
    -(1.0 + omega).powf(mf) < x && x < (1.0 - omega).powf(mf)
}
