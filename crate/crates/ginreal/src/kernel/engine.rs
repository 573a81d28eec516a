//! The integration machinery shared by the finite-N kernel and the
//! origin-limit kernel.
//!
//! Both are instances of
//!
//! ```text
//! S(x,y) = C ∫ (x−v) sgn(y−v) W(x) W(v) F(xv) dv,   W(v) = w(N^{m/2} v),  F(a) = f(N^m a)
//! ```
//!
//! with `f = f_{N−2}` at finite N and `f = f_∞`, `N = 1` at the origin
//! limit. Integrals over `v` run in root coordinates `v = ±u^m`, where the
//! integrand is close to a Gaussian of width `1/√(Nm)` centred at `|x|^{1/m}`.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use libm::erf;

use super::Representation;
use crate::error::{Error, Result};
use crate::quad::{adaptive, log_peak_integrate, Tolerance};
use crate::special_fn::{f_inf, LogWeight, SignedLog, TruncatedSeries};

/// Numerical settings of the kernel integrals.
#[derive(Clone, Copy, Debug)]
pub struct KernelQuad {
    /// Semi-infinite ranges are cut this many Gaussian widths past the peak.
    pub reach: f64,
    /// Peak-location scan density, in points per Gaussian width.
    pub scan_per_width: f64,
    /// The integrand is dropped where it is this many e-folds below its peak.
    pub efolds: f64,
    /// Relative tolerance of the inner `v`-integrals.
    pub rel_tol: f64,
    /// Tolerance of outer integrals of `S` (the integrated kernel).
    pub outer: Tolerance,
    /// Absolute accuracy of `S`, in units of `N^{m/2}`, for integrals over
    /// negative series arguments with `m ≥ 2`, where the alternating series
    /// loses all relative accuracy (mixed-sign points are exponentially small).
    pub mixed_abs_tol: f64,
}

impl Default for KernelQuad {
    fn default() -> Self {
        KernelQuad {
            reach: 20.0,
            scan_per_width: 3.0,
            efolds: 40.0,
            rel_tol: 1e-10,
            outer: Tolerance { abs: 1e-9, rel: 1e-8, max_intervals: 4000 },
            mixed_abs_tol: 1e-13,
        }
    }
}

impl KernelQuad {
    /// Defaults for `m` factors. For `m ≥ 2` the weight comes from a spline
    /// table accurate to ~1e−9, and tighter tolerances would only chase its noise.
    pub fn for_factors(m: u32) -> Self {
        let q = Self::default();
        if m == 1 {
            q
        } else {
            KernelQuad { rel_tol: 1e-8, outer: Tolerance { abs: 1e-8, rel: 1e-7, ..q.outer }, ..q }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Series {
    Truncated(TruncatedSeries),
    Infinite,
}

#[derive(Clone, Debug)]
pub(crate) struct Core {
    pub(crate) m: u32,
    /// ln N (zero for the origin limit).
    pub(crate) ln_n: f64,
    pub(crate) nm: f64,
    pub(crate) log_c: f64,
    /// ln D_{N,m}; `None` when the boundary term vanishes identically.
    pub(crate) log_d: Option<f64>,
    /// `N − 1`, the power of the boundary term.
    pub(crate) boundary_power: f64,
    /// ln(C (2/N)^m).
    pub(crate) log_g: f64,
    pub(crate) series: Series,
    pub(crate) weight: LogWeight,
    pub(crate) quad: KernelQuad,
}

fn sgn(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

impl Core {
    pub(crate) fn width(&self) -> f64 {
        1.0 / self.nm.sqrt()
    }

    fn root(&self, v: f64) -> f64 {
        if self.m == 1 {
            v.abs()
        } else {
            v.abs().powf(1.0 / self.m as f64)
        }
    }

    /// ln W(v) from ln|v|.
    pub(crate) fn ln_wn(&self, ln_v: f64) -> f64 {
        if self.m == 1 {
            -0.5 * (self.ln_n + 2.0 * ln_v).exp()
        } else {
            self.weight.ln_w(ln_v + 0.5 * self.m as f64 * self.ln_n)
        }
    }

    pub(crate) fn ln_wn_at(&self, v: f64) -> f64 {
        self.ln_wn(v.abs().ln())
    }

    /// F(a) for `a = sign · e^{ln_a}`.
    pub(crate) fn series_at(&self, sign: i8, ln_a: f64) -> SignedLog {
        if sign == 0 {
            return SignedLog::ONE;
        }
        let arg = SignedLog::new(sign, ln_a + self.m as f64 * self.ln_n);
        match &self.series {
            Series::Truncated(t) => t.eval(arg),
            Series::Infinite => f_inf(arg, self.m, 1e-16).expect("tolerance and m are validated"),
        }
    }

    /// `(x−v) W(v) F(xv) dv/du` at `v = sign_v · u^m`.
    fn integrand(&self, x: f64, sign_v: i8, u: f64) -> SignedLog {
        if u <= 0.0 {
            return if self.m == 1 { SignedLog::from_real(x) } else { SignedLog::ZERO };
        }
        let ln_u = u.ln();
        let mf = self.m as f64;
        let ln_v = mf * ln_u;
        let v = sign_v as f64 * ln_v.exp();
        let f = if x == 0.0 { SignedLog::ONE } else { self.series_at(sgn(x) * sign_v, x.abs().ln() + ln_v) };
        let jac = if self.m == 1 { 0.0 } else { mf.ln() + (mf - 1.0) * ln_u };
        SignedLog::from_real(x - v) * f.mul_exp(self.ln_wn(ln_v) + jac)
    }

    fn log_integrate<F: FnMut(f64) -> SignedLog>(&self, f: F, lo: f64, hi: f64, log_abs_tol: f64) -> Result<SignedLog> {
        if !(hi > lo) {
            return Ok(SignedLog::ZERO);
        }
        let scan = ((hi - lo) / self.width() * self.quad.scan_per_width).ceil().clamp(32.0, 20000.0) as usize;
        log_peak_integrate(f, lo, hi, scan, self.quad.efolds, self.quad.rel_tol, log_abs_tol)
    }

    /// Upper end of a semi-infinite `u`-range starting at `u_lo`.
    fn cutoff(&self, u_lo: f64, peak: f64) -> f64 {
        u_lo.max(peak) + self.quad.reach * self.width()
    }

    /// Log of the absolute tolerance for a negative-argument piece whose
    /// result is multiplied by `e^{ln_scale}` to give `S`.
    fn mixed_floor(&self, x: f64, sign_v: i8, ln_scale: f64) -> f64 {
        if self.m == 1 || x == 0.0 || sgn(x) * sign_v > 0 {
            f64::NEG_INFINITY
        } else {
            self.quad.mixed_abs_tol.ln() + 0.5 * self.m as f64 * self.ln_n - ln_scale
        }
    }

    /// `∫_a^b (x−v) W(v) F(xv) dv`; `a` may be −∞ and `b` may be +∞. The
    /// result enters `S` multiplied by `e^{ln_scale}`.
    pub(crate) fn v_integral(&self, x: f64, a: f64, b: f64, ln_scale: f64) -> Result<SignedLog> {
        let mut total = SignedLog::ZERO;
        let peak = self.root(x);
        if a < 0.0 {
            let lo = self.root(b.min(0.0));
            let hi = if a.is_finite() { self.root(a) } else { self.cutoff(lo, if x < 0.0 { peak } else { 0.0 }) };
            let floor = self.mixed_floor(x, -1, ln_scale);
            total = total + self.log_integrate(|u| self.integrand(x, -1, u), lo, hi, floor)?;
        }
        if b > 0.0 {
            let lo = self.root(a.max(0.0));
            let hi = if b.is_finite() { self.root(b) } else { self.cutoff(lo, if x > 0.0 { peak } else { 0.0 }) };
            let floor = self.mixed_floor(x, 1, ln_scale);
            total = total + self.log_integrate(|u| self.integrand(x, 1, u), lo, hi, floor)?;
        }
        Ok(total)
    }

    /// `C D x^{N−1} W(x)`.
    fn boundary_term(&self, x: f64, ln_wx: f64) -> SignedLog {
        match self.log_d {
            Some(log_d) if x != 0.0 => {
                let odd = self.boundary_power as i64 % 2 != 0;
                let sign = if x < 0.0 && odd { -1 } else { 1 };
                SignedLog::new(sign, self.log_c + log_d + self.boundary_power * x.abs().ln() + ln_wx)
            }
            _ => SignedLog::ZERO,
        }
    }

    pub(crate) fn s_rep(&self, x: f64, y: f64, rep: Representation) -> Result<SignedLog> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::domain("kernel arguments must be finite"));
        }
        if x == 0.0 && self.m >= 2 {
            // W has a logarithmic singularity at the origin
            return Ok(SignedLog::from_log(f64::INFINITY));
        }
        let ln_wx = self.ln_wn_at(x);
        let pre = self.log_c + ln_wx;
        let two_pre = core::f64::consts::LN_2 + pre;
        Ok(match rep {
            Representation::Direct => {
                let below = self.v_integral(x, f64::NEG_INFINITY, y, pre)?;
                let above = self.v_integral(x, y, f64::INFINITY, pre)?;
                (below - above).mul_exp(pre)
            }
            Representation::UpperTail => {
                -self.v_integral(x, y, f64::INFINITY, two_pre)?.mul_exp(two_pre) + self.boundary_term(x, ln_wx)
            }
            Representation::LowerTail => {
                self.v_integral(x, f64::NEG_INFINITY, y, two_pre)?.mul_exp(two_pre) - self.boundary_term(x, ln_wx)
            }
            Representation::FromOrigin => {
                let part = if y >= 0.0 { self.v_integral(x, 0.0, y, two_pre)? } else { -self.v_integral(x, y, 0.0, two_pre)? };
                part.mul_exp(two_pre) + SignedLog::from_log(self.log_g + ln_wx)
            }
        })
    }

    /// `S(x,y)` through the representation that keeps the saddle `v = x`
    /// outside the integration range.
    pub(crate) fn s(&self, x: f64, y: f64) -> Result<SignedLog> {
        if x < 0.0 {
            return self.s(-x, -y);
        }
        let rep = if y >= x {
            Representation::UpperTail
        } else if y >= 0.0 {
            Representation::FromOrigin
        } else {
            Representation::LowerTail
        };
        self.s_rep(x, y, rep)
    }

    /// `D(x,y) = 2C (y−x) W(x) W(y) F(xy)`.
    pub(crate) fn d(&self, x: f64, y: f64) -> SignedLog {
        if x == y {
            return SignedLog::ZERO;
        }
        let diff = SignedLog::from_real(y - x);
        if self.m >= 2 && (x == 0.0 || y == 0.0) {
            return SignedLog::new(diff.sign, f64::INFINITY);
        }
        let f = if x == 0.0 || y == 0.0 {
            SignedLog::ONE
        } else {
            self.series_at(sgn(x) * sgn(y), x.abs().ln() + y.abs().ln())
        };
        let l = core::f64::consts::LN_2 + self.log_c + self.ln_wn_at(x) + self.ln_wn_at(y);
        diff * f.mul_exp(l)
    }

    /// `G(y) = C (2/N)^m ∫_0^y W(t) dt` for `y ≥ 0`; `G(∞) = ½`.
    pub(crate) fn head_mass(&self, y: f64) -> Result<f64> {
        if self.m == 1 {
            return Ok(0.5 * erf(y * (0.5 * self.ln_n.exp()).sqrt()));
        }
        let mf = self.m as f64;
        let lo = self.root(y);
        let hi = self.cutoff(lo, 0.0);
        let tail = self.log_integrate(
            |u| {
                if u <= 0.0 {
                    return SignedLog::ZERO;
                }
                let ln_u = u.ln();
                SignedLog::from_log(self.ln_wn(mf * ln_u) + mf.ln() + (mf - 1.0) * ln_u)
            },
            lo,
            hi,
            f64::NEG_INFINITY,
        )?;
        Ok(0.5 - tail.mul_exp(self.log_g).to_real())
    }

    /// `∫_a^b S(t,y) dt` by adaptive quadrature in root coordinates.
    pub(crate) fn s_integral(&self, a: f64, b: f64, y: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return Ok(-self.s_integral(b, a, y)?);
        }
        // break at the origin (root-coordinate change) and at the peak t = y
        let mut cuts = alloc::vec![a];
        cuts.extend([0.0, y].into_iter().filter(|&c| c > a && c < b));
        cuts.push(b);
        cuts.sort_by(|p, q| p.total_cmp(q));
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += self.s_piece(w[0], w[1], y)?;
        }
        Ok(total)
    }

    /// One sign-definite piece `[p, q]` of [`Self::s_integral`].
    fn s_piece(&self, p: f64, q: f64, y: f64) -> Result<f64> {
        if p >= q {
            return Ok(0.0);
        }
        let mf = self.m as f64;
        let side = if q <= 0.0 { -1.0 } else { 1.0 };
        let (lo, hi) = if side > 0.0 { (self.root(p), self.root(q)) } else { (self.root(q), self.root(p)) };
        let mut failure = None;
        let panels = ((hi - lo) / self.width()).ceil().clamp(1.0, 400.0) as usize;
        let res = adaptive(
            |tau| {
                let t = side * tau.powi(self.m as i32);
                let jac = mf * tau.powi(self.m as i32 - 1);
                match self.s(t, y) {
                    Ok(v) => v.to_real() * jac,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            lo,
            hi,
            panels,
            self.quad.outer,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(res.value)
    }

    /// The integrated kernel through `G(y) − ∫_0^x S(t,y)dt + ½sgn(x−y)`.
    pub(crate) fn i(&self, x: f64, y: f64) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        if y < 0.0 {
            return Ok(-self.i(-x, -y)?);
        }
        let half_sign = if x > y { 0.5 } else { -0.5 };
        Ok(self.head_mass(y)? - self.s_integral(0.0, x, y)? + half_sign)
    }

    /// The integrated kernel by direct quadrature of `∫_x^y S(t,y)dt + ½sgn(x−y)`.
    pub(crate) fn i_direct(&self, x: f64, y: f64) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        let half_sign = if x > y { 0.5 } else { -0.5 };
        Ok(self.s_integral(x, y, y)? + half_sign)
    }
}
