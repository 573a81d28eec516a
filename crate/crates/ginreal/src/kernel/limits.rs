//! Limiting kernels in the bulk, at the edge and at the origin, and the
//! edge envelope `ν_N`.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use core::f64::consts::{PI, SQRT_2};

use libm::{erf, erfc, exp, sqrt};

use super::engine::{Core, KernelQuad, Series};
use super::KernelSample2x2;
use crate::error::{Error, Result};
use crate::quad::{adaptive, Tolerance};
use crate::special_fn::{LogWeight, SignedLog, WeightConfig};

fn half_sign(x: f64, y: f64) -> f64 {
    if x > y {
        0.5
    } else if x < y {
        -0.5
    } else {
        0.0
    }
}

/// Sine-kernel analogue for the real bulk: `s = e^{−(ξ−ζ)²/2}/√(2π)`.
pub fn bulk_limit_kernel(xi: f64, zeta: f64) -> KernelSample2x2 {
    let g = exp(-0.5 * (xi - zeta) * (xi - zeta)) / sqrt(2.0 * PI);
    KernelSample2x2 { d: (zeta - xi) * g, s_xy: g, s_yx: g, i: half_sign(xi, zeta) * erfc((xi - zeta).abs() / SQRT_2) }
}

/// Scalar edge kernel `e^{−(ξ−ζ)²/2} erfc((ξ+ζ)/√2)/(2√(2π)) + e^{−ξ²} erfc(−ζ)/(4√π)`.
pub fn edge_s(xi: f64, zeta: f64) -> f64 {
    exp(-0.5 * (xi - zeta) * (xi - zeta)) * erfc((xi + zeta) / SQRT_2) / (2.0 * sqrt(2.0 * PI))
        + exp(-xi * xi) * erfc(-zeta) / (4.0 * sqrt(PI))
}

/// Edge `d` entry, `(ζ−ξ) e^{−(ξ−ζ)²/2} erfc((ξ+ζ)/√2)/(2√(2π))`.
pub fn edge_d(xi: f64, zeta: f64) -> f64 {
    (zeta - xi) * exp(-0.5 * (xi - zeta) * (xi - zeta)) * erfc((xi + zeta) / SQRT_2) / (2.0 * sqrt(2.0 * PI))
}

/// Edge `i` entry `∫_ξ^ζ s(t,ζ) dt + ½ sgn(ξ−ζ)`; the `e^{−t²}` part is
/// integrated in closed form, the rest adaptively.
pub fn edge_i(xi: f64, zeta: f64) -> Result<f64> {
    if xi == zeta {
        return Ok(0.0);
    }
    let closed = 0.125 * erfc(-zeta) * (erf(zeta) - erf(xi));
    let first = |t: f64| exp(-0.5 * (t - zeta) * (t - zeta)) * erfc((t + zeta) / SQRT_2) / (2.0 * sqrt(2.0 * PI));
    let (a, b, sign) = if xi < zeta { (xi, zeta, 1.0) } else { (zeta, xi, -1.0) };
    let panels = ((b - a).ceil() as usize).clamp(1, 200);
    let tol = Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 2000 };
    let numeric = adaptive(first, a, b, panels, tol)?.value;
    Ok(sign * numeric + closed + half_sign(xi, zeta))
}

pub fn edge_limit_kernel(xi: f64, zeta: f64) -> Result<KernelSample2x2> {
    Ok(KernelSample2x2 { d: edge_d(xi, zeta), s_xy: edge_s(xi, zeta), s_yx: edge_s(zeta, xi), i: edge_i(xi, zeta)? })
}

/// `ν_N(ξ) = exp(−(√(Nm)/2)((1+√(m/N) ξ)^{2/m} − 1))`, the finite-N edge envelope.
pub fn nu(xi: f64, n: usize, m: u32) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::domain("nu needs N ≥ 1 and m ≥ 1"));
    }
    let (nf, mf) = (n as f64, m as f64);
    let base = 1.0 + (mf / nf).sqrt() * xi;
    if !(base > 0.0) {
        return Err(Error::domain("nu needs 1 + √(m/N) ξ > 0"));
    }
    Ok(exp(-0.5 * (nf * mf).sqrt() * libm::expm1(2.0 / mf * libm::log(base))))
}

/// `|ν_N(ξ) − e^{−ξ}| e^{ξ}`, the relative deviation from the limiting envelope.
pub fn nu_deviation(xi: f64, n: usize, m: u32) -> Result<f64> {
    Ok((nu(xi, n, m)? * exp(xi) - 1.0).abs())
}

/// The origin-limit kernel for a fixed number of factors, with the weight
/// tables built once.
#[derive(Clone, Debug)]
pub struct OriginLimitKernel {
    core: Core,
}

impl OriginLimitKernel {
    pub fn new(cfg: WeightConfig) -> Result<Self> {
        Self::with_quad(cfg, KernelQuad::for_factors(cfg.m))
    }

    pub fn with_quad(cfg: WeightConfig, quad: KernelQuad) -> Result<Self> {
        let m = cfg.m;
        let weight = LogWeight::new(cfg)?;
        let mf = m as f64;
        let log_c = -mf * (2.0 * sqrt(2.0 * PI)).ln();
        Ok(OriginLimitKernel {
            core: Core {
                m,
                ln_n: 0.0,
                nm: mf,
                log_c,
                log_d: None,
                boundary_power: 0.0,
                log_g: log_c + mf * core::f64::consts::LN_2,
                series: Series::Infinite,
                weight,
                quad,
            },
        })
    }

    pub fn m(&self) -> u32 {
        self.core.m
    }

    /// `(2√(2π))^{−m} ∫ (ξ−η) sgn(ζ−η) w(ξ) w(η) f_∞(ξη) dη`.
    pub fn s(&self, xi: f64, zeta: f64) -> Result<f64> {
        Ok(self.core.s(xi, zeta)?.to_real())
    }

    pub fn s_log(&self, xi: f64, zeta: f64) -> Result<SignedLog> {
        self.core.s(xi, zeta)
    }

    /// `2 (2√(2π))^{−m} (ζ−ξ) w(ξ) w(ζ) f_∞(ξζ)`.
    pub fn d(&self, xi: f64, zeta: f64) -> f64 {
        self.core.d(xi, zeta).to_real()
    }

    pub fn i(&self, xi: f64, zeta: f64) -> Result<f64> {
        self.core.i(xi, zeta)
    }

    /// `∫_a^b s(t, ζ) dt`.
    pub fn s_integral(&self, a: f64, b: f64, zeta: f64) -> Result<f64> {
        self.core.s_integral(a, b, zeta)
    }

    /// `(2π)^{−m/2} ∫_0^ζ w(t) dt`.
    pub fn head_mass(&self, zeta: f64) -> Result<f64> {
        if zeta < 0.0 {
            return Ok(-self.core.head_mass(-zeta)?);
        }
        self.core.head_mass(zeta)
    }

    pub fn ln_weight(&self, xi: f64) -> f64 {
        self.core.ln_wn_at(xi)
    }

    pub fn sample(&self, xi: f64, zeta: f64) -> Result<KernelSample2x2> {
        Ok(KernelSample2x2 { d: self.d(xi, zeta), s_xy: self.s(xi, zeta)?, s_yx: self.s(zeta, xi)?, i: self.i(xi, zeta)? })
    }
}

/// One-shot origin-limit kernel sample (builds the weight tables each call;
/// keep an [`OriginLimitKernel`] for repeated use).
pub fn origin_limit_kernel(xi: f64, zeta: f64, m: u32, cfg: WeightConfig) -> Result<KernelSample2x2> {
    if cfg.m != m {
        return Err(Error::input("weight configuration is for a different m"));
    }
    OriginLimitKernel::new(cfg)?.sample(xi, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bulk_values() {
        let k = bulk_limit_kernel(0.3, 0.3);
        assert!((k.s_xy - 1.0 / sqrt(2.0 * PI)).abs() < 1e-15);
        assert_eq!(k.d, 0.0);
        assert_eq!(k.i, 0.0);
        let k = bulk_limit_kernel(0.0, 10.0);
        assert!(k.i.abs() < 1e-10 && k.i < 0.0);
    }

    #[test]
    fn bulk_integrated_entry_matches_quadrature() {
        let (xi, zeta) = (-0.4, 1.1);
        let q = adaptive(|t| bulk_limit_kernel(t, zeta).s_xy, xi, zeta, 4, Tolerance::default()).unwrap().value;
        assert!((bulk_limit_kernel(xi, zeta).i - (q - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn edge_values() {
        let want = 1.0 / (2.0 * sqrt(2.0 * PI)) + 1.0 / (4.0 * sqrt(PI));
        assert!((edge_s(0.0, 0.0) - want).abs() < 1e-15);
        assert!((want - 0.340_518_5).abs() < 1e-7);
        assert_eq!(edge_d(0.7, 0.7), 0.0);
        // Gaussian decay in ξ, led by the e^{−ξ²} term
        let far = edge_s(5.0, 0.0);
        let lead = exp(-25.0) / (4.0 * sqrt(PI));
        assert!(far > lead && far < 1.5 * lead, "{far} {lead}");
    }

    #[test]
    fn edge_integrated_entry_is_antisymmetric_and_consistent() {
        let a = edge_i(-0.5, 1.3).unwrap();
        assert!((a + edge_i(1.3, -0.5).unwrap()).abs() < 1e-12);
        let q = adaptive(|t| edge_s(t, 1.3), -0.5, 1.3, 4, Tolerance::default()).unwrap().value;
        assert!((a - (q - 0.5)).abs() < 1e-10);
        // −∂_ζ s = d
        let h = 1e-5;
        let fd = -(edge_s(0.2, 0.9 + h) - edge_s(0.2, 0.9 - h)) / (2.0 * h);
        assert!((fd - edge_d(0.2, 0.9)).abs() < 1e-8);
    }

    #[test]
    fn envelope() {
        assert_eq!(nu(0.0, 100, 2).unwrap(), 1.0);
        let direct = exp(-0.5 * 10.0 * ((1.0 + 0.1f64).powi(2) - 1.0));
        assert!((nu(1.0, 100, 1).unwrap() - direct).abs() < 1e-15);
        assert!(nu(-20.0, 100, 1).is_err());
    }

    #[test]
    fn origin_single_factor_is_the_bulk_kernel() {
        let k = OriginLimitKernel::new(WeightConfig::new(1)).unwrap();
        for &(a, b) in &[(0.0, 0.0), (0.5, 1.0), (1.0, -0.5), (-2.0, 0.3)] {
            let s = k.s(a, b).unwrap();
            let want = bulk_limit_kernel(a, b).s_xy;
            assert!((s - want).abs() < 1e-9 * want.max(1e-3), "({a},{b}) {s} {want}");
        }
        let i = k.i(0.2, 1.4).unwrap();
        assert!((i - bulk_limit_kernel(0.2, 1.4).i).abs() < 1e-8);
    }
}
