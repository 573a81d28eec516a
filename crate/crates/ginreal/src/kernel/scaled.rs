//! Local rescalings of the finite-N kernel and the leading-order global
//! approximation in the bulk.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use libm::{erfc, exp, sqrt};

use super::{matrix_kernel, rho_density, KernelContext, KernelSample2x2};
use crate::error::{Error, Result};

/// Where to zoom in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    /// Around an energy `E ∈ (−1, 1) \ {0}` on the local mean spacing.
    Bulk(f64),
    /// Around `x = 1` on the scale `√(m/N)`.
    Edge,
    /// Around `x = 0` on the scale `N^{−m/2}`.
    Origin,
}

impl Regime {
    /// `(centre, scale)` of the affine map `x = centre + ξ · scale`.
    pub fn affine(&self, n: usize, m: u32) -> Result<(f64, f64)> {
        let (nf, mf) = (n as f64, m as f64);
        match *self {
            Regime::Bulk(e) => {
                if e == 0.0 {
                    return Err(Error::domain("the bulk scaling is singular at E = 0; use the origin regime"));
                }
                if !(e.abs() < 1.0) {
                    return Err(Error::domain("bulk energy must lie in (−1, 1)"));
                }
                Ok((e, 1.0 / (2.0 * sqrt(nf * mf) * rho_density(e, m))))
            }
            Regime::Edge => Ok((1.0, sqrt(mf / nf))),
            Regime::Origin => Ok((0.0, nf.powf(-0.5 * mf))),
        }
    }
}

/// The finite-N kernel in local coordinates: `s` scaled by the map's
/// Jacobian `a`, `d` by `a²`, `i` unscaled.
pub fn scaled_kernel(regime: Regime, xi: f64, zeta: f64, ctx: &KernelContext) -> Result<KernelSample2x2> {
    let (c, a) = regime.affine(ctx.n(), ctx.m())?;
    let k = matrix_kernel(c + a * xi, c + a * zeta, ctx)?;
    Ok(KernelSample2x2 { d: a * a * k.d, s_xy: a * k.s_xy, s_yx: a * k.s_yx, i: k.i })
}

/// Default exponent `ε` of the region where the global approximation holds.
pub const DEFAULT_REGION_EPS: f64 = 0.1;

/// Leading-order approximations of `x^{m−1} S(x^m, y^m)`,
/// `(xy)^{m−1} D(x^m, y^m)` and `I(x^m, y^m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalApprox {
    pub s: f64,
    pub d: f64,
    pub i: f64,
}

/// Global bulk approximation at root coordinates `x, y` in
/// `{N^{−m/2+ε} < x < 1 − N^{−1/2+ε}}`.
pub fn global_approx(x: f64, y: f64, ctx: &KernelContext, eps: f64) -> Result<GlobalApprox> {
    let (nf, mf) = (ctx.n() as f64, ctx.m() as f64);
    let lower = nf.powf(-0.5 * mf + eps);
    let upper = 1.0 - nf.powf(-0.5 + eps);
    for v in [x, y] {
        if !(v > lower) {
            return Err(Error::precondition("global approximation needs x > N^{−m/2+ε}", lower));
        }
        if !(v < upper) {
            return Err(Error::precondition("global approximation needs x < 1 − N^{−1/2+ε}", upper));
        }
    }
    let g = exp(-0.5 * nf * mf * (x - y) * (x - y));
    let sign = if x > y { 1.0 } else if x < y { -1.0 } else { 0.0 };
    Ok(GlobalApprox {
        s: sqrt(nf / (2.0 * mf * core::f64::consts::PI)) * g,
        d: nf.powf(1.5) / (mf.powf(1.5) * sqrt(2.0 * core::f64::consts::PI)) * mf * (y - x) * g,
        i: 0.5 * sign * erfc(sqrt(nf * mf) * (y - x).abs() / core::f64::consts::SQRT_2),
    })
}
