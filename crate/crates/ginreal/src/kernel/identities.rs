//! The moment identities behind the alternative representations of `S`:
//!
//! ```text
//! ∫ sgn(v) (v−x) W(v) F(xv) dv = (2/N)^m,      ∫ (x−v) W(v) F(xv) dv = D_{N,m} x^{N−1}.
//! ```
//!
//! Both sides of the first are O(1) while the integrand reaches
//! `e^{Nm x^{2/m}/2}`, so checking them at moderate N needs the
//! extended-precision path (`R = DoubleDouble`).

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::real::{self, ln_factorials, ln_gamma_half};
use crate::special_fn::{f_series_generic, log_weight_direct, WeightConfig};

/// Quadrature settings for [`integral_identities`].
#[derive(Clone, Copy, Debug)]
pub struct IdentityQuadrature {
    pub weight: WeightConfig,
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Panel width in units of the local Gaussian width (in `ln|v|`).
    pub panel_scale: f64,
    /// Lower end of the `ln|v|` range.
    pub ln_v_min: f64,
}

impl IdentityQuadrature {
    pub fn new(m: u32) -> Self {
        IdentityQuadrature { weight: WeightConfig::new(m), nodes_per_panel: 30, panel_scale: 0.35, ln_v_min: -110.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport {
    /// `∫ sgn(v)(v−x) W F dv` and its closed form `(2/N)^m`.
    pub sign_moment: f64,
    pub sign_target: f64,
    pub sign_rel_err: f64,
    /// `∫ (x−v) W F dv` and its closed form `D_{N,m} x^{N−1}`.
    pub moment: f64,
    pub moment_target: f64,
    pub moment_rel_err: f64,
    /// `∫ |(v−x) W F| dv / (2/N)^m`: the cancellation the first identity hides.
    pub condition: f64,
}

/// Evaluate both identities at `x` in the working precision `R`.
pub fn integral_identities<R: real::Real>(x: f64, n: usize, m: u32, q: &IdentityQuadrature) -> Result<IdentityReport> {
    if n < 2 || n % 2 != 0 || m == 0 || q.weight.m != m {
        return Err(Error::input("identity check needs even N ≥ 2, m ≥ 1 and a matching weight configuration"));
    }
    if !(x > 0.0) {
        return Err(Error::domain("identity check needs x > 0"));
    }
    q.weight.validate()?;
    let (nf, mf) = (n as f64, m as f64);
    let rn = R::from_i64(n as i64);
    let rm = R::from_i64(m as i64);
    let ln_n = rn.ln();
    let half = R::from_f64(0.5);
    let ln_x = R::from_f64(x).ln();
    let lnfact: Vec<R> = ln_factorials::<R>(n);
    let gl_weight = GaussLegendre::<R>::new(q.weight.quad_order);
    let gl = GaussLegendre::<R>::new(q.nodes_per_panel);
    let efolds = q.weight.efolds();

    let ln_w = |ln_v: R| -> R {
        let lx = ln_v + half * rm * ln_n;
        if m == 1 {
            -half * (lx + lx).exp()
        } else {
            log_weight_direct(m, lx, &gl_weight, efolds)
        }
    };

    // ln|v| panels sized by the curvature (2N/m) e^{2s/m} of ln W
    let centre = x.powf(1.0 / mf);
    let s_max = mf * (centre + (250.0 / (nf * mf)).sqrt()).ln();
    let mut edges = alloc::vec![q.ln_v_min];
    let mut s = q.ln_v_min;
    while s < s_max {
        let curv = 2.0 * nf / mf * (2.0 * s / mf).exp();
        s += (q.panel_scale / curv.sqrt()).min(4.0);
        edges.push(s.min(s_max));
    }

    let (mut sign_moment, mut moment, mut l1) = (R::zero(), R::zero(), R::zero());
    let xr = R::from_f64(x);
    for w in edges.windows(2) {
        for (sr, wt) in gl.mapped(R::from_f64(w[0]), R::from_f64(w[1])) {
            let v = sr.exp();
            let lw = ln_w(sr);
            for side in [1i8, -1] {
                let la = rm * ln_n + ln_x + sr;
                let (fs, lf) = f_series_generic(side, la, n - 2, m, &lnfact);
                if fs == 0 {
                    continue;
                }
                let mag = (lw + lf).exp() * v * wt;
                let f = if fs > 0 { mag } else { -mag };
                let vs = if side > 0 { v } else { -v };
                let g = (vs - xr) * f;
                l1 += g.abs();
                if side > 0 {
                    sign_moment += g;
                } else {
                    sign_moment -= g;
                }
                moment -= g;
            }
        }
    }

    let sign_target = (R::from_f64(2.0) / rn).ln() * rm;
    let ln_d = rm
        * (half * (rn - R::from_f64(3.0)) * ln_n + half * (rn - R::one()) * R::from_f64(2.0).ln()
            + ln_gamma_half::<R>(n as u32 - 1)
            - lnfact[n - 2]);
    let moment_target = ln_d + (rn - R::one()) * ln_x;
    let (st, mt) = (sign_target.exp(), moment_target.exp());
    Ok(IdentityReport {
        sign_moment: sign_moment.to_f64(),
        sign_target: st.to_f64(),
        sign_rel_err: ((sign_moment - st) / st).abs().to_f64(),
        moment: moment.to_f64(),
        moment_target: mt.to_f64(),
        moment_rel_err: ((moment - mt) / mt).abs().to_f64(),
        condition: (l1 / st).to_f64(),
    })
}
