//! Finite-N kernels of the real eigenvalues of `N^{−m/2} G_1⋯G_m`, their
//! rescalings and limits.
//!
//! Conventions (the ones under which the 2×2 kernel reproduces the
//! correlation functions):
//!
//! ```text
//! D(x,y) = −∂_y S(x,y) = 2C (y−x) W(x) W(y) F(xy)
//! I(x,y) = ∫_x^y S(t,y) dt + ½ sgn(x−y)
//! K(x,y) = [[D(x,y), S(x,y)], [−S(y,x), I(x,y)]]
//! ```

mod engine;
mod identities;
mod limits;
mod scaled;

pub use engine::KernelQuad;
pub use identities::{integral_identities, IdentityQuadrature, IdentityReport};
pub use limits::{bulk_limit_kernel, edge_limit_kernel, nu, nu_deviation, origin_limit_kernel, OriginLimitKernel};
pub use scaled::{global_approx, scaled_kernel, GlobalApprox, Regime, DEFAULT_REGION_EPS};

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use engine::{Core, Series};
use crate::error::{Error, Result};
use crate::real::ln_gamma_half;
use crate::special_fn::{LogWeight, SignedLog, TruncatedSeries, WeightConfig};

/// Which of the equivalent integral forms of `S` to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    /// `C ∫ (x−v) sgn(y−v) W W F dv` over the whole line.
    Direct,
    /// `−2C ∫_y^∞ (x−v) W W F dv + C D x^{N−1} W(x)`.
    UpperTail,
    /// `2C ∫_{−∞}^y (x−v) W W F dv − C D x^{N−1} W(x)`.
    LowerTail,
    /// `2C ∫_0^y (x−v) W W F dv + C (2/N)^m W(x)`.
    FromOrigin,
}

impl Representation {
    pub const ALL: [Representation; 4] =
        [Representation::Direct, Representation::UpperTail, Representation::LowerTail, Representation::FromOrigin];
}

/// One evaluation of the 2×2 kernel.
///
/// `s_yx` holds `S(y,x)` itself; the matrix entry is its negative (see
/// [`KernelSample2x2::matrix`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample2x2 {
    pub d: f64,
    pub s_xy: f64,
    pub s_yx: f64,
    pub i: f64,
}

impl KernelSample2x2 {
    /// `[[d, s_xy], [−s_yx, i]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.d, self.s_xy], [-self.s_yx, self.i]]
    }

    /// The same sample after conjugation by `diag(a(x), b(x)) · K · diag(a(y), b(y))`.
    pub fn conjugated(&self, ax: f64, bx: f64, ay: f64, by: f64) -> Self {
        KernelSample2x2 { d: ax * ay * self.d, s_xy: ax * by * self.s_xy, s_yx: bx * ay * self.s_yx, i: bx * by * self.i }
    }
}

/// Everything that depends only on `(N, m)`.
#[derive(Clone, Debug)]
pub struct KernelContext {
    n: usize,
    core: Core,
}

/// `ln C_{N,m} = (3m/2) ln N − m ln(2√(2π))`.
pub fn log_c_nm(n: f64, m: u32) -> f64 {
    let mf = m as f64;
    1.5 * mf * n.ln() - mf * (2.0 * (2.0 * core::f64::consts::PI).sqrt()).ln()
}

/// `ln D_{N,m} = m [ (N−3)/2 ln N + (N−1)/2 ln 2 + ln Γ((N−1)/2) − ln (N−2)! ]`.
pub fn log_d_nm(n: usize, m: u32) -> f64 {
    let nf = n as f64;
    let ln_fact: f64 = (2..=n.saturating_sub(2)).map(|k| (k as f64).ln()).sum();
    m as f64
        * (0.5 * (nf - 3.0) * nf.ln() + 0.5 * (nf - 1.0) * core::f64::consts::LN_2 + ln_gamma_half::<f64>(n as u32 - 1)
            - ln_fact)
}

impl KernelContext {
    pub fn new(n: usize, m: u32) -> Result<Self> {
        Self::with_config(n, WeightConfig::new(m), KernelQuad::for_factors(m))
    }

    pub fn with_config(n: usize, weight: WeightConfig, quad: KernelQuad) -> Result<Self> {
        let m = weight.m;
        if m == 0 {
            return Err(Error::domain("the number of factors m must be positive"));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::domain(alloc::format!(
                "matrix size N = {n} is not allowed: the Pfaffian structure of the real eigenvalues assumes N even (N ≥ 2)"
            )));
        }
        let nf = n as f64;
        let log_c = log_c_nm(nf, m);
        let core = Core {
            m,
            ln_n: nf.ln(),
            nm: nf * m as f64,
            log_c,
            log_d: Some(log_d_nm(n, m)),
            boundary_power: nf - 1.0,
            log_g: log_c + m as f64 * (2.0 / nf).ln(),
            series: Series::Truncated(TruncatedSeries::for_size(n, m)),
            weight: LogWeight::new(weight)?,
            quad,
        };
        Ok(KernelContext { n, core })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.core.m
    }

    pub fn log_c(&self) -> f64 {
        self.core.log_c
    }

    pub fn log_d(&self) -> f64 {
        self.core.log_d.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn quad(&self) -> &KernelQuad {
        &self.core.quad
    }

    pub fn weight(&self) -> &LogWeight {
        &self.core.weight
    }

    /// `ln w(N^{m/2} x)`.
    pub fn ln_weight(&self, x: f64) -> f64 {
        self.core.ln_wn_at(x)
    }

    /// `f_{N−2}(N^m a)`.
    pub fn series(&self, a: f64) -> SignedLog {
        let s = if a > 0.0 { 1 } else if a < 0.0 { -1 } else { 0 };
        self.core.series_at(s, a.abs().ln())
    }

    /// `C (2/N)^m ∫_0^y w(N^{m/2} t) dt` for `y ≥ 0` (tends to ½).
    pub fn head_mass(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Ok(-self.core.head_mass(-y)?);
        }
        self.core.head_mass(y)
    }

    /// Natural width `1/√(Nm)` of the kernel in root coordinates.
    pub fn width(&self) -> f64 {
        self.core.width()
    }

    /// `∫_a^b S(t, y) dt`.
    pub fn s_integral(&self, a: f64, b: f64, y: f64) -> Result<f64> {
        self.core.s_integral(a, b, y)
    }
}

/// Kernel context for an `N × N` product of `m` factors.
pub fn make_context(n: usize, m: u32) -> Result<KernelContext> {
    KernelContext::new(n, m)
}

/// `S_N(x,y)`, evaluated with the saddle `v = x` kept outside the range.
pub fn s_kernel(x: f64, y: f64, ctx: &KernelContext) -> Result<f64> {
    Ok(ctx.core.s(x, y)?.to_real())
}

/// `S_N(x,y)` in signed-log form (no underflow far from the diagonal).
pub fn s_kernel_log(x: f64, y: f64, ctx: &KernelContext) -> Result<SignedLog> {
    ctx.core.s(x, y)
}

/// `S_N(x,y)` through a chosen representation, saddle or not.
pub fn s_kernel_rep(x: f64, y: f64, ctx: &KernelContext, rep: Representation) -> Result<SignedLog> {
    ctx.core.s_rep(x, y, rep)
}

pub fn d_kernel(x: f64, y: f64, ctx: &KernelContext) -> f64 {
    ctx.core.d(x, y).to_real()
}

pub fn d_kernel_log(x: f64, y: f64, ctx: &KernelContext) -> SignedLog {
    ctx.core.d(x, y)
}

/// `I_N(x,y)` as `G(y) − ∫_0^x S(t,y) dt + ½ sgn(x−y)` (for `y ≥ 0`;
/// antisymmetry `I(−x,−y) = −I(x,y)` otherwise).
pub fn i_kernel(x: f64, y: f64, ctx: &KernelContext) -> Result<f64> {
    ctx.core.i(x, y)
}

/// `I_N(x,y)` by direct quadrature of its definition.
pub fn i_kernel_direct(x: f64, y: f64, ctx: &KernelContext) -> Result<f64> {
    ctx.core.i_direct(x, y)
}

pub fn matrix_kernel(x: f64, y: f64, ctx: &KernelContext) -> Result<KernelSample2x2> {
    Ok(KernelSample2x2 {
        d: d_kernel(x, y, ctx),
        s_xy: s_kernel(x, y, ctx)?,
        s_yx: s_kernel(y, x, ctx)?,
        i: i_kernel(x, y, ctx)?,
    })
}

/// Limiting global density `|x|^{1/m−1}/(2m)` on `[−1, 1]`.
pub fn rho_density(x: f64, m: u32) -> f64 {
    if !(x.abs() <= 1.0) || m == 0 {
        return 0.0;
    }
    let mf = m as f64;
    if x == 0.0 {
        return if m == 1 { 0.5 } else { f64::INFINITY };
    }
    x.abs().powf(1.0 / mf - 1.0) / (2.0 * mf)
}

/// `√N ρ(x)`, the per-point factor removed by [`normalized_kernel`]; outside
/// `(−1, 1)` the density is frozen at its edge value `1/(2m)` so the factor
/// stays positive.
pub fn density_factor(x: f64, n: usize, m: u32) -> f64 {
    let r = if x.abs() < 1.0 { rho_density(x, m) } else { 0.5 / m as f64 };
    (n as f64).sqrt() * r
}

/// The kernel conjugated by `1/(√N ρ)` on the first component: entries
/// `D/(Nρ(x)ρ(y))`, `S(x,y)/(√N ρ(x))`, `S(y,x)/(√N ρ(y))`, `I`. Pfaffians
/// change by `∏ √N ρ(x_j)` only, and in the bulk all entries are O(1).
pub fn normalized_kernel(x: f64, y: f64, ctx: &KernelContext) -> Result<KernelSample2x2> {
    let (ax, ay) = (1.0 / density_factor(x, ctx.n, ctx.m()), 1.0 / density_factor(y, ctx.n, ctx.m()));
    Ok(matrix_kernel(x, y, ctx)?.conjugated(ax, 1.0, ay, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn constants() {
        let ctx = make_context(4, 1).unwrap();
        let want = 1.5 * 4f64.ln() - (2.0 * (2.0 * core::f64::consts::PI).sqrt()).ln();
        assert!((ctx.log_c() - want).abs() < 1e-15);
        assert!(make_context(5, 1).is_err());
        assert!(make_context(4, 0).is_err());
    }

    #[test]
    fn symmetry_under_reflection() {
        let ctx = make_context(50, 2).unwrap();
        let a = s_kernel(0.3, 0.5, &ctx).unwrap();
        let b = s_kernel(-0.3, -0.5, &ctx).unwrap();
        assert!(rel(a, b) < 1e-14);
    }

    #[test]
    fn representations_agree() {
        let ctx = make_context(50, 1).unwrap();
        let vals: alloc::vec::Vec<f64> =
            Representation::ALL.iter().map(|&r| s_kernel_rep(0.4, 0.6, &ctx, r).unwrap().to_real()).collect();
        for a in &vals {
            for b in &vals {
                assert!(rel(*a, *b) < 1e-6, "{vals:?}");
            }
        }
    }

    #[test]
    fn bulk_density() {
        let ctx = make_context(400, 1).unwrap();
        let s = s_kernel(0.5, 0.5, &ctx).unwrap();
        let want = (400.0 / (2.0 * core::f64::consts::PI)).sqrt();
        assert!(rel(s, want) < 0.05, "{s} vs {want}");
    }

    #[test]
    fn derivative_kernel() {
        let ctx = make_context(60, 2).unwrap();
        assert_eq!(d_kernel(0.4, 0.4, &ctx), 0.0);
        assert!(rel(d_kernel(0.2, 0.7, &ctx), -d_kernel(0.7, 0.2, &ctx)) < 1e-14);

        let ctx = make_context(40, 1).unwrap();
        let h = 1e-5;
        let fd = -(s_kernel(0.3, 0.6 + h, &ctx).unwrap() - s_kernel(0.3, 0.6 - h, &ctx).unwrap()) / (2.0 * h);
        assert!(rel(fd, d_kernel(0.3, 0.6, &ctx)) < 1e-4);
    }

    #[test]
    fn integrated_kernel() {
        let ctx = make_context(40, 1).unwrap();
        assert_eq!(i_kernel(0.3, 0.3, &ctx).unwrap(), 0.0);
        let a = i_kernel(0.3, 0.5, &ctx).unwrap();
        let b = i_kernel_direct(0.3, 0.5, &ctx).unwrap();
        assert!((a - b).abs() < 1e-5, "{a} {b}");
        assert!((a + i_kernel(0.5, 0.3, &ctx).unwrap()).abs() < 1e-8);

        // far apart the integrated kernel vanishes like erfc
        let ctx = make_context(400, 1).unwrap();
        assert!(i_kernel(0.2, 0.9, &ctx).unwrap().abs() < 1e-3);
    }

    #[test]
    fn one_point_function_is_the_diagonal() {
        let ctx = make_context(100, 1).unwrap();
        let k = matrix_kernel(0.5, 0.5, &ctx).unwrap();
        assert_eq!(k.d, 0.0);
        assert_eq!(k.i, 0.0);
        assert_eq!(k.s_xy, k.s_yx);
    }

    #[test]
    fn density_formula() {
        assert_eq!(rho_density(0.5, 1), 0.5);
        assert_eq!(rho_density(1.0, 2), 0.25);
        assert_eq!(rho_density(1.5, 2), 0.0);
        assert!(rho_density(0.0, 3).is_infinite());
    }

    #[test]
    fn head_mass_saturates() {
        for m in 1..=3 {
            let ctx = make_context(50, m).unwrap();
            assert!((ctx.head_mass(5.0).unwrap() - 0.5).abs() < 1e-8);
            assert!(ctx.head_mass(0.0).unwrap().abs() < 1e-8);
        }
    }
}
