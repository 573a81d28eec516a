//! Gap probabilities as Fredholm Pfaffians: the alternating series
//! `1 + Σ_ℓ (−1)^ℓ/ℓ! ∫ Pf[K(x_i, x_j)]` on a Nyström grid.
//!
//! On a grid with weights `w_i`, the ℓ-fold integrals become sums over
//! ℓ-subsets of nodes, and
//! `Pf(J + z K_w) = Σ_S z^{|S|} Π_{i∈S} w_i Pf[K(x_i, x_j)]_{i,j∈S}`
//! with `J = ⊕ [[0, 1], [−1, 0]]` and `K_w` the kernel blocks scaled by
//! `√(w_i w_j)`. Evaluating the left side at roots of unity and applying a
//! discrete Fourier transform yields every series term at once.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{density_factor, edge_limit_kernel, normalized_kernel, KernelContext, KernelSample2x2, OriginLimitKernel};
use crate::pfaffian::{pfaffian_value, SkewMatrix};
use crate::quad::GaussLegendre;
use crate::special_fn::WeightConfig;

/// Nodes and positive weights on a finite interval.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: (f64, f64),
}

impl QuadratureGrid {
    /// Gauss–Legendre with `order` nodes on `[a, b]`.
    pub fn gauss_legendre(a: f64, b: f64, order: usize) -> Result<Self> {
        Self::power_mapped(a, b, order, 1)
    }

    /// Gauss–Legendre in `u ∈ [0, 1]` with `x = a + (b − a) u^p`, which
    /// clusters nodes at `a` to absorb a weak singularity there.
    pub fn power_mapped(a: f64, b: f64, order: usize, p: u32) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::input("grid needs a finite interval a ≤ b"));
        }
        if order == 0 || p == 0 {
            return Err(Error::input("grid order and power must be positive"));
        }
        let gl = GaussLegendre::<f64>::new(order);
        let (mut nodes, mut weights) = (Vec::with_capacity(order), Vec::with_capacity(order));
        let pf = p as f64;
        for (u, w) in gl.mapped(0.0, 1.0) {
            nodes.push(a + (b - a) * u.powi(p as i32));
            weights.push((b - a) * w * pf * u.powi(p as i32 - 1));
        }
        Ok(QuadratureGrid { nodes, weights, domain: (a, b) })
    }

    /// The grid reflected to `[−b, −a]`, nodes kept increasing.
    pub fn reflected(&self) -> Self {
        QuadratureGrid {
            nodes: self.nodes.iter().rev().map(|x| -x).collect(),
            weights: self.weights.iter().rev().copied().collect(),
            domain: (-self.domain.1, -self.domain.0),
        }
    }

    /// Concatenation of two grids on adjacent domains, `self` first.
    pub fn joined(&self, right: &Self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&right.nodes);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&right.weights);
        QuadratureGrid { nodes, weights, domain: (self.domain.0, right.domain.1) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapProbResult {
    /// `1 + Σ_{ℓ ≤ ell_max} terms[ℓ−1]`, clipped to `[0, 1]`.
    pub value: f64,
    /// `(−1)^ℓ/ℓ! T_ℓ` for `ℓ = 1..=ell_max`.
    pub terms: Vec<f64>,
    /// Size of the omitted terms `ℓ > ell_max` plus the rounding level of
    /// the Fourier extraction.
    pub tail_estimate: f64,
    pub ell_max: usize,
    pub converged: bool,
    /// Amount removed by clipping (zero when the sum was in range).
    pub clipped: f64,
}

impl GapProbResult {
    fn empty() -> Self {
        GapProbResult { value: 1.0, terms: Vec::new(), tail_estimate: 0.0, ell_max: 0, converged: true, clipped: 0.0 }
    }
}

/// Series terms from kernel samples on a grid. `kernel(i, j)` is queried for
/// `i ≤ j` only; the series is truncated after `ell_max` terms (capped at
/// the number of nodes, beyond which all terms vanish).
pub fn gap_series_on(
    grid: &QuadratureGrid,
    kernel: &mut dyn FnMut(usize, usize) -> Result<KernelSample2x2>,
    ell_max: usize,
    tol: f64,
) -> Result<GapProbResult> {
    let n = grid.len();
    if n == 0 || grid.weights.iter().all(|&w| w == 0.0) {
        return Ok(GapProbResult::empty());
    }
    if ell_max == 0 {
        return Err(Error::input("ell_max must be positive"));
    }
    let ell_max = ell_max.min(n);
    let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    // weighted blocks of the upper triangle
    let mut blocks = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let k = kernel(i, j)?;
            let scale = sw[i] * sw[j];
            if !(k.d.is_finite() && k.s_xy.is_finite() && k.s_yx.is_finite() && k.i.is_finite()) {
                return Err(Error::NoConvergence { estimate: f64::NAN, error: f64::INFINITY });
            }
            blocks.push([[k.d * scale, k.s_xy * scale], [-k.s_yx * scale, k.i * scale]]);
        }
    }
    let block = |i: usize, j: usize| blocks[i * n - i * (i + 1) / 2 + j];
    // Pf(J + zK_w) at the (n+1)-th roots of unity
    let points = n + 1;
    let mut values = Vec::with_capacity(points);
    let mut peak = 0.0f64;
    for k in 0..points {
        let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / points as f64);
        let a = SkewMatrix::<Complex64>::from_upper(2 * n, |r, c| {
            let (bi, bj) = (r / 2, c / 2);
            let e = block(bi, bj)[r % 2][c % 2];
            let j = if bi == bj { 1.0 } else { 0.0 };
            z * e + Complex64::new(j, 0.0)
        })?;
        let v = pfaffian_value(&a);
        peak = peak.max(v.norm());
        values.push(v);
    }
    // c_ℓ = (1/(n+1)) Σ_k P(z_k) z_k^{−ℓ}; the gap is Σ_ℓ (−1)^ℓ c_ℓ
    let coeff = |l: usize| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in values.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, -2.0 * PI * (k * l % points) as f64 / points as f64);
        }
        acc.re / points as f64
    };
    let sign = |l: usize| if l % 2 == 0 { 1.0 } else { -1.0 };
    let terms: Vec<f64> = (1..=ell_max).map(|l| sign(l) * coeff(l)).collect();
    let rest: f64 = (ell_max + 1..=n).map(|l| sign(l) * coeff(l)).sum();
    let tail_estimate = rest.abs() + 4.0 * points as f64 * f64::EPSILON * peak;
    let raw = 1.0 + terms.iter().sum::<f64>();
    let value = raw.clamp(0.0, 1.0);
    Ok(GapProbResult {
        value,
        terms,
        tail_estimate,
        ell_max,
        converged: tail_estimate <= tol,
        clipped: (raw - value).abs(),
    })
}

/// Gap probability of a kernel over a grid, with an optional envelope `ν`:
/// the kernel is used as `diag(1/ν, ν) K diag(1/ν, ν)`, which leaves every
/// Pfaffian correlation unchanged but can make the entries decay.
pub fn gap_series(
    kernel: &dyn Fn(f64, f64) -> Result<KernelSample2x2>,
    grid: &QuadratureGrid,
    envelope: Option<&dyn Fn(f64) -> f64>,
    ell_max: usize,
    tol: f64,
) -> Result<GapProbResult> {
    let env: Vec<f64> = grid.nodes.iter().map(|&x| envelope.map_or(1.0, |e| e(x))).collect();
    gap_series_on(
        grid,
        &mut |i, j| {
            let k = kernel(grid.nodes[i], grid.nodes[j])?;
            Ok(k.conjugated(1.0 / env[i], env[i], 1.0 / env[j], env[j]))
        },
        ell_max,
        tol,
    )
}

/// Length of the edge domain beyond `s`.
pub const EDGE_REACH: f64 = 16.0;

/// `P(ξ_max < s)` for the rescaled largest real eigenvalue, from the edge
/// kernel on `[s, s + 16]` with envelope `e^{−ξ}`.
pub fn edge_cdf(s: f64, grid_order: usize, tol: f64) -> Result<GapProbResult> {
    edge_cdf_with(s, grid_order, tol, true)
}

/// [`edge_cdf`] with the envelope switched on or off.
pub fn edge_cdf_with(s: f64, grid_order: usize, tol: f64, envelope: bool) -> Result<GapProbResult> {
    if !s.is_finite() {
        return Err(Error::input("edge point must be finite"));
    }
    let grid = QuadratureGrid::gauss_legendre(s, s + EDGE_REACH, grid_order)?;
    let nu = |x: f64| (-x).exp();
    gap_series(&|x, y| edge_limit_kernel(x, y), &grid, if envelope { Some(&nu) } else { None }, grid_order, tol)
}

/// Node clustering power for the origin grid: the origin weight has a
/// logarithmic singularity at 0 once `m ≥ 2`.
fn origin_power(m: u32) -> u32 {
    if m == 1 { 1 } else { 3 }
}

/// `P(no rescaled real eigenvalue in [0, s])` from the origin kernel; with
/// `symmetric` the interval is `[−s, s]`.
pub fn origin_survival(s: f64, m: u32, grid_order: usize, tol: f64, symmetric: bool) -> Result<GapProbResult> {
    let kernel = OriginLimitKernel::new(WeightConfig::new(m))?;
    origin_survival_with(&kernel, s, grid_order, tol, symmetric)
}

/// [`origin_survival`] reusing a prepared kernel.
pub fn origin_survival_with(
    kernel: &OriginLimitKernel,
    s: f64,
    grid_order: usize,
    tol: f64,
    symmetric: bool,
) -> Result<GapProbResult> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::precondition("origin survival needs s > 0", s));
    }
    let half = QuadratureGrid::power_mapped(0.0, s, grid_order, origin_power(kernel.m()))?;
    let grid = if symmetric { half.reflected().joined(&half) } else { half };
    let n = grid.len();
    gap_series(&|x, y| kernel.sample(x, y), &grid, None, n, tol)
}

/// `P(no real eigenvalue in (a, b))` at finite N, from the density-normalized
/// kernel; the normalization is returned to the weights.
pub fn finite_n_gap(ctx: &KernelContext, interval: (f64, f64), grid_order: usize, ell_max: usize) -> Result<GapProbResult> {
    let (a, b) = interval;
    if !(a <= b) {
        return Err(Error::input("interval endpoints out of order"));
    }
    if a == b {
        return Ok(GapProbResult::empty());
    }
    let mut grid = QuadratureGrid::gauss_legendre(a, b, grid_order)?;
    for (w, &x) in grid.weights.iter_mut().zip(&grid.nodes) {
        *w *= density_factor(x, ctx.n(), ctx.m());
    }
    let nodes = grid.nodes.clone();
    gap_series_on(&grid, &mut |i, j| normalized_kernel(nodes[i], nodes[j], ctx), ell_max, 1e-10)
}
