//! Analytic predictions: truncation regions, limiting variances, finite-N
//! variances and counts from the kernel, and the kernel-decay report.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::kernel::{d_kernel, normalized_kernel, rho_density, s_kernel, KernelContext, KernelSample2x2};
use crate::quad::{adaptive, GaussLegendre, Tolerance};

/// The bulk `{N^{−m/2+ε} < |x| < 1 − N^{−1/2+ε}}` where the kernel
/// asymptotics hold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationRegion {
    pub n: usize,
    pub m: u32,
    pub epsilon: f64,
    /// Inner cut `N^{−m/2+ε}`.
    pub inner: f64,
    /// Outer cut `1 − N^{−1/2+ε}`.
    pub outer: f64,
}

impl TruncationRegion {
    /// `[−outer, −inner]` and `[inner, outer]`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        vec![(-self.outer, -self.inner), (self.inner, self.outer)]
    }

    pub fn contains(&self, x: f64) -> bool {
        x.abs() > self.inner && x.abs() < self.outer
    }

    pub fn measure(&self) -> f64 {
        2.0 * (self.outer - self.inner)
    }
}

pub fn truncation_region(n: usize, m: u32, epsilon: f64) -> Result<TruncationRegion> {
    let cap = (m as f64 / 2.0).min(0.5);
    if !(epsilon > 0.0 && epsilon < cap) {
        return Err(Error::precondition("0 < ε < min(m/2, 1/2)", cap));
    }
    let nf = n as f64;
    let inner = nf.powf(-(m as f64) / 2.0 + epsilon);
    let outer = 1.0 - nf.powf(-0.5 + epsilon);
    if !(inner < outer) {
        return Err(Error::domain(alloc::format!("truncation region is empty at N = {n}, m = {m}, ε = {epsilon}")));
    }
    Ok(TruncationRegion { n, m, epsilon, inner, outer })
}

/// `√(2m/π)(2 − √2)`.
pub fn variance_constant(m: u32) -> f64 {
    (2.0 * m as f64 / PI).sqrt() * (2.0 - core::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarianceRegime {
    Global,
    /// Test function `f(N^τ(E − x))`.
    MesoBulk { e: f64, tau: f64 },
    /// Test function `f(N^τ x)`.
    MesoOrigin { tau: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariancePrediction {
    pub regime: VarianceRegime,
    pub sigma2: f64,
    /// The variance grows like `N^{2·normalization_exponent}`.
    pub normalization_exponent: f64,
}

fn quad_tol() -> Tolerance {
    Tolerance { abs: 1e-13, rel: 1e-11, max_intervals: 4000 }
}

/// `∫_ℝ g` through `x = u/(1 − u²)`.
fn integrate_line(g: &dyn Fn(f64) -> f64, panels: usize) -> Result<f64> {
    let h = |u: f64| {
        let d = 1.0 - u * u;
        let v = g(u / d);
        if v == 0.0 { 0.0 } else { v * (1.0 + u * u) / (d * d) }
    };
    Ok(adaptive(h, -1.0, 1.0, panels, quad_tol())?.value)
}

/// Limiting variance of the (possibly zoomed) linear statistic.
pub fn variance_prediction<F: Fn(f64) -> f64>(
    regime: VarianceRegime,
    f: F,
    m: u32,
    quad_order: usize,
) -> Result<VariancePrediction> {
    if m == 0 {
        return Err(Error::input("m must be positive"));
    }
    let mf = m as f64;
    let c = variance_constant(m);
    let panels = quad_order.max(2);
    let (sigma2, normalization_exponent) = match regime {
        VarianceRegime::Global => {
            // ρ(x) dx = dt/2 with x = sgn(t)|t|^m
            let g = |t: f64| {
                let v = f(t.signum() * t.abs().powi(m as i32));
                0.5 * v * v
            };
            (c * adaptive(g, -1.0, 1.0, panels, quad_tol())?.value, 0.25)
        }
        VarianceRegime::MesoBulk { e, tau } => {
            if !(e != 0.0 && e.abs() < 1.0) {
                return Err(Error::precondition("mesoscopic bulk needs E ∈ (−1, 1) \\ {0}", e));
            }
            if !(tau > 0.0 && tau < 0.5) {
                return Err(Error::precondition("mesoscopic bulk needs 0 < τ < 1/2", tau));
            }
            let l2 = integrate_line(&|x| f(x) * f(x), panels)?;
            (c * rho_density(e, m) * l2, (1.0 - 2.0 * tau) / 4.0)
        }
        VarianceRegime::MesoOrigin { tau } => {
            if !(tau > 0.0 && tau < mf / 2.0) {
                return Err(Error::precondition("mesoscopic origin needs 0 < τ < m/2", tau));
            }
            // |x|^{1/m−1} dx = m dt
            let l2 = integrate_line(
                &|t| {
                    let v = f(t.signum() * t.abs().powi(m as i32));
                    mf * v * v
                },
                panels,
            )?;
            let k = (2.0 - core::f64::consts::SQRT_2) / (2.0 * mf * PI).sqrt();
            (k * l2, 0.25 - tau / (2.0 * mf))
        }
    };
    Ok(VariancePrediction { regime, sigma2, normalization_exponent })
}

/// `x = sgn(t)|t|^m`.
fn from_root(t: f64, m: u32) -> f64 {
    t.signum() * t.abs().powi(m as i32)
}

/// `t = sgn(x)|x|^{1/m}`.
fn to_root(x: f64, m: u32) -> f64 {
    if m == 1 { x } else { x.signum() * x.abs().powf(1.0 / m as f64) }
}

#[derive(Clone, Debug)]
struct Panel {
    lo: f64,
    hi: f64,
    first: usize,
}

/// Composite Gauss–Legendre nodes in root coordinates `t = sgn(x)|x|^{1/m}`
/// over a union of intervals, one panel per kernel width.
#[derive(Clone, Debug)]
pub struct KernelGrid {
    m: u32,
    order: usize,
    t: Vec<f64>,
    x: Vec<f64>,
    /// `dx/dt`.
    jac: Vec<f64>,
    /// Quadrature weight in `x` (includes the Jacobian).
    w: Vec<f64>,
    panel_of: Vec<usize>,
    panels: Vec<Panel>,
    rule: GaussLegendre,
    running: Vec<Vec<f64>>,
}

impl KernelGrid {
    /// `intervals` in `x`, disjoint and increasing.
    pub fn new(intervals: &[(f64, f64)], m: u32, width: f64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::input("quadrature order must be positive"));
        }
        if intervals.is_empty() {
            return Err(Error::input("no integration intervals"));
        }
        for (k, &(a, b)) in intervals.iter().enumerate() {
            if !(a < b) || (k > 0 && intervals[k - 1].1 > a) {
                return Err(Error::input("intervals must be nonempty, disjoint and increasing"));
            }
        }
        let rule = GaussLegendre::new(order);
        let running = rule.cumulative();
        let mut g = KernelGrid {
            m,
            order,
            t: Vec::new(),
            x: Vec::new(),
            jac: Vec::new(),
            w: Vec::new(),
            panel_of: Vec::new(),
            panels: Vec::new(),
            rule,
            running,
        };
        let mf = m as f64;
        for &(a, b) in intervals {
            let (ta, tb) = (to_root(a, m), to_root(b, m));
            let count = ((tb - ta) / width).ceil().max(1.0) as usize;
            let h = (tb - ta) / count as f64;
            for p in 0..count {
                let lo = ta + h * p as f64;
                let hi = if p + 1 == count { tb } else { lo + h };
                let idx = g.panels.len();
                g.panels.push(Panel { lo, hi, first: g.t.len() });
                for (t, wt) in g.rule.mapped(lo, hi) {
                    let jac = if m == 1 { 1.0 } else { mf * t.abs().powi(m as i32 - 1) };
                    g.t.push(t);
                    g.x.push(from_root(t, m));
                    g.jac.push(jac);
                    g.w.push(wt * jac);
                    g.panel_of.push(idx);
                }
            }
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x[i]
    }

    /// Root coordinate of node `i`.
    pub fn root(&self, i: usize) -> f64 {
        self.t[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    fn nodes_of(&self, panels: Range<usize>) -> Range<usize> {
        if panels.is_empty() {
            return 0..0;
        }
        self.panels[panels.start].first..self.panels[panels.end - 1].first + self.order
    }

    /// Running integral `∫_{start}^{x_i} g(x) dx` at every node of the
    /// consecutive `panels`, from integrand values `g(x_i)` at those nodes;
    /// `gap(a, b)` supplies `∫_a^b g` over holes between intervals.
    fn running_integral(
        &self,
        panels: Range<usize>,
        g: &dyn Fn(usize) -> f64,
        gap: &mut dyn FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Vec<f64>> {
        let nodes = self.nodes_of(panels.clone());
        let mut out = vec![0.0; nodes.len()];
        let mut edge = 0.0;
        for p in panels.clone() {
            let pan = &self.panels[p];
            if p > panels.start {
                let prev = &self.panels[p - 1];
                if prev.hi < pan.lo {
                    edge += gap(from_root(prev.hi, self.m), from_root(pan.lo, self.m))?;
                }
            }
            let half = 0.5 * (pan.hi - pan.lo);
            let vals: Vec<f64> = (0..self.order).map(|k| g(pan.first + k) * self.jac[pan.first + k]).collect();
            for k in 0..self.order {
                let acc: f64 = self.running[k].iter().zip(&vals).map(|(q, v)| q * v).sum();
                out[pan.first + k - nodes.start] = edge + half * acc;
            }
            edge += half * self.rule.weights.iter().zip(&vals).map(|(w, v)| w * v).sum::<f64>();
        }
        Ok(out)
    }
}

/// Band half-width in units of the kernel width.
pub const BAND_WIDTHS: f64 = 10.0;

/// The 2×2 kernel tabulated on all node pairs of a [`KernelGrid`] closer
/// than [`BAND_WIDTHS`] kernel widths in root coordinates; farther pairs are
/// taken as zero. `I` is built from running integrals of the tabulated `S`
/// columns, so beyond `S` and `D` no kernel evaluations are needed.
#[derive(Clone, Debug)]
pub struct KernelTable {
    grid: KernelGrid,
    /// Per panel, the range of panels within the band.
    band_panels: Vec<Range<usize>>,
    /// Per node, the node range of its band.
    band: Vec<Range<usize>>,
    s: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
    /// `∫_{x_i}^{x_j} S(t, x_j) dt`.
    i_smooth: Vec<Vec<f64>>,
}

impl KernelTable {
    pub fn new(ctx: &KernelContext, intervals: &[(f64, f64)], order: usize) -> Result<Self> {
        let grid = KernelGrid::new(intervals, ctx.m(), ctx.width(), order)?;
        let reach = BAND_WIDTHS * ctx.width();
        let centre: Vec<f64> = grid.panels.iter().map(|p| 0.5 * (p.lo + p.hi)).collect();
        let half: Vec<f64> = grid.panels.iter().map(|p| 0.5 * (p.hi - p.lo)).collect();
        let np = grid.panels.len();
        let near = |p: usize, q: usize| (centre[p] - centre[q]).abs() <= reach + half[p] + half[q];
        let band_panels: Vec<Range<usize>> = (0..np)
            .map(|p| {
                let lo = (0..=p).rev().take_while(|&q| near(p, q)).last().unwrap_or(p);
                let hi = (p..np).take_while(|&q| near(p, q)).last().unwrap_or(p) + 1;
                lo..hi
            })
            .collect();
        let band: Vec<Range<usize>> = (0..grid.len()).map(|i| grid.nodes_of(band_panels[grid.panel_of[i]].clone())).collect();
        let mut s = Vec::with_capacity(grid.len());
        let mut d = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let xi = grid.x[i];
            let mut srow = Vec::with_capacity(band[i].len());
            let mut drow = Vec::with_capacity(band[i].len());
            for j in band[i].clone() {
                let xj = grid.x[j];
                srow.push(s_kernel(xi, xj, ctx)?);
                drow.push(if i == j { 0.0 } else { d_kernel(xi, xj, ctx) });
            }
            s.push(srow);
            d.push(drow);
        }
        let mut i_smooth: Vec<Vec<f64>> = band.iter().map(|r| vec![0.0; r.len()]).collect();
        for j in 0..grid.len() {
            let y = grid.x[j];
            let panels = band_panels[grid.panel_of[j]].clone();
            let nodes = grid.nodes_of(panels.clone());
            let prim = grid.running_integral(
                panels,
                &|i| s[i][j - band[i].start],
                &mut |a, b| ctx.s_integral(a, b, y),
            )?;
            let at_y = prim[j - nodes.start];
            for i in nodes.clone() {
                i_smooth[i][j - band[i].start] = at_y - prim[i - nodes.start];
            }
        }
        Ok(KernelTable { grid, band_panels, band, s, d, i_smooth })
    }

    pub fn grid(&self) -> &KernelGrid {
        &self.grid
    }

    /// Nodes paired with node `i`.
    pub fn band(&self, i: usize) -> Range<usize> {
        self.band[i].clone()
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        self.band[i].contains(&j)
    }

    /// `K(x_i, x_j)`, zero outside the band.
    pub fn sample(&self, i: usize, j: usize) -> KernelSample2x2 {
        if !self.in_band(i, j) {
            return KernelSample2x2 { d: 0.0, s_xy: 0.0, s_yx: 0.0, i: 0.0 };
        }
        let a = j - self.band[i].start;
        let b = i - self.band[j].start;
        let (xi, xj) = (self.grid.x[i], self.grid.x[j]);
        let sign = if xi > xj { 0.5 } else if xi < xj { -0.5 } else { 0.0 };
        KernelSample2x2 {
            d: self.d[i][a],
            s_xy: self.s[i][a],
            s_yx: self.s[j][b],
            i: if i == j { 0.0 } else { self.i_smooth[i][a] + sign },
        }
    }

    /// Number of panels, and the band of panel `p` (diagnostics).
    pub fn panel_band(&self, p: usize) -> Range<usize> {
        self.band_panels[p].clone()
    }
}

/// `Var Σ_j f(λ_j) 1_{λ_j ∈ region}` from the finite-N kernel:
/// `∫ f² S(x,x) − ∫∫ f f D I − ∫∫ f f S(x,y) S(y,x)`.
pub fn finite_n_variance<F: Fn(f64) -> f64>(
    f: F,
    ctx: &KernelContext,
    region: &TruncationRegion,
    quad_order: usize,
) -> Result<f64> {
    finite_n_variance_over(f, ctx, &region.intervals(), quad_order)
}

/// [`finite_n_variance`] over arbitrary disjoint increasing intervals (the
/// whole spectrum when they cover the support).
pub fn finite_n_variance_over<F: Fn(f64) -> f64>(
    f: F,
    ctx: &KernelContext,
    intervals: &[(f64, f64)],
    quad_order: usize,
) -> Result<f64> {
    let table = KernelTable::new(ctx, intervals, quad_order)?;
    variance_on(&f, &table)
}

/// Half-width `1 + 10/√N` beyond which the finite-N density is negligible.
pub fn spectrum_reach(n: usize) -> f64 {
    1.0 + (100.0 / n as f64).sqrt()
}

/// [`finite_n_variance`] on a precomputed table over the statistic's support.
///
/// `I` jumps by one across the diagonal, so `D·I` has a kink there; the
/// jump part `½ sgn(x−y)` is integrated separately as
/// `∫ dx f(x) ∫_{y<x} f(y) D(x,y) dy`, leaving a smooth tensor integrand.
pub fn variance_on(f: &dyn Fn(f64) -> f64, table: &KernelTable) -> Result<f64> {
    let g = table.grid();
    let n = g.len();
    let fx: Vec<f64> = (0..n).map(|i| f(g.x(i))).collect();
    let mut diag = 0.0;
    let mut smooth = 0.0;
    let mut jump = 0.0;
    for i in 0..n {
        if fx[i] == 0.0 {
            continue;
        }
        let wi = g.weight(i) * fx[i];
        diag += wi * fx[i] * table.s[i][i - table.band[i].start];
        let band = table.band(i);
        let mut row = 0.0;
        for j in band.clone() {
            let a = j - band.start;
            let b = i - table.band[j].start;
            row += g.weight(j) * fx[j] * (table.d[i][a] * table.i_smooth[i][a] + table.s[i][a] * table.s[j][b]);
        }
        smooth += wi * row;
        let panels = table.band_panels[g.panel_of[i]].clone();
        let below = g.running_integral(panels, &|j| fx[j] * table.d[i][j - band.start], &mut |_, _| Ok(0.0))?;
        jump += wi * below[i - band.start];
    }
    Ok(diag - smooth - jump)
}

/// `∫ S(x,x) dx` over `region`, or over the whole line when `None`.
pub fn expected_count(ctx: &KernelContext, region: Option<&[(f64, f64)]>) -> Result<f64> {
    let m = ctx.m();
    let mf = m as f64;
    let panels_per = |len: f64| ((len / ctx.width()).ceil() as usize).clamp(1, 400);
    let density = |t: f64| -> f64 {
        let jac = if m == 1 { 1.0 } else { mf * t.abs().powi(m as i32 - 1) };
        let x = from_root(t, m);
        jac * s_kernel(x, x, ctx).unwrap_or(f64::NAN)
    };
    let integrate = |ta: f64, tb: f64| -> Result<f64> {
        let r = adaptive(&density, ta, tb, panels_per(tb - ta), Tolerance { abs: 1e-12, rel: 1e-11, max_intervals: 4000 })?;
        if !r.value.is_finite() {
            return Err(Error::NoConvergence { estimate: r.value, error: r.error });
        }
        Ok(r.value)
    };
    match region {
        Some(intervals) => {
            let mut total = 0.0;
            for &(a, b) in intervals {
                if !(a <= b) {
                    return Err(Error::input("interval endpoints out of order"));
                }
                total += integrate(to_root(a, m), to_root(b, m))?;
            }
            Ok(total)
        }
        None => {
            // the density is even; its tail beyond the edge is Gaussian on
            // the 1/√N scale, which at small N reaches far past |x| = 1
            let reach = spectrum_reach(ctx.n());
            let half = integrate(0.0, to_root(reach, m))?;
            let tail = density(reach) * ctx.width();
            if !(tail.abs() <= 1e-10 * half.abs()) {
                return Err(Error::precondition("density tail is not negligible at the cutoff", reach));
            }
            Ok(2.0 * half)
        }
    }
}

/// One pair of the kernel-decay table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    /// Rescaled coordinates `ξ = sgn(x)√N|x|^{1/m}`.
    pub xi: (f64, f64),
    pub x: (f64, f64),
    pub separation: f64,
    pub mixed_sign: bool,
    /// Largest normalized kernel entry magnitude.
    pub max_entry: f64,
    /// Normalized two-point cluster function `r^{(2)}/(Nρ(x)ρ(y))`.
    pub cluster: f64,
    /// `C e^{−c Δξ²} + 1e−6` with the surrogate constants.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Least-squares `c` in `max_entry ≈ A e^{−c Δξ²}` over separated
    /// same-sign pairs; `None` with fewer than two usable rows.
    pub fitted_rate: Option<f64>,
}

impl DecayReport {
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.max_entry <= r.bound && r.cluster.abs() <= r.bound)
    }
}

/// Surrogate decay constants `C`, `c`.
pub const DECAY_PREFACTOR: f64 = 10.0;
pub const DECAY_RATE: f64 = 0.2;

/// Normalized kernel magnitudes for every pair of the rescaled points.
pub fn clustering_report(ctx: &KernelContext, points: &[f64]) -> Result<DecayReport> {
    let n = ctx.n() as f64;
    let m = ctx.m();
    let xs: Vec<f64> = points.iter().map(|&xi| xi.signum() * (xi.abs() / n.sqrt()).powi(m as i32)).collect();
    let mut rows = Vec::new();
    for a in 0..points.len() {
        for b in a..points.len() {
            let (x, y) = (xs[a], xs[b]);
            let k = normalized_kernel(x, y, ctx)?;
            let sep = (points[a] - points[b]).abs();
            let max_entry = if a == b {
                k.s_xy.abs()
            } else {
                [k.d, k.s_xy, k.s_yx, k.i].iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
            };
            // ρ̃2 − ρ̃1ρ̃1 = −(D̃ I + S̃(x,y) S̃(y,x)), zero-separation limit −ρ̃1²
            let cluster = if a == b { -k.s_xy * k.s_xy } else { -(k.d * k.i + k.s_xy * k.s_yx) };
            rows.push(DecayRow {
                xi: (points[a], points[b]),
                x: (x, y),
                separation: sep,
                mixed_sign: x * y < 0.0,
                max_entry,
                cluster,
                bound: DECAY_PREFACTOR * (-DECAY_RATE * sep * sep).exp() + 1e-6,
            });
        }
    }
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.mixed_sign && r.separation >= 1.0 && r.max_entry > 1e-14)
        .map(|r| (r.separation * r.separation, r.max_entry.ln()))
        .collect();
    let fitted_rate = if usable.len() >= 2 {
        let k = usable.len() as f64;
        let (sx, sy) = usable.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        let (mx, my) = (sx / k, sy / k);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &(x, y) in &usable {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
        if sxx > 0.0 { Some(-sxy / sxx) } else { None }
    } else {
        None
    };
    Ok(DecayReport { rows, fitted_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_context;

    #[test]
    fn region_endpoints() {
        let r = truncation_region(10_000, 1, 0.1).unwrap();
        assert!((r.inner - 10f64.powf(-1.6)).abs() < 1e-15);
        assert!((r.outer - (1.0 - 10f64.powf(-1.6))).abs() < 1e-15);
        assert!(truncation_region(16, 1, 0.45).is_err());
        assert!(truncation_region(100, 1, 0.6).is_err());
        let big = truncation_region(1 << 40, 1, 0.1).unwrap();
        assert!((big.measure() - 2.0).abs() < 1e-2);
    }

    #[test]
    fn global_constant() {
        let p = variance_prediction(VarianceRegime::Global, |_| 1.0, 1, 8).unwrap();
        let exact = (2.0 / PI).sqrt() * (2.0 - 2f64.sqrt());
        assert!((exact - 0.467_390).abs() < 1e-6);
        assert!((p.sigma2 - exact).abs() < 1e-12, "{}", p.sigma2);
        let z = variance_prediction(VarianceRegime::Global, |_| 0.0, 2, 8).unwrap();
        assert_eq!(z.sigma2, 0.0);
    }

    #[test]
    fn homogeneity_and_density_mass() {
        for m in 1..=3 {
            let f = |x: f64| (3.0 * x).cos() + x * x;
            let a = variance_prediction(VarianceRegime::Global, f, m, 8).unwrap().sigma2;
            let b = variance_prediction(VarianceRegime::Global, |x| 2.0 * f(x), m, 8).unwrap().sigma2;
            assert!((a / b - 0.25).abs() < 1e-12);
            let one = variance_prediction(VarianceRegime::Global, |_| 1.0, m, 8).unwrap().sigma2;
            assert!((one / variance_constant(m) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn meso_preconditions() {
        let f = |x: f64| (-x * x).exp();
        assert!(variance_prediction(VarianceRegime::MesoBulk { e: 0.0, tau: 0.2 }, f, 1, 8).is_err());
        assert!(variance_prediction(VarianceRegime::MesoBulk { e: 0.5, tau: 0.6 }, f, 1, 8).is_err());
        assert!(variance_prediction(VarianceRegime::MesoOrigin { tau: 1.2 }, f, 2, 8).is_err());
        assert!(variance_prediction(VarianceRegime::MesoOrigin { tau: 0.5 }, f, 1, 8).is_err());
        let p = variance_prediction(VarianceRegime::MesoOrigin { tau: 0.5 }, f, 2, 8).unwrap();
        assert!((p.normalization_exponent - 0.125).abs() < 1e-15);
        // ∫ e^{−2x²}|x|^{−1/2} dx = Γ(1/4)/2^{1/4}
        let want = (2.0 - 2f64.sqrt()) / (4.0 * PI).sqrt() * 3.625_609_908_221_908 / 2f64.powf(0.25);
        assert!((p.sigma2 - want).abs() < 1e-9 * want, "{} {want}", p.sigma2);
    }

    #[test]
    fn grid_weights_cover_intervals() {
        let g = KernelGrid::new(&[(-0.9, -0.1), (0.1, 0.9)], 2, 0.05, 6).unwrap();
        let total: f64 = (0..g.len()).map(|i| g.weight(i)).sum();
        assert!((total - 1.6).abs() < 1e-12);
        assert!((1..g.len()).all(|i| g.x(i) > g.x(i - 1)));
    }

    #[test]
    fn running_integral_crosses_gaps() {
        let g = KernelGrid::new(&[(-1.0, -0.2), (0.3, 1.0)], 1, 0.1, 8).unwrap();
        let all = 0..g.panels.len();
        let prim = g.running_integral(all, &|i| g.x(i).cos(), &mut |a, b| Ok(b.sin() - a.sin())).unwrap();
        for i in 0..g.len() {
            assert!((prim[i] - (g.x(i).sin() + 1f64.sin())).abs() < 1e-13);
        }
    }

    #[test]
    fn table_matches_direct_kernel() {
        let ctx = make_context(40, 1).unwrap();
        let t = KernelTable::new(&ctx, &[(0.2, 0.6)], 10).unwrap();
        let g = t.grid();
        for &(i, j) in &[(3, 10), (10, 3), (7, 7), (0, 20)] {
            if !t.in_band(i, j) {
                continue;
            }
            let want = crate::kernel::matrix_kernel(g.x(i), g.x(j), &ctx).unwrap();
            let got = t.sample(i, j);
            assert!((got.i - want.i).abs() < 1e-8, "({i},{j}) {got:?} {want:?}");
            assert!((got.s_yx - want.s_yx).abs() < 1e-12 * want.s_yx.abs().max(1.0));
        }
    }
}
