//! Quadrature: Gauss–Legendre rules (any working precision), adaptive
//! Gauss–Kronrod 7/15, and a log-domain integrator for sharply peaked
//! integrands whose magnitude would overflow in linear arithmetic.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::real;
use crate::special_fn::SignedLog;

/// Gauss–Legendre rule on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre<R = f64> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
}

fn legendre_and_derivative<R: real::Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = R::from_i64(k as i64);
        let p2 = (R::from_i64(2 * k as i64 - 1) * x * p1 - R::from_i64(k as i64 - 1) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = R::from_i64(n as i64) * (x * p1 - p0) / (x * x - R::one());
    (p1, dp)
}

impl<R: real::Real> GaussLegendre<R> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        if n == 1 {
            return GaussLegendre { nodes: vec![R::zero()], weights: vec![R::from_f64(2.0)] };
        }
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let guess = Float::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut x = guess;
            for _ in 0..100 {
                let (p, dp) = legendre_and_derivative::<f64>(n, x);
                let dx = p / dp;
                x -= dx;
                if Float::abs(dx) < 1e-16 {
                    break;
                }
            }
            // polish in the working precision
            let mut xr = R::from_f64(x);
            for _ in 0..3 {
                let (p, dp) = legendre_and_derivative(n, xr);
                xr -= p / dp;
            }
            let (_, dp) = legendre_and_derivative(n, xr);
            let w = R::from_f64(2.0) / ((R::one() - xr * xr) * dp * dp);
            nodes.push(-xr);
            weights.push(w);
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: R, b: R) -> impl Iterator<Item = (R, R)> + '_ {
        let half = (b - a) * R::from_f64(0.5);
        let mid = (a + b) * R::from_f64(0.5);
        self.nodes.iter().zip(self.weights.iter()).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(R) -> R>(&self, mut f: F, a: R, b: R) -> R {
        let mut acc = R::zero();
        for (x, w) in self.mapped(a, b) {
            acc += w * f(x);
        }
        acc
    }

    /// Running-integral matrix on [−1, 1]: `Q[k][l] = ∫_{−1}^{t_k} ℓ_l(s) ds`
    /// with `ℓ_l` the Lagrange basis on the nodes, so that `Σ_l Q[k][l] g(t_l)`
    /// integrates the interpolant of `g` from −1 to node `k`.
    pub fn cumulative(&self) -> Vec<Vec<R>> {
        let q = self.nodes.len();
        // P_0..P_q at every node
        let legendre: Vec<Vec<R>> = self
            .nodes
            .iter()
            .map(|&t| {
                let mut p = vec![R::one(), t];
                for n in 1..q {
                    let nf = R::from_i64(n as i64);
                    let next = (R::from_i64(2 * n as i64 + 1) * t * p[n] - nf * p[n - 1]) / (nf + R::one());
                    p.push(next);
                }
                p
            })
            .collect();
        let half = R::from_f64(0.5);
        (0..q)
            .map(|k| {
                let pk = &legendre[k];
                (0..q)
                    .map(|l| {
                        let mut acc = half * (self.nodes[k] + R::one());
                        for n in 1..q {
                            acc += half * legendre[l][n] * (pk[n + 1] - pk[n - 1]);
                        }
                        self.weights[l] * acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Composite rule with `panels` equal panels.
    pub fn composite<F: FnMut(R) -> R>(&self, mut f: F, a: R, b: R, panels: usize) -> R {
        let h = (b - a) / R::from_i64(panels as i64);
        let mut acc = R::zero();
        for p in 0..panels {
            let lo = a + h * R::from_i64(p as i64);
            acc += self.integrate(&mut f, lo, lo + h);
        }
        acc
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 7/15 panel: (estimate, error, ∫|f|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = Float::abs(fc) * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (Float::abs(f1) + Float::abs(f2));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let est = kron * h;
    (est, Float::abs((kron - gauss) * h), abs * Float::abs(h))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-10, max_intervals: 400 }
    }
}

/// Adaptive Gauss–Kronrod on [a, b], starting from `initial` equal panels and
/// bisecting the worst panel. Stops at the requested tolerance or when the
/// error estimate reaches the roundoff floor of the absolute integrand.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, initial: usize, tol: Tolerance) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let initial = initial.max(1);
    let h = (b - a) / initial as f64;
    let mut panels: Vec<(f64, f64, f64, f64, f64)> = Vec::with_capacity(initial + 64);
    for i in 0..initial {
        let lo = a + h * i as f64;
        let hi = if i + 1 == initial { b } else { lo + h };
        let (v, e, s) = gk15(&mut f, lo, hi);
        panels.push((lo, hi, v, e, s));
    }
    loop {
        let (mut value, mut error, mut absint) = (0.0, 0.0, 0.0);
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            value += p.2;
            error += p.3;
            absint += p.4;
            if p.3 > panels[worst].3 {
                worst = i;
            }
        }
        let target = tol.abs.max(tol.rel * Float::abs(value));
        if error <= target || error <= 50.0 * f64::EPSILON * absint {
            return Ok(QuadResult { value, error });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::NoConvergence { estimate: value, error });
        }
        let (lo, hi, ..) = panels[worst];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(QuadResult { value, error });
        }
        let (v1, e1, s1) = gk15(&mut f, lo, mid);
        let (v2, e2, s2) = gk15(&mut f, mid, hi);
        panels[worst] = (lo, mid, v1, e1, s1);
        panels.push((mid, hi, v2, e2, s2));
    }
}

/// Integrate a function given in signed-log form over [a, b].
///
/// The interval is scanned on `scan` equal steps to locate the peak of the
/// log-magnitude; it is then trimmed to where the integrand is within
/// `efolds` of that peak, and the rescaled integrand is integrated
/// adaptively. The scan must be fine enough to resolve the peak width.
/// `log_abs_tol` is the logarithm of an absolute tolerance on the integral
/// (−∞ for none).
pub fn log_peak_integrate<F: FnMut(f64) -> SignedLog>(
    mut logf: F,
    a: f64,
    b: f64,
    scan: usize,
    efolds: f64,
    rel_tol: f64,
    log_abs_tol: f64,
) -> Result<SignedLog> {
    if !(b > a) {
        return Ok(SignedLog::ZERO);
    }
    let scan = scan.max(2);
    let h = (b - a) / scan as f64;
    let grid: Vec<f64> = (0..=scan).map(|i| if i == scan { b } else { a + h * i as f64 }).collect();
    let logs: Vec<f64> = grid.iter().map(|&t| logf(t).log_abs()).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Ok(SignedLog::ZERO);
    }
    if !peak.is_finite() {
        return Err(Error::domain("non-finite integrand peak"));
    }
    let floor = peak - efolds;
    let first = logs.iter().position(|&l| l >= floor).unwrap_or(0);
    let last = logs.iter().rposition(|&l| l >= floor).unwrap_or(scan);
    let lo_i = first.saturating_sub(1);
    let hi_i = (last + 1).min(scan);
    let (lo, hi) = (grid[lo_i], grid[hi_i]);
    let pieces = hi_i - lo_i;
    let abs = (rel_tol * (hi - lo)).max((log_abs_tol - peak).exp());
    let tol = Tolerance { abs, rel: rel_tol, max_intervals: 64 * pieces.max(8) };
    let res = adaptive(|t| logf(t).scaled_value(peak), lo, hi, (pieces / 4).max(4), tol)?;
    Ok(SignedLog::from_real(res.value).mul_exp(peak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::DoubleDouble;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::<f64>::new(12);
        for k in 0..24 {
            let got = gl.integrate(|x| x.powi(k), -1.0, 1.0);
            let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "k={k}");
        }
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn running_integrals_at_nodes() {
        let gl = GaussLegendre::<f64>::new(10);
        let q = gl.cumulative();
        // exact for degree < 10, interpolation-limited otherwise
        let poly: Vec<f64> = gl.nodes.iter().map(|&t| t.powi(9) - 2.0 * t.powi(4)).collect();
        let cos: Vec<f64> = gl.nodes.iter().map(|&t| t.cos()).collect();
        for (k, &t) in gl.nodes.iter().enumerate() {
            let dot = |g: &[f64]| -> f64 { q[k].iter().zip(g).map(|(a, b)| a * b).sum() };
            let want = (t.powi(10) - 1.0) / 10.0 - 2.0 * (t.powi(5) + 1.0) / 5.0;
            assert!((dot(&poly) - want).abs() < 1e-14, "node {k}");
            assert!((dot(&cos) - (t.sin() + 1f64.sin())).abs() < 1e-9, "node {k}");
        }
    }

    #[test]
    fn double_double_rule_is_sharper() {
        let gl = GaussLegendre::<DoubleDouble>::new(40);
        let got = gl.integrate(|x| real::Real::exp(x), real::Real::from_f64(0.0), real::Real::from_f64(1.0));
        let e = real::Real::exp(DoubleDouble::from_f64(1.0)) - DoubleDouble::from_f64(1.0);
        assert!(real::Real::to_f64(real::Real::abs(got - e)) < 1e-29);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = adaptive(|x| (-1e4 * (x - 0.3) * (x - 0.3)).exp(), 0.0, 1.0, 1, Tolerance::default()).unwrap();
        let want = (core::f64::consts::PI / 1e4).sqrt();
        assert!((r.value - want).abs() < 1e-12);
    }

    #[test]
    fn log_peak_handles_huge_magnitudes() {
        // ∫ exp(1000 − (t−2)²·50) dt = e^1000 √(π/50)
        let r = log_peak_integrate(|t| SignedLog::from_log(1000.0 - 50.0 * (t - 2.0) * (t - 2.0)), 0.0, 10.0, 200, 40.0, 1e-12, f64::NEG_INFINITY)
            .unwrap();
        let want = 1000.0 + 0.5 * (core::f64::consts::PI / 50.0).ln();
        assert!((r.log_mag - want).abs() < 1e-12);
        assert_eq!(r.sign, 1);
    }
}
