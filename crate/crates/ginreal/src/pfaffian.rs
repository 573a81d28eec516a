//! Pfaffians, Pfaffian correlation and cluster functions, set partitions and
//! the cumulants of linear statistics built from them.

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{KernelContext, KernelSample2x2};
use crate::special_fn::SignedLog;
use crate::statistics::{KernelTable, TruncationRegion};

/// Entries allowed in the pivoted elimination.
pub trait PfScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Pivot size.
    fn magnitude(self) -> f64;
}

impl PfScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl PfScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Dense skew-symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix<T = f64> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: PfScalar> SkewMatrix<T> {
    /// Zero matrix of the given even dimension.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::input(alloc::format!("Pfaffian needs an even positive dimension, got {dim}")));
        }
        Ok(SkewMatrix { dim, entries: vec![T::zero(); dim * dim] })
    }

    /// Build from the strict upper triangle; the lower one is filled by skew symmetry.
    pub fn from_upper(dim: usize, mut upper: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut a = Self::zeros(dim)?;
        for i in 0..dim {
            for j in i + 1..dim {
                a.set(i, j, upper(i, j));
            }
        }
        Ok(a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    /// Set `a_ij = v` and `a_ji = −v`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.dim + j] = v;
        self.entries[j * self.dim + i] = -v;
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Multiply row and column `i` by `c` (multiplies the Pfaffian by `c`).
    pub fn scale(&mut self, i: usize, c: T) {
        for j in 0..self.dim {
            if j != i {
                self.entries[i * self.dim + j] = self.entries[i * self.dim + j] * c;
                self.entries[j * self.dim + i] = self.entries[j * self.dim + i] * c;
            }
        }
    }
}

impl SkewMatrix<f64> {
    /// Validate a dense row-major matrix: skew symmetry to 1e−12 (relative
    /// to the larger of the pair, absolute below 1) and a zero diagonal.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 || entries.len() != dim * dim {
            return Err(Error::input("Pfaffian needs a square matrix of even positive dimension"));
        }
        for i in 0..dim {
            if entries[i * dim + i] != 0.0 {
                return Err(Error::input(alloc::format!("diagonal entry {i} is not zero")));
            }
            for j in i + 1..dim {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                if (a + b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::input(alloc::format!("entries ({i},{j}) and ({j},{i}) are not skew-symmetric")));
                }
            }
        }
        Ok(SkewMatrix { dim, entries })
    }
}

/// Skew tridiagonalisation with partial pivoting (Parlett–Reid), calling
/// `step` with every pivot `a_{k,k+1}` and the sign of the row swaps.
/// Returns false as soon as a zero pivot column shows the Pfaffian vanishes.
fn eliminate<T: PfScalar>(a: &mut SkewMatrix<T>, mut step: impl FnMut(T)) -> bool {
    let n = a.dim;
    let e = &mut a.entries;
    let mut k = 0;
    while k + 1 < n {
        // pivot: largest entry of row k right of the diagonal
        let mut kp = k + 1;
        let mut best = e[k * n + k + 1].magnitude();
        for j in k + 2..n {
            let v = e[k * n + j].magnitude();
            if v > best {
                best = v;
                kp = j;
            }
        }
        if best == 0.0 {
            return false;
        }
        if kp != k + 1 {
            let p = k + 1;
            for j in 0..n {
                e.swap(p * n + j, kp * n + j);
            }
            for i in 0..n {
                e.swap(i * n + p, i * n + kp);
            }
            step(-T::one());
        }
        let piv = e[k * n + k + 1];
        step(piv);
        // A[k+2:, k+2:] += τ ⊗ A[k+2:, k+1] − A[k+2:, k+1] ⊗ τ, τ = A[k, k+2:] / piv
        for i in k + 2..n {
            let ti = e[k * n + i] / piv;
            let ci = e[i * n + k + 1];
            for j in k + 2..n {
                let tj = e[k * n + j] / piv;
                let cj = e[j * n + k + 1];
                e[i * n + j] = e[i * n + j] + ti * cj - ci * tj;
            }
        }
        k += 2;
    }
    true
}

/// Pf(A) in signed-log form.
pub fn pfaffian(a: &SkewMatrix<f64>) -> SignedLog {
    let mut work = a.clone();
    let mut acc = SignedLog::ONE;
    if eliminate(&mut work, |p| acc = acc * SignedLog::from_real(p)) {
        acc
    } else {
        SignedLog::ZERO
    }
}

/// Pf(A) in ordinary arithmetic (real or complex entries).
pub fn pfaffian_value<T: PfScalar>(a: &SkewMatrix<T>) -> T {
    let mut work = a.clone();
    let mut acc = T::one();
    if eliminate(&mut work, |p| acc = acc * p) {
        acc
    } else {
        T::zero()
    }
}

/// Pfaffian correlation value; `coincident` marks an input with repeated
/// points, for which the value is exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub coincident: bool,
}

/// The `2k × 2k` matrix `[K(x_i, x_j)]` assembled from its upper blocks.
pub fn correlation_matrix(samples: &dyn Fn(usize, usize) -> KernelSample2x2, k: usize) -> Result<SkewMatrix<f64>> {
    let mut a = SkewMatrix::zeros(2 * k)?;
    for i in 0..k {
        let own = samples(i, i);
        a.set(2 * i, 2 * i + 1, own.s_xy);
        for j in i + 1..k {
            let m = samples(i, j).matrix();
            a.set(2 * i, 2 * j, m[0][0]);
            a.set(2 * i, 2 * j + 1, m[0][1]);
            a.set(2 * i + 1, 2 * j, m[1][0]);
            a.set(2 * i + 1, 2 * j + 1, m[1][1]);
        }
    }
    Ok(a)
}

/// `ρ^{(k)}(x_1, …, x_k) = Pf[K(x_i, x_j)]`.
pub fn correlation<K>(points: &[f64], kernel: K) -> Result<Correlation>
where
    K: Fn(f64, f64) -> Result<KernelSample2x2>,
{
    if points.is_empty() {
        return Err(Error::input("correlation needs at least one point"));
    }
    for (i, &x) in points.iter().enumerate() {
        if points[..i].contains(&x) {
            return Ok(Correlation { value: 0.0, coincident: true });
        }
    }
    let k = points.len();
    let mut cache = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            cache.push(if j >= i { Some(kernel(points[i], points[j])?) } else { None });
        }
    }
    if k == 1 {
        return Ok(Correlation { value: cache[0].unwrap().s_xy, coincident: false });
    }
    let a = correlation_matrix(&|i, j| cache[i * k + j].unwrap(), k)?;
    Ok(Correlation { value: pfaffian(&a).to_real(), coincident: false })
}

/// A set partition of `{0, …, k−1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

pub const MAX_PARTITION_SIZE: usize = 10;

/// All set partitions of `{0, …, k−1}` (Bell(k) of them), enumerated by
/// restricted growth strings.
pub fn partitions(k: usize) -> Result<Vec<Partition>> {
    if k == 0 {
        return Err(Error::input("partitions need k ≥ 1"));
    }
    if k > MAX_PARTITION_SIZE {
        return Err(Error::Capacity { what: "set partitions", limit: MAX_PARTITION_SIZE });
    }
    let mut out = Vec::new();
    let mut a = vec![0usize; k];
    loop {
        let nblocks = a.iter().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in a.iter().enumerate() {
            blocks[b].push(i);
        }
        out.push(Partition { blocks });
        // next restricted growth string: a_i ≤ 1 + max(a_0..a_{i−1})
        let mut i = k - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let prefix_max = a[..i].iter().copied().max().unwrap();
            if a[i] <= prefix_max {
                a[i] += 1;
                for v in &mut a[i + 1..] {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

pub const MAX_CLUSTER_SIZE: usize = 6;

/// Cluster function from correlations of sub-tuples given by bitmask:
/// `Σ_π (−1)^{ℓ−1} (ℓ−1)! Π_{B∈π} ρ(B)`.
pub fn cluster_from(k: usize, rho: &mut dyn FnMut(usize) -> Result<f64>) -> Result<f64> {
    if k > MAX_CLUSTER_SIZE {
        return Err(Error::Capacity { what: "cluster function points", limit: MAX_CLUSTER_SIZE });
    }
    let mut memo: Vec<Option<f64>> = vec![None; 1 << k];
    let mut total = 0.0;
    for p in partitions(k)? {
        let l = p.blocks.len();
        let mut term = if l % 2 == 1 { 1.0 } else { -1.0 };
        for f in 2..l {
            term *= f as f64;
        }
        for b in &p.blocks {
            let mask = b.iter().fold(0usize, |m, &i| m | 1 << i);
            let v = match memo[mask] {
                Some(v) => v,
                None => {
                    let v = rho(mask)?;
                    memo[mask] = Some(v);
                    v
                }
            };
            term *= v;
        }
        total += term;
    }
    Ok(total)
}

/// `r^{(k)}(x_1, …, x_k)` for `k ≤ 6`.
pub fn cluster<K>(points: &[f64], kernel: K) -> Result<f64>
where
    K: Fn(f64, f64) -> Result<KernelSample2x2>,
{
    let k = points.len();
    if k == 0 {
        return Err(Error::input("cluster function needs at least one point"));
    }
    if k > MAX_CLUSTER_SIZE {
        return Err(Error::Capacity { what: "cluster function points", limit: MAX_CLUSTER_SIZE });
    }
    let mut cache: Vec<Option<KernelSample2x2>> = vec![None; k * k];
    for i in 0..k {
        for j in i..k {
            cache[i * k + j] = Some(kernel(points[i], points[j])?);
        }
    }
    cluster_from(k, &mut |mask| subset_correlation(points, mask, &|i, j| cache[i * k + j].unwrap()))
}

/// Correlation of the sub-tuple selected by `mask`, from upper-block samples.
fn subset_correlation(points: &[f64], mask: usize, sample: &dyn Fn(usize, usize) -> KernelSample2x2) -> Result<f64> {
    let idx: Vec<usize> = (0..points.len()).filter(|i| mask >> i & 1 == 1).collect();
    for (a, &i) in idx.iter().enumerate() {
        if idx[..a].iter().any(|&j| points[j] == points[i]) {
            return Ok(0.0);
        }
    }
    if idx.len() == 1 {
        return Ok(sample(idx[0], idx[0]).s_xy);
    }
    let a = correlation_matrix(&|p, q| sample(idx[p], idx[q]), idx.len())?;
    Ok(pfaffian(&a).to_real())
}

pub const MAX_CUMULANT_ORDER: usize = 3;

/// `C_k(f)` of the linear statistic restricted to `region`:
/// `Σ_{π∈Π(k)} ∫ Π_j f(x_j)^{p_j} r^{(n)}(x_1, …, x_n)`, with `n` the number
/// of blocks of `π` and `p_j` their sizes, by tensor quadrature on the banded
/// kernel table (`quad_order` Gauss nodes per kernel width).
pub fn cumulant<F: Fn(f64) -> f64>(
    k: usize,
    f: F,
    ctx: &KernelContext,
    region: &TruncationRegion,
    quad_order: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::input("cumulant order must be positive"));
    }
    if k > MAX_CUMULANT_ORDER {
        return Err(Error::Capacity { what: "cumulant order", limit: MAX_CUMULANT_ORDER });
    }
    let table = KernelTable::new(ctx, &region.intervals(), quad_order)?;
    cumulant_on(k, &f, &table)
}

/// [`cumulant`] on a precomputed table.
pub fn cumulant_on(k: usize, f: &dyn Fn(f64) -> f64, table: &KernelTable) -> Result<f64> {
    if k > MAX_CUMULANT_ORDER {
        return Err(Error::Capacity { what: "cumulant order", limit: MAX_CUMULANT_ORDER });
    }
    let grid = table.grid();
    let nodes = grid.len();
    let fx: Vec<f64> = (0..nodes).map(|i| f(grid.x(i))).collect();
    let w: Vec<f64> = (0..nodes).map(|i| grid.weight(i)).collect();
    let mut total = 0.0;
    for p in partitions(k)? {
        let powers: Vec<i32> = p.blocks.iter().map(|b| b.len() as i32).collect();
        total += match powers.len() {
            1 => (0..nodes).map(|i| w[i] * fx[i].powi(powers[0]) * table.sample(i, i).s_xy).sum(),
            2 => {
                let mut s = 0.0;
                for i in 0..nodes {
                    for j in table.band(i) {
                        let r = cluster_on(table, &[i, j])?;
                        s += w[i] * w[j] * fx[i].powi(powers[0]) * fx[j].powi(powers[1]) * r;
                    }
                }
                s
            }
            _ => {
                let mut s = 0.0;
                for i in 0..nodes {
                    for j in table.band(i) {
                        for l in table.band(i) {
                            if !table.in_band(j, l) {
                                continue;
                            }
                            let r = cluster_on(table, &[i, j, l])?;
                            s += w[i] * w[j] * w[l] * fx[i] * fx[j] * fx[l] * r;
                        }
                    }
                }
                s
            }
        };
    }
    Ok(total)
}

/// Cluster function at grid nodes, with the table's samples.
fn cluster_on(table: &KernelTable, idx: &[usize]) -> Result<f64> {
    let k = idx.len();
    let sample = |p: usize, q: usize| -> KernelSample2x2 { table.sample(idx[p], idx[q]) };
    let pts: Vec<f64> = idx.iter().map(|&i| i as f64).collect();
    cluster_from(k, &mut |mask| subset_correlation(&pts, mask, &sample))
}
