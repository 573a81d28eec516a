//! Scalar abstraction so the ill-conditioned quadrature checks can run in
//! double-double arithmetic through the same code as the `f64` path.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use qd::Quad;

pub type DoubleDouble = Quad;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Unit roundoff of the representation.
    const EPS: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn pi() -> Self;

    fn abs(self) -> Self {
        if self < Self::zero() { -self } else { self }
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    fn pi() -> Self {
        core::f64::consts::PI
    }
    fn abs(self) -> Self {
        Float::abs(self)
    }
}

impl Real for Quad {
    const EPS: f64 = f64::EPSILON * f64::EPSILON;

    fn from_f64(x: f64) -> Self {
        Quad::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        self.0 + self.1
    }
    fn exp(self) -> Self {
        Quad::exp(self)
    }
    fn ln(self) -> Self {
        Quad::ln(self)
    }
    fn sqrt(self) -> Self {
        Quad::sqrt(self)
    }
    fn pi() -> Self {
        Quad::PI
    }
    fn abs(self) -> Self {
        Quad::abs(self)
    }
}

/// `ln(n!)` accumulated exactly in the working precision.
pub fn ln_factorials<R: Real>(n: usize) -> alloc::vec::Vec<R> {
    let mut out = alloc::vec::Vec::with_capacity(n + 1);
    let mut acc = R::zero();
    out.push(acc);
    for k in 1..=n {
        acc += R::from_i64(k as i64).ln();
        out.push(acc);
    }
    out
}

/// `ln Γ(k/2)` for a positive integer `k`, via the integer and half-integer
/// recurrences.
pub fn ln_gamma_half<R: Real>(k: u32) -> R {
    assert!(k > 0);
    if k % 2 == 0 {
        let n = k / 2 - 1;
        let mut acc = R::zero();
        for j in 2..=n {
            acc += R::from_i64(j as i64).ln();
        }
        acc
    } else {
        // Γ(n + 1/2) = √π · Π_{j=1}^{n} (j − 1/2)
        let n = (k - 1) / 2;
        let mut acc = R::pi().ln() * R::from_f64(0.5);
        for j in 1..=n {
            acc += (R::from_i64(j as i64) - R::from_f64(0.5)).ln();
        }
        acc
    }
}
