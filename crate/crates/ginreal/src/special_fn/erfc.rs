
#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use super::SignedLog;
use crate::error::{Error, Result};

/// Switch point to the continued-fraction form of the scaled function.
const ASYMPTOTIC_FROM: f64 = 8.0;

/// `e^{z²} erfc(z)` for `z ≥ 8` by backward evaluation of the Laplace
/// continued fraction `1/(z + ½/(z + 1/(z + 3/2/(z + …))))` / √π.
fn erfcx_cf(z: f64) -> f64 {
    let mut t = z;
    for k in (1..=60).rev() {
        t = z + 0.5 * k as f64 / t;
    }
    1.0 / (t * core::f64::consts::PI.sqrt())
}

/// `ln erfc(z)` (erfc is positive for every real argument).
pub fn log_erfc(z: f64) -> Result<SignedLog> {
    if !z.is_finite() {
        return Err(Error::domain("log_erfc requires a finite argument"));
    }
    if z >= ASYMPTOTIC_FROM {
        Ok(SignedLog::from_log(-z * z + erfcx_cf(z).ln()))
    } else {
        Ok(SignedLog::from_log(libm::erfc(z).ln()))
    }
}

/// `e^{z²} erfc(z)`, finite for all `z ≥ 0`.
pub fn erfcx(z: f64) -> f64 {
    if z >= ASYMPTOTIC_FROM { erfcx_cf(z) } else { (z * z).exp() * libm::erfc(z) }
}

pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

pub fn erf(z: f64) -> f64 {
    libm::erf(z)
}
