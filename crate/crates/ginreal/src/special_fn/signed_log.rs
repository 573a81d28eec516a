#[allow(unused_imports)] // shadowed by the inherent methods whenever std is linked
use num_traits::Float;
use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};


/// A real number stored as `sign · exp(log_mag)`.
///
/// `sign == 0` is exact zero whatever `log_mag` holds.
#[derive(Clone, Copy, Debug)]
pub struct SignedLog {
    pub sign: i8,
    pub log_mag: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, log_mag: f64::NEG_INFINITY };
    pub const ONE: SignedLog = SignedLog { sign: 1, log_mag: 0.0 };

    /// Positive number with the given logarithm.
    pub fn from_log(log_mag: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: 1, log_mag }
        }
    }

    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: sign.signum(), log_mag }
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog { sign: if x > 0.0 { 1 } else { -1 }, log_mag: x.abs().ln() }
        }
    }

    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.log_mag.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// `log|x|`, with −∞ for zero.
    pub fn log_abs(self) -> f64 {
        if self.sign == 0 { f64::NEG_INFINITY } else { self.log_mag }
    }

    /// `x · e^{−shift}` as an ordinary float.
    pub fn scaled_value(self, shift: f64) -> f64 {
        if self.sign == 0 { 0.0 } else { self.sign as f64 * (self.log_mag - shift).exp() }
    }

    /// `x · e^{l}`.
    pub fn mul_exp(self, l: f64) -> Self {
        if self.sign == 0 { self } else { SignedLog { sign: self.sign, log_mag: self.log_mag + l } }
    }

    pub fn abs(self) -> Self {
        if self.sign == 0 { self } else { SignedLog { sign: 1, log_mag: self.log_mag } }
    }

    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return self;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        SignedLog { sign, log_mag: self.log_mag * k as f64 }
    }

    pub fn recip(self) -> Self {
        SignedLog { sign: self.sign, log_mag: -self.log_mag }
    }

    /// Relative difference |a − b| / max(|a|, |b|) computed without leaving
    /// the log domain.
    pub fn rel_diff(self, other: SignedLog) -> f64 {
        let d = self - other;
        if d.is_zero() {
            return 0.0;
        }
        let scale = self.log_abs().max(other.log_abs());
        (d.log_mag - scale).exp()
    }
}

impl PartialEq for SignedLog {
    fn eq(&self, other: &Self) -> bool {
        self.sign == other.sign && (self.sign == 0 || self.log_mag == other.log_mag)
    }
}

impl PartialOrd for SignedLog {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.log_mag.partial_cmp(&other.log_mag),
                _ => other.log_mag.partial_cmp(&self.log_mag),
            },
            o => Some(o),
        }
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;
    fn neg(self) -> SignedLog {
        SignedLog { sign: -self.sign, log_mag: self.log_mag }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;
    fn mul(self, rhs: SignedLog) -> SignedLog {
        if self.sign == 0 || rhs.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog { sign: self.sign * rhs.sign, log_mag: self.log_mag + rhs.log_mag }
    }
}

impl Div for SignedLog {
    type Output = SignedLog;
    fn div(self, rhs: SignedLog) -> SignedLog {
        self * rhs.recip()
    }
}

impl Add for SignedLog {
    type Output = SignedLog;
    fn add(self, rhs: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= rhs.log_mag { (self, rhs) } else { (rhs, self) };
        if big.log_mag == f64::INFINITY {
            return big;
        }
        let d = small.log_mag - big.log_mag;
        if big.sign == small.sign {
            SignedLog { sign: big.sign, log_mag: big.log_mag + d.exp().ln_1p() }
        } else {
            let r = -d.exp_m1();
            if r <= 0.0 {
                SignedLog::ZERO
            } else {
                SignedLog { sign: big.sign, log_mag: big.log_mag + r.ln() }
            }
        }
    }
}

impl Sub for SignedLog {
    type Output = SignedLog;
    fn sub(self, rhs: SignedLog) -> SignedLog {
        self + (-rhs)
    }
}

/// Log-sum-exp accumulator for positive terms given by their logarithms.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    max: f64,
    acc: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { max: f64::NEG_INFINITY, acc: 0.0 }
    }
}

impl LogSum {
    pub fn push(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l <= self.max {
            self.acc += (l - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - l).exp() + 1.0;
            self.max = l;
        }
    }

    pub fn log(&self) -> f64 {
        if self.max == f64::NEG_INFINITY { f64::NEG_INFINITY } else { self.max + self.acc.ln() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_reals() {
        let xs = [3.5, -2.25, 1e-300, -7e200, 0.0, 1.0];
        for &a in &xs {
            for &b in &xs {
                let (la, lb) = (SignedLog::from_real(a), SignedLog::from_real(b));
                let sum = (la + lb).to_real();
                let want = a + b;
                assert!((sum - want).abs() <= 1e-12 * want.abs().max(a.abs()).max(b.abs()), "{a}+{b}");
                let prod = (la * lb).to_real();
                if (a * b).is_finite() {
                    assert!((prod - a * b).abs() <= 1e-12 * (a * b).abs(), "{a}*{b}");
                }
            }
        }
    }

    #[test]
    fn exact_cancellation_is_zero() {
        let a = SignedLog::from_real(1.25);
        assert!((a - a).is_zero());
    }

    #[test]
    fn ordering_respects_sign() {
        let a = SignedLog::from_real(-5.0);
        let b = SignedLog::from_real(0.1);
        assert!(a < b);
        assert!(SignedLog::ZERO < b && a < SignedLog::ZERO);
        assert!(SignedLog::from_real(-0.1) > a);
    }

    #[test]
    fn log_sum_exp() {
        let mut s = LogSum::default();
        for l in [1000.0, 1000.0, 999.0] {
            s.push(l);
        }
        let want = 1000.0 + (2.0 + (-1.0f64).exp()).ln();
        assert!((s.log() - want).abs() < 1e-13);
    }
}
