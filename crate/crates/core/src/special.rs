//! Products of many factors kept as sign and log-magnitude, so that rising
//! factorials and factorials of large degree neither overflow nor underflow
//! before they are combined.

use std::ops::Mul;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    /// `-1`, `0` or `1`.
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ONE: SignedLog = SignedLog { sign: 1.0, ln_abs: 0.0 };
    pub const ZERO: SignedLog = SignedLog { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { sign: x.signum(), ln_abs: x.abs().ln() }
        }
    }

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    pub fn powi(self, k: u32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        let sign = if self.sign < 0.0 && k % 2 == 1 { -1.0 } else { self.sign.abs() };
        Self { sign, ln_abs: self.ln_abs * f64::from(k) }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;
    fn mul(self, rhs: SignedLog) -> SignedLog {
        if self.sign == 0.0 || rhs.sign == 0.0 {
            return Self::ZERO;
        }
        SignedLog { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }
}

impl std::iter::Product for SignedLog {
    fn product<I: Iterator<Item = SignedLog>>(iter: I) -> SignedLog {
        iter.fold(SignedLog::ONE, Mul::mul)
    }
}

/// Pochhammer symbol `(x)_k = x (x+1) ... (x+k-1)`; exact zero when a factor vanishes.
pub fn rising_factorial(x: f64, k: u32) -> SignedLog {
    (0..k).map(|j| SignedLog::from_f64(x + f64::from(j))).product()
}

pub fn factorial(k: u32) -> SignedLog {
    rising_factorial(1.0, k)
}
