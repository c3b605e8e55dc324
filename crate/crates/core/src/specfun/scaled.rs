use std::cmp::Ordering;
use std::ops::{Mul, Neg};

/// A real number stored as `sign * exp(log_mag)`.
///
/// Used for quantities such as `exp(λ₁²/8λ₂)` or parabolic cylinder values
/// at large arguments whose magnitude does not fit in an `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    log_mag: f64,
    sign: i8,
}

impl ScaledValue {
    pub const ZERO: ScaledValue = ScaledValue {
        log_mag: f64::NEG_INFINITY,
        sign: 0,
    };

    pub const ONE: ScaledValue = ScaledValue {
        log_mag: 0.0,
        sign: 1,
    };

    /// Builds a value from its log magnitude and sign. A zero sign forces the
    /// canonical zero.
    pub fn new(log_mag: f64, sign: i8) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                log_mag,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_log(log_mag: f64) -> Self {
        Self::new(log_mag, 1)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(x.abs().ln(), if x > 0.0 { 1 } else { -1 })
        }
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn log_abs(&self) -> f64 {
        self.log_mag
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Plain value; may overflow to infinity or underflow to zero.
    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign) * self.log_mag.exp()
    }

    /// Log of a positive value. Returns NaN for zero or negative values.
    pub fn ln(&self) -> f64 {
        if self.sign > 0 {
            self.log_mag
        } else {
            f64::NAN
        }
    }

    pub fn recip(&self) -> Self {
        Self::new(-self.log_mag, self.sign)
    }

    pub fn scale_log(&self, log_factor: f64) -> Self {
        Self::new(self.log_mag + log_factor, self.sign)
    }

    /// Sum of two scaled values, combined around the larger magnitude.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (big, small) = if self.log_mag >= other.log_mag {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.log_mag - big.log_mag).exp();
        let m = if big.sign == small.sign {
            1.0 + ratio
        } else {
            1.0 - ratio
        };
        if m == 0.0 {
            return Self::ZERO;
        }
        Self::new(big.log_mag + m.abs().ln(), big.sign * m.signum() as i8)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-*other)
    }

    pub fn div(&self, other: &Self) -> Self {
        *self * other.recip()
    }
}

impl Neg for ScaledValue {
    type Output = ScaledValue;
    fn neg(self) -> Self {
        Self::new(self.log_mag, -self.sign)
    }
}

impl Mul for ScaledValue {
    type Output = ScaledValue;
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.log_mag + rhs.log_mag, self.sign * rhs.sign)
    }
}

impl PartialOrd for ScaledValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let a = (self.sign, self.log_mag);
        let b = (other.sign, other.log_mag);
        match a.0.cmp(&b.0) {
            Ordering::Equal => match a.0 {
                0 => Some(Ordering::Equal),
                1 => a.1.partial_cmp(&b.1),
                _ => b.1.partial_cmp(&a.1),
            },
            o => Some(o),
        }
    }
}

/// Accumulates a long sum of terms with widely varying magnitude without
/// overflowing, by rescaling whenever the running total grows large.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledSum {
    pub sum: f64,
    pub log_scale: f64,
}

impl ScaledSum {
    pub fn new() -> Self {
        Self {
            sum: 0.0,
            log_scale: 0.0,
        }
    }

    pub fn value(&self) -> ScaledValue {
        ScaledValue::from_f64(self.sum).scale_log(self.log_scale)
    }
}
