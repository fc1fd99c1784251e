//! Big-integer fixed-point arithmetic used as a reference evaluator for the
//! closed-form calibrations. Values are stored as `raw · 2^-FRAC_BITS`.

use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u32 = 320;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed(BigInt);

impl Fixed {
    fn one_raw() -> BigInt {
        BigInt::one() << FRAC_BITS
    }

    /// Conversion of a finite double; exact for `|x| ≥ 2^-267`, below which
    /// bits past the fixed-point resolution are dropped.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "reference evaluator needs finite input");
        if x == 0.0 {
            return Fixed(BigInt::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let shift = exp + FRAC_BITS as i64;
        let m = BigInt::from(mantissa);
        let raw = if shift >= 0 { m << shift as u32 } else { m >> (-shift) as u32 };
        Fixed(if negative { -raw } else { raw })
    }

    pub fn from_u64(n: u64) -> Self {
        Fixed(BigInt::from(n) << FRAC_BITS)
    }

    pub fn to_f64(&self) -> f64 {
        let magnitude = self.0.abs();
        let bits = magnitude.bits();
        // Keep 64 significant bits before handing over to the double conversion.
        let (top, scale) = if bits > 64 {
            let drop = bits - 64;
            ((&magnitude >> drop).to_f64().unwrap_or(f64::NAN), drop as i32)
        } else {
            (magnitude.to_f64().unwrap_or(f64::NAN), 0)
        };
        let v = top * 2f64.powi(scale) * 2f64.powi(-(FRAC_BITS as i32));
        if self.0.is_negative() {
            -v
        } else {
            v
        }
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.0.is_negative(), "square root of a negative value");
        Fixed((&self.0 << FRAC_BITS).sqrt())
    }

    /// `2·atanh(z) = 2·Σ z^{2k+1}/(2k+1)` for `|z| < 1`.
    fn two_atanh(z: &Fixed) -> Fixed {
        let z2 = z.clone() * z.clone();
        let mut power = z.clone();
        let mut sum = Fixed(BigInt::zero());
        let mut k = 0u64;
        loop {
            let term = Fixed(&power.0 / BigInt::from(2 * k + 1));
            if term.0.is_zero() {
                break;
            }
            sum = sum + term;
            power = power * z2.clone();
            k += 1;
        }
        Fixed(sum.0 << 1)
    }

    fn ln2() -> Fixed {
        Self::two_atanh(&(Fixed::from_u64(1) / Fixed::from_u64(3)))
    }

    /// Natural logarithm via a power-of-two reduction to `[1, 2)`.
    pub fn ln(&self) -> Self {
        assert!(self.0.is_positive(), "logarithm of a nonpositive value");
        let k = self.0.bits() as i64 - 1 - FRAC_BITS as i64;
        let reduced = if k >= 0 { &self.0 >> k as u32 } else { &self.0 << (-k) as u32 };
        let y = Fixed(reduced);
        let one = Fixed(Self::one_raw());
        let z = (y.clone() - one.clone()) / (y + one);
        let tail = Self::two_atanh(&z);
        let shift = Fixed(Self::ln2().0 * BigInt::from(k));
        tail + shift
    }

    /// Exponential by halving the argument until the Taylor series is short.
    pub fn exp(&self) -> Self {
        let halvings = 64u32;
        let x = Fixed(&self.0 >> halvings);
        let mut term = Fixed(Self::one_raw());
        let mut sum = term.clone();
        let mut k = 1u64;
        loop {
            term = Fixed((term * x.clone()).0 / BigInt::from(k));
            if term.0.is_zero() {
                break;
            }
            sum = sum + term.clone();
            k += 1;
        }
        for _ in 0..halvings {
            sum = sum.clone() * sum;
        }
        sum
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl Mul for Fixed {
    type Output = Fixed;
    fn mul(self, rhs: Fixed) -> Fixed {
        Fixed((self.0 * rhs.0) >> FRAC_BITS)
    }
}

impl Div for Fixed {
    type Output = Fixed;
    fn div(self, rhs: Fixed) -> Fixed {
        Fixed((self.0 << FRAC_BITS) / rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn round_trips_doubles() {
        for x in [1.0, -2.5, 1e-5, 123456.789, 3.0e10, 1e-80, 2f64.powi(-267)] {
            assert_eq!(Fixed::from_f64(x).to_f64(), x);
        }
        assert_eq!(Fixed::from_f64(f64::MIN_POSITIVE).to_f64(), 0.0);
    }

    #[test]
    fn elementary_functions_match_known_values() {
        assert!(rel(Fixed::from_u64(2).ln().to_f64(), std::f64::consts::LN_2) < 1e-16);
        assert!(rel(Fixed::from_u64(1).exp().to_f64(), std::f64::consts::E) < 1e-16);
        assert!(rel(Fixed::from_u64(2).sqrt().to_f64(), std::f64::consts::SQRT_2) < 1e-16);
        assert!(rel(Fixed::from_f64(1e-5).ln().to_f64(), -11.512925464970229) < 1e-15);
        let x = Fixed::from_f64(0.37);
        assert!(rel(x.ln().exp().to_f64(), 0.37) < 1e-16);
    }
}
