//! Numeric helpers shared by the exact and floating layers: logarithms and
//! ratios of huge integers, and the working-precision abstraction.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::UBig;

/// Natural log of a positive big integer from its bit length and top 64 bits.
pub fn ln_big(x: &BigUint) -> f64 {
    debug_assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap();
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_big_int(x: &BigInt) -> f64 {
    ln_big(x.magnitude())
}

/// `a / b` as f64 without overflowing either operand. Underflows to 0 when
/// the ratio is far below `f64::MIN_POSITIVE`.
pub fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    let (sa, ta) = top_bits(a, 64);
    let (sb, tb) = top_bits(b, 64);
    let e = sa as i64 - sb as i64;
    let m = ta as f64 / tb as f64;
    if e > 2000 {
        f64::INFINITY
    } else if e < -2000 {
        0.0
    } else {
        m * 2f64.powi(e as i32)
    }
}

/// Top `n ≤ 64` bits of `x` and the shift they were taken at.
fn top_bits(x: &BigUint, n: u64) -> (u64, u64) {
    let bits = x.bits();
    if bits <= n {
        (0, x.to_u64().unwrap_or(0))
    } else {
        let shift = bits - n;
        (shift, (x >> shift).to_u64().unwrap())
    }
}

pub fn big_to_f64(x: &BigUint) -> f64 {
    if x.bits() > 1023 {
        f64::INFINITY
    } else {
        x.to_f64().unwrap_or(f64::INFINITY)
    }
}

pub fn bigint_to_f64(x: &BigInt) -> f64 {
    let m = big_to_f64(x.magnitude());
    if x.sign() == Sign::Minus {
        -m
    } else {
        m
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Working float precision for series accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// 53-bit significand.
    #[default]
    Double,
    /// 128-bit significand.
    Extended,
}

impl Precision {
    /// Reads `BRJUNO_PRECISION` (`double` | `extended`); unset means double.
    pub fn from_env() -> std::result::Result<Self, String> {
        match std::env::var("BRJUNO_PRECISION") {
            Err(_) => Ok(Precision::Double),
            Ok(v) => v.parse(),
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" | "" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision {other:?}, expected double or extended")),
        }
    }
}

/// The scalar operations the series kernels need.
pub trait Real:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Unit roundoff bound of one operation.
    const EPSILON: f64;
    const PRECISION: Precision;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn ln(self) -> Self;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    /// Nearest representable value of a (possibly huge) integer.
    fn from_big(x: &BigUint) -> Self;
    /// Natural log of a positive big integer at this precision.
    fn ln_big(x: &BigUint) -> Self;
    /// `1/(a + t)` for `t ∈ [0,1]`.
    fn recip_big_plus(a: &BigUint, t: Self) -> Self {
        Self::one() / (Self::from_big(a) + t)
    }
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON;
    const PRECISION: Precision = Precision::Double;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    /// Saturates to infinity past the exponent range.
    fn from_big(x: &BigUint) -> Self {
        big_to_f64(x)
    }
    fn ln_big(x: &BigUint) -> Self {
        ln_big(x)
    }
}

/// Significand bits of [`Ext`].
pub const EXT_BITS: usize = 128;

/// Binary float with an [`EXT_BITS`]-bit significand and an unbounded
/// exponent, rounding half to even.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct Ext(FBig<HalfEven>);

impl Ext {
    fn wrap(x: FBig<HalfEven>) -> Self {
        Ext(x.with_precision(EXT_BITS).value())
    }

    pub fn abs(self) -> Self {
        if self.0.sign() == dashu_base::Sign::Negative {
            -self
        } else {
            self
        }
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, rhs: Ext) -> Ext {
        Ext(self.0 + rhs.0)
    }
}

impl Sub for Ext {
    type Output = Ext;
    fn sub(self, rhs: Ext) -> Ext {
        Ext(self.0 - rhs.0)
    }
}

impl Mul for Ext {
    type Output = Ext;
    fn mul(self, rhs: Ext) -> Ext {
        Ext(self.0 * rhs.0)
    }
}

impl Div for Ext {
    type Output = Ext;
    fn div(self, rhs: Ext) -> Ext {
        Ext(self.0 / rhs.0)
    }
}

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext(-self.0)
    }
}

impl Real for Ext {
    const EPSILON: f64 = 1.0 / (1u128 << (EXT_BITS - 1)) as f64;
    const PRECISION: Precision = Precision::Extended;
    /// Non-finite input maps to zero; callers only pass saturated reciprocals.
    fn from_f64(x: f64) -> Self {
        Ext::wrap(FBig::try_from(x).unwrap_or(FBig::ZERO))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn ln(self) -> Self {
        Ext(self.0.ln())
    }
    fn from_big(x: &BigUint) -> Self {
        Ext::wrap(FBig::from(UBig::from_le_bytes(&x.to_bytes_le())))
    }
    fn ln_big(x: &BigUint) -> Self {
        Self::from_big(x).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_big_matches_small_values() {
        for v in [1u64, 2, 3, 1000, u64::MAX] {
            let b = BigUint::from(v);
            assert!((ln_big(&b) - (v as f64).ln()).abs() < 1e-15 * (v as f64).ln().max(1.0));
        }
    }

    #[test]
    fn ln_big_huge_power_of_ten() {
        let x = BigUint::from(10u32).pow(1000);
        let expected = 1000.0 * std::f64::consts::LN_10;
        assert!((ln_big(&x) - expected).abs() < 1e-12 * expected);
        let tf = <Ext as Real>::ln_big(&x).to_f64();
        assert!((tf - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn ratio_of_huge_integers() {
        let a = BigUint::from(3u32) * BigUint::from(10u32).pow(500);
        let b = BigUint::from(10u32).pow(501);
        assert!((ratio_f64(&a, &b) - 0.3).abs() < 1e-15);
    }

    fn ext_pair(hi: f64, lo: f64) -> Ext {
        Ext::from_f64(hi) + Ext::from_f64(lo)
    }

    #[test]
    fn ext_logs_match_reference_digits() {
        // hi + lo pairs of 40-digit references
        let l10 = ext_pair(2.302585092994046, -2.1707562233822494e-16);
        let l3 = ext_pair(-1.0986122886681098, 9.07129723500153e-17);
        let third = Ext::one() / Ext::from_f64(3.0);
        assert!((Ext::from_f64(10.0).ln() - l10).abs().to_f64() < 1e-31);
        assert!((third.clone().ln() - l3).abs().to_f64() < 1e-31);
        assert!((third * Ext::from_f64(3.0) - Ext::one()).abs().to_f64() < 1e-37);
    }

    #[test]
    fn ext_keeps_huge_integers() {
        let x = (BigUint::from(1u32) << 120u32) + BigUint::from(12345u32);
        let v = Ext::from_big(&x) - Ext::from_f64(2f64.powi(120));
        assert_eq!(v.to_f64(), 12345.0);
        let big = BigUint::from(1u32) << 5000u32;
        let want = 5000.0 * std::f64::consts::LN_2;
        assert!((Ext::ln_big(&big).to_f64() - want).abs() <= 4.0 * f64::EPSILON * want);
        assert_eq!(Ext::recip_big_plus(&big, Ext::zero()).to_f64(), 0.0);
    }

    #[test]
    fn precision_parsing() {
        assert_eq!("double".parse::<Precision>().unwrap(), Precision::Double);
        assert_eq!("Extended".parse::<Precision>().unwrap(), Precision::Extended);
        assert!("quad".parse::<Precision>().is_err());
    }

    #[test]
    fn ln_add_exp_is_stable() {
        assert!((ln_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(ln_add_exp(5.0, f64::NEG_INFINITY), 5.0);
    }
}
