//! Extended-range binary floating point: a 128-bit significand with a
//! 64-bit exponent. Probabilities such as `1/|A_l| = 2^{−2^{16}}` are far
//! outside `f64`, while 128 bits keep each operation within `2^{−126}`
//! relative error.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `(−1)^neg · mant · 2^exp`, with `mant` normalised (top bit set) or zero.
#[derive(Clone, Copy, Debug)]
pub struct BigValue {
    neg: bool,
    mant: u128,
    exp: i64,
}

const TOP: u128 = 1 << 127;

impl BigValue {
    pub const ZERO: Self = Self { neg: false, mant: 0, exp: 0 };

    fn normalized(neg: bool, mant: u128, exp: i64) -> Self {
        if mant == 0 {
            return Self::ZERO;
        }
        let shift = mant.leading_zeros();
        Self {
            neg,
            mant: mant << shift,
            exp: exp - shift as i64,
        }
    }

    /// Normalises a 256-bit magnitude `hi·2^128 + lo` scaled by `2^exp`.
    fn from_wide(neg: bool, hi: u128, lo: u128, exp: i64) -> Self {
        if hi == 0 {
            return Self::normalized(neg, lo, exp);
        }
        let shift = hi.leading_zeros();
        let mant = if shift == 0 { hi } else { (hi << shift) | (lo >> (128 - shift)) };
        Self {
            neg,
            mant,
            exp: exp + 128 - shift as i64,
        }
    }

    pub fn from_u128(x: u128) -> Self {
        Self::normalized(false, x, 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Self { neg: false, mant: TOP, exp: e - 127 }
    }

    pub fn from_bigint(x: &BigInt) -> Self {
        let neg = x.sign() == Sign::Minus;
        let mag = x.magnitude();
        let bits = mag.bits();
        if bits <= 128 {
            let v = Self::normalized(neg, mag.to_u128().expect("fits in 128 bits"), 0);
            return v;
        }
        let shift = bits - 128;
        let top = (mag >> shift).to_u128().expect("fits in 128 bits");
        Self::normalized(neg, top, shift as i64)
    }

    pub fn from_rational(x: &BigRational) -> Self {
        Self::from_bigint(x.numer()) / Self::from_bigint(x.denom())
    }

    /// Exact value as a rational (exponents must stay moderate).
    pub fn to_rational(self) -> BigRational {
        if self.mant == 0 {
            return BigRational::zero();
        }
        let m = BigInt::from(self.mant);
        let m = if self.neg { -m } else { m };
        if self.exp >= 0 {
            BigRational::from_integer(m << self.exp as usize)
        } else {
            BigRational::new(m, BigInt::one() << (-self.exp) as usize)
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 || !x.is_finite() {
            assert!(x.is_finite(), "BigValue cannot represent {x}");
            return Self::ZERO;
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), biased - 1075)
        };
        Self::normalized(neg, mant as u128, exp)
    }

    pub fn to_f64(self) -> f64 {
        if self.mant == 0 {
            return 0.0;
        }
        let top = (self.mant >> 64) as u64;
        let v = ldexp(top as f64, self.exp + 64);
        if self.neg {
            -v
        } else {
            v
        }
    }

    /// `(s, e)` with `self = s · 2^e` and `1 ≤ |s| < 2` (`(0, 0)` for zero).
    pub fn significand_exponent(self) -> (f64, i64) {
        if self.mant == 0 {
            return (0.0, 0);
        }
        let s = (self.mant >> 64) as f64 / (1u128 << 63) as f64;
        (if self.neg { -s } else { s }, self.exp + 127)
    }

    pub fn is_negative(self) -> bool {
        self.neg && self.mant != 0
    }

    pub fn abs(self) -> Self {
        Self { neg: false, ..self }
    }

    /// `log₂|x|` in double precision (`−∞` for zero).
    pub fn log2(self) -> f64 {
        if self.mant == 0 {
            return f64::NEG_INFINITY;
        }
        ((self.mant >> 64) as f64).log2() + (self.exp + 64) as f64
    }

    pub fn ln(self) -> f64 {
        self.log2() * std::f64::consts::LN_2
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        match (self.mant == 0, other.mant == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.exp.cmp(&other.exp).then(self.mant.cmp(&other.mant)),
        }
    }
}

/// `x · 2^e` without intermediate overflow.
fn ldexp(x: f64, e: i64) -> f64 {
    if e > 2200 {
        return f64::INFINITY * x.signum();
    }
    if e < -2200 {
        return 0.0;
    }
    let half = (e / 2) as i32;
    x * 2f64.powi(half) * 2f64.powi(e as i32 - half)
}

fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let mask = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & mask);
    let (b1, b0) = (b >> 64, b & mask);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
    let lo = (p00 & mask) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

impl PartialEq for BigValue {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for BigValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (sn, on) = (self.is_negative(), other.is_negative());
        Some(match (sn, on) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        })
    }
}

impl Neg for BigValue {
    type Output = Self;
    fn neg(self) -> Self {
        if self.mant == 0 {
            self
        } else {
            Self { neg: !self.neg, ..self }
        }
    }
}

impl Add for BigValue {
    type Output = Self;
    fn add(self, other: Self) -> Self {
        if self.mant == 0 {
            return other;
        }
        if other.mant == 0 {
            return self;
        }
        let (a, b) = if self.cmp_magnitude(&other) == Ordering::Less {
            (other, self)
        } else {
            (self, other)
        };
        let shift = (a.exp - b.exp) as u64;
        if shift >= 256 {
            return a;
        }
        // b aligned to a: b.mant · 2^{128 − shift} as a 256-bit value.
        let (bh, bl) = match shift {
            0 => (b.mant, 0),
            s if s < 128 => (b.mant >> s, b.mant << (128 - s)),
            128 => (0, b.mant),
            s => (0, b.mant >> (s - 128)),
        };
        let base = a.exp - 128;
        if a.neg == b.neg {
            let (hi, overflow) = a.mant.overflowing_add(bh);
            if overflow {
                Self {
                    neg: a.neg,
                    mant: (hi >> 1) | TOP,
                    exp: base + 129,
                }
            } else {
                Self::from_wide(a.neg, hi, bl, base)
            }
        } else {
            let lo = bl.wrapping_neg();
            let hi = a.mant - bh - (bl != 0) as u128;
            Self::from_wide(a.neg, hi, lo, base)
        }
    }
}

impl Sub for BigValue {
    type Output = Self;
    fn sub(self, other: Self) -> Self {
        self + (-other)
    }
}

impl Mul for BigValue {
    type Output = Self;
    fn mul(self, other: Self) -> Self {
        if self.mant == 0 || other.mant == 0 {
            return Self::ZERO;
        }
        let (hi, lo) = mul_wide(self.mant, other.mant);
        Self::from_wide(self.neg != other.neg, hi, lo, self.exp + other.exp)
    }
}

impl Div for BigValue {
    type Output = Self;
    fn div(self, other: Self) -> Self {
        assert!(other.mant != 0, "BigValue division by zero");
        if self.mant == 0 {
            return Self::ZERO;
        }
        let (a, b) = (self.mant, other.mant);
        // Restoring division producing 128 quotient bits.
        let (mut q, mut rem, steps, exp) = if a >= b {
            (1u128, a - b, 127, self.exp - other.exp - 127)
        } else {
            (0u128, a, 128, self.exp - other.exp - 128)
        };
        for _ in 0..steps {
            let carry = rem >> 127 == 1;
            rem <<= 1;
            q <<= 1;
            if carry || rem >= b {
                rem = rem.wrapping_sub(b);
                q |= 1;
            }
        }
        Self::normalized(self.neg != other.neg, q, exp)
    }
}

impl Zero for BigValue {
    fn zero() -> Self {
        Self::ZERO
    }
    fn is_zero(&self) -> bool {
        self.mant == 0
    }
}

impl One for BigValue {
    fn one() -> Self {
        Self::pow2(0)
    }
}

impl std::iter::Sum for BigValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for BigValue {
    /// Decimal approximation `d.ddddddddddde±N`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mant == 0 {
            return write!(f, "0");
        }
        let l10 = self.log2() * std::f64::consts::LOG10_2;
        let mut e10 = l10.floor();
        let mut m = 10f64.powf(l10 - e10);
        if m >= 9.999_999_999_995 {
            m /= 10.0;
            e10 += 1.0;
        }
        let sign = if self.neg { "-" } else { "" };
        write!(f, "{sign}{m:.11}e{e10}")
    }
}

impl serde::Serialize for BigValue {
    /// `{significand, exponent, decimal}` with `value = significand · 2^exponent`.
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (m, e) = self.significand_exponent();
        let mut st = s.serialize_struct("BigValue", 3)?;
        st.serialize_field("significand", &m)?;
        st.serialize_field("exponent", &e)?;
        st.serialize_field("decimal", &self.to_string())?;
        st.end()
    }
}

/// Scalar used by the construction's lumped semigroup.
pub trait ChainValue:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
{
    fn from_rational(x: &BigRational) -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    /// Relative precision target of a series truncation.
    fn series_tolerance() -> Self;
}

impl ChainValue for f64 {
    fn from_rational(x: &BigRational) -> Self {
        x.to_f64().unwrap_or(0.0)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn series_tolerance() -> Self {
        f64::EPSILON / 4.0
    }
}

impl ChainValue for BigValue {
    fn from_rational(x: &BigRational) -> Self {
        BigValue::from_rational(x)
    }
    fn from_f64(x: f64) -> Self {
        BigValue::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        BigValue::to_f64(self)
    }
    fn abs(self) -> Self {
        BigValue::abs(self)
    }
    fn series_tolerance() -> Self {
        BigValue::pow2(-100)
    }
}

/// `|x − y| ≤ 2^{−bits} |y|` for exact rationals.
pub fn within_relative(x: &BigRational, y: &BigRational, bits: usize) -> bool {
    let diff = (x - y).abs();
    let bound = y.abs() / BigRational::from_integer(BigInt::one() << bits);
    diff <= bound
}

/// `⌈x⌉` of a positive rational as an integer.
pub fn ceil_rational(x: &BigRational) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn significand_exponent() {
        let x = super::BigValue::from_f64(-12.0);
        assert_eq!(x.significand_exponent(), (-1.5, 3));
        let y = super::BigValue::pow2(-70000);
        assert_eq!(y.significand_exponent(), (1.0, -70000));
        let j = serde_json::to_value(y).unwrap();
        assert_eq!(j["exponent"], -70000);
    }

    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assume, proptest, ProptestConfig};

    fn big(m: i128, e: i32) -> BigValue {
        BigValue::from_bigint(&BigInt::from(m)) * BigValue::pow2(e as i64)
    }

    fn exact(m: i128, e: i32) -> BigRational {
        let m = BigRational::from_integer(BigInt::from(m));
        let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs() as usize);
        if e >= 0 {
            m * p
        } else {
            m / p
        }
    }

    #[test]
    fn basics() {
        let one = BigValue::one();
        assert_eq!(one.to_f64(), 1.0);
        assert_eq!((one + one).to_f64(), 2.0);
        assert_eq!((one - one).to_f64(), 0.0);
        assert_eq!(BigValue::from_f64(0.1).to_f64(), 0.1);
        assert_eq!(BigValue::from_f64(-3.5e-300).to_f64(), -3.5e-300);
        assert_eq!((BigValue::from_f64(1.0) / BigValue::from_f64(3.0)).to_f64(), 1.0 / 3.0);
        assert!(BigValue::from_f64(-2.0) < BigValue::from_f64(1.0));
        assert!(BigValue::pow2(-70000) > BigValue::ZERO);
        assert_eq!(BigValue::pow2(-70000).log2(), -70000.0);
        assert_eq!(format!("{}", BigValue::from_f64(1234.5)), "1.23450000000e3");
        assert_eq!(format!("{}", BigValue::pow2(-65536)), format!("{}", BigValue::pow2(-65536)));
    }

    #[test]
    fn huge_range_round_trip() {
        let tiny = BigValue::pow2(-(1 << 16));
        let prod = tiny * BigValue::pow2(1 << 16);
        assert_eq!(prod.to_f64(), 1.0);
        let third = BigValue::one() / BigValue::from_f64(3.0);
        let r = third.to_rational();
        let want = BigRational::new(1.into(), 3.into());
        assert!(within_relative(&r, &want, 126));
    }

    #[test]
    fn rational_conversion() {
        let x = BigRational::new(BigInt::from(7) << 300usize, BigInt::from(3) << 5usize);
        let b = BigValue::from_rational(&x);
        assert!(within_relative(&b.to_rational(), &x, 120));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn arithmetic_matches_rationals(
            ma in any::<i64>(), ea in -200i32..200,
            mb in any::<i64>(), eb in -200i32..200,
            wide_a in any::<u64>(), wide_b in any::<u64>(),
        ) {
            prop_assume!(ma != 0 && mb != 0);
            let ma = (ma as i128) << 64 | wide_a as i128;
            let mb = (mb as i128) << 64 | wide_b as i128;
            let (x, y) = (big(ma, ea), big(mb, eb));
            let (rx, ry) = (exact(ma, ea), exact(mb, eb));
            prop_assert!(within_relative(&(x * y).to_rational(), &(&rx * &ry), 125));
            prop_assert!(within_relative(&(x / y).to_rational(), &(&rx / &ry), 125));
            for (got, want) in [(x + y, &rx + &ry), (x - y, &rx - &ry)] {
                prop_assert!(want.is_zero() && got.is_zero() || within_relative(&got.to_rational(), &want, 124));
            }
            prop_assert!((x < y) == (rx < ry));
        }

        #[test]
        fn nonnegative_sums_have_relative_error(ma in 1u64.., ea in -300i32..300, mb in 1u64.., eb in -300i32..300) {
            let (x, y) = (big(ma as i128, ea), big(mb as i128, eb));
            let want = exact(ma as i128, ea) + exact(mb as i128, eb);
            prop_assert!(within_relative(&(x + y).to_rational(), &want, 125));
        }
    }
}
