//! Binary floating point over big integers.
//!
//! A [`Real`] is `mantissa * 2^exponent` with the mantissa rounded to a
//! fixed number of significant bits. Arithmetic rounds to nearest after every
//! operation, at the larger precision of the two operands.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Default working precision in significant bits.
pub const DEFAULT_PRECISION: u32 = 128;

/// Extra bits carried by transcendental kernels.
const GUARD: u32 = 32;

#[derive(Clone, Debug)]
pub struct Real {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    // Step in chunks so intermediate powers of two stay finite.
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl Real {
    fn from_parts(mant: BigInt, exp: i64, prec: u32) -> Real {
        assert!(prec >= 2, "precision must be at least 2 bits");
        if mant.is_zero() {
            return Real {
                mant,
                exp: 0,
                prec,
            };
        }
        let bits = mant.bits();
        if bits <= prec as u64 {
            return Real { mant, exp, prec };
        }
        let shift = bits - prec as u64;
        let negative = mant.is_negative();
        let mag = mant.magnitude();
        let mut q = mag >> shift;
        let half_bit = (mag >> (shift - 1)) & BigUint::one();
        if !half_bit.is_zero() {
            q += 1u32;
        }
        let mut exp = exp + shift as i64;
        if q.bits() > prec as u64 {
            q >>= 1;
            exp += 1;
        }
        let mant = BigInt::from_biguint(if negative { Sign::Minus } else { Sign::Plus }, q);
        Real { mant, exp, prec }
    }

    pub fn zero(prec: u32) -> Real {
        Real::from_parts(BigInt::zero(), 0, prec)
    }

    pub fn one(prec: u32) -> Real {
        Real::from_parts(BigInt::one(), 0, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Real {
        Real::from_parts(BigInt::from(v), 0, prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Real {
        Real::from_parts(v.clone(), 0, prec)
    }

    pub fn from_biguint(v: &BigUint, prec: u32) -> Real {
        Real::from_parts(BigInt::from(v.clone()), 0, prec)
    }

    /// Exact conversion of a finite `f64`, then rounded to `prec`.
    pub fn from_f64(v: f64, prec: u32) -> Real {
        assert!(v.is_finite(), "cannot convert non-finite f64");
        if v == 0.0 {
            return Real::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac as i64, -1074)
        } else {
            ((frac | (1u64 << 52)) as i64, raw_exp - 1075)
        };
        Real::from_parts(BigInt::from(sign * mant), exp, prec)
    }

    pub fn from_ratio(v: &BigRational, prec: u32) -> Real {
        let num = Real::from_parts(v.numer().clone(), 0, prec + GUARD);
        let den = Real::from_parts(v.denom().clone(), 0, prec + GUARD);
        (num / den).with_precision(prec)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn with_precision(&self, prec: u32) -> Real {
        Real::from_parts(self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Real {
        Real {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// Multiply by `2^k` exactly.
    pub fn mul_pow2(&self, k: i64) -> Real {
        if self.is_zero() {
            return self.clone();
        }
        Real {
            mant: self.mant.clone(),
            exp: self.exp + k,
            prec: self.prec,
        }
    }

    /// Binary order of magnitude: `2^(m-1) <= |x| < 2^m`.
    pub fn magnitude_bits(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.mant.bits() as i64 + self.exp
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (top, shift) = if bits > 64 {
            (&self.mant >> (bits - 64), (bits - 64) as i64)
        } else {
            (self.mant.clone(), 0)
        };
        ldexp(top.to_f64().unwrap_or(0.0), self.exp + shift)
    }

    /// Exact rational value.
    pub fn to_ratio(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Nearest integer.
    pub fn round(&self) -> BigInt {
        self.to_ratio().round().to_integer()
    }

    pub fn floor(&self) -> BigInt {
        self.to_ratio().floor().to_integer()
    }

    pub fn sqrt(&self) -> Real {
        assert!(!self.is_negative(), "sqrt of negative Real");
        if self.is_zero() {
            return self.clone();
        }
        // Scale so the integer square root carries prec + 2 bits.
        let target = 2 * (self.prec as i64 + 2);
        let mut shift = (target - self.mant.bits() as i64).max(0);
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let scaled = self.mant.magnitude() << shift as usize;
        let root = scaled.sqrt();
        Real::from_parts(BigInt::from(root), (self.exp - shift) / 2, self.prec)
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, n: i64) -> Real {
        let wp = self.prec + GUARD;
        let mut base = self.with_precision(wp);
        let mut acc = Real::one(wp);
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        if n < 0 {
            acc = &Real::one(wp) / &acc;
        }
        acc.with_precision(self.prec)
    }

    /// `ln 2` at the given precision, via `2 atanh(1/3)`.
    pub fn ln2(prec: u32) -> Real {
        let wp = prec + GUARD;
        let third = &Real::one(wp) / &Real::from_i64(3, wp);
        atanh_series(&third, wp).mul_pow2(1).with_precision(prec)
    }

    pub fn pi(prec: u32) -> Real {
        // Machin: pi = 16 atan(1/5) - 4 atan(1/239).
        let wp = prec + GUARD;
        let a = atan_inv(5, wp).mul_pow2(4);
        let b = atan_inv(239, wp).mul_pow2(2);
        (&a - &b).with_precision(prec)
    }

    pub fn exp(&self) -> Real {
        let prec = self.prec;
        if self.is_zero() {
            return Real::one(prec);
        }
        let size = self.magnitude_bits().max(0) as u32;
        let wp = prec + GUARD + size;
        let x = self.with_precision(wp);
        let ln2 = Real::ln2(wp);
        let k = (&x / &ln2).round();
        let r = &x - &(&Real::from_bigint(&k, wp) * &ln2);
        // Halve the reduced argument s times, then square back.
        let s = 16u32;
        let r = r.mul_pow2(-(s as i64));
        let mut term = Real::one(wp);
        let mut sum = Real::one(wp);
        let mut i = 1i64;
        loop {
            term = &(&term * &r) / &Real::from_i64(i, wp);
            if term.is_zero() || term.magnitude_bits() < sum.magnitude_bits() - wp as i64 - 2 {
                break;
            }
            sum = &sum + &term;
            i += 1;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        let k = k.to_i64().expect("exponent overflow in Real::exp");
        sum.mul_pow2(k).with_precision(prec)
    }

    pub fn ln(&self) -> Real {
        assert!(self.signum() > 0, "ln of non-positive Real");
        let prec = self.prec;
        let wp = prec + GUARD;
        let mut e = self.magnitude_bits();
        let mut m = self.with_precision(wp).mul_pow2(-e); // m in [1/2, 1)
        let sqrt_half = Real::from_f64(std::f64::consts::FRAC_1_SQRT_2, wp);
        if m < sqrt_half {
            m = m.mul_pow2(1);
            e -= 1;
        }
        let one = Real::one(wp);
        let y = &(&m - &one) / &(&m + &one);
        let ln_m = atanh_series(&y, wp).mul_pow2(1);
        let result = &Real::from_i64(e, wp) * &Real::ln2(wp) + ln_m;
        result.with_precision(prec)
    }

    pub fn powf(&self, y: &Real) -> Real {
        let prec = self.prec.max(y.prec);
        (&self.with_precision(prec + GUARD).ln() * &y.with_precision(prec + GUARD))
            .exp()
            .with_precision(prec)
    }

    /// `(sin x, cos x)`.
    pub fn sin_cos(&self) -> (Real, Real) {
        let prec = self.prec;
        let size = self.magnitude_bits().max(0) as u32;
        let s = 12u32;
        let wp = prec + GUARD + size + s;
        let x = self.with_precision(wp);
        let two_pi = Real::pi(wp).mul_pow2(1);
        let k = (&x / &two_pi).round();
        let r = (&x - &(&Real::from_bigint(&k, wp) * &two_pi)).mul_pow2(-(s as i64));
        let r2 = &r * &r;
        let mut sin = r.clone();
        let mut cos = Real::one(wp);
        let mut term_s = r;
        let mut term_c = Real::one(wp);
        let mut i = 1i64;
        loop {
            term_c = -&(&(&term_c * &r2) / &Real::from_i64((2 * i - 1) * (2 * i), wp));
            term_s = -&(&(&term_s * &r2) / &Real::from_i64((2 * i) * (2 * i + 1), wp));
            cos = &cos + &term_c;
            sin = &sin + &term_s;
            if term_c.is_zero() || term_c.magnitude_bits() < -(wp as i64) - 2 {
                break;
            }
            i += 1;
        }
        let one = Real::one(wp);
        for _ in 0..s {
            let (sn, cn) = ((&sin * &cos).mul_pow2(1), &(&cos * &cos).mul_pow2(1) - &one);
            sin = sn;
            cos = cn;
        }
        (sin.with_precision(prec), cos.with_precision(prec))
    }

    pub fn cos(&self) -> Real {
        self.sin_cos().1
    }

    pub fn atan(&self) -> Real {
        let prec = self.prec;
        let wp = prec + GUARD;
        let one = Real::one(wp);
        let x = self.with_precision(wp);
        if x.abs() > one {
            let half_pi = Real::pi(wp).mul_pow2(-1);
            let inner = (&one / &x).atan();
            let r = if x.is_negative() { -&half_pi - inner } else { &half_pi - &inner };
            return r.with_precision(prec);
        }
        // Halve the angle three times: atan x = 2 atan(x / (1 + sqrt(1 + x^2))).
        let mut y = x;
        for _ in 0..3 {
            y = &y / &(&one + &(&one + &(&y * &y)).sqrt());
        }
        let y2 = &y * &y;
        let mut power = y.clone();
        let mut sum = y;
        let mut i = 1i64;
        loop {
            power = -&(&power * &y2);
            let term = &power / &Real::from_i64(2 * i + 1, wp);
            if term.is_zero() || term.magnitude_bits() < sum.magnitude_bits() - wp as i64 - 2 {
                break;
            }
            sum = &sum + &term;
            i += 1;
        }
        sum.mul_pow2(3).with_precision(prec)
    }

    /// Argument of `x + iy` in `(-pi, pi]`.
    pub fn atan2(y: &Real, x: &Real) -> Real {
        let prec = y.prec.max(x.prec);
        let pi = Real::pi(prec + GUARD);
        if x.is_zero() {
            return match y.signum() {
                1 => pi.mul_pow2(-1).with_precision(prec),
                -1 => (-pi.mul_pow2(-1)).with_precision(prec),
                _ => Real::zero(prec),
            };
        }
        let base = (&y.with_precision(prec + GUARD) / &x.with_precision(prec + GUARD)).atan();
        let r = if !x.is_negative() {
            base
        } else if y.is_negative() {
            &base - &pi
        } else {
            &base + &pi
        };
        r.with_precision(prec)
    }

    /// Decimal string with `frac_digits` digits after the point.
    pub fn to_decimal(&self, frac_digits: usize) -> String {
        let scaled = self.to_ratio() * BigRational::from_integer(BigInt::from(10u32).pow(frac_digits as u32));
        let n = scaled.round().to_integer();
        let negative = n.is_negative();
        let digits = n.magnitude().to_str_radix(10);
        let digits = if digits.len() <= frac_digits {
            format!("{}{}", "0".repeat(frac_digits + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = digits.split_at(digits.len() - frac_digits);
        let sign = if negative { "-" } else { "" };
        if frac_digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }

    /// Decimal string with roughly the number of significant digits the
    /// precision supports.
    pub fn to_decimal_sig(&self) -> String {
        let sig = ((self.prec as f64) * std::f64::consts::LOG10_2).floor() as i64 - 1;
        if self.is_zero() {
            return self.to_decimal(sig as usize);
        }
        let mag10 = (self.magnitude_bits() as f64 * std::f64::consts::LOG10_2).ceil() as i64;
        let frac = (sig - mag10).max(0) as usize;
        self.to_decimal(frac)
    }
}

fn atanh_series(y: &Real, wp: u32) -> Real {
    // atanh(y) = sum y^(2i+1) / (2i+1), |y| < 1.
    let y2 = y * y;
    let mut power = y.clone();
    let mut sum = y.clone();
    let mut i = 1i64;
    loop {
        power = &power * &y2;
        let term = &power / &Real::from_i64(2 * i + 1, wp);
        if term.is_zero() || term.magnitude_bits() < sum.magnitude_bits() - wp as i64 - 2 {
            break;
        }
        sum = &sum + &term;
        i += 1;
    }
    sum
}

fn atan_inv(n: i64, wp: u32) -> Real {
    let x = &Real::one(wp) / &Real::from_i64(n, wp);
    let x2 = &x * &x;
    let mut power = x.clone();
    let mut sum = x;
    let mut i = 1i64;
    loop {
        power = &power * &x2;
        let term = &power / &Real::from_i64(2 * i + 1, wp);
        if term.is_zero() || term.magnitude_bits() < sum.magnitude_bits() - wp as i64 - 2 {
            break;
        }
        sum = if i % 2 == 1 { &sum - &term } else { &sum + &term };
        i += 1;
    }
    sum
}

impl<'a> Add<&'a Real> for &'a Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return rhs.with_precision(prec);
        }
        if rhs.is_zero() {
            return self.with_precision(prec);
        }
        // A summand entirely below the rounding position of the other is dropped.
        let (hi, lo) = if self.magnitude_bits() >= rhs.magnitude_bits() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if lo.magnitude_bits() < hi.magnitude_bits() - prec as i64 - 4 {
            return hi.with_precision(prec);
        }
        let e = hi.exp.min(lo.exp);
        let a = &hi.mant << (hi.exp - e) as usize;
        let b = &lo.mant << (lo.exp - e) as usize;
        Real::from_parts(a + b, e, prec)
    }
}

impl<'a> Sub<&'a Real> for &'a Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Real> for &'a Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        let prec = self.prec.max(rhs.prec);
        Real::from_parts(&self.mant * &rhs.mant, self.exp + rhs.exp, prec)
    }
}

impl<'a> Div<&'a Real> for &'a Real {
    type Output = Real;
    fn div(self, rhs: &Real) -> Real {
        assert!(!rhs.is_zero(), "division by zero Real");
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return Real::zero(prec);
        }
        let shift = (prec as i64 + 2 + rhs.mant.bits() as i64 - self.mant.bits() as i64).max(0);
        let num = &self.mant << shift as usize;
        let q = num / &rhs.mant;
        Real::from_parts(q, self.exp - shift - rhs.exp, prec)
    }
}

impl Add for Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        &self + &rhs
    }
}

impl Sub for Real {
    type Output = Real;
    fn sub(self, rhs: Real) -> Real {
        &self - &rhs
    }
}

impl Mul for Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        &self * &rhs
    }
}

impl Div for Real {
    type Output = Real;
    fn div(self, rhs: Real) -> Real {
        &self / &rhs
    }
}

impl Add<Real> for &Real {
    type Output = Real;
    fn add(self, rhs: Real) -> Real {
        self + &rhs
    }
}

impl Mul<Real> for &Real {
    type Output = Real;
    fn mul(self, rhs: Real) -> Real {
        self * &rhs
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: -&self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Real) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Real) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Real) -> Ordering {
        // Exact comparison of mant * 2^exp values.
        self.to_ratio().cmp(&other.to_ratio())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_sig())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u32 = 128;

    fn close(a: &Real, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn constants() {
        assert!(close(&Real::ln2(P), std::f64::consts::LN_2, 1e-16));
        assert!(close(&Real::pi(P), std::f64::consts::PI, 1e-16));
        // ln 2 to 36 digits.
        assert_eq!(
            Real::ln2(P).to_decimal(36),
            "0.693147180559945309417232121458176568"
        );
        assert_eq!(
            Real::pi(P).to_decimal(36),
            "3.141592653589793238462643383279502884"
        );
    }

    #[test]
    fn exp_ln_roundtrip() {
        for v in [1e-9, 0.3, 1.0, 2.5, 17.0, 1234.5] {
            let x = Real::from_f64(v, P);
            let back = x.ln().exp();
            let err = (&back - &x).abs();
            assert!(err.magnitude_bits() < x.magnitude_bits() - 120, "v = {v}");
        }
        assert!(close(&Real::from_f64(-3.0, P).exp(), (-3f64).exp(), 1e-15));
        assert!(close(&Real::one(P).exp(), std::f64::consts::E, 1e-16));
    }

    #[test]
    fn sqrt_and_division() {
        let two = Real::from_i64(2, P);
        let r = two.sqrt();
        let sq = &r * &r;
        assert!((&sq - &two).abs().magnitude_bits() < -120);
        let third = &Real::one(P) / &Real::from_i64(3, P);
        assert_eq!(third.to_decimal(20), "0.33333333333333333333");
    }

    #[test]
    fn rational_roundtrip_and_rounding() {
        let q = BigRational::new(1058.into(), 781.into());
        let r = Real::from_ratio(&q, P);
        assert_eq!(r.to_decimal(6), "1.354673");
        assert_eq!(Real::from_f64(-2.5, P).to_decimal(0), "-3");
        assert_eq!(Real::from_f64(0.001, 64).to_decimal(3), "0.001");
        assert_eq!(Real::from_i64(-7, P).powi(3).to_f64(), -343.0);
        assert!(close(&Real::from_i64(4, P).powi(-2), 0.0625, 0.0));
    }

    #[test]
    fn sum_with_huge_exponent_gap() {
        let big = Real::from_i64(1, P).mul_pow2(400);
        let tiny = Real::from_i64(1, P).mul_pow2(-400);
        assert_eq!(&big + &tiny, big);
        assert_eq!((&tiny - &tiny).signum(), 0);
    }

    #[test]
    fn trig() {
        let (s, c) = Real::from_i64(1, P).sin_cos();
        assert_eq!(s.to_decimal(30), "0.841470984807896506652502321630");
        assert_eq!(c.to_decimal(30), "0.540302305868139717400936607443");
        let quarter = Real::one(P).atan().mul_pow2(2);
        assert!((&quarter - &Real::pi(P)).abs().magnitude_bits() < -120);
        let y = Real::from_f64(-0.5, P);
        let x = Real::from_f64(-2.0, P);
        assert!(close(&Real::atan2(&y, &x), (-0.5f64).atan2(-2.0), 1e-15));
        assert!(close(&Real::from_f64(100.0, P).cos(), 100f64.cos(), 1e-13));
    }

    proptest! {
        #[test]
        fn arithmetic_tracks_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let x = Real::from_f64(a, P);
            let y = Real::from_f64(b, P);
            prop_assert!(((&x + &y).to_f64() - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs() + 1.0));
            prop_assert!(((&x * &y).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs() + 1e-300);
            if b != 0.0 {
                prop_assert!(((&x / &y).to_f64() - a / b).abs() <= 1e-12 * (a / b).abs() + 1e-300);
            }
        }

        #[test]
        fn powf_matches_f64(a in 0.01f64..100.0, b in -3.0f64..3.0) {
            let r = Real::from_f64(a, P).powf(&Real::from_f64(b, P)).to_f64();
            prop_assert!((r - a.powf(b)).abs() <= 1e-12 * a.powf(b));
        }
    }
}
