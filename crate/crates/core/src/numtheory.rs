//! Arithmetic kernels: Möbius function, p-adic valuations, multiplicative
//! orders, lifting-the-exponent parameters and gcd-sequence checks.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::error::{Error, Result};

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::InvalidArgument("mobius(0) is undefined".into()));
    }
    let mut sign = 1i8;
    for (_, e) in factorize(n) {
        if e > 1 {
            return Ok(0);
        }
        sign = -sign;
    }
    Ok(sign)
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Sorted list of positive divisors.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// `v_p(n)` for a non-zero big integer.
pub fn valuation_big(n: &BigUint, p: u64) -> u64 {
    assert!(!n.is_zero(), "valuation of zero");
    let p_big = BigUint::from(p);
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&p_big);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

/// `v_p(k)` for machine integers; `k` must be non-zero.
pub fn valuation(mut k: u64, p: u64) -> u32 {
    debug_assert!(k != 0 && p >= 2);
    let mut v = 0;
    while k.is_multiple_of(p) {
        k /= p;
        v += 1;
    }
    v
}

/// The valuation `v_p(k)` together with the absolute value `|k|_p = p^{-v}`.
pub fn p_valuation(k: u64, p: u64) -> Result<(u32, BigRational)> {
    if k == 0 {
        return Err(Error::InvalidArgument("p-adic valuation of 0".into()));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let v = valuation(k, p);
    let abs = BigRational::new(BigInt::one(), BigInt::from(p).pow(v));
    Ok((v, abs))
}

/// Multiplicative order of `n` modulo `m`, for `gcd(n, m) = 1`.
pub fn multiplicative_order(n: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("modulus {m} < 2")));
    }
    if gcd(n % m, m) != 1 {
        return Err(Error::OrderUndefined { n, p: m });
    }
    let phi = euler_phi(m);
    // The order divides phi(m); test divisors in increasing order.
    for d in divisors(phi) {
        if pow_mod(n, d, m) == 1 {
            return Ok(d);
        }
    }
    unreachable!("order must divide phi(m)")
}

/// Lifting-the-exponent parameters for `n` and an odd prime `p ∤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LteParams {
    /// Multiplicative order of `n` modulo `p`.
    pub order: u64,
    /// `v_p(n^order - 1)`.
    pub exponent: u64,
}

impl LteParams {
    /// `v_p(n^k - 1)` predicted from the parameters.
    pub fn valuation_of_power_minus_one(&self, k: u64, p: u64) -> u64 {
        if !k.is_multiple_of(self.order) {
            0
        } else {
            self.exponent + valuation(k / self.order, p) as u64
        }
    }
}

pub fn lte_params(n: u64, p: u64) -> Result<LteParams> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::OddPrimeOnly(p));
    }
    if n.is_multiple_of(p) {
        return Err(Error::OrderUndefined { n, p });
    }
    let order = multiplicative_order(n, p)?;
    let power = BigUint::from(n).pow(order as u32) - 1u32;
    let exponent = valuation_big(&power, p);
    Ok(LteParams { order, exponent })
}

/// One period of a periodic sequence `a_1, a_2, ...` with exact rational
/// entries. The value at `k` is `values[(k - 1) mod period]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicSequence {
    values: Vec<BigRational>,
}

impl PeriodicSequence {
    pub fn new(values: Vec<BigRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "periodic sequence needs at least one value".into(),
            ));
        }
        Ok(PeriodicSequence { values })
    }

    pub fn constant(value: BigRational) -> Self {
        PeriodicSequence {
            values: vec![value],
        }
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect(),
        )
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn at(&self, k: u64) -> &BigRational {
        let period = self.values.len() as u64;
        let idx = (k + period - 1) % period;
        &self.values[idx as usize]
    }

    /// Integer value at `k`, if the entry is integral.
    pub fn integer_at(&self, k: u64) -> Option<BigInt> {
        let v = self.at(k);
        v.is_integer().then(|| v.to_integer())
    }

    /// Value at `k` as a non-negative machine integer.
    pub fn small_integer_at(&self, k: u64) -> Option<u64> {
        self.integer_at(k).and_then(|v| v.to_u64())
    }

    pub fn all_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }
}

/// Whether `gcd(a_m, a_n) = a_{gcd(m, n)}` holds for all `1 <= m, n <= window`.
pub fn is_gcd_sequence(seq: &PeriodicSequence, window: u64) -> Result<bool> {
    let ints: Vec<BigInt> = (1..=window)
        .map(|k| seq.integer_at(k).ok_or(Error::NonIntegral(k)))
        .collect::<Result<_>>()?;
    for m in 1..=window {
        for n in m..=window {
            let lhs = ints[(m - 1) as usize].gcd(&ints[(n - 1) as usize]);
            if lhs != ints[(gcd(m, n) - 1) as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
