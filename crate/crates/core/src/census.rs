//! Exact orbit counting: prime orbit counts by Möbius inversion, general
//! orbit counts from the zeta series, and cumulative counting functions.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::systems::{mobius_sums, GrowthRate, SigmaSource};

/// `P_1..P_x` from `σ_1..σ_x`.
pub fn prime_counts(sigma: &[BigUint]) -> Result<Vec<BigUint>> {
    mobius_sums(sigma)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let ell = BigInt::from(i as u64 + 1);
            if s.is_negative() || !(&s % &ell).is_zero() {
                return Err(Error::InvalidPrimeCount(i as u64 + 1));
            }
            Ok((s / ell).to_biguint().expect("non-negative"))
        })
        .collect()
}

/// `N_0..N_x` from `n N_n = Σ_{k<=n} σ_k N_{n-k}`.
pub fn orbit_counts(sigma: &[BigUint]) -> Result<Vec<BigUint>> {
    let mut n_tab = vec![BigUint::one()];
    for n in 1..=sigma.len() {
        let mut acc = BigUint::zero();
        for k in 1..=n {
            if !sigma[k - 1].is_zero() && !n_tab[n - k].is_zero() {
                acc += &sigma[k - 1] * &n_tab[n - k];
            }
        }
        let nn = BigUint::from(n as u64);
        if !(&acc % &nn).is_zero() {
            return Err(Error::NonIntegralOrbitCount(n as u64));
        }
        n_tab.push(acc / nn);
    }
    Ok(n_tab)
}

/// Multiply a truncated series in place by `(1 - z^ell)^{-count}`.
pub fn mul_euler_factor(series: &mut [BigUint], ell: usize, count: &BigUint) {
    if count.is_zero() || ell >= series.len() {
        return;
    }
    let x = series.len() - 1;
    // binom[k] = C(count + k - 1, k)
    let kmax = x / ell;
    let mut binom = Vec::with_capacity(kmax + 1);
    binom.push(BigUint::one());
    for k in 1..=kmax {
        let prev: &BigUint = &binom[k - 1];
        binom.push(prev * (count + BigUint::from((k - 1) as u64)) / BigUint::from(k as u64));
    }
    for n in (ell..=x).rev() {
        let mut acc = BigUint::zero();
        for k in 1..=n / ell {
            let prev = &series[n - k * ell];
            if !prev.is_zero() {
                acc += &binom[k] * prev;
            }
        }
        series[n] += acc;
    }
}

/// Coefficients of `∏_{ℓ<=x} (1 - z^ℓ)^{-P_ℓ}` up to `z^x`.
pub fn euler_orbit_counts(primes: &[BigUint], x: usize) -> Vec<BigUint> {
    let mut series = vec![BigUint::zero(); x + 1];
    series[0] = BigUint::one();
    for (i, p) in primes.iter().enumerate().take(x) {
        mul_euler_factor(&mut series, i + 1, p);
    }
    series
}

/// `M(0..=x)` where `M(X) = Σ_{ℓ<=X} P_ℓ Λ^{-ℓ}`.
pub fn mertens_table(primes: &[BigUint], lambda: &GrowthRate, precision: u32) -> Vec<Real> {
    if let Some(exact) = &lambda.exact {
        return mertens_table_exact(primes, exact)
            .iter()
            .map(|m| Real::from_ratio(m, precision))
            .collect();
    }
    let wp = precision + 32;
    let inv = &Real::one(wp) / &lambda.value.with_precision(wp);
    let mut power = Real::one(wp);
    let mut acc = Real::zero(wp);
    let mut out = vec![Real::zero(precision)];
    for p in primes {
        power = &power * &inv;
        acc = &acc + &(&Real::from_biguint(p, wp) * &power);
        out.push(acc.with_precision(precision));
    }
    out
}

/// Exact `M(0..=x)` for rational `Λ = a/b`, by integer Horner accumulation.
pub fn mertens_table_exact(primes: &[BigUint], lambda: &BigRational) -> Vec<BigRational> {
    let a = lambda.numer().clone();
    let b = lambda.denom().clone();
    let mut horner = BigInt::zero();
    let mut a_pow = BigInt::one();
    let mut b_pow = BigInt::one();
    let mut out = vec![BigRational::zero()];
    for p in primes {
        a_pow *= &a;
        b_pow *= &b;
        horner = horner * &a + BigInt::from(p.clone()) * &b_pow;
        out.push(BigRational::new(horner.clone(), a_pow.clone()));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusOptions {
    /// Compute `N_n` (quadratic cost); prime counts and `M` are always built.
    pub totals: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { totals: true }
    }
}

/// Cumulative counts at `X`.
#[derive(Debug, Clone)]
pub struct Cumulative {
    /// `N(X)`, empty orbit included.
    pub n: BigUint,
    pub p: BigUint,
    pub m: Real,
}

/// Exact orbit tables up to `x_max`.
#[derive(Debug, Clone)]
pub struct OrbitCensus {
    x_max: u64,
    sigma: Vec<BigUint>,
    primes: Vec<BigUint>,
    totals: Option<Vec<BigUint>>,
    lambda: GrowthRate,
    mertens: Vec<Real>,
    precision: u32,
}

impl OrbitCensus {
    pub fn from_source(source: &SigmaSource, x_max: u64, precision: u32, opts: CensusOptions) -> Result<OrbitCensus> {
        let sigma = source.sigma_table(x_max)?;
        let lambda = source.growth_rate(precision)?;
        OrbitCensus::from_sigma(sigma, lambda, precision, opts)
    }

    pub fn from_sigma(sigma: Vec<BigUint>, lambda: GrowthRate, precision: u32, opts: CensusOptions) -> Result<OrbitCensus> {
        let primes = prime_counts(&sigma)?;
        let totals = if opts.totals { Some(orbit_counts(&sigma)?) } else { None };
        let mertens = mertens_table(&primes, &lambda, precision);
        Ok(OrbitCensus {
            x_max: sigma.len() as u64,
            sigma,
            primes,
            totals,
            lambda,
            mertens,
            precision,
        })
    }

    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn lambda(&self) -> &GrowthRate {
        &self.lambda
    }

    /// `σ_1..σ_X`.
    pub fn sigma_table(&self) -> &[BigUint] {
        &self.sigma
    }

    /// `P_1..P_X`.
    pub fn prime_table(&self) -> &[BigUint] {
        &self.primes
    }

    /// `N_0..N_X`, when built.
    pub fn total_table(&self) -> Result<&[BigUint]> {
        self.totals
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("census was built without N_n".into()))
    }

    fn check(&self, x: u64) -> Result<()> {
        if x > self.x_max {
            return Err(Error::OutOfRange { requested: x, available: self.x_max });
        }
        Ok(())
    }

    pub fn sigma(&self, k: u64) -> Result<&BigUint> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        self.check(k)?;
        Ok(&self.sigma[k as usize - 1])
    }

    pub fn prime(&self, ell: u64) -> Result<&BigUint> {
        if ell == 0 {
            return Err(Error::InvalidArgument("length must be at least 1".into()));
        }
        self.check(ell)?;
        Ok(&self.primes[ell as usize - 1])
    }

    pub fn total(&self, n: u64) -> Result<&BigUint> {
        self.check(n)?;
        Ok(&self.total_table()?[n as usize])
    }

    /// `N(X) = Σ_{n<=X} N_n`.
    pub fn cumulative_total(&self, x: u64) -> Result<BigUint> {
        self.check(x)?;
        Ok(self.total_table()?[..=x as usize].iter().sum())
    }

    pub fn cumulative_primes(&self, x: u64) -> Result<BigUint> {
        self.check(x)?;
        Ok(self.primes[..x as usize].iter().sum())
    }

    pub fn mertens(&self, x: u64) -> Result<&Real> {
        self.check(x)?;
        Ok(&self.mertens[x as usize])
    }

    /// Exact `M(X)` when `Λ` is rational.
    pub fn mertens_exact(&self, x: u64) -> Result<Option<BigRational>> {
        self.check(x)?;
        Ok(self
            .lambda
            .exact
            .as_ref()
            .map(|l| mertens_table_exact(&self.primes[..x as usize], l).pop().expect("non-empty")))
    }

    pub fn cumulative(&self, x: u64) -> Result<Cumulative> {
        Ok(Cumulative {
            n: self.cumulative_total(x)?,
            p: self.cumulative_primes(x)?,
            m: self.mertens(x)?.clone(),
        })
    }

    /// Compare the exp-recurrence totals with the Euler product.
    pub fn verify_euler(&self) -> Result<()> {
        let euler = euler_orbit_counts(&self.primes, self.x_max as usize);
        let totals = self.total_table()?;
        match totals.iter().zip(&euler).position(|(a, b)| a != b) {
            None => Ok(()),
            Some(n) => Err(Error::Inconsistent(format!("Euler product differs at n = {n}"))),
        }
    }

    /// CSV with columns `n,sigma,P,N,cumN,cumP,M`. With
    /// `include_empty = false` the empty orbit is dropped from `N_0` and `cumN`.
    pub fn to_csv(&self, include_empty: bool, digits: usize) -> Result<String> {
        let totals = self.total_table()?;
        let mut out = String::from("n,sigma,P,N,cumN,cumP,M\n");
        let mut cum_n = BigUint::zero();
        let mut cum_p = BigUint::zero();
        for n in 0..=self.x_max as usize {
            let nn = if n == 0 && !include_empty { BigUint::zero() } else { totals[n].clone() };
            cum_n += &nn;
            let (s, p) = if n == 0 {
                (String::new(), String::new())
            } else {
                cum_p += &self.primes[n - 1];
                (self.sigma[n - 1].to_string(), self.primes[n - 1].to_string())
            };
            writeln!(out, "{n},{s},{p},{nn},{cum_n},{cum_p},{}", self.mertens[n].to_decimal(digits))
                .expect("write to string");
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Builtin;
    use proptest::prelude::*;

    fn nat(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    fn periodic(vals: &[u64], x: usize) -> Vec<BigUint> {
        (0..x).map(|i| BigUint::from(vals[i % vals.len()])).collect()
    }

    /// Number of aperiodic binary necklaces of length n.
    fn necklaces(n: u64) -> u64 {
        let s: i64 = crate::numtheory::divisors(n)
            .into_iter()
            .map(|d| crate::numtheory::mobius(n / d).unwrap() as i64 * (1i64 << d))
            .sum();
        (s / n as i64) as u64
    }

    #[test]
    fn prime_count_examples() {
        let pow2: Vec<BigUint> = (1..=20).map(|k| BigUint::from(2u32).pow(k)).collect();
        let p = prime_counts(&pow2).unwrap();
        assert_eq!(p[..5], nat(&[2, 1, 2, 3, 6])[..]);
        for (i, v) in p.iter().enumerate() {
            assert_eq!(*v, BigUint::from(necklaces(i as u64 + 1)));
        }
        assert_eq!(prime_counts(&nat(&[1, 3, 49, 75])).unwrap(), nat(&[1, 1, 16, 18]));
        assert_eq!(prime_counts(&nat(&[1; 6])).unwrap(), nat(&[1, 0, 0, 0, 0, 0]));
        assert_eq!(prime_counts(&nat(&[1, 1, 2])), Err(Error::InvalidPrimeCount(3)));
    }

    #[test]
    fn orbit_count_examples() {
        let pow2: Vec<BigUint> = (1..=12).map(|k| BigUint::from(2u32).pow(k)).collect();
        let n = orbit_counts(&pow2).unwrap();
        for (i, v) in n.iter().enumerate() {
            assert_eq!(*v, BigUint::from(2u32).pow(i as u32));
        }
        let alt = orbit_counts(&periodic(&[1, 3], 30)).unwrap();
        for (i, v) in alt.iter().enumerate() {
            assert_eq!(*v, BigUint::from(i as u64 / 2 + 1), "n = {i}");
        }
        let zero = orbit_counts(&nat(&[0; 5])).unwrap();
        assert_eq!(zero, nat(&[1, 0, 0, 0, 0, 0]));
        assert_eq!(orbit_counts(&nat(&[1, 1, 2])), Err(Error::NonIntegralOrbitCount(3)));
    }

    #[test]
    fn euler_examples() {
        assert_eq!(euler_orbit_counts(&nat(&[2, 1]), 2), nat(&[1, 2, 4]));
        assert_eq!(euler_orbit_counts(&nat(&[0, 0, 0]), 3), nat(&[1, 0, 0, 0]));
        assert_eq!(euler_orbit_counts(&nat(&[1, 0, 0, 0]), 4), nat(&[1; 5]));
    }

    #[test]
    fn euler_matches_recurrence_for_builtins() {
        for b in [
            Builtin::FF { q: 2 },
            Builtin::E { p: 3, n: 2 },
            Builtin::GA,
            Builtin::GM,
            Builtin::Periodic(vec![1, 3]),
        ] {
            let c = OrbitCensus::from_source(&SigmaSource::Builtin(b), 40, 128, CensusOptions::default()).unwrap();
            c.verify_euler().unwrap();
        }
    }

    #[test]
    fn cumulative_examples() {
        let ff = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::FF { q: 2 }), 10, 128, CensusOptions::default()).unwrap();
        let c2 = ff.cumulative(2).unwrap();
        assert_eq!(c2.n, BigUint::from(7u32));
        assert_eq!(c2.p, BigUint::from(3u32));
        let c0 = ff.cumulative(0).unwrap();
        assert_eq!((c0.n, c0.p, c0.m.is_zero()), (BigUint::one(), BigUint::zero(), true));
        assert!(ff.cumulative(11).is_err());
        // M(2) = 2/2 + 1/4
        assert_eq!(ff.mertens_exact(2).unwrap(), Some(BigRational::new(5.into(), 4.into())));

        let alt = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::Periodic(vec![1, 3])), 12, 128, CensusOptions::default()).unwrap();
        for x in 2..=12 {
            assert_eq!(alt.mertens_exact(x).unwrap(), Some(BigRational::from_integer(2.into())));
        }
    }

    #[test]
    fn census_is_monotone_and_round_trips() {
        let c = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::E { p: 3, n: 2 }), 40, 128, CensusOptions::default()).unwrap();
        for k in 1..=40u64 {
            let s: BigUint = crate::numtheory::divisors(k)
                .into_iter()
                .map(|l| c.prime(l).unwrap() * BigUint::from(l))
                .sum();
            assert_eq!(&s, c.sigma(k).unwrap());
            assert!(c.cumulative_total(k).unwrap() >= c.cumulative_total(k - 1).unwrap());
            assert!(c.mertens(k).unwrap() >= c.mertens(k - 1).unwrap());
        }
    }

    #[test]
    fn irrational_lambda_mertens_tracks_exact_sum() {
        let c = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::GM), 30, 128, CensusOptions { totals: false }).unwrap();
        let lam = c.lambda().value.to_f64();
        let direct: f64 = (1..=30).map(|l| num_traits::ToPrimitive::to_f64(c.prime(l).unwrap()).unwrap() * lam.powi(-(l as i32))).sum();
        assert!((c.mertens(30).unwrap().to_f64() - direct).abs() < 1e-12 * direct);
        assert!(c.total_table().is_err());
    }

    #[test]
    fn csv_layout() {
        let ff = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::FF { q: 2 }), 2, 128, CensusOptions::default()).unwrap();
        let csv = ff.to_csv(true, 4).unwrap();
        assert_eq!(csv, "n,sigma,P,N,cumN,cumP,M\n0,,,1,1,0,0.0000\n1,2,2,2,3,2,1.0000\n2,4,1,4,7,3,1.2500\n");
        let no_empty = ff.to_csv(false, 2).unwrap();
        assert!(no_empty.contains("\n0,,,0,0,0,0.00\n"));
    }

    proptest! {
        #[test]
        fn euler_equals_recurrence_on_random_dold_tables(ps in proptest::collection::vec(0u64..50, 1..25)) {
            // Build σ from arbitrary non-negative P, so the table is Dold by construction.
            let x = ps.len() as u64;
            let sigma: Vec<BigUint> = (1..=x)
                .map(|k| crate::numtheory::divisors(k).into_iter().map(|l| BigUint::from(l * ps[l as usize - 1])).sum())
                .collect();
            let primes = prime_counts(&sigma).unwrap();
            prop_assert_eq!(primes.clone(), nat(&ps));
            prop_assert_eq!(orbit_counts(&sigma).unwrap(), euler_orbit_counts(&primes, x as usize));
        }
    }
}
