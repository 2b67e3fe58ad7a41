//! Exact joint distribution of orbit length and a strongly additive statistic.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::census::OrbitCensus;
use crate::error::{Error, Result};
use crate::real::Real;

/// `C(n, d)` for a big `n` and small `d`.
pub fn binomial(n: &BigUint, d: u64) -> BigUint {
    if BigUint::from(d) > *n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..d {
        acc = acc * (n - BigUint::from(i)) / BigUint::from(i + 1);
    }
    acc
}

/// Strongly additive weights: for each length, classes of prime orbits
/// sharing one weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdditive {
    classes: Vec<Vec<(BigUint, BigRational)>>,
}

impl WeightedAdditive {
    /// `classes[ℓ-1]` lists `(count, weight)` pairs for length `ℓ`.
    pub fn new(classes: Vec<Vec<(BigUint, BigRational)>>, primes: &[BigUint]) -> Result<WeightedAdditive> {
        if classes.len() > primes.len() {
            return Err(Error::TableTooShort { needed: classes.len(), have: primes.len() });
        }
        for (i, cls) in classes.iter().enumerate() {
            let total: BigUint = cls.iter().map(|(c, _)| c).sum();
            if total != primes[i] {
                return Err(Error::Inconsistent(format!(
                    "weight classes at length {} count {total} orbits, P = {}",
                    i + 1,
                    primes[i]
                )));
            }
        }
        Ok(WeightedAdditive { classes })
    }

    /// `g(P) = 1`: the number of distinct prime orbits, `W`.
    pub fn unit(primes: &[BigUint]) -> WeightedAdditive {
        WeightedAdditive::by_length(primes, |_| BigRational::one())
    }

    /// Weight 1 on lengths in the subset, 0 elsewhere.
    pub fn subset_by_length(primes: &[BigUint], keep: impl Fn(u64) -> bool) -> WeightedAdditive {
        WeightedAdditive::by_length(primes, |l| if keep(l) { BigRational::one() } else { BigRational::zero() })
    }

    /// `g(P) = Λ^{-ℓ(P)}` for rational `Λ`.
    pub fn inverse_growth(primes: &[BigUint], lambda: &BigRational) -> WeightedAdditive {
        let inv = lambda.recip();
        WeightedAdditive::by_length(primes, |l| num_traits::pow(inv.clone(), l as usize))
    }

    /// `g(P) = Λ^{-ℓ(P)}` for irrational `Λ`, each weight rounded to `bits` fractional bits.
    pub fn inverse_growth_rounded(primes: &[BigUint], lambda: &Real, bits: u32) -> WeightedAdditive {
        let scale = BigInt::one() << bits;
        WeightedAdditive::by_length(primes, |l| {
            let w = (&Real::one(bits + 32) / &lambda.with_precision(bits + 32).powi(l as i64)).mul_pow2(bits as i64);
            BigRational::new(w.round(), scale.clone())
        })
    }

    pub fn by_length(primes: &[BigUint], weight: impl Fn(u64) -> BigRational) -> WeightedAdditive {
        let classes = primes
            .iter()
            .enumerate()
            .map(|(i, p)| if p.is_zero() { vec![] } else { vec![(p.clone(), weight(i as u64 + 1))] })
            .collect();
        WeightedAdditive { classes }
    }

    pub fn max_length(&self) -> u64 {
        self.classes.len() as u64
    }

    pub fn classes(&self, ell: u64) -> &[(BigUint, BigRational)] {
        &self.classes[ell as usize - 1]
    }
}

/// Counts `c_{n,v}` of general orbits of length `n` with statistic `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateCensus {
    x_max: u64,
    cells: Vec<BTreeMap<BigRational, BigUint>>,
}

impl BivariateCensus {
    pub fn x_max(&self) -> u64 {
        self.x_max
    }

    /// Nonzero cells at length `n`.
    pub fn row(&self, n: u64) -> &BTreeMap<BigRational, BigUint> {
        &self.cells[n as usize]
    }

    pub fn count(&self, n: u64, v: &BigRational) -> BigUint {
        self.cells[n as usize].get(v).cloned().unwrap_or_default()
    }

    /// Sorted attainable values over all lengths.
    pub fn values(&self) -> Vec<BigRational> {
        let mut all: Vec<BigRational> = self.cells.iter().flat_map(|r| r.keys().cloned()).collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn value_index(&self) -> BTreeMap<BigRational, usize> {
        self.values().into_iter().enumerate().map(|(i, v)| (v, i)).collect()
    }

    /// `Σ_v c_{n,v}`.
    pub fn marginal(&self, n: u64) -> BigUint {
        self.cells[n as usize].values().sum()
    }

    /// Check `Σ_v c_{n,v} = N_n` against an orbit census.
    pub fn verify_marginals(&self, census: &OrbitCensus) -> Result<()> {
        for n in 0..=self.x_max {
            if self.marginal(n) != *census.total(n)? {
                return Err(Error::Inconsistent(format!("bivariate marginal differs from N_n at n = {n}")));
            }
        }
        Ok(())
    }
}

/// Coefficients of `∏_ℓ ∏_{(c,w)} (1 + u^w z^ℓ/(1 - z^ℓ))^c` up to `z^X`.
pub fn joint_census(g: &WeightedAdditive, x: u64) -> Result<BivariateCensus> {
    if x > g.max_length() {
        return Err(Error::TableTooShort { needed: x as usize, have: g.max_length() as usize });
    }
    let xs = x as usize;
    let mut cells: Vec<BTreeMap<BigRational, BigUint>> = vec![BTreeMap::new(); xs + 1];
    cells[0].insert(BigRational::zero(), BigUint::one());
    for ell in 1..=xs {
        for (count, w) in g.classes(ell as u64) {
            // coef[k][d] = C(c, d) C(k-1, d-1) at z^{ℓk} u^{wd}
            let kmax = xs / ell;
            let mut terms: Vec<(usize, BigRational, BigUint)> = Vec::new();
            for k in 1..=kmax {
                let km1 = BigUint::from(k as u64 - 1);
                for d in 1..=k as u64 {
                    let c = binomial(count, d);
                    if c.is_zero() {
                        break;
                    }
                    terms.push((k * ell, w * BigRational::from_integer(d.into()), c * binomial(&km1, d - 1)));
                }
            }
            for n in (0..=xs).rev() {
                let mut add: Vec<(BigRational, BigUint)> = Vec::new();
                for (m, dv, coef) in &terms {
                    if *m > n {
                        continue;
                    }
                    for (v, c) in &cells[n - m] {
                        add.push((v + dv, c * coef));
                    }
                }
                for (v, c) in add {
                    *cells[n].entry(v).or_default() += c;
                }
            }
        }
    }
    Ok(BivariateCensus { x_max: x, cells })
}

/// Exact PMF of the statistic over general orbits of length at most `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub x: u64,
    pub values: Vec<BigRational>,
    pub counts: Vec<BigUint>,
    pub total: BigUint,
}

impl Pmf {
    pub fn masses(&self) -> Vec<BigRational> {
        let t = BigInt::from(self.total.clone());
        self.counts.iter().map(|c| BigRational::new(BigInt::from(c.clone()), t.clone())).collect()
    }

    pub fn mass(&self, v: &BigRational) -> BigRational {
        match self.values.binary_search(v) {
            Ok(i) => self.masses()[i].clone(),
            Err(_) => BigRational::zero(),
        }
    }

    pub fn mean(&self) -> BigRational {
        let s: BigRational = self
            .values
            .iter()
            .zip(&self.counts)
            .map(|(v, c)| v * BigRational::from_integer(BigInt::from(c.clone())))
            .sum();
        s / BigRational::from_integer(BigInt::from(self.total.clone()))
    }

    pub fn variance(&self) -> BigRational {
        let mean = self.mean();
        let s: BigRational = self
            .values
            .iter()
            .zip(&self.counts)
            .map(|(v, c)| {
                let d = v - &mean;
                &d * &d * BigRational::from_integer(BigInt::from(c.clone()))
            })
            .sum();
        s / BigRational::from_integer(BigInt::from(self.total.clone()))
    }

    /// `#{V : g(V) >= a}`.
    pub fn tail_count(&self, a: &BigRational) -> BigUint {
        self.values.iter().zip(&self.counts).filter(|(v, _)| *v >= a).map(|(_, c)| c).sum()
    }

    /// `P[g(V) >= a]`.
    pub fn tail(&self, a: &BigRational) -> BigRational {
        BigRational::new(self.tail_count(a).into(), self.total.clone().into())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "X": self.x,
            "values": self.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "masses": self.masses().iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        })
    }
}

pub fn w_pmf(census: &BivariateCensus, x: u64) -> Result<Pmf> {
    if x > census.x_max {
        return Err(Error::OutOfRange { requested: x, available: census.x_max });
    }
    let mut acc: BTreeMap<BigRational, BigUint> = BTreeMap::new();
    for n in 0..=x {
        for (v, c) in census.row(n) {
            *acc.entry(v.clone()).or_default() += c;
        }
    }
    let total = acc.values().sum();
    let (values, counts) = acc.into_iter().unzip();
    Ok(Pmf { x, values, counts, total })
}

/// `E[W(X)]` computed from the orbit census and from the PMF.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedW {
    pub from_counts: BigRational,
    pub from_pmf: BigRational,
}

/// `E[W(X)] = Σ_ℓ P_ℓ N(X-ℓ)/N(X)`, checked against the mean of the unit-weight PMF.
pub fn expected_w(census: &OrbitCensus, x: u64) -> Result<ExpectedW> {
    let g = WeightedAdditive::unit(&census.prime_table()[..x as usize]);
    expected_w_from(census, &joint_census(&g, x)?, x)
}

/// As [`expected_w`], reusing a unit-weight joint census covering `X`.
pub fn expected_w_from(census: &OrbitCensus, unit: &BivariateCensus, x: u64) -> Result<ExpectedW> {
    let nx = census.cumulative_total(x)?;
    let mut num = BigUint::zero();
    let mut cum = BigUint::zero();
    // cum runs over N(X - ℓ) for ℓ = X, X-1, ..., 1
    for ell in (1..=x).rev() {
        cum += census.total(x - ell)?;
        num += census.prime(ell)? * &cum;
    }
    let from_counts = BigRational::new(num.into(), nx.into());
    let from_pmf = w_pmf(unit, x)?.mean();
    if from_counts != from_pmf {
        return Err(Error::Inconsistent(format!("E[W]: {from_counts} from counts, {from_pmf} from the PMF")));
    }
    Ok(ExpectedW { from_counts, from_pmf })
}

/// `E[exp(θ g)]` under the PMF.
pub fn mgf(pmf: &Pmf, theta: &Real) -> Real {
    let prec = theta.precision();
    let wp = prec + 32;
    let mut s = Real::zero(wp);
    for (v, m) in pmf.values.iter().zip(pmf.masses()) {
        let e = (&theta.with_precision(wp) * &Real::from_ratio(v, wp)).exp();
        s = &s + &(&Real::from_ratio(&m, wp) * &e);
    }
    s.with_precision(prec)
}

pub fn log_mgf(pmf: &Pmf, theta: &Real) -> Real {
    mgf(pmf, theta).ln()
}

/// `E[r^g]` for integer-valued `g` and rational `r > 0`.
pub fn pgf_exact(pmf: &Pmf, r: &BigRational) -> Result<BigRational> {
    let mut s = BigRational::zero();
    for (v, m) in pmf.values.iter().zip(pmf.masses()) {
        if !v.is_integer() {
            return Err(Error::Unsupported("exact generating function needs integer values".into()));
        }
        let e = v.to_integer().to_i32().ok_or_else(|| Error::Unsupported("value too large".into()))?;
        let base = if e >= 0 { r.clone() } else { r.recip() };
        s += m * num_traits::pow(base, e.unsigned_abs() as usize);
    }
    Ok(s)
}

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub locations: Vec<f64>,
    pub masses: Vec<f64>,
    /// Exact masses when available.
    pub exact_masses: Option<Vec<BigRational>>,
    pub exact_locations: Option<Vec<BigRational>>,
}

impl DiscreteMeasure {
    pub fn new(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure {
            locations: atoms.iter().map(|a| a.0).collect(),
            masses: atoms.iter().map(|a| a.1).collect(),
            exact_masses: None,
            exact_locations: None,
        }
    }

    pub fn point(y: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(&[(y, 1.0)])
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `∫ e^{θy} ρ(dy)`.
    pub fn laplace(&self, theta: f64) -> f64 {
        self.locations.iter().zip(&self.masses).map(|(y, m)| m * (theta * y).exp()).sum()
    }

    pub fn mass_at(&self, y: f64) -> f64 {
        self.locations.iter().zip(&self.masses).filter(|(l, _)| **l == y).map(|(_, m)| m).sum()
    }
}

/// `ρ_X`: atoms at the weights, with mass `Σ_{ℓ<=X} count Λ^{-ℓ} / M(X)`.
pub fn rho_measure(g: &WeightedAdditive, census: &OrbitCensus, x: u64) -> Result<DiscreteMeasure> {
    if x > g.max_length() {
        return Err(Error::TableTooShort { needed: x as usize, have: g.max_length() as usize });
    }
    if census.cumulative_primes(x)?.is_zero() {
        return Err(Error::NoPrimeOrbits);
    }
    let prec = census.precision();
    let mut real: BTreeMap<BigRational, Real> = BTreeMap::new();
    let mut exact: Option<BTreeMap<BigRational, BigRational>> = census.lambda().exact.as_ref().map(|_| BTreeMap::new());
    let lam = census.lambda().value.with_precision(prec + 32);
    let inv = &Real::one(prec + 32) / &lam;
    let mut power = Real::one(prec + 32);
    let mut exact_power = BigRational::one();
    for ell in 1..=x {
        power = &power * &inv;
        if let Some(l) = &census.lambda().exact {
            exact_power /= l;
        }
        for (c, w) in g.classes(ell) {
            let v = &Real::from_biguint(c, prec + 32) * &power;
            let e = real.entry(w.clone()).or_insert_with(|| Real::zero(prec + 32));
            *e = &*e + &v;
            if let Some(ex) = exact.as_mut() {
                *ex.entry(w.clone()).or_default() += BigRational::from_integer(c.clone().into()) * &exact_power;
            }
        }
    }
    let total = real.values().fold(Real::zero(prec + 32), |a, b| &a + b);
    let locations: Vec<BigRational> = real.keys().cloned().collect();
    let masses: Vec<f64> = real.values().map(|m| (m / &total).to_f64()).collect();
    let exact_masses = exact.map(|ex| {
        let t: BigRational = ex.values().cloned().sum();
        ex.values().map(|m| m / &t).collect()
    });
    Ok(DiscreteMeasure {
        locations: locations.iter().map(|l| Real::from_ratio(l, 64).to_f64()).collect(),
        masses,
        exact_masses,
        exact_locations: Some(locations),
    })
}
