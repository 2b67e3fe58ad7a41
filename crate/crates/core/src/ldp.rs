//! Rate functions, exponential Chebyshev bounds and tail reports.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::census::OrbitCensus;
use crate::distribution::{joint_census, pgf_exact, w_pmf, DiscreteMeasure, Pmf, WeightedAdditive};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

/// `x log x - x + 1`, the standard Poisson rate.
pub fn poisson_rate(x: f64) -> f64 {
    if x < 0.0 {
        f64::INFINITY
    } else if x == 0.0 {
        1.0
    } else {
        x * x.ln() - x + 1.0
    }
}

/// `(x/λ) log(x/(λr)) - x/λ + r`, infinite when `r = 0`.
pub fn subset_rate(x: f64, lambda: f64, r: f64) -> f64 {
    if r == 0.0 || x < 0.0 {
        return f64::INFINITY;
    }
    if x == 0.0 {
        return r;
    }
    let y = x / lambda;
    y * (y / r).ln() - y + r
}

fn check_measure(rho: &DiscreteMeasure) -> Result<()> {
    if rho.locations.is_empty() || rho.masses.iter().any(|m| *m < 0.0 || !m.is_finite()) {
        return Err(Error::InvalidArgument("measure needs finite non-negative masses".into()));
    }
    if (rho.total_mass() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("masses sum to {}, not 1", rho.total_mass())));
    }
    Ok(())
}

fn cumulant(rho: &DiscreteMeasure, theta: f64) -> (f64, f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    let mut dd = 0.0;
    for (y, m) in rho.locations.iter().zip(&rho.masses) {
        let e = (theta * y).exp();
        v += m * (e - 1.0);
        d += m * y * e;
        dd += m * y * y * e;
    }
    (v, d, dd)
}

/// `sup_θ { θx - ∫(e^{θy} - 1) ρ(dy) }`.
pub fn legendre_rate(rho: &DiscreteMeasure, x: f64, tol: f64) -> Result<f64> {
    if tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    check_measure(rho)?;
    let atoms = || rho.locations.iter().zip(&rho.masses).filter(|(_, m)| **m > 0.0);
    let has_pos = atoms().any(|(y, _)| *y > 0.0);
    let has_neg = atoms().any(|(y, _)| *y < 0.0);
    let mass_pos: f64 = atoms().filter(|(y, _)| **y > 0.0).map(|(_, m)| m).sum();
    let mass_neg: f64 = atoms().filter(|(y, _)| **y < 0.0).map(|(_, m)| m).sum();
    // The slope Λ' ranges over (inf, sup) with inf = -∞ iff a negative atom
    // exists (else 0) and sup = +∞ iff a positive atom exists (else 0).
    if !has_pos && x >= 0.0 {
        return Ok(if x > 0.0 { f64::INFINITY } else { mass_neg });
    }
    if !has_neg && x <= 0.0 {
        return Ok(if x < 0.0 { f64::INFINITY } else { mass_pos });
    }
    let mean = cumulant(rho, 0.0).1;
    let (mut lo, mut hi) = if x >= mean {
        let mut h = 1.0;
        while cumulant(rho, h).1 < x {
            h *= 2.0;
            if h > 1e6 {
                return Err(Error::InvalidArgument("no bracket for the Legendre maximizer".into()));
            }
        }
        (0.0, h)
    } else {
        let mut h = -1.0;
        while cumulant(rho, h).1 > x {
            h *= 2.0;
            if h < -1e6 {
                return Err(Error::InvalidArgument("no bracket for the Legendre maximizer".into()));
            }
        }
        (h, 0.0)
    };
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (_, d, dd) = cumulant(rho, theta);
        let f = d - x;
        if f.abs() <= tol * 1e-3 * (1.0 + x.abs()) || hi - lo < tol * 1e-2 {
            break;
        }
        if f > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let newton = theta - f / dd;
        theta = if dd > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    let value = theta * x - cumulant(rho, theta).0;
    Ok(value.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateFunction {
    Poisson,
    Subset { lambda: f64, r: f64 },
    Legendre(DiscreteMeasure),
}

impl RateFunction {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            RateFunction::Poisson => Ok(poisson_rate(x)),
            RateFunction::Subset { lambda, r } => Ok(subset_rate(x, *lambda, *r)),
            RateFunction::Legendre(rho) => legendre_rate(rho, x, DEFAULT_TOL),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RateFunction::Poisson => "poisson",
            RateFunction::Subset { .. } => "subset",
            RateFunction::Legendre(_) => "legendre",
        }
    }
}

/// `min_θ log mgf(θ) - θa` over a grid of positive `θ`.
pub fn chebyshev_bound(log_mgf: impl Fn(f64) -> f64, a: f64, grid: &[f64]) -> Result<(f64, f64)> {
    if grid.is_empty() || grid.iter().any(|t| *t <= 0.0) {
        return Err(Error::InvalidArgument("theta grid must be non-empty and positive".into()));
    }
    Ok(grid
        .iter()
        .map(|&t| (log_mgf(t) - t * a, t))
        .fold((f64::INFINITY, f64::NAN), |best, cur| if cur.0 < best.0 { cur } else { best }))
}

/// `min_r E[r^W] / r^a` over rationals `r > 1`: an exact upper bound on `P[W >= a]`.
pub fn chebyshev_bound_exact(pmf: &Pmf, a: &BigRational, ratios: &[BigRational]) -> Result<(BigRational, BigRational)> {
    if !a.is_integer() {
        return Err(Error::Unsupported("exact bound needs an integer threshold".into()));
    }
    let e = a.to_integer().to_i64().ok_or_else(|| Error::Unsupported("threshold too large".into()))?;
    let mut best: Option<(BigRational, BigRational)> = None;
    for r in ratios {
        if *r <= BigRational::one() {
            return Err(Error::InvalidArgument("ratios must exceed 1".into()));
        }
        let scale = if e >= 0 {
            num_traits::pow(r.recip(), e as usize)
        } else {
            num_traits::pow(r.clone(), e.unsigned_abs() as usize)
        };
        let b = pgf_exact(pmf, r)? * scale;
        if best.as_ref().is_none_or(|(v, _)| b < *v) {
            best = Some((b, r.clone()));
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty ratio grid".into()))
}

/// Default grid `r = 1 + j/16`, `j = 1..128`.
pub fn default_ratio_grid() -> Vec<BigRational> {
    (1..=128).map(|j| BigRational::new(BigInt::from(16 + j), BigInt::from(16))).collect()
}

fn ln_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    let n = r.numer().abs();
    let d = r.denom().clone();
    let ln_big = |v: &BigInt| {
        let bits = v.bits();
        let shift = bits.saturating_sub(60);
        let top = (v >> shift).to_f64().expect("fits");
        top.ln() + shift as f64 * std::f64::consts::LN_2
    };
    ln_big(&n) - ln_big(&d)
}

#[derive(Debug, Clone)]
pub struct TailRow {
    pub x: u64,
    pub epsilon: f64,
    pub threshold: f64,
    /// Smallest integer `a` with `a >= threshold`.
    pub a: u64,
    pub tail: BigRational,
    pub log_p: f64,
    pub normalized: f64,
    pub rate: f64,
    pub bound: BigRational,
    pub log_bound: f64,
    pub bound_dominates: bool,
}

/// Exact tails `P[W(X) >= (1+ε) B log X]` against the rate function and the Chebyshev bound.
pub fn tail_report(census: &OrbitCensus, b: f64, xs: &[u64], epsilons: &[f64], rate: &RateFunction) -> Result<Vec<TailRow>> {
    if census.lambda().is_one() {
        return Err(Error::NoMeaningfulLdp(
            "Lambda = 1: W(X) is bounded, so P[W > B] = 0 for all X".into(),
        ));
    }
    if b.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NonPositiveMean(format!("{b}")));
    }
    let xmax = xs.iter().copied().max().unwrap_or(0);
    let g = WeightedAdditive::unit(&census.prime_table()[..xmax as usize]);
    let bc = joint_census(&g, xmax)?;
    let grid = default_ratio_grid();
    let mut rows = Vec::new();
    for &x in xs {
        let pmf = w_pmf(&bc, x)?;
        let logx = (x as f64).ln();
        for &eps in epsilons {
            let threshold = (1.0 + eps) * b * logx;
            let a = threshold.ceil().max(0.0) as u64;
            let ar = BigRational::from_integer(a.into());
            let tail = pmf.tail(&ar);
            let (bound, _) = chebyshev_bound_exact(&pmf, &ar, &grid)?;
            let log_p = ln_rational(&tail);
            let log_bound = ln_rational(&bound);
            rows.push(TailRow {
                x,
                epsilon: eps,
                threshold,
                a,
                bound_dominates: bound >= tail,
                normalized: -log_p / (b * logx),
                rate: rate.eval(1.0 + eps)?,
                tail,
                log_p,
                bound,
                log_bound,
            });
        }
    }
    Ok(rows)
}

fn fmt_f(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.10}")
    }
}

pub fn tail_report_csv(rows: &[TailRow]) -> String {
    let mut out = String::from("X,epsilon,threshold,a,tail,log_p,normalized,rate,chebyshev_log_bound,bound_dominates\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.x,
            r.epsilon,
            fmt_f(r.threshold),
            r.a,
            r.tail,
            fmt_f(r.log_p),
            fmt_f(r.normalized),
            fmt_f(r.rate),
            fmt_f(r.log_bound),
            r.bound_dominates
        )
        .expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::CensusOptions;
    use crate::systems::{Builtin, SigmaSource};
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn closed_forms() {
        assert_eq!(poisson_rate(1.0), 0.0);
        assert_eq!(poisson_rate(0.0), 1.0);
        assert!((poisson_rate(2.0) - 0.386_294_361).abs() < 1e-9);
        assert_eq!(poisson_rate(-1.0), f64::INFINITY);
        assert!(subset_rate(2.0 / 3.0, 2.0, 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(subset_rate(1.0, 2.0, 0.0), f64::INFINITY);
        for x in [0.5, 1.0, 2.0] {
            assert!((subset_rate(x, 1.0, 1.0) - poisson_rate(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn legendre_examples() {
        let d1 = DiscreteMeasure::point(1.0);
        for x in [0.5, 1.0, 2.0, 4.0] {
            assert!((legendre_rate(&d1, x, 1e-12).unwrap() - poisson_rate(x)).abs() < 1e-8);
        }
        assert_eq!(legendre_rate(&d1, 0.0, 1e-12).unwrap(), 1.0);
        assert_eq!(legendre_rate(&d1, -0.5, 1e-12).unwrap(), f64::INFINITY);
        let two = DiscreteMeasure::new(&[(0.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)]);
        assert!(legendre_rate(&two, 2.0 / 3.0, 1e-12).unwrap() < 1e-8);
        // Matches the closed form for the same measure.
        for x in [0.1, 0.5, 1.5, 3.0] {
            assert!((legendre_rate(&two, x, 1e-12).unwrap() - subset_rate(x, 2.0, 1.0 / 3.0)).abs() < 1e-8);
        }
        let d0 = DiscreteMeasure::point(0.0);
        assert_eq!(legendre_rate(&d0, 0.0, 1e-12).unwrap(), 0.0);
        assert_eq!(legendre_rate(&d0, 0.3, 1e-12).unwrap(), f64::INFINITY);
        assert_eq!(legendre_rate(&d0, -0.3, 1e-12).unwrap(), f64::INFINITY);
        assert!(legendre_rate(&d1, 1.0, 0.0).is_err());
        assert!(legendre_rate(&DiscreteMeasure::new(&[(1.0, 0.5)]), 1.0, 1e-10).is_err());
        let signed = DiscreteMeasure::new(&[(-1.0, 0.5), (1.0, 0.5)]);
        let v = legendre_rate(&signed, -0.5, 1e-12).unwrap();
        // θ* = asinh(-0.5), value θx - (cosh θ - 1)
        let t = (-0.5f64).asinh();
        assert!((v - (-0.5 * t - (t.cosh() - 1.0))).abs() < 1e-9);
    }

    #[test]
    fn chebyshev_examples() {
        let c = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::FF { q: 2 }), 2, 96, CensusOptions::default()).unwrap();
        let pmf = w_pmf(&joint_census(&WeightedAdditive::unit(c.prime_table()), 2).unwrap(), 2).unwrap();
        let (b, r) = chebyshev_bound_exact(&pmf, &q(2, 1), &[q(2, 1)]).unwrap();
        assert_eq!((b.clone(), r), (q(15, 28), q(2, 1)));
        assert!(b >= pmf.tail(&q(2, 1)));
        let (b0, _) = chebyshev_bound_exact(&pmf, &q(0, 1), &default_ratio_grid()).unwrap();
        assert!(b0 >= BigRational::one());
        let coarse = chebyshev_bound_exact(&pmf, &q(2, 1), &default_ratio_grid()[..8]).unwrap().0;
        let fine = chebyshev_bound_exact(&pmf, &q(2, 1), &default_ratio_grid()).unwrap().0;
        assert!(fine <= coarse);
        let lm = |t: f64| ((1.0 + 5.0 * t.exp() + (2.0 * t).exp()) / 7.0).ln();
        let (v, t) = chebyshev_bound(lm, 2.0, &[std::f64::consts::LN_2]).unwrap();
        assert!((v - (15.0f64 / 28.0).ln()).abs() < 1e-12 && t == std::f64::consts::LN_2);
        assert!(chebyshev_bound(lm, 2.0, &[]).is_err());
    }

    #[test]
    fn tail_report_ff2() {
        let c = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::FF { q: 2 }), 60, 96, CensusOptions::default()).unwrap();
        let rows = tail_report(&c, 1.0, &[20, 40, 60], &[1.0, 5.0], &RateFunction::Poisson).unwrap();
        assert!(rows.iter().all(|r| r.bound_dominates));
        let eps1: Vec<f64> = rows.iter().filter(|r| r.epsilon == 1.0).map(|r| r.normalized).collect();
        assert!(eps1[0] > eps1[1] && eps1[1] > eps1[2] && eps1[2] > poisson_rate(2.0));
        // 6 log 20 = 17.97 exceeds the largest attainable W at X = 20.
        let empty = rows.iter().find(|r| r.x == 20 && r.epsilon == 5.0).unwrap();
        assert!(empty.tail.is_zero() && empty.log_p == f64::NEG_INFINITY);
        assert!(tail_report_csv(&rows).contains("-inf"));
        let alt = OrbitCensus::from_source(&SigmaSource::Builtin(Builtin::Periodic(vec![1, 3])), 20, 96, CensusOptions::default()).unwrap();
        assert!(matches!(tail_report(&alt, 2.0, &[20], &[1.0], &RateFunction::Poisson), Err(Error::NoMeaningfulLdp(_))));
    }

    proptest! {
        #[test]
        fn rates_are_midpoint_convex(y in 0.2f64..3.0, a in 0.05f64..5.0, b in 0.05f64..5.0) {
            let rho = DiscreteMeasure::new(&[(0.0, 0.25), (y, 0.75)]);
            let m = 0.5 * (a + b);
            for f in [
                &(|x: f64| poisson_rate(x)) as &dyn Fn(f64) -> f64,
                &|x| subset_rate(x, 2.0, 0.4),
                &|x| legendre_rate(&rho, x, 1e-12).unwrap(),
            ] {
                prop_assert!(f(m) <= 0.5 * (f(a) + f(b)) + 1e-9);
            }
        }

        #[test]
        fn point_mass_rate_vanishes_at_atom(y in 0.01f64..10.0) {
            prop_assert!(legendre_rate(&DiscreteMeasure::point(y), y, 1e-12).unwrap() < 1e-8);
        }
    }
}
