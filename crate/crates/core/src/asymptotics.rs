//! Cesàro means, asymptotic constants and predictions for orbit counts.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::census::{prime_counts, OrbitCensus};
use crate::error::{Error, Result};
use crate::numtheory::{self, lte_params, PeriodicSequence};
use crate::real::Real;
use crate::systems::{fluctuation_spectrum, Builtin, FadSpec, GrowthRate, PrimeFactorData, SigmaSource, SpectrumReport};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos approximation, reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `σ_k / Λ^k` for `k = 1..len`.
pub fn normalized_sigma(sigma: &[BigUint], lambda: &Real) -> Vec<Real> {
    let prec = lambda.precision();
    let wp = prec + 32;
    let inv = &Real::one(wp) / &lambda.with_precision(wp);
    let mut power = Real::one(wp);
    sigma
        .iter()
        .map(|s| {
            power = &power * &inv;
            (&Real::from_biguint(s, wp) * &power).with_precision(prec)
        })
        .collect()
}

/// `(1/X) Σ_{k<=X} σ_k / Λ^k` over the whole table.
pub fn cesaro_empirical(sigma: &[BigUint], lambda: &Real) -> Real {
    let prec = lambda.precision();
    if sigma.is_empty() {
        return Real::zero(prec);
    }
    let sum = normalized_sigma(sigma, lambda)
        .into_iter()
        .fold(Real::zero(prec + 32), |acc, b| &acc + &b);
    (&sum / &Real::from_i64(sigma.len() as i64, prec + 32)).with_precision(prec)
}

/// Empirical fluctuation band: spread of the running Cesàro mean over the last half of the table.
pub fn cesaro_fluctuation_band(sigma: &[BigUint], lambda: &Real) -> f64 {
    let b = normalized_sigma(sigma, lambda);
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, v) in b.iter().enumerate() {
        sum += v.to_f64();
        if i + 1 >= b.len() / 2 {
            let mean = sum / (i + 1) as f64;
            lo = lo.min(mean);
            hi = hi.max(mean);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Rational relations among fluctuation angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleRelations {
    /// The angles and `π` are asserted rationally independent.
    Independent,
    /// Detect `Θ_ε ∈ 2πQ` numerically, with denominators up to `max_den`.
    Detect { max_den: u64 },
}

/// A surviving Fourier mode of the trigonometric factor.
#[derive(Debug, Clone)]
pub struct SurvivingMode {
    pub eps: Vec<i8>,
    pub coefficient: i64,
    /// `Θ_ε / 2π`.
    pub frequency: BigRational,
    /// Real part of `L(Θ_ε)`.
    pub l_value: Real,
}

#[derive(Debug, Clone)]
pub struct CesaroExact {
    pub value: Real,
    pub exact: Option<BigRational>,
    pub tail_bound: f64,
    pub modes: Vec<SurvivingMode>,
}

/// Value of `L(2πu/q)` split into an exact rational part (when `q = 1`),
/// a real and imaginary part, and a truncation bound.
struct ClassSum {
    exact: Option<BigRational>,
    re: Real,
    im: Real,
    tail: f64,
}

fn rat_f64(r: &BigRational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::MAX);
    let d = r.denom().to_f64().unwrap_or(f64::MAX);
    if n.is_finite() && d.is_finite() && d != f64::MAX {
        n / d
    } else {
        Real::from_ratio(r, 64).to_f64()
    }
}

fn pow_p(p: u64, e: u64) -> Option<BigInt> {
    u32::try_from(e).ok().filter(|&e| (e as f64) * (p as f64).log2() < 65_536.0).map(|e| BigInt::from(p).pow(e))
}

/// Conditional mean of `p^{-j s - t p^j}` over `j = v_p(k) >= e`, truncated
/// after at most `j_max` terms. Returns the partial sum and a tail bound.
fn high_valuation_factor(p: u64, e: u32, s: u64, t: u64, j_max: u32, tol: f64) -> Result<(BigRational, f64)> {
    let pf = p as f64;
    let weight = BigRational::new(BigInt::from(p - 1), BigInt::from(p));
    if t == 0 {
        // (1 - 1/p) p^{-e s} / (1 - p^{-1-s})
        let num = weight * BigRational::new(BigInt::one(), pow_p(p, e as u64 * s).expect("small exponent"));
        let ratio = BigRational::new(BigInt::one(), pow_p(p, 1 + s).expect("small exponent"));
        return Ok((num / (BigRational::one() - ratio), 0.0));
    }
    let mut sum = BigRational::zero();
    let mut j = e;
    loop {
        let depth = j - e;
        let exponent = depth as u64 + j as u64 * s + t * p.pow(j);
        match pow_p(p, exponent) {
            Some(den) => sum += &weight * BigRational::new(BigInt::one(), den),
            None => {
                // Term below 2^-65536: counted in the bound instead.
                let bound = pf.powf(-(depth as f64));
                if bound * 0.0 == 0.0 {
                    return Ok((sum, f64::MIN_POSITIVE));
                }
            }
        }
        // Remaining mass is at most p^{-t p^{j+1}} p^{-(j - e)}.
        let log_bound = -(t as f64) * pf.powi(j as i32 + 1) * pf.log2() - depth as f64 * pf.log2();
        let bound = 2f64.powf(log_bound);
        if bound <= tol || log_bound < -1000.0 {
            return Ok((sum, bound));
        }
        if depth + 1 >= j_max {
            return Err(Error::TailTooLarge { bound, tol });
        }
        j += 1;
    }
}

fn class_sum(spec: &FadSpec, freq: &BigRational, j_max: u32, tol: f64, prec: u32) -> Result<ClassSum> {
    let q = freq.denom().to_u64().ok_or_else(|| Error::Unsupported("frequency denominator too large".into()))?;
    let mut big_l = numtheory::lcm(spec.r.period() as u64, q);
    for pd in &spec.primes {
        big_l = numtheory::lcm(big_l, numtheory::lcm(pd.s.period() as u64, pd.t.period() as u64));
    }
    let e_p: Vec<u32> = spec.primes.iter().map(|pd| numtheory::valuation(big_l, pd.p)).collect();
    let ntrunc = (big_l as f64) * (spec.primes.len().max(1) as f64);
    let per_tol = tol / ntrunc;
    let wp = prec + 32;
    let mut exact_sum = BigRational::zero();
    let mut re = Real::zero(wp);
    let mut im = Real::zero(wp);
    let mut tail = 0.0f64;
    let two_pi = Real::pi(wp).mul_pow2(1);
    for a in 1..=big_l {
        let mut value = spec.r.at(a).clone();
        let mut upper = 1.0f64;
        let mut lower = 1.0f64;
        for (pd, &e) in spec.primes.iter().zip(&e_p) {
            let s = pd.s.at(a).to_integer().to_u64().expect("validated");
            let t = pd.t.at(a).to_integer().to_u64().expect("validated");
            let j0 = numtheory::valuation(a, pd.p);
            let (factor, err) = if j0 < e {
                let exponent = j0 as u64 * s + t * pd.p.pow(j0);
                (BigRational::new(BigInt::one(), pow_p(pd.p, exponent).expect("small exponent")), 0.0)
            } else {
                high_valuation_factor(pd.p, e, s, t, j_max, per_tol)?
            };
            let f = rat_f64(&factor);
            lower *= f;
            upper *= f + err;
            value *= factor;
        }
        tail += rat_f64(spec.r.at(a)) * (upper - lower) / big_l as f64;
        if q == 1 {
            exact_sum += value;
        } else {
            let angle = &two_pi * &Real::from_ratio(&(freq * BigRational::from_integer(BigInt::from(a))), wp);
            let (sin, cos) = angle.sin_cos();
            let v = Real::from_ratio(&value, wp);
            re = &re + &(&v * &cos);
            im = &im + &(&v * &sin);
        }
    }
    let l = BigRational::from_integer(BigInt::from(big_l));
    if q == 1 {
        let exact = exact_sum / l;
        Ok(ClassSum {
            re: Real::from_ratio(&exact, prec),
            im: Real::zero(prec),
            exact: Some(exact),
            tail,
        })
    } else {
        let lr = Real::from_i64(big_l as i64, wp);
        Ok(ClassSum {
            exact: None,
            re: (&re / &lr).with_precision(prec),
            im: (&im / &lr).with_precision(prec),
            tail,
        })
    }
}

/// `C(b̃_k e^{ikΘ})` for `Θ = 2π·freq`.
pub fn fourier_mean(spec: &FadSpec, freq: &BigRational, j_max: u32, tol: f64, prec: u32) -> Result<(Real, Real, f64)> {
    let cs = class_sum(spec, freq, j_max, tol, prec)?;
    Ok((cs.re, cs.im, cs.tail))
}

fn detect_frequency(theta: &Real, max_den: u64, prec: u32) -> Option<BigRational> {
    let wp = prec + 32;
    let x = &theta.with_precision(wp) / &Real::pi(wp).mul_pow2(1);
    for q in 1..=max_den {
        let xq = &x * &Real::from_i64(q as i64, wp);
        let u = xq.round();
        let err = &xq - &Real::from_bigint(&u, wp);
        if err.is_zero() || err.magnitude_bits() < -(prec as i64) / 2 {
            return Some(BigRational::new(u, BigInt::from(q)));
        }
    }
    None
}

/// Exact Cesàro mean of a FAD sequence: `B = Σ_ε c_ε L(Θ_ε)`.
pub fn cesaro_exact_fad(
    spec: &FadSpec,
    spectrum: Option<&SpectrumReport>,
    relations: AngleRelations,
    j_max: u32,
    tol: f64,
    prec: u32,
) -> Result<CesaroExact> {
    spec.validate()?;
    let (m, angles) = match spectrum {
        Some(sp) => {
            if sp.has_root_of_unity() {
                let which = sp
                    .unit_angles
                    .iter()
                    .zip(&sp.theta_rational_flags)
                    .find(|(_, &f)| f)
                    .map(|(a, _)| a.to_decimal(12))
                    .unwrap_or_else(|| "0 or pi".into());
                return Err(Error::RootOfUnity(which));
            }
            (sp.m, sp.unit_angles.clone())
        }
        None => (0, vec![]),
    };
    if m > 12 {
        return Err(Error::Unsupported(format!("{m} unit-circle pairs (3^m modes)")));
    }
    let mut modes = Vec::new();
    let mut total_exact = Some(BigRational::zero());
    let mut total = Real::zero(prec + 32);
    let mut tail = 0.0;
    for code in 0..3u64.pow(m as u32) {
        let mut c = code;
        let eps: Vec<i8> = (0..m)
            .map(|_| {
                let d = (c % 3) as i8 - 1;
                c /= 3;
                d
            })
            .collect();
        let coefficient: i64 = eps.iter().map(|&e| if e == 0 { 2 } else { -1 }).product();
        let freq = if eps.iter().all(|&e| e == 0) {
            BigRational::zero()
        } else {
            match relations {
                AngleRelations::Independent => continue,
                AngleRelations::Detect { max_den } => {
                    let theta = eps
                        .iter()
                        .zip(&angles)
                        .fold(Real::zero(prec + 32), |acc, (&e, a)| match e {
                            1 => &acc + a,
                            -1 => &acc - a,
                            _ => acc,
                        });
                    match detect_frequency(&theta, max_den, prec) {
                        Some(f) => {
                            
                            &f - f.floor()
                        }
                        None => continue,
                    }
                }
            }
        };
        let cs = class_sum(spec, &freq, j_max, tol, prec)?;
        total = &total + &(&Real::from_i64(coefficient, prec + 32) * &cs.re);
        tail += coefficient.unsigned_abs() as f64 * cs.tail;
        total_exact = match (total_exact, &cs.exact) {
            (Some(t), Some(e)) => Some(t + BigRational::from_integer(coefficient.into()) * e),
            _ => None,
        };
        modes.push(SurvivingMode { eps, coefficient, frequency: freq, l_value: cs.re });
    }
    let exact = total_exact.filter(|_| tail == 0.0);
    Ok(CesaroExact {
        value: match &exact {
            Some(e) => Real::from_ratio(e, prec),
            None => total.with_precision(prec),
        },
        exact,
        tail_bound: tail,
        modes,
    })
}

/// `Q_p(x) = ∏_{j>=0} ((x^{p^j}+1)/(x^{p^j}-1))^{1/p^{2j}}`; returns the
/// truncated product and a bound on the omitted log-mass.
pub fn qp_product(x: &Real, p: u64, tol: f64) -> Result<(Real, f64)> {
    if p < 2 {
        return Err(Error::InvalidArgument("Q_p needs p >= 2".into()));
    }
    let prec = x.precision();
    let wp = prec + 32;
    let one = Real::one(wp);
    if *x <= Real::one(prec) {
        return Err(Error::InvalidArgument("Q_p(x) diverges for x <= 1".into()));
    }
    let mut y = x.with_precision(wp);
    let mut log_sum = Real::zero(wp);
    let mut weight = Real::one(wp);
    let p2 = Real::from_i64((p * p) as i64, wp);
    loop {
        let ratio = &(&y + &one) / &(&y - &one);
        log_sum = &log_sum + &(&weight * &ratio.ln());
        weight = &weight / &p2;
        y = y.powi(p as i64);
        // The next factor contributes at most 2 / (p^{2j} (y - 1)) to the log;
        // later ones are smaller by at least a factor p^2.
        let bound = 2.0 * weight.to_f64() / ((&y - &one).to_f64());
        if bound.is_nan() || bound < tol || (&y - &one).magnitude_bits() > (wp as i64) + 64 {
            let total_bound = if bound.is_nan() { 0.0 } else { 2.0 * bound };
            return Ok((log_sum.exp().with_precision(prec), total_bound));
        }
    }
}

fn pow_rational(base: &Real, e: &BigRational) -> Real {
    let prec = base.precision();
    (&base.with_precision(prec + 32).ln() * &Real::from_ratio(e, prec + 32))
        .exp()
        .with_precision(prec)
}

#[derive(Debug, Clone)]
pub struct EllipticConstants {
    pub d: u64,
    pub e: u64,
    pub b: BigRational,
    pub c: Real,
    /// Exact `C` in the `p | n` branch.
    pub c_exact: Option<BigRational>,
    pub q_p: Option<Real>,
    pub tail_bound: f64,
}

impl EllipticConstants {
    pub fn c_over_gamma_b(&self) -> f64 {
        self.c.to_f64() / gamma(rat_f64(&self.b))
    }
}

/// Constants for multiplication by `n` on an ordinary elliptic curve in characteristic `p`.
pub fn elliptic_constants(p: u64, n: u64, prec: u32) -> Result<EllipticConstants> {
    if !numtheory::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::Unsupported("characteristic 2 (odd primes only)".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    let rat = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    let pr = BigRational::from_integer(p.into());
    if n.is_multiple_of(p) {
        let c = BigRational::new(BigInt::from(n * n), BigInt::from((n + 1) * (n + 1)));
        return Ok(EllipticConstants {
            d: 1,
            e: 0,
            b: BigRational::one(),
            c: Real::from_ratio(&c, prec),
            c_exact: Some(c),
            q_p: None,
            tail_bound: 0.0,
        });
    }
    let lte = lte_params(n, p)?;
    let (d, e) = (lte.order, lte.exponent);
    let dr = BigRational::from_integer(d.into());
    let pe = num_traits::pow(pr.clone(), e as usize);
    let pe1 = num_traits::pow(pr.clone(), e as usize - 1);
    let b = BigRational::one() - (BigRational::one() - &pr / (&pe * (&pr + BigRational::one()))) / &dr;

    let wp = prec + 32;
    let ex1 = (BigRational::one() - (&pe1 * (&pr + BigRational::one())).recip()) / &dr;
    // p^{e-2} may be 1/p when e = 1.
    let pe2 = &pe1 / &pr;
    let ex2 = (&dr * &pe2 * (&pr - BigRational::one()) * num_traits::pow(&pr + BigRational::one(), 2)).recip();
    let ex3 = (BigRational::one() - pe1.recip()) / &dr;
    let ex5 = (&pr - BigRational::one()) / (&dr * &pe);
    let nd = BigInt::from(n).pow(d as u32);
    let frac3 = BigRational::new(&nd + 1, &nd - 1);
    let (q, tail) = qp_product(&Real::from_bigint(&nd, wp), p, 2f64.powi(-(prec as i32)))?;
    let f1 = pow_rational(&Real::from_i64(d as i64, wp), &ex1);
    let f2 = pow_rational(&Real::from_i64(p as i64, wp), &ex2);
    let f3 = pow_rational(&Real::from_ratio(&frac3, wp), &ex3);
    let f4 = Real::from_ratio(&rat((n * n) as i64, ((n + 1) * (n + 1)) as i64), wp);
    let f5 = pow_rational(&q, &ex5);
    let c = &(&(&(&f1 * &f2) * &f3) * &f4) * &f5;
    Ok(EllipticConstants {
        d,
        e,
        b,
        c: c.with_precision(prec),
        c_exact: None,
        q_p: Some(q.with_precision(prec)),
        tail_bound: tail * rat_f64(&ex5) * c.to_f64(),
    })
}

/// A truncated series value.
#[derive(Debug, Clone)]
pub struct SeriesValue {
    pub value: Real,
    pub exact: Option<BigRational>,
    pub tail_bound: f64,
}

/// `B = (1/ϖ) Σ_a Σ_j (1 - 1/p) p^{-j} p^{-t_a p^j}` for a vector-group
/// endomorphism with `σ_k = p^{kc - t_k |k|_p^{-1}}`.
pub fn ca_cesaro(p: u64, t: &PeriodicSequence, tol: f64, prec: u32) -> Result<SeriesValue> {
    if !numtheory::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if (t.period() as u64).is_multiple_of(p) {
        return Err(Error::NotCoprime(t.period() as u64, p));
    }
    let spec = FadSpec::new(
        1,
        None,
        PeriodicSequence::constant(BigRational::one()),
        vec![PrimeFactorData { p, s: PeriodicSequence::constant(BigRational::zero()), t: t.clone() }],
    );
    // t need not be a gcd-sequence here.
    let cs = class_sum(&spec, &BigRational::zero(), 64, tol, prec)?;
    let exact = cs.exact.filter(|_| cs.tail == 0.0);
    Ok(SeriesValue { value: cs.re, exact, tail_bound: cs.tail })
}

#[derive(Debug, Clone)]
pub struct BinaryAutomatonConstants {
    pub b: Real,
    pub a: Real,
    pub c: Real,
    pub lambda: Real,
    pub tail_bound: f64,
}

impl BinaryAutomatonConstants {
    pub fn c_over_gamma_b(&self) -> f64 {
        self.c.to_f64() / gamma(self.b.to_f64())
    }
}

/// `σ_k = 2^{ck - τ |k|_2^{-1}}`: `B = Σ 2^{-1-j-τ2^j}`, `A = Σ j 2^{-1-j-τ2^j}`
/// and `C = 2^{B-A} Λ/(Λ-1)` with `Λ = 2^c`.
pub fn binary_automaton_constants(c: u32, tau: u64, prec: u32) -> Result<BinaryAutomatonConstants> {
    if c == 0 || tau == 0 {
        return Err(Error::InvalidArgument("needs c >= 1 and tau >= 1".into()));
    }
    let wp = prec + 32;
    let mut b = Real::zero(wp);
    let mut a = Real::zero(wp);
    let mut j = 0u32;
    let tail;
    loop {
        let shift = 1 + j as i64 + tau as i64 * (1i64 << j);
        let term = Real::one(wp).mul_pow2(-shift);
        b = &b + &term;
        a = &a + &(&term * &Real::from_i64(j as i64, wp));
        if shift > wp as i64 + 8 || j >= 40 {
            // Remaining terms are below (j+2) 2^{-shift'} with shift' >= 2 shift.
            tail = (j as f64 + 2.0) * 2f64.powf(-(2.0 * shift as f64).min(1074.0));
            break;
        }
        j += 1;
    }
    let lambda = Real::one(wp).mul_pow2(c as i64);
    let two = Real::from_i64(2, wp);
    let c_val = &two.powf(&(&b - &a)) * &(&lambda / &(&lambda - &Real::one(wp)));
    Ok(BinaryAutomatonConstants {
        b: b.with_precision(prec),
        a: a.with_precision(prec),
        c: c_val.with_precision(prec),
        lambda: lambda.with_precision(prec),
        tail_bound: tail,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lambda1Report {
    pub varpi: u64,
    pub b: u64,
    /// `P_1..P_ϖ`.
    pub primes: Vec<BigUint>,
    /// `C/Γ(B+1) = (1/B!) ∏ ℓ^{-P_ℓ}`.
    pub leading: BigRational,
}

/// Smallest `w <= len/2` with `σ_{k+w} = σ_k` throughout the table.
pub fn minimal_period(sigma: &[BigUint]) -> Option<usize> {
    (1..=sigma.len() / 2).find(|&w| (0..sigma.len() - w).all(|i| sigma[i] == sigma[i + w]))
}

pub fn lambda1_analysis(sigma: &[BigUint]) -> Result<Lambda1Report> {
    let varpi = minimal_period(sigma).ok_or(Error::NotPeriodic)?;
    let period_sum: BigUint = sigma[..varpi].iter().sum();
    if period_sum.is_zero() {
        return Err(Error::NonPositiveMean("0".into()));
    }
    let w = BigUint::from(varpi as u64);
    if !(&period_sum % &w).is_zero() {
        return Err(Error::Inconsistent(format!(
            "period average {period_sum}/{varpi} is not an integer"
        )));
    }
    let b = (&period_sum / &w).to_u64().ok_or_else(|| Error::Unsupported("B too large".into()))?;
    let all_primes = prime_counts(sigma)?;
    for (i, p) in all_primes.iter().enumerate() {
        if varpi % (i + 1) != 0 && !p.is_zero() {
            return Err(Error::Inconsistent(format!("P_{} = {p} although {} does not divide the period", i + 1, i + 1)));
        }
    }
    let primes = all_primes[..varpi].to_vec();
    let total: BigUint = primes.iter().sum();
    if total != BigUint::from(b) {
        return Err(Error::Inconsistent(format!("sum of P_l = {total} differs from B = {b}")));
    }
    let mut den = (1..=b).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    for (i, p) in primes.iter().enumerate() {
        let e = p.to_u32().ok_or_else(|| Error::Unsupported("P_l too large".into()))?;
        den *= BigInt::from(i as u64 + 1).pow(e);
    }
    Ok(Lambda1Report { varpi: varpi as u64, b, primes, leading: BigRational::new(BigInt::one(), den) })
}

#[derive(Debug, Clone)]
pub struct FitRow {
    pub x: u64,
    pub n: BigUint,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
    /// Ratio at the largest window point.
    pub fitted: f64,
    /// Successive ratio differences.
    pub drift: Vec<f64>,
    pub target: Option<f64>,
}

/// `ratio(X) = N(X)/(Λ^X X^{B-1})`, or `N(X)/X^B` when `Λ = 1`.
pub fn predict_and_fit(census: &OrbitCensus, b: f64, target: Option<f64>, window: &[u64]) -> Result<FitReport> {
    if b.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NonPositiveMean(format!("{b}")));
    }
    let prec = census.precision();
    let lambda_one = census.lambda().is_one();
    let lam = census.lambda().value.clone();
    let mut rows = Vec::new();
    for &x in window {
        let n = census.cumulative_total(x)?;
        let xr = Real::from_i64(x as i64, prec);
        let exponent = if lambda_one { b } else { b - 1.0 };
        let poly = xr.powf(&Real::from_f64(exponent, prec));
        let scale = if lambda_one { poly } else { &lam.powi(x as i64) * &poly };
        let ratio = (&Real::from_biguint(&n, prec) / &scale).to_f64();
        rows.push(FitRow { x, n, predicted: target.map_or(f64::NAN, |t| t * scale.to_f64()), ratio });
    }
    let fitted = rows.last().map_or(f64::NAN, |r| r.ratio);
    let drift = rows.windows(2).map(|w| w[1].ratio - w[0].ratio).collect();
    Ok(FitReport { rows, fitted, drift, target })
}

/// `-f(u)/log(1-u)` with `f(u) = Σ_{k<=K} b_k u^k / k`, and a bound on the
/// omitted tail assuming `|b_k| <= bmax`.
pub fn log_summability(b: &[f64], u: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut power = 1.0;
    for (i, bk) in b.iter().enumerate() {
        power *= u;
        f += bk * power / (i + 1) as f64;
    }
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k = b.len() as f64;
    let tail = bmax * power * u / ((k + 1.0) * (1.0 - u));
    (-f / (1.0 - u).ln(), tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ExactClosedForm,
    SeriesTruncation,
    EmpiricalFit,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ExactClosedForm => "exact-closed-form",
            Provenance::SeriesTruncation => "series-truncation",
            Provenance::EmpiricalFit => "empirical-fit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constant {
    pub value: Real,
    pub exact: Option<BigRational>,
    pub provenance: Provenance,
    pub tail_bound: Option<f64>,
}

impl Constant {
    fn exact(v: BigRational, prec: u32) -> Constant {
        Constant { value: Real::from_ratio(&v, prec), exact: Some(v), provenance: Provenance::ExactClosedForm, tail_bound: None }
    }

    fn series(value: Real, tail: f64) -> Constant {
        Constant { value, exact: None, provenance: Provenance::SeriesTruncation, tail_bound: Some(tail) }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "value": self.value.to_decimal_sig(),
            "precision_bits": self.value.precision(),
            "provenance": self.provenance.as_str(),
        });
        if let Some(e) = &self.exact {
            v["exact"] = json!(e.to_string());
        }
        if let Some(t) = self.tail_bound {
            v["tail_bound"] = json!(format!("{t:e}"));
        }
        v
    }
}

/// `(B, C, Λ)` for a source, with notes on known discrepancies.
#[derive(Debug, Clone)]
pub struct AsymptoticConstants {
    pub b: Constant,
    pub c: Option<Constant>,
    pub lambda: Constant,
    /// `C/Γ(B)` (or `C/Γ(B+1)` when `Λ = 1`).
    pub c_over_gamma: Option<f64>,
    pub notes: Vec<String>,
}

impl AsymptoticConstants {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "B": self.b.to_json(),
            "lambda": self.lambda.to_json(),
            "notes": self.notes,
        });
        if let Some(c) = &self.c {
            v["C"] = c.to_json();
        }
        if let Some(g) = self.c_over_gamma {
            v["C_over_Gamma"] = json!(format!("{g:.12}"));
        }
        v
    }
}

fn lambda_constant(g: &GrowthRate) -> Constant {
    match &g.exact {
        Some(e) => Constant::exact(e.clone(), g.value.precision()),
        None => Constant {
            value: g.value.clone(),
            exact: None,
            provenance: if g.confidence == crate::systems::Confidence::LowConfidence {
                Provenance::EmpiricalFit
            } else {
                Provenance::SeriesTruncation
            },
            tail_bound: None,
        },
    }
}

/// Best available constants. `empirical_x` sets the table length used when
/// only an empirical Cesàro mean is possible.
pub fn constants_for(source: &SigmaSource, prec: u32, empirical_x: u64) -> Result<AsymptoticConstants> {
    let growth = source.growth_rate(prec)?;
    let lambda = lambda_constant(&growth);
    let tol = 2f64.powi(-(prec as i32).min(1000));
    let mut notes = Vec::new();
    match source {
        SigmaSource::Builtin(Builtin::FF { q }) => {
            let c = BigRational::new(BigInt::from(*q), BigInt::from(q - 1));
            notes.push(format!(
                "C = q/(q-1) = {c} from the exact zeta function 1/(1-u); the stated value C = 1 disagrees with the census"
            ));
            Ok(AsymptoticConstants {
                b: Constant::exact(BigRational::one(), prec),
                c_over_gamma: Some(rat_f64(&c)),
                c: Some(Constant::exact(c, prec)),
                lambda,
                notes,
            })
        }
        SigmaSource::Builtin(Builtin::E { p, n }) => {
            let ec = elliptic_constants(*p, *n, prec)?;
            let c = match &ec.c_exact {
                Some(e) => Constant::exact(e.clone(), prec),
                None => Constant::series(ec.c.clone(), ec.tail_bound),
            };
            Ok(AsymptoticConstants {
                c_over_gamma: Some(ec.c_over_gamma_b()),
                b: Constant::exact(ec.b.clone(), prec),
                c: Some(c),
                lambda,
                notes,
            })
        }
        SigmaSource::Builtin(Builtin::GA) => {
            let ga = binary_automaton_constants(1, 1, prec)?;
            notes.push(format!("A = {}", ga.a.to_decimal(12)));
            Ok(AsymptoticConstants {
                c_over_gamma: Some(ga.c_over_gamma_b()),
                b: Constant::series(ga.b.clone(), ga.tail_bound),
                c: Some(Constant::series(ga.c.clone(), ga.tail_bound)),
                lambda,
                notes,
            })
        }
        SigmaSource::Builtin(Builtin::Periodic(_)) => {
            let sigma = source.sigma_table(empirical_x.max(16))?;
            let rep = lambda1_analysis(&sigma)?;
            notes.push(format!("Lambda = 1, period {}, N(X) ~ {} X^B", rep.varpi, rep.leading));
            Ok(AsymptoticConstants {
                b: Constant::exact(BigRational::from_integer(rep.b.into()), prec),
                c: None,
                c_over_gamma: Some(rat_f64(&rep.leading)),
                lambda,
                notes,
            })
        }
        SigmaSource::Table(t) => {
            if growth.value <= Real::one(prec) {
                if let Ok(rep) = lambda1_analysis(t) {
                    return Ok(AsymptoticConstants {
                        b: Constant::exact(BigRational::from_integer(rep.b.into()), prec),
                        c: None,
                        c_over_gamma: Some(rat_f64(&rep.leading)),
                        lambda: Constant::exact(BigRational::one(), prec),
                        notes: vec![format!("Lambda = 1, period {}", rep.varpi)],
                    });
                }
            }
            let b = cesaro_empirical(t, &growth.value);
            Ok(AsymptoticConstants {
                b: Constant { value: b, exact: None, provenance: Provenance::EmpiricalFit, tail_bound: None },
                c: None,
                c_over_gamma: None,
                lambda,
                notes: vec!["growth rate and B estimated from the table (low confidence)".into()],
            })
        }
        _ => {
            let spec = source.fad().ok_or_else(|| Error::Unsupported("no FAD form".into()))?;
            let spectrum = spec.matrix.as_ref().map(|a| fluctuation_spectrum(a, prec));
            if let (Some(sp), SigmaSource::Builtin(Builtin::GM)) = (&spectrum, source) {
                if let Some(cos) = sp.cos_angles.first() {
                    let s5 = Real::from_i64(5, prec).sqrt();
                    let num = &Real::from_i64(3, prec) - &s5;
                    let quarter = num.mul_pow2(-2);
                    let eighth = num.mul_pow2(-3);
                    let near = |x: &Real| (x - cos).abs().to_f64() < 1e-20;
                    notes.push(format!(
                        "theta = {} from the exact roots; cos(theta) = (3-sqrt5)/4 matches: {}; cos(theta) = (3-sqrt5)/8 matches: {}",
                        sp.unit_angles[0].to_decimal(12),
                        near(&quarter),
                        near(&eighth)
                    ));
                }
            }
            let res = cesaro_exact_fad(&spec, spectrum.as_ref(), AngleRelations::Independent, 64, tol, prec)?;
            let b = match res.exact {
                Some(e) => Constant::exact(e, prec),
                None => Constant::series(res.value, res.tail_bound),
            };
            Ok(AsymptoticConstants { b, c: None, c_over_gamma: None, lambda, notes })
        }
    }
}

/// Constants JSON report together with census ratios.
pub fn report_json(constants: &AsymptoticConstants, fit: Option<&FitReport>) -> Value {
    let mut v = constants.to_json();
    if let Some(fit) = fit {
        v["ratios"] = Value::Array(
            fit.rows
                .iter()
                .map(|r| json!({"X": r.x, "N": r.n.to_string(), "ratio": format!("{:.12}", r.ratio)}))
                .collect(),
        );
        v["fitted_C_over_Gamma"] = json!(format!("{:.12}", fit.fitted));
    }
    v
}
