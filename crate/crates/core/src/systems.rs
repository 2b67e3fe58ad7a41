//! Fixed-point sequence sources: FAD descriptions, built-in examples and raw
//! tables. Computes σ_k, the growth rate and the unit-circle spectrum.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numtheory::{self, is_gcd_sequence, is_prime, lte_params, PeriodicSequence};
use crate::poly::{cyclotomic, refine_root, ComplexReal, IntMatrix, QPoly};
use crate::real::Real;

/// Per-prime data `(p, s_p, t_p)` of a FAD sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeFactorData {
    pub p: u64,
    pub s: PeriodicSequence,
    pub t: PeriodicSequence,
}

/// `σ_k = c^k |det(A^k - 1)| r_k ∏_p |k|_p^{s_{p,k}} p^{-t_{p,k} |k|_p^{-1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadSpec {
    pub c: u64,
    pub matrix: Option<IntMatrix>,
    pub r: PeriodicSequence,
    pub primes: Vec<PrimeFactorData>,
}

fn integral_nonneg(seq: &PeriodicSequence) -> bool {
    seq.values().iter().all(|v| v.is_integer() && !v.is_negative())
}

fn power_sequence(p: u64, seq: &PeriodicSequence) -> Result<PeriodicSequence> {
    let vals = seq
        .values()
        .iter()
        .map(|v| {
            let e = v.to_integer().to_u32().ok_or_else(|| {
                Error::InvalidArgument(format!("exponent {v} too large"))
            })?;
            Ok(BigRational::from_integer(BigInt::from(p).pow(e)))
        })
        .collect::<Result<Vec<_>>>()?;
    PeriodicSequence::new(vals)
}

impl FadSpec {
    pub fn new(c: u64, matrix: Option<IntMatrix>, r: PeriodicSequence, primes: Vec<PrimeFactorData>) -> FadSpec {
        FadSpec { c, matrix, r, primes }
    }

    /// Strict structural checks: positive `c`, positive rational `r`,
    /// non-negative integer `s` and `t` with periods coprime to `p`, and the
    /// gcd-sequence property (for `r` on numerators and denominators, for
    /// `s` and `t` on `p^s` and `p^t`) over two periods.
    pub fn validate(&self) -> Result<()> {
        if self.c == 0 {
            return Err(Error::MalformedSpec("c must be a positive integer".into()));
        }
        if self.r.values().iter().any(|v| !v.is_positive()) {
            return Err(Error::MalformedSpec("r must take positive rational values".into()));
        }
        let num = PeriodicSequence::new(self.r.values().iter().map(|v| BigRational::from_integer(v.numer().clone())).collect())?;
        let den = PeriodicSequence::new(self.r.values().iter().map(|v| BigRational::from_integer(v.denom().clone())).collect())?;
        let window = 2 * self.r.period() as u64;
        if !is_gcd_sequence(&num, window)? || !is_gcd_sequence(&den, window)? {
            return Err(Error::MalformedSpec("r is not a gcd-sequence".into()));
        }
        let mut seen = Vec::new();
        for pd in &self.primes {
            if !is_prime(pd.p) {
                return Err(Error::NotPrime(pd.p));
            }
            if seen.contains(&pd.p) {
                return Err(Error::MalformedSpec(format!("prime {} listed twice", pd.p)));
            }
            seen.push(pd.p);
            for (name, seq) in [("s", &pd.s), ("t", &pd.t)] {
                if !integral_nonneg(seq) {
                    return Err(Error::MalformedSpec(format!(
                        "{name} for p = {} must be non-negative integers",
                        pd.p
                    )));
                }
                if (seq.period() as u64).is_multiple_of(pd.p) {
                    return Err(Error::NotCoprime(seq.period() as u64, pd.p));
                }
                let pw = power_sequence(pd.p, seq)?;
                if !is_gcd_sequence(&pw, 2 * seq.period() as u64)? {
                    return Err(Error::MalformedSpec(format!(
                        "p^{name} for p = {} is not a gcd-sequence",
                        pd.p
                    )));
                }
            }
        }
        Ok(())
    }

    /// `b̃_k = r_k ∏_p p^{-v_p(k) s_{p,k} - t_{p,k} p^{v_p(k)}}`.
    pub fn b_tilde(&self, k: u64) -> BigRational {
        let mut v = self.r.at(k).clone();
        for pd in &self.primes {
            let j = numtheory::valuation(k, pd.p);
            let s = pd.s.at(k).to_integer().to_u64().unwrap_or(0);
            let t = pd.t.at(k).to_integer().to_u64().unwrap_or(0);
            let e = j as u64 * s + t * pd.p.pow(j);
            v /= BigRational::from_integer(BigInt::from(pd.p).pow(e as u32));
        }
        v
    }

    fn assemble(&self, k: u64, det: Option<BigInt>) -> Result<BigUint> {
        let mut v = self.b_tilde(k) * BigRational::from_integer(BigInt::from(self.c).pow(k as u32));
        if let Some(d) = det {
            v *= BigRational::from_integer(d.abs());
        }
        if !v.is_integer() || v.is_negative() {
            return Err(Error::NonRealizable(k));
        }
        Ok(v.to_integer().to_biguint().expect("non-negative"))
    }

    pub fn sigma(&self, k: u64) -> Result<BigUint> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let det = self.matrix.as_ref().map(|a| {
            let mut acc = IntMatrix::identity(a.dim());
            let mut base = a.clone();
            let mut e = k;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc.mul(&base);
                }
                base = base.mul(&base);
                e >>= 1;
            }
            acc.minus_identity().det()
        });
        self.assemble(k, det)
    }

    /// `σ_1..σ_x`, iterating `A^k` by repeated multiplication.
    pub fn sigma_table(&self, x: u64) -> Result<Vec<BigUint>> {
        let mut out = Vec::with_capacity(x as usize);
        let mut power = self.matrix.clone();
        for k in 1..=x {
            let det = power.as_ref().map(|ak| ak.minus_identity().det());
            out.push(self.assemble(k, det)?);
            if let (Some(pk), Some(a)) = (power.as_mut(), self.matrix.as_ref()) {
                *pk = pk.mul(a);
            }
        }
        Ok(out)
    }

    /// Characteristic polynomial of `A`, if present.
    pub fn charpoly(&self) -> Option<QPoly> {
        self.matrix.as_ref().map(|a| QPoly::from_ints(&a.charpoly()))
    }
}

/// Built-in example systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Builtin {
    /// `σ_k = q^k`.
    FF { q: u64 },
    /// Multiplication by `n` on an ordinary elliptic curve in characteristic `p`.
    E { p: u64, n: u64 },
    /// `σ_k = 2^{k - |k|_2^{-1}}`.
    GA,
    /// Torus endomorphism over F_5 with a Salem characteristic polynomial.
    GM,
    /// Periodic fixed-point counts, one period given.
    Periodic(Vec<u64>),
}

/// Lower coefficients of the GM characteristic polynomial `x^4 - 3x^3 + 3x^2 - 3x + 1`.
pub const GM_POLY: [i64; 4] = [1, -3, 3, -3];

impl Builtin {
    pub fn name(&self) -> String {
        match self {
            Builtin::FF { q } => format!("FF(q={q})"),
            Builtin::E { p, n } => format!("E(p={p},n={n})"),
            Builtin::GA => "GA".into(),
            Builtin::GM => "GM".into(),
            Builtin::Periodic(v) => format!(
                "periodic({})",
                v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
            ),
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Builtin::FF { q } if *q < 2 => Err(Error::InvalidArgument("FF needs q >= 2".into())),
            Builtin::E { p, n } => {
                if !is_prime(*p) {
                    Err(Error::NotPrime(*p))
                } else if *p == 2 {
                    Err(Error::OddPrimeOnly(*p))
                } else if *n < 2 {
                    Err(Error::InvalidArgument("E needs n >= 2".into()))
                } else {
                    Ok(())
                }
            }
            Builtin::Periodic(v) if v.is_empty() => {
                Err(Error::InvalidArgument("periodic needs at least one value".into()))
            }
            _ => Ok(()),
        }
    }

    /// Direct closed-form evaluation.
    pub fn sigma(&self, k: u64) -> Result<BigUint> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        self.check()?;
        let two = BigUint::from(2u32);
        Ok(match self {
            Builtin::FF { q } => BigUint::from(*q).pow(k as u32),
            Builtin::E { p, n } => {
                let m = BigUint::from(*n).pow(k as u32) - 1u32;
                let v = numtheory::valuation_big(&m, *p);
                &m * &m / BigUint::from(*p).pow(v as u32)
            }
            Builtin::GA => two.pow((k - (1u64 << numtheory::valuation(k, 2))) as u32),
            Builtin::GM => {
                let d = IntMatrix::companion(&GM_POLY);
                let mut acc = IntMatrix::identity(4);
                for _ in 0..k {
                    acc = acc.mul(&d);
                }
                let det = acc.minus_identity().det().abs().to_biguint().expect("abs");
                let v = numtheory::valuation_big(&det, 5);
                det / BigUint::from(5u32).pow(v as u32)
            }
            Builtin::Periodic(v) => BigUint::from(v[((k - 1) % v.len() as u64) as usize]),
        })
    }

    pub fn sigma_table(&self, x: u64) -> Result<Vec<BigUint>> {
        match self {
            Builtin::GM => self.to_fad()?.sigma_table(x),
            _ => (1..=x).map(|k| self.sigma(k)).collect(),
        }
    }

    /// FAD description of the builtin. Periodic sources with a zero entry
    /// have no FAD form.
    pub fn to_fad(&self) -> Result<FadSpec> {
        self.check()?;
        let one = || PeriodicSequence::constant(BigRational::one());
        let zero = || PeriodicSequence::constant(BigRational::zero());
        Ok(match self {
            Builtin::FF { q } => FadSpec::new(*q, None, one(), vec![]),
            Builtin::E { p, n } => {
                let a = IntMatrix::from_i64(&[vec![*n as i64, 0], vec![0, *n as i64]]).expect("2x2");
                if n % p == 0 {
                    FadSpec::new(1, Some(a), one(), vec![])
                } else {
                    let lte = lte_params(*n, *p)?;
                    let d = lte.order as usize;
                    let mut r = vec![BigRational::one(); d];
                    r[d - 1] = BigRational::new(BigInt::one(), BigInt::from(*p).pow(lte.exponent as u32));
                    let mut s = vec![BigRational::zero(); d];
                    s[d - 1] = BigRational::one();
                    FadSpec::new(
                        1,
                        Some(a),
                        PeriodicSequence::new(r)?,
                        vec![PrimeFactorData { p: *p, s: PeriodicSequence::new(s)?, t: zero() }],
                    )
                }
            }
            Builtin::GA => FadSpec::new(
                2,
                None,
                one(),
                vec![PrimeFactorData { p: 2, s: zero(), t: one() }],
            ),
            Builtin::GM => FadSpec::new(
                1,
                Some(IntMatrix::companion(&GM_POLY)),
                PeriodicSequence::new(vec![
                    BigRational::one(),
                    BigRational::one(),
                    BigRational::new(1.into(), 25.into()),
                ])?,
                vec![PrimeFactorData {
                    p: 5,
                    s: PeriodicSequence::from_integers(&[0, 0, 4])?,
                    t: zero(),
                }],
            ),
            Builtin::Periodic(v) => {
                if v.contains(&0) {
                    return Err(Error::Unsupported(
                        "periodic source with zero entries has no FAD form".into(),
                    ));
                }
                FadSpec::new(
                    1,
                    None,
                    PeriodicSequence::new(v.iter().map(|&x| BigRational::from_integer(x.into())).collect())?,
                    vec![],
                )
            }
        })
    }
}

/// Where σ comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSource {
    Fad(FadSpec),
    Table(Vec<BigUint>),
    Builtin(Builtin),
}

impl SigmaSource {
    pub fn describe(&self) -> String {
        match self {
            SigmaSource::Fad(_) => "fad".into(),
            SigmaSource::Table(t) => format!("table[{}]", t.len()),
            SigmaSource::Builtin(b) => b.name(),
        }
    }

    pub fn sigma(&self, k: u64) -> Result<BigUint> {
        match self {
            SigmaSource::Fad(f) => f.sigma(k),
            SigmaSource::Builtin(b) => b.sigma(k),
            SigmaSource::Table(t) => {
                if k == 0 {
                    return Err(Error::InvalidArgument("k must be at least 1".into()));
                }
                t.get(k as usize - 1).cloned().ok_or(Error::OutOfRange {
                    requested: k,
                    available: t.len() as u64,
                })
            }
        }
    }

    /// `σ_1..σ_x`.
    pub fn sigma_table(&self, x: u64) -> Result<Vec<BigUint>> {
        match self {
            SigmaSource::Fad(f) => f.sigma_table(x),
            SigmaSource::Builtin(b) => b.sigma_table(x),
            SigmaSource::Table(t) => {
                if (t.len() as u64) < x {
                    return Err(Error::TableTooShort { needed: x as usize, have: t.len() });
                }
                Ok(t[..x as usize].to_vec())
            }
        }
    }

    /// FAD form when one exists.
    pub fn fad(&self) -> Option<FadSpec> {
        match self {
            SigmaSource::Fad(f) => Some(f.clone()),
            SigmaSource::Builtin(b) => b.to_fad().ok(),
            SigmaSource::Table(_) => None,
        }
    }

    pub fn growth_rate(&self, precision: u32) -> Result<GrowthRate> {
        match self {
            SigmaSource::Builtin(Builtin::Periodic(v)) => {
                if v.iter().all(|&x| x == 0) {
                    return Err(Error::InvalidArgument("all-zero sequence has no growth rate".into()));
                }
                Ok(GrowthRate::exact(BigRational::one(), precision))
            }
            SigmaSource::Builtin(b) => fad_growth_rate(&b.to_fad()?, precision),
            SigmaSource::Fad(f) => fad_growth_rate(f, precision),
            SigmaSource::Table(t) => table_growth_rate(t, precision),
        }
    }

    /// Parse a JSON system description.
    pub fn from_json(text: &str) -> Result<SigmaSource> {
        let v: Value = serde_json::from_str(text).map_err(|e| {
            Error::MalformedSpec(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        SigmaSource::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<SigmaSource> {
        let kind = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::MalformedSpec("missing string field \"type\"".into()))?;
        match kind {
            "fad" => parse_fad(v).map(SigmaSource::Fad),
            "table" => {
                let arr = v
                    .get("sigma")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::MalformedSpec("table needs array \"sigma\"".into()))?;
                let vals = arr
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        json_natural(x).ok_or_else(|| {
                            Error::MalformedSpec(format!("sigma[{i}] is not a non-negative integer"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if vals.is_empty() {
                    return Err(Error::MalformedSpec("empty sigma table".into()));
                }
                Ok(SigmaSource::Table(vals))
            }
            "builtin" => {
                let name = v
                    .get("name")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::MalformedSpec("builtin needs string \"name\"".into()))?;
                let param = |key: &str| -> Result<u64> {
                    v.get(key).and_then(Value::as_u64).ok_or_else(|| {
                        Error::MalformedSpec(format!("builtin {name} needs integer \"{key}\""))
                    })
                };
                let b = match name {
                    "FF" => Builtin::FF { q: param("q")? },
                    "E" => Builtin::E { p: param("p")?, n: param("n")? },
                    "GA" => Builtin::GA,
                    "GM" => Builtin::GM,
                    "periodic" => {
                        let vals = v
                            .get("values")
                            .and_then(Value::as_array)
                            .ok_or_else(|| Error::MalformedSpec("periodic needs array \"values\"".into()))?
                            .iter()
                            .map(|x| x.as_u64().ok_or_else(|| Error::MalformedSpec("periodic values must be naturals".into())))
                            .collect::<Result<Vec<_>>>()?;
                        Builtin::Periodic(vals)
                    }
                    other => return Err(Error::MalformedSpec(format!("unknown builtin {other:?}"))),
                };
                b.check().map_err(|e| Error::MalformedSpec(e.to_string()))?;
                Ok(SigmaSource::Builtin(b))
            }
            other => Err(Error::MalformedSpec(format!("unknown system type {other:?}"))),
        }
    }
}

fn json_natural(x: &Value) -> Option<BigUint> {
    match x {
        Value::Number(n) => n.as_u64().map(BigUint::from),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn json_rational(x: &Value) -> Option<BigRational> {
    match x {
        Value::Number(n) => n.as_i64().map(|i| BigRational::from_integer(i.into())),
        Value::String(s) => match s.split_once('/') {
            Some((a, b)) => {
                let d: BigInt = b.trim().parse().ok()?;
                if d.is_zero() {
                    return None;
                }
                Some(BigRational::new(a.trim().parse().ok()?, d))
            }
            None => s.trim().parse().ok().map(BigRational::from_integer),
        },
        _ => None,
    }
}

fn parse_sequence(v: Option<&Value>, field: &str) -> Result<PeriodicSequence> {
    let Some(v) = v else {
        return Ok(PeriodicSequence::constant(BigRational::zero()));
    };
    let values = v
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::MalformedSpec(format!("{field} needs array \"values\"")))?;
    let vals = values
        .iter()
        .map(|x| json_rational(x).ok_or_else(|| Error::MalformedSpec(format!("{field}: bad rational {x}"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = v.get("period") {
        if p.as_u64() != Some(vals.len() as u64) {
            return Err(Error::MalformedSpec(format!("{field}: period does not match values length")));
        }
    }
    PeriodicSequence::new(vals).map_err(|e| Error::MalformedSpec(format!("{field}: {e}")))
}

fn parse_fad(v: &Value) -> Result<FadSpec> {
    let c = match v.get("c") {
        None => 1,
        Some(c) => c
            .as_u64()
            .filter(|&c| c > 0)
            .ok_or_else(|| Error::MalformedSpec("c must be a positive integer".into()))?,
    };
    let matrix = match v.get("matrix") {
        None | Some(Value::Null) => None,
        Some(m) => {
            let rows = m
                .as_array()
                .ok_or_else(|| Error::MalformedSpec("matrix must be an array of rows".into()))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| Error::MalformedSpec("matrix rows must be arrays".into()))?
                        .iter()
                        .map(|x| x.as_i64().ok_or_else(|| Error::MalformedSpec("matrix entries must be integers".into())))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Some(IntMatrix::from_i64(&rows).ok_or_else(|| Error::MalformedSpec("matrix must be square".into()))?)
        }
    };
    let r = match v.get("r") {
        None => PeriodicSequence::constant(BigRational::one()),
        some => parse_sequence(some, "r")?,
    };
    let mut primes = Vec::new();
    if let Some(list) = v.get("primes") {
        for (i, entry) in list
            .as_array()
            .ok_or_else(|| Error::MalformedSpec("primes must be an array".into()))?
            .iter()
            .enumerate()
        {
            let p = entry
                .get("p")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::MalformedSpec(format!("primes[{i}] needs integer \"p\"")))?;
            primes.push(PrimeFactorData {
                p,
                s: parse_sequence(entry.get("s"), &format!("primes[{i}].s"))?,
                t: parse_sequence(entry.get("t"), &format!("primes[{i}].t"))?,
            });
        }
    }
    let spec = FadSpec::new(c, matrix, r, primes);
    spec.validate().map_err(|e| match e {
        Error::MalformedSpec(_) => e,
        other => Error::MalformedSpec(other.to_string()),
    })?;
    Ok(spec)
}

/// How far a growth rate can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    Exact,
    Refined,
    LowConfidence,
}

impl Confidence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Confidence::Exact => "exact",
            Confidence::Refined => "refined",
            Confidence::LowConfidence => "low-confidence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrowthRate {
    pub value: Real,
    pub exact: Option<BigRational>,
    pub confidence: Confidence,
}

impl GrowthRate {
    pub fn exact(v: BigRational, prec: u32) -> GrowthRate {
        GrowthRate {
            value: Real::from_ratio(&v, prec),
            exact: Some(v),
            confidence: Confidence::Exact,
        }
    }

    pub fn is_one(&self) -> bool {
        self.exact.as_ref().is_some_and(One::is_one)
    }
}

/// A root of a squarefree factor together with its multiplicity in `f`.
struct IsolatedRoot {
    z: ComplexReal,
    factor: QPoly,
    multiplicity: usize,
}

fn isolate_roots(f: &QPoly, prec: u32) -> Vec<IsolatedRoot> {
    let mut out = Vec::new();
    for (factor, multiplicity) in f.squarefree_decomposition() {
        for z in factor.roots_f64() {
            out.push(IsolatedRoot {
                z: refine_root(&factor, z, prec),
                factor: factor.clone(),
                multiplicity,
            });
        }
    }
    out
}

/// Side of the unit circle, decided at half the working precision.
fn circle_side(z: &ComplexReal, prec: u32) -> std::cmp::Ordering {
    let d = &z.norm_sqr() - &Real::one(prec);
    if d.is_zero() || d.magnitude_bits() < -(prec as i64) / 2 {
        std::cmp::Ordering::Equal
    } else if d.is_negative() {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

/// `c` times the Mahler measure of `charpoly(A)`.
pub fn fad_growth_rate(spec: &FadSpec, precision: u32) -> Result<GrowthRate> {
    let c = BigRational::from_integer(spec.c.into());
    let Some(f) = spec.charpoly() else {
        return Ok(GrowthRate::exact(c, precision));
    };
    let wp = precision + 32;
    let mut value = Real::from_ratio(&c, wp);
    let mut exact = Some(c);
    for root in isolate_roots(&f, wp) {
        if circle_side(&root.z, wp) != std::cmp::Ordering::Greater {
            continue;
        }
        let modulus = root.z.norm_sqr().sqrt();
        for _ in 0..root.multiplicity {
            value = &value * &modulus;
        }
        let candidate = BigRational::from_integer(root.z.re.round());
        let is_integer_root = root.z.im.is_zero()
            || root.z.im.magnitude_bits() < -(wp as i64) / 2;
        let exact_root = is_integer_root && {
            let r = candidate.clone();
            root.factor.coeffs().iter().rev().fold(BigRational::zero(), |acc, a| acc * &r + a).is_zero()
        };
        exact = match (exact, exact_root) {
            (Some(e), true) => Some(e * num_traits::pow(candidate.abs(), root.multiplicity)),
            _ => None,
        };
    }
    Ok(match exact {
        Some(e) => GrowthRate::exact(e, precision),
        None => GrowthRate {
            value: value.with_precision(precision),
            exact: None,
            confidence: Confidence::Refined,
        },
    })
}

/// `max σ_k^{1/k}` over the second half of the table.
pub fn table_growth_rate(table: &[BigUint], precision: u32) -> Result<GrowthRate> {
    if table.len() < 8 {
        return Err(Error::TableTooShort { needed: 8, have: table.len() });
    }
    let mut best: Option<Real> = None;
    for k in table.len() / 2..=table.len() {
        let s = &table[k - 1];
        if s.is_zero() {
            continue;
        }
        let root = (Real::from_biguint(s, precision).ln() / Real::from_i64(k as i64, precision)).exp();
        if best.as_ref().is_none_or(|b| root > *b) {
            best = Some(root);
        }
    }
    let value = best.ok_or_else(|| Error::InvalidArgument("table tail is identically zero".into()))?;
    Ok(GrowthRate { value, exact: None, confidence: Confidence::LowConfidence })
}

/// Unit-circle part of the spectrum of an integer matrix.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Mahler measure of the characteristic polynomial.
    pub lambda: Real,
    /// Angles in `(0, pi)`, repeated according to multiplicity.
    pub unit_angles: Vec<Real>,
    pub cos_angles: Vec<Real>,
    pub m: usize,
    pub theta_rational_flags: Vec<bool>,
    /// Whether `1` or `-1` is an eigenvalue.
    pub real_unit_eigenvalue: bool,
}

impl SpectrumReport {
    pub fn has_root_of_unity(&self) -> bool {
        self.real_unit_eigenvalue || self.theta_rational_flags.iter().any(|&f| f)
    }
}

pub fn fluctuation_spectrum(a: &IntMatrix, precision: u32) -> SpectrumReport {
    let wp = precision + 32;
    let f = QPoly::from_ints(&a.charpoly());
    let reciprocal = f.gcd(&f.reversal());
    let mut lambda = Real::one(wp);
    let mut angles: Vec<(Real, Real, bool)> = Vec::new();
    let mut real_unit = false;
    for root in isolate_roots(&f, wp) {
        match circle_side(&root.z, wp) {
            std::cmp::Ordering::Greater => {
                let m = root.z.norm_sqr().sqrt();
                for _ in 0..root.multiplicity {
                    lambda = &lambda * &m;
                }
            }
            std::cmp::Ordering::Less => {}
            std::cmp::Ordering::Equal => {
                let on_circle = root.factor.gcd(&reciprocal);
                if on_circle.degree() == 0 {
                    continue;
                }
                if root.z.im.is_zero() || root.z.im.magnitude_bits() < -(wp as i64) / 2 {
                    real_unit = true;
                    continue;
                }
                if root.z.im.is_negative() {
                    continue;
                }
                let deg = f.degree() as u64;
                let z64 = root.z.to_c64();
                let cyclo = (1..=4 * deg * deg + 2)
                    .filter(|&n| numtheory::euler_phi(n) <= deg)
                    .any(|n| {
                        let h = on_circle.gcd(&cyclotomic(n));
                        h.degree() > 0 && h.eval_c64(z64).norm() < 1e-8
                    });
                let theta = Real::atan2(&root.z.im, &root.z.re).with_precision(precision);
                let cos = root.z.re.with_precision(precision);
                for _ in 0..root.multiplicity {
                    angles.push((theta.clone(), cos.clone(), cyclo));
                }
            }
        }
    }
    angles.sort_by(|a, b| a.0.cmp(&b.0));
    SpectrumReport {
        lambda: lambda.with_precision(precision),
        m: angles.len(),
        unit_angles: angles.iter().map(|a| a.0.clone()).collect(),
        cos_angles: angles.iter().map(|a| a.1.clone()).collect(),
        theta_rational_flags: angles.iter().map(|a| a.2).collect(),
        real_unit_eigenvalue: real_unit,
    }
}

/// `ℓ P_ℓ = Σ_{n | ℓ} μ(ℓ/n) σ_n` for `ℓ = 1..len`.
pub fn mobius_sums(sigma: &[BigUint]) -> Vec<BigInt> {
    (1..=sigma.len() as u64)
        .map(|l| {
            numtheory::divisors(l)
                .into_iter()
                .fold(BigInt::zero(), |acc, n| {
                    let mu = numtheory::mobius(l / n).expect("l / n >= 1");
                    let s = BigInt::from(sigma[n as usize - 1].clone());
                    match mu {
                        1 => acc + s,
                        -1 => acc - s,
                        _ => acc,
                    }
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DoldFailureKind {
    NonIntegral,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoldFailure {
    pub ell: u64,
    pub kind: DoldFailureKind,
    pub mobius_sum: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoldReport {
    pub ok: bool,
    pub checked: usize,
    pub first_failure: Option<DoldFailure>,
}

/// Check integrality and non-negativity of every `P_ℓ`, `ℓ <= len`.
pub fn validate_dold(sigma: &[BigUint]) -> DoldReport {
    let first_failure = mobius_sums(sigma)
        .into_iter()
        .enumerate()
        .find_map(|(i, s)| {
            let ell = i as u64 + 1;
            if s.is_negative() {
                Some(DoldFailure { ell, kind: DoldFailureKind::Negative, mobius_sum: s })
            } else if !(&s % BigInt::from(ell)).is_zero() {
                Some(DoldFailure { ell, kind: DoldFailureKind::NonIntegral, mobius_sum: s })
            } else {
                None
            }
        });
    DoldReport { ok: first_failure.is_none(), checked: sigma.len(), first_failure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nat(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn builtin_sigma_examples() {
        assert_eq!(Builtin::FF { q: 2 }.sigma(5).unwrap(), BigUint::from(32u32));
        assert_eq!(Builtin::E { p: 3, n: 2 }.sigma(4).unwrap(), BigUint::from(75u32));
        assert_eq!(Builtin::GM.sigma(2).unwrap(), BigUint::from(11u32));
        assert_eq!(Builtin::GA.sigma(3).unwrap(), BigUint::from(4u32));
        assert_eq!(
            Builtin::E { p: 3, n: 2 }.sigma_table(4).unwrap(),
            nat(&[1, 3, 49, 75])
        );
    }

    #[test]
    fn fad_forms_match_direct_formulas() {
        let builtins = [
            Builtin::FF { q: 3 },
            Builtin::E { p: 3, n: 2 },
            Builtin::E { p: 5, n: 7 },
            Builtin::E { p: 3, n: 6 },
            Builtin::GA,
            Builtin::GM,
            Builtin::Periodic(vec![1, 3]),
        ];
        for b in builtins {
            let fad = b.to_fad().unwrap();
            fad.validate().unwrap();
            let direct: Vec<BigUint> = (1..=60).map(|k| b.sigma(k).unwrap()).collect();
            assert_eq!(fad.sigma_table(60).unwrap(), direct, "{}", b.name());
            assert_eq!(fad.sigma(37).unwrap(), direct[36]);
        }
    }

    #[test]
    fn strict_validation_rejects_bad_specs() {
        let one = PeriodicSequence::constant(BigRational::one());
        let bad_t = PrimeFactorData {
            p: 3,
            s: PeriodicSequence::constant(BigRational::zero()),
            t: PeriodicSequence::from_integers(&[0, 0, 1]).unwrap(),
        };
        assert_eq!(FadSpec::new(2, None, one.clone(), vec![bad_t]).validate(), Err(Error::NotCoprime(3, 3)));
        let half = PrimeFactorData {
            p: 2,
            s: PeriodicSequence::constant(BigRational::new(1.into(), 2.into())),
            t: PeriodicSequence::constant(BigRational::zero()),
        };
        assert!(FadSpec::new(2, None, one.clone(), vec![half]).validate().is_err());
        let r = PeriodicSequence::from_integers(&[2, 3]).unwrap();
        assert!(FadSpec::new(1, None, r, vec![]).validate().is_err());
        let noninteger = FadSpec::new(
            1,
            None,
            PeriodicSequence::constant(BigRational::new(1.into(), 3.into())),
            vec![],
        );
        assert_eq!(noninteger.sigma(1), Err(Error::NonRealizable(1)));
    }

    #[test]
    fn growth_rates() {
        let e = SigmaSource::Builtin(Builtin::E { p: 3, n: 2 }).growth_rate(128).unwrap();
        assert_eq!(e.exact, Some(BigRational::from_integer(4.into())));
        for q in [2u64, 3, 5] {
            let g = SigmaSource::Builtin(Builtin::FF { q }).growth_rate(128).unwrap();
            assert_eq!(g.exact, Some(BigRational::from_integer(q.into())));
        }
        let gm = SigmaSource::Builtin(Builtin::GM).growth_rate(128).unwrap();
        assert!(gm.exact.is_none());
        // (3 + sqrt5 + sqrt(6 sqrt5 - 2)) / 4
        let s5 = Real::from_i64(5, 160).sqrt();
        let inner = (&(&s5 * &Real::from_i64(6, 160)) - &Real::from_i64(2, 160)).sqrt();
        let closed = (&(&Real::from_i64(3, 160) + &s5) + &inner).mul_pow2(-2);
        assert!((&gm.value - &closed).abs().magnitude_bits() < -120);
        let table = SigmaSource::Table(nat(&[2, 4, 8, 16, 32, 64, 128, 256]));
        let t = table.growth_rate(64).unwrap();
        assert_eq!(t.confidence, Confidence::LowConfidence);
        assert!((t.value.to_f64() - 2.0).abs() < 1e-12);
        assert!(SigmaSource::Table(nat(&[1, 2])).growth_rate(64).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let gm = fluctuation_spectrum(&IntMatrix::companion(&GM_POLY), 128);
        assert_eq!(gm.m, 1);
        assert_eq!(gm.theta_rational_flags, vec![false]);
        // cos θ = (3 - sqrt5) / 4
        let expect = (&Real::from_i64(3, 128) - &Real::from_i64(5, 128).sqrt()).mul_pow2(-2);
        assert!((&gm.cos_angles[0] - &expect).abs().magnitude_bits() < -110);
        assert!((gm.unit_angles[0].to_f64() - 1.378_632_838_875_17).abs() < 1e-12);

        let two = fluctuation_spectrum(&IntMatrix::from_i64(&[vec![2]]).unwrap(), 128);
        assert_eq!(two.m, 0);
        assert!(!two.has_root_of_unity());

        let rot = fluctuation_spectrum(&IntMatrix::from_i64(&[vec![0, -1], vec![1, 0]]).unwrap(), 128);
        assert_eq!(rot.m, 1);
        assert_eq!(rot.theta_rational_flags, vec![true]);
        assert!((rot.unit_angles[0].to_f64() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        let id = fluctuation_spectrum(&IntMatrix::identity(2), 64);
        assert!(id.real_unit_eigenvalue);
    }

    #[test]
    fn dold_examples() {
        let pow2: Vec<BigUint> = (1..=50).map(|k| BigUint::from(2u32).pow(k)).collect();
        assert!(validate_dold(&pow2).ok);
        let alt = nat(&[1, 3, 1, 3, 1, 3, 1, 3, 1, 3]);
        let rep = validate_dold(&alt);
        assert!(rep.ok);
        assert_eq!(mobius_sums(&alt)[..2], [BigInt::from(1), BigInt::from(2)]);
        let bad = validate_dold(&nat(&[1, 1, 2]));
        assert!(!bad.ok);
        let failure = bad.first_failure.unwrap();
        assert_eq!(failure.ell, 3);
        assert_eq!(failure.kind, DoldFailureKind::NonIntegral);
    }

    #[test]
    fn builtins_are_dold_to_200() {
        for b in [
            Builtin::FF { q: 2 },
            Builtin::E { p: 3, n: 2 },
            Builtin::GA,
            Builtin::GM,
            Builtin::Periodic(vec![1, 3]),
        ] {
            assert!(validate_dold(&b.sigma_table(200).unwrap()).ok, "{}", b.name());
        }
    }

    #[test]
    fn json_ingestion() {
        let gm = r#"{"type":"fad","c":1,"matrix":[[0,0,0,-1],[1,0,0,3],[0,1,0,-3],[0,0,1,3]],
            "r":{"period":3,"values":[1,1,"1/25"]},
            "primes":[{"p":5,"s":{"period":3,"values":[0,0,4]},"t":{"period":1,"values":[0]}}]}"#;
        let src = SigmaSource::from_json(gm).unwrap();
        let direct = SigmaSource::Builtin(Builtin::GM);
        assert_eq!(src.sigma_table(30).unwrap(), direct.sigma_table(30).unwrap());
        let e = SigmaSource::from_json(r#"{"type":"builtin","name":"E","p":3,"n":2}"#).unwrap();
        assert_eq!(e, SigmaSource::Builtin(Builtin::E { p: 3, n: 2 }));
        let t = SigmaSource::from_json(r#"{"type":"table","sigma":[1,1,"2"]}"#).unwrap();
        assert_eq!(t, SigmaSource::Table(nat(&[1, 1, 2])));
        let err = SigmaSource::from_json("{\"type\":\n\"fad\",}").unwrap_err();
        assert!(matches!(err, Error::MalformedSpec(ref m) if m.starts_with("line 2")));
        assert!(SigmaSource::from_json(r#"{"type":"builtin","name":"E","p":2,"n":3}"#).is_err());
    }

    proptest! {
        #[test]
        fn elliptic_valuation_follows_lte(p_idx in 0usize..4, n in 2u64..40, k in 1u64..120) {
            let p = [3u64, 5, 7, 11][p_idx];
            prop_assume!(n % p != 0);
            let lte = lte_params(n, p).unwrap();
            let m = BigUint::from(n).pow(k as u32) - 1u32;
            let sigma = Builtin::E { p, n }.sigma(k).unwrap();
            let v = lte.valuation_of_power_minus_one(k, p);
            prop_assert_eq!(&m * &m, sigma * BigUint::from(p).pow(v as u32));
        }

        #[test]
        fn no_unit_roots_without_reciprocal_factor(c0 in 2i64..20, c1 in -5i64..5, c2 in -5i64..5) {
            // Constant term at least 2 in absolute value and leading 1: the
            // polynomial is not reciprocal unless a factor is; filter those.
            let f = QPoly::from_i64(&[c0, c1, c2, 1]);
            prop_assume!(f.gcd(&f.reversal()).degree() == 0);
            let rep = fluctuation_spectrum(&IntMatrix::companion(&[c0, c1, c2]), 64);
            prop_assert_eq!(rep.m, 0);
        }
    }
}
