//! Exact integer matrices and rational polynomials, with numeric root
//! isolation refined to arbitrary precision.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::real::Real;

/// Square integer matrix, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Option<IntMatrix> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(IntMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Option<IntMatrix> {
        IntMatrix::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        IntMatrix { n, entries }
    }

    /// Companion matrix of a monic polynomial given low-to-high, leading 1 omitted.
    pub fn companion(lower_coeffs: &[i64]) -> IntMatrix {
        let n = lower_coeffs.len();
        let mut m = IntMatrix {
            n,
            entries: vec![BigInt::zero(); n * n],
        };
        for i in 1..n {
            m.entries[i * n + (i - 1)] = BigInt::one();
        }
        for (i, &c) in lower_coeffs.iter().enumerate() {
            m.entries[i * n + (n - 1)] = BigInt::from(-c);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * &rhs.entries[k * n + j];
                }
            }
        }
        IntMatrix { n, entries }
    }

    pub fn minus_identity(&self) -> IntMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.entries[i * self.n + i] -= 1;
        }
        m
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k * n + k].is_zero() {
                match (k + 1..n).find(|&i| !a[i * n + k].is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            a.swap(k * n + j, i * n + j);
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = v / &prev;
                }
            }
            prev = a[k * n + k].clone();
        }
        sign * &a[n * n - 1]
    }

    /// Characteristic polynomial `det(x I - A)`, monic, low-to-high, by
    /// Faddeev–LeVerrier (all divisions exact over the integers).
    pub fn charpoly(&self) -> Vec<BigInt> {
        let n = self.n;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut m = IntMatrix::identity(n);
        for k in 1..=n {
            let am = self.mul(&m);
            let trace: BigInt = (0..n).map(|i| am.get(i, i).clone()).sum();
            let c = -(trace / BigInt::from(k as u64));
            coeffs[n - k] = c.clone();
            m = am;
            for i in 0..n {
                m.entries[i * n + i] += &c;
            }
        }
        coeffs
    }
}

/// Polynomial over Q, coefficients low-to-high with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly {
    coeffs: Vec<BigRational>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> QPoly {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[BigInt]) -> QPoly {
        QPoly::new(coeffs.iter().cloned().map(BigRational::from_integer).collect())
    }

    pub fn from_i64(coeffs: &[i64]) -> QPoly {
        QPoly::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    pub fn one() -> QPoly {
        QPoly::from_i64(&[1])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> &BigRational {
        self.coeffs.last().expect("leading coefficient of zero polynomial")
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let lc = self.leading().clone();
        QPoly::new(self.coeffs.iter().map(|c| c / &lc).collect())
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// `x^deg f(1/x)`.
    pub fn reversal(&self) -> QPoly {
        let mut c = self.coeffs.clone();
        c.reverse();
        QPoly::new(c)
    }

    pub fn mul(&self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::new(vec![]);
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn div_rem(&self, divisor: &QPoly) -> (QPoly, QPoly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        if self.coeffs.len() < divisor.coeffs.len() {
            return (QPoly::new(vec![]), self.clone());
        }
        let mut quot = vec![BigRational::zero(); self.coeffs.len() - dd];
        let lc = divisor.leading().clone();
        for i in (0..quot.len()).rev() {
            let q = &rem[i + dd] / &lc;
            if !q.is_zero() {
                for (j, c) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &q * c;
                }
            }
            quot[i] = q;
        }
        rem.truncate(dd);
        (QPoly::new(quot), QPoly::new(rem))
    }

    pub fn divides(&self, other: &QPoly) -> bool {
        other.div_rem(self).1.is_zero()
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Square-free decomposition (Yun): pairs `(factor, multiplicity)` with
    /// `self = lc * prod factor^multiplicity`.
    pub fn squarefree_decomposition(&self) -> Vec<(QPoly, usize)> {
        let f = self.monic();
        if f.degree() == 0 {
            return vec![];
        }
        let df = f.derivative();
        let mut a = f.gcd(&df);
        let mut b = f.div_rem(&a).0;
        let mut c = df.div_rem(&a).0;
        let mut d = c_sub(&c, &b.derivative());
        let mut out = Vec::new();
        let mut i = 1;
        loop {
            a = b.gcd(&d);
            if a.degree() > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_rem(&a).0;
            if b.degree() == 0 {
                break;
            }
            c = d.div_rem(&a).0;
            d = c_sub(&c, &b.derivative());
            i += 1;
        }
        out
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + rat_to_f64(c))
    }

    /// All complex roots in double precision (Aberth–Ehrlich iteration).
    pub fn roots_f64(&self) -> Vec<Complex64> {
        let f = self.monic();
        let n = f.degree();
        if n == 0 {
            return vec![];
        }
        let coeffs: Vec<f64> = f.coeffs.iter().map(rat_to_f64).collect();
        if n == 1 {
            return vec![Complex64::new(-coeffs[0], 0.0)];
        }
        let df = f.derivative();
        let bound = 1.0 + coeffs[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let radius = bound.min(2.0 * coeffs[..n].iter().fold(0.0f64, |m, c| m.max(c.abs().powf(1.0 / n as f64))).max(0.5));
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
            .collect();
        for _ in 0..1000 {
            let mut max_step = 0.0f64;
            for i in 0..n {
                let p = f.eval_c64(z[i]);
                let dp = df.eval_c64(z[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
            if max_step < 1e-15 {
                break;
            }
        }
        z
    }
}

fn c_sub(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.coeffs.len().max(b.coeffs.len());
    QPoly::new(
        (0..n)
            .map(|i| {
                let x = a.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero);
                let y = b.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero);
                x - y
            })
            .collect(),
    )
}

fn rat_to_f64(c: &BigRational) -> f64 {
    c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN)
}

/// Cyclotomic polynomial `Phi_n`.
pub fn cyclotomic(n: u64) -> QPoly {
    let mut xn = vec![BigRational::zero(); n as usize + 1];
    xn[0] = -BigRational::one();
    xn[n as usize] = BigRational::one();
    let mut p = QPoly::new(xn);
    for d in crate::numtheory::divisors(n) {
        if d < n {
            p = p.div_rem(&cyclotomic(d)).0;
        }
    }
    p
}

/// Complex number with [`Real`] parts.
#[derive(Debug, Clone)]
pub struct ComplexReal {
    pub re: Real,
    pub im: Real,
}

impl ComplexReal {
    pub fn new(re: Real, im: Real) -> ComplexReal {
        ComplexReal { re, im }
    }

    pub fn from_c64(z: Complex64, prec: u32) -> ComplexReal {
        ComplexReal::new(Real::from_f64(z.re, prec), Real::from_f64(z.im, prec))
    }

    pub fn add(&self, o: &ComplexReal) -> ComplexReal {
        ComplexReal::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &ComplexReal) -> ComplexReal {
        ComplexReal::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &ComplexReal) -> ComplexReal {
        ComplexReal::new(
            &(&self.re * &o.re) - &(&self.im * &o.im),
            &(&self.re * &o.im) + &(&self.im * &o.re),
        )
    }

    pub fn div(&self, o: &ComplexReal) -> ComplexReal {
        let den = &(&o.re * &o.re) + &(&o.im * &o.im);
        ComplexReal::new(
            &(&(&self.re * &o.re) + &(&self.im * &o.im)) / &den,
            &(&(&self.im * &o.re) - &(&self.re * &o.im)) / &den,
        )
    }

    pub fn norm_sqr(&self) -> Real {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

fn eval_complex_real(p: &QPoly, z: &ComplexReal, prec: u32) -> ComplexReal {
    let zero = ComplexReal::new(Real::zero(prec), Real::zero(prec));
    p.coeffs.iter().rev().fold(zero, |acc, c| {
        let v = acc.mul(z);
        ComplexReal::new(&v.re + &Real::from_ratio(c, prec), v.im)
    })
}

/// Newton-polish a simple root of `p` from a double-precision start.
pub fn refine_root(p: &QPoly, start: Complex64, prec: u32) -> ComplexReal {
    let wp = prec + 32;
    let dp = p.derivative();
    let mut z = ComplexReal::from_c64(start, wp);
    for _ in 0..64 {
        let fz = eval_complex_real(p, &z, wp);
        let dz = eval_complex_real(&dp, &z, wp);
        if dz.norm_sqr().is_zero() {
            break;
        }
        let step = fz.div(&dz);
        z = z.sub(&step);
        let size = step.norm_sqr();
        if size.is_zero() || size.magnitude_bits() < -2 * (prec as i64 + 16) {
            break;
        }
    }
    ComplexReal::new(z.re.with_precision(prec), z.im.with_precision(prec))
}

/// Integer content-free version of a rational polynomial (used for display).
pub fn primitive_integer_coeffs(p: &QPoly) -> Vec<BigInt> {
    let lcm = p
        .coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = p.coeffs.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() {
        return ints;
    }
    let sign = if ints.last().is_some_and(|c| c.is_negative()) { -BigInt::one() } else { BigInt::one() };
    ints.into_iter().map(|c| c / &g * &sign).collect()
}
