//! Exactly uniform sampling of general orbits by length profile.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::census::{mul_euler_factor, OrbitCensus};
use crate::distribution::{binomial, Pmf};
use crate::error::{Error, Result};

/// Samples per RNG stream.
pub const STREAM_CHUNK: u64 = 1024;

/// Copies and distinct primes used at one length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LengthProfile {
    pub ell: u64,
    pub copies: u64,
    pub distinct: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitSample {
    pub n: u64,
    /// Lengths with at least one copy, in increasing order.
    pub profile: Vec<LengthProfile>,
}

impl OrbitSample {
    pub fn w(&self) -> u64 {
        self.profile.iter().map(|p| p.distinct).sum()
    }

    pub fn csv_row(&self) -> String {
        let parts: Vec<String> = self.profile.iter().map(|p| format!("[{},{},{}]", p.ell, p.copies, p.distinct)).collect();
        format!("{},{},\"[{}]\"", self.n, self.w(), parts.join(","))
    }
}

/// Index `i` with `Σ_{j<i} w_j <= u < Σ_{j<=i} w_j`.
fn pick(u: &BigUint, weights: impl Iterator<Item = BigUint>) -> usize {
    let mut acc = BigUint::zero();
    for (i, w) in weights.enumerate() {
        acc += w;
        if *u < acc {
            return i;
        }
    }
    unreachable!("uniform variate below the total weight")
}

/// Number of distinct types in a uniform size-`k` multiset over `p` types.
pub fn distinct_parts<R: Rng>(p: &BigUint, k: u64, rng: &mut R) -> u64 {
    assert!(!p.is_zero() && k >= 1, "distinct_parts needs P >= 1 and k >= 1");
    if k == 1 || p == &BigUint::from(1u32) {
        return 1;
    }
    let total = binomial(&(p + BigUint::from(k - 1)), k);
    let u = rng.gen_biguint_below(&total);
    let km1 = BigUint::from(k - 1);
    1 + pick(&u, (1..=k).map(|d| binomial(p, d) * binomial(&km1, d - 1))) as u64
}

/// Precomputed completion counts for uniform sampling from `𝒩(X)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    x: u64,
    primes: Vec<BigUint>,
    /// `prefix[ℓ][m]`: orbits of length `m` built from lengths `<= ℓ`.
    prefix: Vec<Vec<BigUint>>,
    total: BigUint,
}

impl Sampler {
    pub fn new(census: &OrbitCensus, x: u64) -> Result<Sampler> {
        if x > census.x_max() {
            return Err(Error::OutOfRange { requested: x, available: census.x_max() });
        }
        let xs = x as usize;
        let primes = census.prime_table()[..xs].to_vec();
        let mut prefix = Vec::with_capacity(xs + 1);
        let mut series = vec![BigUint::zero(); xs + 1];
        series[0] = BigUint::from(1u32);
        prefix.push(series.clone());
        for (i, p) in primes.iter().enumerate() {
            mul_euler_factor(&mut series, i + 1, p);
            prefix.push(series.clone());
        }
        let total = series.iter().sum();
        Ok(Sampler { x, primes, prefix, total })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    /// `N(X)`.
    pub fn population(&self) -> &BigUint {
        &self.total
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> OrbitSample {
        let xs = self.x as usize;
        let full = &self.prefix[xs];
        let n = pick(&rng.gen_biguint_below(&self.total), full.iter().cloned());
        let mut rem = n;
        let mut profile = Vec::new();
        for ell in (1..=xs).rev() {
            if rem == 0 {
                break;
            }
            let p = &self.primes[ell - 1];
            if p.is_zero() {
                continue;
            }
            let lower = &self.prefix[ell - 1];
            let u = rng.gen_biguint_below(&self.prefix[ell][rem]);
            let weights = (0..=rem / ell).map(|k| {
                // C(P + k - 1, k) multisets of k primes of length ℓ
                binomial(&(p + BigUint::from(k as u64) - BigUint::from(1u32)), k as u64) * &lower[rem - k * ell]
            });
            let k = pick(&u, weights);
            if k > 0 {
                let d = distinct_parts(p, k as u64, rng);
                profile.push(LengthProfile { ell: ell as u64, copies: k as u64, distinct: d });
                rem -= k * ell;
            }
        }
        profile.reverse();
        OrbitSample { n: n as u64, profile }
    }

    /// `count` samples from stream `stream` of `seed`.
    pub fn sample_stream(&self, seed: u64, stream: u64, count: u64) -> Vec<OrbitSample> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    /// `samples` draws split into streams of `STREAM_CHUNK`; the result does
    /// not depend on `threads`.
    pub fn sample_many(&self, seed: u64, samples: u64, threads: usize) -> Vec<OrbitSample> {
        let streams = samples.div_ceil(STREAM_CHUNK);
        let threads = threads.max(1) as u64;
        let mut chunks: Vec<(u64, Vec<OrbitSample>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    scope.spawn(move || {
                        (t..streams)
                            .step_by(threads as usize)
                            .map(|s| {
                                let count = STREAM_CHUNK.min(samples - s * STREAM_CHUNK);
                                (s, self.sample_stream(seed, s, count))
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("sampler thread")).collect()
        });
        chunks.sort_by_key(|c| c.0);
        chunks.into_iter().flat_map(|c| c.1).collect()
    }
}

pub fn samples_csv(samples: &[OrbitSample]) -> String {
    let mut out = String::from("n,W,profile\n");
    for s in samples {
        writeln!(out, "{}", s.csv_row()).expect("write to string");
    }
    out
}

/// Empirical frequencies of `W`.
pub fn w_histogram(samples: &[OrbitSample]) -> BTreeMap<u64, u64> {
    let mut h = BTreeMap::new();
    for s in samples {
        *h.entry(s.w()).or_insert(0) += 1;
    }
    h
}

/// Total-variation distance between the empirical `W` distribution and an exact PMF.
pub fn tv_distance(samples: &[OrbitSample], pmf: &Pmf) -> f64 {
    let hist = w_histogram(samples);
    let n = samples.len() as f64;
    let mut keys: Vec<u64> = hist.keys().copied().collect();
    for v in &pmf.values {
        if let Some(k) = v.to_integer().to_u64() {
            keys.push(k);
        }
    }
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|&k| {
            let emp = *hist.get(&k).unwrap_or(&0) as f64 / n;
            let exact = pmf.mass(&BigRational::from_integer(k.into()));
            (emp - crate::real::Real::from_ratio(&exact, 64).to_f64()).abs()
        })
        .sum::<f64>()
}

pub const WILSON_Z: f64 = 1.959964;

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval at `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Monte Carlo `P[W >= threshold]` with a 95% Wilson interval.
pub fn monte_carlo_tail(sampler: &Sampler, threshold: u64, samples: u64, seed: u64, threads: usize) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let draws = sampler.sample_many(seed, samples, threads);
    let hits = draws.iter().filter(|s| s.w() >= threshold).count() as u64;
    let (lo, hi) = wilson_interval(hits, samples, WILSON_Z);
    Ok(TailEstimate { hits, samples, estimate: hits as f64 / samples as f64, lo, hi })
}
