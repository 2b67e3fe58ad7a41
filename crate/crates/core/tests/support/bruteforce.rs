//! Exhaustive enumeration of multisets of labelled prime orbits.
#![allow(dead_code)]

/// `σ_k` for the finite-field shift, `q^k`.
pub fn sigma_ff(q: u128, x: usize) -> Vec<u128> {
    (1..=x as u32).map(|k| q.pow(k)).collect()
}

/// `σ_k = (n^k - 1)^2 |n^k - 1|_p` for an ordinary elliptic curve.
pub fn sigma_elliptic(p: u128, n: u128, x: usize) -> Vec<u128> {
    (1..=x as u32)
        .map(|k| {
            let m = n.pow(k) - 1;
            let mut r = m * m;
            let mut t = m;
            while t % p == 0 {
                t /= p;
                r /= p;
            }
            r
        })
        .collect()
}

fn mu(mut n: u64) -> i128 {
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// `P_ℓ = (1/ℓ) Σ_{d|ℓ} μ(ℓ/d) σ_d`.
pub fn primes_from_sigma(sigma: &[u128]) -> Vec<u128> {
    (1..=sigma.len() as u64)
        .map(|l| {
            let s: i128 = (1..=l).filter(|d| l % d == 0).map(|d| mu(l / d) * sigma[d as usize - 1] as i128).sum();
            assert!(s >= 0 && s % l as i128 == 0);
            (s / l as i128) as u128
        })
        .collect()
}

/// One general orbit: `(length, multiplicity)` for each prime orbit used.
#[derive(Debug, Clone)]
pub struct Element {
    pub n: u64,
    pub parts: Vec<(u64, u64)>,
}

impl Element {
    pub fn distinct(&self) -> u64 {
        self.parts.len() as u64
    }

    /// `(ℓ, copies, distinct)` per length.
    pub fn profile(&self) -> Vec<(u64, u64, u64)> {
        let mut out: Vec<(u64, u64, u64)> = Vec::new();
        for &(l, m) in &self.parts {
            match out.iter_mut().find(|e| e.0 == l) {
                Some(e) => {
                    e.1 += m;
                    e.2 += 1;
                }
                None => out.push((l, m, 1)),
            }
        }
        out.sort();
        out
    }
}

/// All multisets of total length at most `x`.
pub fn universe(primes: &[u128], x: u64) -> Vec<Element> {
    let labels: Vec<u64> = primes
        .iter()
        .enumerate()
        .take(x as usize)
        .flat_map(|(i, &c)| std::iter::repeat_n(i as u64 + 1, c as usize))
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    walk(&labels, 0, x, 0, &mut chosen, &mut out);
    out
}

fn walk(labels: &[u64], i: usize, room: u64, used: u64, chosen: &mut Vec<(u64, u64)>, out: &mut Vec<Element>) {
    if i == labels.len() {
        out.push(Element { n: used, parts: chosen.clone() });
        return;
    }
    let l = labels[i];
    if l > room {
        // Labels are sorted by length: nothing later fits.
        out.push(Element { n: used, parts: chosen.clone() });
        return;
    }
    walk(labels, i + 1, room, used, chosen, out);
    let mut m = 1;
    while m * l <= room {
        chosen.push((l, m));
        walk(labels, i + 1, room - m * l, used + m * l, chosen, out);
        chosen.pop();
        m += 1;
    }
}
