//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/support/bruteforce.rs"]
mod bruteforce;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use orbitstat::asymptotics::{
    binary_automaton_constants, ca_cesaro, cesaro_exact_fad, elliptic_constants, lambda1_analysis, AngleRelations,
};
use orbitstat::census::{euler_orbit_counts, orbit_counts, prime_counts, CensusOptions, OrbitCensus};
use orbitstat::distribution::{expected_w, expected_w_from, joint_census, w_pmf, WeightedAdditive};
use orbitstat::ldp::{legendre_rate, subset_rate, tail_report, RateFunction};
use orbitstat::numtheory::{divisors, PeriodicSequence};
use orbitstat::sampler::{samples_csv, tv_distance, Sampler};
use orbitstat::systems::{fluctuation_spectrum, validate_dold, Builtin, SigmaSource};
use orbitstat::distribution::DiscreteMeasure;

type Check = Result<String, String>;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, format!("runtime {:.2?} exceeds {limit:?}", start.elapsed()))
}

fn census(b: Builtin, x: u64, opts: CensusOptions) -> OrbitCensus {
    OrbitCensus::from_source(&SigmaSource::Builtin(b), x, 128, opts).expect("census")
}

fn builtins() -> Vec<Builtin> {
    vec![Builtin::FF { q: 2 }, Builtin::E { p: 3, n: 2 }, Builtin::GA, Builtin::GM, Builtin::Periodic(vec![1, 3])]
}

fn c1_constants() -> Check {
    let t = Instant::now();
    let e = elliptic_constants(3, 2, 128).map_err(|e| e.to_string())?;
    ensure(e.b == q(5, 8), format!("elliptic B = {}", e.b))?;
    let gm = Builtin::GM.to_fad().unwrap();
    let sp = fluctuation_spectrum(gm.matrix.as_ref().unwrap(), 128);
    let b = cesaro_exact_fad(&gm, Some(&sp), AngleRelations::Independent, 64, 1e-30, 128).map_err(|e| e.to_string())?;
    ensure(b.exact == Some(q(1058, 781)), format!("GM B = {:?}", b.exact))?;
    let ca = ca_cesaro(2, &PeriodicSequence::from_integers(&[1]).unwrap(), 1e-30, 128).unwrap().value.to_f64();
    ensure((ca - 0.320556).abs() <= 1e-5, format!("ca_cesaro = {ca}"))?;
    let ga = binary_automaton_constants(1, 1, 128).unwrap();
    let a = ga.a.to_f64();
    ensure((a - 0.078859).abs() <= 1e-5, format!("A = {a}"))?;
    let cg = ga.c_over_gamma_b();
    ensure((cg - 0.847382).abs() <= 1e-4, format!("GA C/Gamma(B) = {cg}"))?;
    let ce = e.c_over_gamma_b();
    ensure((ce - 0.502128).abs() <= 1e-4, format!("E C/Gamma(5/8) = {ce}"))?;
    within_time(t, Duration::from_secs(1))?;
    Ok(format!("B_E = 5/8, B_GM = 1058/781, ca = {ca:.6}, A = {a:.6}, C/G(B)_GA = {cg:.6}, C/G(5/8)_E = {ce:.6}"))
}

fn c2_identities() -> Check {
    let t = Instant::now();
    for b in builtins() {
        let sigma = b.sigma_table(40).map_err(|e| e.to_string())?;
        let primes = prime_counts(&sigma).map_err(|e| e.to_string())?;
        ensure(orbit_counts(&sigma).unwrap() == euler_orbit_counts(&primes, 40), format!("Euler product, {}", b.name()))?;
        for n in 1..=40u64 {
            let back: BigUint = divisors(n).into_iter().map(|d| &primes[d as usize - 1] * BigUint::from(d)).sum();
            ensure(back == sigma[n as usize - 1], format!("sigma round trip, {} n = {n}", b.name()))?;
        }
        let c = census(b.clone(), 40, CensusOptions::default());
        let unit = joint_census(&WeightedAdditive::unit(c.prime_table()), 40).unwrap();
        for x in 0..=40 {
            let pmf = w_pmf(&unit, x).unwrap();
            ensure(pmf.masses().into_iter().sum::<BigRational>() == BigRational::one(), format!("PMF sum, {} X = {x}", b.name()))?;
            let ew = expected_w_from(&c, &unit, x).map_err(|e| e.to_string())?;
            ensure(ew.from_counts == ew.from_pmf, format!("E[W], {} X = {x}", b.name()))?;
        }
    }
    within_time(t, Duration::from_secs(30))?;
    Ok(format!("5 builtins, degree 40, zero tolerance ({:.2?})", t.elapsed()))
}

fn c3_bruteforce() -> Check {
    let cases = [
        (Builtin::FF { q: 2 }, bruteforce::sigma_ff(2, 6)),
        (Builtin::E { p: 3, n: 2 }, bruteforce::sigma_elliptic(3, 2, 6)),
    ];
    let mut sizes = Vec::new();
    for (b, sigma) in cases {
        let all = bruteforce::universe(&bruteforce::primes_from_sigma(&sigma), 6);
        let c = census(b.clone(), 6, CensusOptions::default());
        let unit = joint_census(&WeightedAdditive::unit(c.prime_table()), 6).unwrap();
        for x in 0..=6u64 {
            let elems: Vec<_> = all.iter().filter(|e| e.n <= x).collect();
            let n = elems.len() as u64;
            ensure(c.cumulative_total(x).unwrap() == BigUint::from(n), format!("N({x}), {}", b.name()))?;
            let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
            for e in &elems {
                *hist.entry(e.distinct()).or_default() += 1;
            }
            let oracle: Vec<BigRational> = hist.values().map(|&k| q(k as i64, n as i64)).collect();
            ensure(w_pmf(&unit, x).unwrap().masses() == oracle, format!("W-PMF at X = {x}, {}", b.name()))?;
            let mean = q(elems.iter().map(|e| e.distinct()).sum::<u64>() as i64, n as i64);
            ensure(expected_w(&c, x).map_err(|e| e.to_string())?.from_counts == mean, format!("E[W] at X = {x}, {}", b.name()))?;
        }
        sizes.push(format!("N(6) = {} for {}", all.len(), b.name()));
    }
    Ok(sizes.join(", "))
}

fn c4_theorem_a_n() -> Check {
    let t = Instant::now();
    let c = census(Builtin::E { p: 3, n: 2 }, 60, CensusOptions::default());
    within_time(t, Duration::from_secs(10))?;
    let target = elliptic_constants(3, 2, 128).unwrap().c_over_gamma_b();
    let ratio = |x: u64| {
        let n = c.cumulative_total(x).unwrap().to_f64().unwrap();
        n / (4f64.powi(x as i32) * (x as f64).powf(-3.0 / 8.0))
    };
    let (r20, r60) = (ratio(20), ratio(60));
    ensure((r60 - target).abs() < (r20 - target).abs(), format!("ratio(60) = {r60} not closer than ratio(20) = {r20}"))?;
    ensure((r60 - target).abs() < 0.25 * target, format!("ratio(60) = {r60} not within 25% of {target}"))?;
    Ok(format!("ratio(20) = {r20:.5}, ratio(60) = {r60:.5}, C/G(B) = {target:.6}"))
}

fn c5_theorem_a_m() -> Check {
    let t = Instant::now();
    let ff = census(Builtin::FF { q: 2 }, 2048, CensusOptions { totals: false });
    let mut quotients = Vec::new();
    for x in [256u64, 512, 1024] {
        let d = (ff.mertens(2 * x).unwrap() - ff.mertens(x).unwrap()).to_f64() / std::f64::consts::LN_2;
        ensure((0.8..=1.2).contains(&d), format!("FF(2) doubling quotient at X = {x} is {d}"))?;
        quotients.push(format!("{d:.4}"));
    }
    let e = census(Builtin::E { p: 3, n: 2 }, 1024, CensusOptions { totals: false });
    let d = (e.mertens(1024).unwrap() - e.mertens(512).unwrap()).to_f64() / std::f64::consts::LN_2;
    ensure((d - 0.625).abs() <= 0.25 * 0.625, format!("E(3,2) doubling quotient {d}"))?;
    within_time(t, Duration::from_secs(60))?;
    Ok(format!("FF(2) quotients {}, E(3,2) quotient {d:.4} ({:.2?})", quotients.join("/"), t.elapsed()))
}

fn c6_ldp() -> Check {
    let d1 = DiscreteMeasure::point(1.0);
    let mut worst = 0f64;
    for i in 0..50 {
        let x = 0.1 + 4.9 * i as f64 / 49.0;
        let oracle = x * x.ln() - x + 1.0;
        worst = worst.max((legendre_rate(&d1, x, 1e-12).unwrap() - oracle).abs());
    }
    ensure(worst < 1e-8, format!("Legendre vs Poisson deviation {worst}"))?;
    let (lam, r) = (2.0, 1.0 / 3.0);
    let at_min = subset_rate(lam * r, lam, r);
    ensure(at_min.abs() < 1e-8, format!("subset rate at minimizer {at_min}"))?;
    let grid_min = (0..=400).map(|i| subset_rate(i as f64 * 0.005, lam, r)).fold(f64::INFINITY, f64::min);
    ensure(grid_min >= at_min - 1e-12, "subset rate below its minimum".to_string())?;
    let c = census(Builtin::FF { q: 2 }, 60, CensusOptions::default());
    let rows = tail_report(&c, 1.0, &[20, 40, 60], &[1.0], &RateFunction::Poisson).map_err(|e| e.to_string())?;
    ensure(rows.iter().all(|r| r.bound >= r.tail), "Chebyshev bound below an exact tail".to_string())?;
    let norm: Vec<f64> = rows.iter().map(|r| r.normalized).collect();
    let i2 = 2.0 * std::f64::consts::LN_2 - 1.0;
    let moving = norm.windows(2).all(|w| (w[1] - i2).abs() < (w[0] - i2).abs());
    ensure(moving, format!("normalized exponents {norm:?} do not move toward {i2}"))?;
    Ok(format!("max |I - Poisson| = {worst:.1e}; normalized tail {:.4} -> {:.4} -> {:.4} toward {i2:.4}", norm[0], norm[1], norm[2]))
}

fn c7_lambda_one() -> Check {
    let tab: Vec<BigUint> = (0..40).map(|i| BigUint::from([1u32, 3][i % 2])).collect();
    let rep = lambda1_analysis(&tab).map_err(|e| e.to_string())?;
    let psum: BigUint = rep.primes.iter().sum();
    ensure(rep.b == 2 && psum == BigUint::from(2u32) && rep.leading == q(1, 4), format!("{rep:?}"))?;
    let c = census(Builtin::Periodic(vec![1, 3]), 400, CensusOptions::default());
    let ratio = c.cumulative_total(400).unwrap().to_f64().unwrap() / 160_000.0;
    ensure((ratio - 0.25).abs() <= 0.05 * 0.25, format!("N(400)/400^2 = {ratio}"))?;
    Ok(format!("B = 2, sum P = 2, leading 1/4, N(400)/400^2 = {ratio:.5}"))
}

fn c8_sampler() -> Check {
    let c = census(Builtin::FF { q: 2 }, 20, CensusOptions::default());
    let pmf = w_pmf(&joint_census(&WeightedAdditive::unit(c.prime_table()), 20).unwrap(), 20).unwrap();
    let s = Sampler::new(&c, 20).unwrap();
    let a = s.sample_many(8, 100_000, 4);
    let tv = tv_distance(&a, &pmf);
    ensure(tv < 0.02, format!("TV distance {tv}"))?;
    let b = s.sample_many(8, 100_000, 1);
    ensure(samples_csv(&a) == samples_csv(&b), "reruns differ".to_string())?;
    Ok(format!("TV = {tv:.5} at X = 20 with 1e5 samples; rerun byte-identical"))
}

fn c9_validation() -> Check {
    for b in builtins().into_iter().chain([Builtin::FF { q: 3 }, Builtin::E { p: 5, n: 7 }, Builtin::Periodic(vec![0, 2])]) {
        let rep = validate_dold(&b.sigma_table(200).unwrap());
        ensure(rep.ok && rep.checked == 200, format!("{} rejected: {:?}", b.name(), rep.first_failure))?;
    }
    let rep = validate_dold(&[1u32, 1, 2].map(BigUint::from));
    ensure(rep.first_failure.as_ref().map(|f| f.ell) == Some(3), format!("{rep:?}"))?;
    let out = Command::new(env!("CARGO_BIN_EXE_orbitstat"))
        .args(["validate", "--system", "table:[1,1,2]"])
        .output()
        .map_err(|e| e.to_string())?;
    let err = String::from_utf8_lossy(&out.stderr);
    ensure(out.status.code() == Some(2) && err.contains("ℓ = 3"), format!("CLI exit {:?}: {err}", out.status.code()))?;
    Ok("builtins accepted to X = 200; (1,1,2) rejected at ℓ = 3 with exit code 2".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("constant regression", c1_constants),
        ("exact identities", c2_identities),
        ("brute-force oracle", c3_bruteforce),
        ("N(X) asymptotics", c4_theorem_a_n),
        ("Mertens asymptotics", c5_theorem_a_m),
        ("LDP machinery", c6_ldp),
        ("Lambda = 1 branch", c7_lambda_one),
        ("sampler calibration", c8_sampler),
        ("validation", c9_validation),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} [{:.2?}]", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why} [{:.2?}]", i + 1, t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
