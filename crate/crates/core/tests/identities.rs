use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use orbitstat::census::{euler_orbit_counts, orbit_counts, prime_counts, CensusOptions, OrbitCensus};
use orbitstat::distribution::{expected_w_from, joint_census, w_pmf, WeightedAdditive};
use orbitstat::numtheory::divisors;
use orbitstat::systems::{Builtin, SigmaSource};

fn builtins() -> Vec<Builtin> {
    vec![
        Builtin::FF { q: 2 },
        Builtin::FF { q: 7 },
        Builtin::E { p: 3, n: 2 },
        Builtin::E { p: 5, n: 7 },
        Builtin::E { p: 3, n: 3 },
        Builtin::GA,
        Builtin::GM,
        Builtin::Periodic(vec![1, 3]),
        Builtin::Periodic(vec![0, 2]),
    ]
}

#[test]
fn euler_product_equals_recurrence() {
    for b in builtins() {
        let sigma = b.sigma_table(40).unwrap();
        let primes = prime_counts(&sigma).unwrap();
        assert_eq!(orbit_counts(&sigma).unwrap(), euler_orbit_counts(&primes, 40), "{}", b.name());
    }
}

#[test]
fn sigma_round_trip() {
    for b in builtins() {
        let sigma = b.sigma_table(60).unwrap();
        let primes = prime_counts(&sigma).unwrap();
        for n in 1..=60u64 {
            let back: BigUint = divisors(n).into_iter().map(|d| &primes[d as usize - 1] * BigUint::from(d)).sum();
            assert_eq!(back, sigma[n as usize - 1], "{} at n = {n}", b.name());
        }
    }
}

#[test]
fn pmf_and_expectation_identities() {
    for b in builtins() {
        let census = OrbitCensus::from_source(&SigmaSource::Builtin(b.clone()), 40, 64, CensusOptions::default()).unwrap();
        let unit = joint_census(&WeightedAdditive::unit(census.prime_table()), 40).unwrap();
        unit.verify_marginals(&census).unwrap();
        for x in 0..=40 {
            let pmf = w_pmf(&unit, x).unwrap();
            assert_eq!(pmf.masses().into_iter().sum::<BigRational>(), BigRational::one());
            let ew = expected_w_from(&census, &unit, x).unwrap();
            assert_eq!(ew.from_counts, ew.from_pmf);
        }
    }
}
