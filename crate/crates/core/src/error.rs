use thiserror::Error;

/// Errors surfaced by the orbitstat kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("order undefined: {p} divides {n}")]
    OrderUndefined { n: u64, p: u64 },

    #[error("odd primes only (got p = {0})")]
    OddPrimeOnly(u64),

    #[error("non-integral value in gcd-sequence window at index {0}")]
    NonIntegral(u64),

    #[error("non-realizable parameters at k = {0}")]
    NonRealizable(u64),

    #[error("non-integral or negative prime orbit count at length {0}")]
    InvalidPrimeCount(u64),

    #[error("non-integral N_n at n = {0}")]
    NonIntegralOrbitCount(u64),

    #[error("length {requested} is beyond the computed range {available}")]
    OutOfRange { requested: u64, available: u64 },

    #[error("no prime orbits in range")]
    NoPrimeOrbits,

    #[error("sigma table too short: need at least {needed} entries, have {have}")]
    TableTooShort { needed: usize, have: usize },

    #[error("eigenvalue is a root of unity (angle {0}); fold the periodic factor into r_k or the matrix")]
    RootOfUnity(String),

    #[error("truncation tail bound {bound:e} exceeds tolerance {tol:e}; increase j_max")]
    TailTooLarge { bound: f64, tol: f64 },

    #[error("{0} is not coprime to p = {1}")]
    NotCoprime(u64, u64),

    #[error("irrational-zeta Lambda=1 case unsupported: table is not periodic")]
    NotPeriodic,

    #[error("Cesaro mean must be positive (got {0})")]
    NonPositiveMean(String),

    #[error("no meaningful large deviation principle: {0}")]
    NoMeaningfulLdp(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed system spec: {0}")]
    MalformedSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
