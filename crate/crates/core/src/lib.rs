//! Orbit statistics for dynamical systems with prescribed periodic point counts.

pub mod asymptotics;
pub mod census;
pub mod distribution;
pub mod error;
pub mod ldp;
pub mod numtheory;
pub mod poly;
pub mod real;
pub mod sampler;
pub mod systems;

pub use error::{Error, Result};
pub use real::Real;
