//! Weighted sampling with and without replacement, Polya urns, the coupling
//! constructions that compare them, exact small-instance oracles for
//! stochastic orders, and the associated concentration bounds.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix it to `f64`, which is what the CLI uses.

pub mod bounds;
pub mod coupling;
pub mod distribution;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod population;
pub mod rng;
pub mod samplers;
pub mod scalar;

pub use distribution::{Atom, FiniteDistribution};
pub use error::{Error, Result};
pub use population::{Item, Population, PopulationStats};
pub use rng::RngStreamSpec;
pub use scalar::Scalar;

pub type Population64 = Population<f64>;
pub type Population32 = Population<f32>;
pub type Distribution64 = FiniteDistribution<f64>;
pub type Distribution32 = FiniteDistribution<f32>;
pub type PopulationStats64 = PopulationStats<f64>;
pub type ScreeningRecord64 = coupling::ScreeningRecord<f64>;
pub type UrnTrace64 = coupling::UrnTrace<f64>;
pub type EntropyDiagnostics64 = bounds::EntropyDiagnostics<f64>;



