//! Discrete multilinear averaging operators over balls, `k`-spheres, annuli and
//! prime spheres, with exact verification of the pointwise slicing
//! dominations and the Dirac-delta sharpness experiments.

pub mod arith;
pub mod error;
pub mod lattice;
pub mod operators;
pub mod primes;
pub mod sharpness;
pub mod slicing;

pub use arith::{Radical, Rational, Value};
pub use error::{Error, Result};
pub use lattice::{Family, LatticePoint, SurfaceSpec};
pub use primes::Progression;
