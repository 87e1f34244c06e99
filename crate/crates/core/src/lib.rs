//! Lattice-torus laboratory for the stochastic-control construction of the
//! Φ⁴ measure in two and three dimensions.
//!
//! The spectral and paraproduct layers are generic over [`Scalar`]; the Monte
//! Carlo layers work in `f64` and use the aliases below.

pub mod checks;
pub mod error;
pub mod flow;
pub mod oracle;
pub mod parallel;
pub mod stats;
pub mod paracalc;
pub mod scalar;
pub mod torus;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid = torus::TorusGrid<f64>;
pub type Field = torus::RealField<f64>;
pub type Spectrum = torus::SpectralField<f64>;
pub type Partition = paracalc::DyadicPartition<f64>;
