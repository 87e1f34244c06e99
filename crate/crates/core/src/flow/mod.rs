//! Scale-flow Gaussian field, Wick powers, renormalisation constants and the
//! stochastic vector.

pub(crate) mod constants;
mod delta;
pub mod rng;
mod sample;
mod vector;
mod wick;

pub use constants::{c_constant, gamma, gamma_cell_rates, gamma_dot, gamma_table, romberg, GAMMA_RTOL};
pub use delta::{delta_constant, DeltaEstimate};
pub use sample::{sample_flow, sample_terminal, FlowPath, FlowSetup};
pub use vector::{build_stochastic_vector, StochasticVector};
pub use wick::{wick_cube, wick_fourth, wick_square};
