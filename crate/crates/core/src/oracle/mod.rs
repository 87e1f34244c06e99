//! Independent estimates of the partition function and free energy.

mod mc;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::stats::Estimate;

pub use mc::{jensen_bound, mc_free_energy_difference, mc_partition, potential_variance, McOptions};
pub use quadrature::{adaptive_simpson, gauss_hermite, quadrature_partition, MAX_QUADRATURE_DOF};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    Mc,
    McControlVariate,
    Quadrature,
    Jensen,
}

/// `free_energy = -log_z / |Lambda|`; `se` refers to the free energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub log_z: f64,
    pub free_energy: f64,
    pub se: f64,
    pub method: OracleMethod,
    pub n_samples: usize,
    /// Quadrature: change of the free energy under the last node doubling.
    pub truncation: Option<f64>,
    /// Monte Carlo: jackknife standard error of the free energy.
    pub jackknife_se: Option<f64>,
}

impl OracleResult {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.free_energy, se: self.se, n: self.n_samples }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub variational: Estimate,
    pub oracle_free_energy: f64,
    pub oracle_method: OracleMethod,
    /// `variational - oracle`.
    pub gap: f64,
    pub se: f64,
    /// `gap >= -3 se`.
    pub pass: bool,
}

pub fn compare_report(variational: &Estimate, oracle: &OracleResult) -> CompareReport {
    let gap = variational.value - oracle.free_energy;
    let se = variational.se.hypot(oracle.se);
    CompareReport {
        variational: *variational,
        oracle_free_energy: oracle.free_energy,
        oracle_method: oracle.method,
        gap,
        se,
        pass: gap >= -3.0 * se,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_pass_with_zero_gap() {
        let o = OracleResult {
            log_z: -0.5,
            free_energy: 0.25,
            se: 0.01,
            method: OracleMethod::Mc,
            n_samples: 100,
            truncation: None,
            jackknife_se: None,
        };
        let r = compare_report(&o.estimate(), &o);
        assert_eq!(r.gap, 0.0);
        assert!(r.pass);
    }
}
