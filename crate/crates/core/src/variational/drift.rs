use crate::flow::FlowSetup;
use crate::torus::SpectralField;
use crate::{Field, Spectrum};

/// A drift, constant on each time cell.
#[derive(Clone, Debug)]
pub struct DriftPath {
    /// Value on cell `k`.
    pub u: Vec<Field>,
    /// Set when each `u_k` was computed from information up to `t_k` only.
    pub adapted: bool,
}

impl DriftPath {
    pub fn zero(setup: &FlowSetup) -> Self {
        Self {
            u: vec![Field::zeros(setup.grid()); setup.cells()],
            adapted: true,
        }
    }

    /// `||u||_H^2 = sum_k h_k mean(u_k^2)`.
    pub fn h_norm_sq(&self, setup: &FlowSetup) -> f64 {
        h_norm_sq(setup, &self.u)
    }
}

pub(crate) fn h_norm_sq(setup: &FlowSetup, v: &[Field]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(k, f)| setup.time().width(k) * f.dot(f))
        .sum()
}

/// `I_{t_k}(v) = sum_{j<k} h_j Jc_j v_j` in Fourier space.
pub fn integrate_drift_spectral(setup: &FlowSetup, v: &[Field], k: usize) -> Spectrum {
    let mut acc = SpectralField::zeros(setup.grid());
    for (j, vj) in v.iter().enumerate().take(k) {
        let c = vj.forward().apply(setup.jcell(j)).expect("even symbol");
        acc.axpy(setup.time().width(j), &c);
    }
    acc
}

/// `I_{t_k}(v)` on the grid.
pub fn integrate_drift(setup: &FlowSetup, v: &DriftPath, k: usize) -> Field {
    integrate_drift_spectral(setup, &v.u, k).inverse()
}
