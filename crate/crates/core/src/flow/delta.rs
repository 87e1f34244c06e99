use serde::{Deserialize, Serialize};

use super::constants::self_convolve;
use super::sample::{sample_flow, FlowSetup};
use super::vector::cubic_chain;
use crate::error::{Error, Result};
use crate::parallel::map_samples;
use crate::stats::Estimate;
use crate::torus::kernels;

/// Energy constant `delta_T(lambda)` assembled from four expectations:
///
/// `delta = -lambda^2/2 E||W<3>||_H^2 + lambda^3/2 E mean(W2_T W[3]_T^2)
///          - lambda^3 gamma_T E mean(W_T W[3]_T) - 4 lambda^4 E mean(W_T W[3]_T^3)`.
///
/// The first expectation is an exact mode sum; the others are Monte Carlo
/// means whose per-sample values are kept so the error bar can be formed
/// for any coupling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub lambda: f64,
    pub gamma_t: f64,
    /// `E ||W<3>||_H^2` by exact mode sum.
    pub angle_energy_exact: f64,
    /// Same quantity by Monte Carlo.
    pub angle_energy_mc: Estimate,
    pub b: Estimate,
    pub c: Estimate,
    pub d: Estimate,
    pub value: f64,
    pub se: f64,
    samples_b: Vec<f64>,
    samples_c: Vec<f64>,
    samples_d: Vec<f64>,
}

impl DeltaEstimate {
    /// Re-evaluates the constant at another coupling using the same ensemble.
    pub fn at(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.lambda = lambda;
        let l2 = lambda * lambda;
        let l3 = l2 * lambda;
        let l4 = l3 * lambda;
        let per: Vec<f64> = (0..self.samples_b.len())
            .map(|i| 0.5 * l3 * self.samples_b[i] - l3 * self.gamma_t * self.samples_c[i] - 4.0 * l4 * self.samples_d[i])
            .collect();
        let e = Estimate::from_samples(&per);
        out.value = -0.5 * l2 * self.angle_energy_exact + e.value;
        out.se = e.se;
        out
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            se: self.se,
            n: self.samples_b.len(),
        }
    }
}

/// `E sum_k h_k mean((Jc_k 4 [[W_k^3]])^2)` as an exact mode sum.
pub fn angle_energy_exact(setup: &FlowSetup) -> f64 {
    let g = setup.grid();
    let vol = g.volume();
    let mut total = 0.0;
    for k in 0..setup.cells() {
        let t = setup.time().knot(k);
        let a: Vec<f64> = (0..g.len())
            .map(|i| kernels::rho_t(t, g.abs_mode(i)).powi(2) / g.bracket(i).powi(2))
            .collect();
        let conv = self_convolve(g, &a, 3);
        let jk = setup.jcell(k);
        let s: f64 = (0..g.len()).map(|i| jk[i] * jk[i] * conv[i]).sum();
        total += setup.time().width(k) * 96.0 * s / (vol * vol * vol);
    }
    total
}

pub fn delta_constant(setup: &FlowSetup, lambda: f64, samples: usize, seed: u64, workers: usize) -> Result<DeltaEstimate> {
    if samples < 10 {
        return Err(Error::Invalid(format!("delta ensemble of {samples} samples is too small (need >= 10)")));
    }
    let rows = map_samples(samples, workers, |i| {
        let path = sample_flow(setup, seed, i as u64);
        let (a, wt, w2t, bt) = cubic_chain(setup, &path);
        let bt2 = bt.mul(&bt);
        (a, w2t.dot(&bt2), wt.dot(&bt), wt.mul(&bt).dot(&bt2))
    });
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let c: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let base = DeltaEstimate {
        lambda,
        gamma_t: setup.gamma(setup.cells()),
        angle_energy_exact: angle_energy_exact(setup),
        angle_energy_mc: Estimate::from_samples(&a),
        b: Estimate::from_samples(&b),
        c: Estimate::from_samples(&c),
        d: Estimate::from_samples(&d),
        value: 0.0,
        se: 0.0,
        samples_b: b,
        samples_c: c,
        samples_d: d,
    };
    Ok(base.at(lambda))
}
