use std::sync::Arc;

use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};

use super::constants::{c_constant, gamma_cell_rates};
use super::rng::cell_rng;
use crate::error::{Error, Result};
use crate::torus::{kernels, SpectralField, TimeGrid};
use crate::{Grid, Partition, Spectrum};

/// Per-configuration tables shared by every sample: increment variances,
/// cell multipliers, low-pass symbols and the renormalisation constants.
///
/// The flow is advanced cell by cell. On cell `k` the field receives an
/// independent Gaussian increment with mode variance
/// `(rho_{t_{k+1}}^2 - rho_{t_k}^2) / (|Lambda| <n>^2)`, so `W_{t_k}` has the
/// exact marginal law at every knot. A drift that is constant on the cell
/// enters through the cell multiplier
/// `Jc_k(n) = sqrt((rho_{t_{k+1}}^2 - rho_{t_k}^2) / h_k) / <n>`.
#[derive(Debug)]
pub struct FlowSetup {
    grid: Arc<Grid>,
    partition: Partition,
    time: TimeGrid,
    c: Vec<f64>,
    inc_std: Vec<Vec<f64>>,
    jcell: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    gamma: Vec<f64>,
    gamma_cell: Vec<f64>,
}

impl FlowSetup {
    pub fn new(grid: &Arc<Grid>, time: TimeGrid) -> Result<Self> {
        let with_gamma = grid.dim() == 3;
        Self::build(grid, time, with_gamma)
    }

    /// Same as [`FlowSetup::new`] but never computes `gamma` (it stays zero).
    pub fn without_gamma(grid: &Arc<Grid>, time: TimeGrid) -> Result<Self> {
        Self::build(grid, time, false)
    }

    fn build(grid: &Arc<Grid>, time: TimeGrid, with_gamma: bool) -> Result<Self> {
        let t_end = time.end();
        let bound = (grid.dim() as f64).sqrt() * grid.points() as f64 / grid.scale();
        if t_end > bound * (1.0 + 1e-12) {
            return Err(Error::Invalid(format!(
                "T = {t_end} exceeds the grid cutoff bound {bound}; the lattice would be the only regulator"
            )));
        }
        let vol = grid.volume();
        let knots = time.knots();
        let rho_sq: Vec<Vec<f64>> = knots
            .iter()
            .map(|&t| grid.radial_symbol(|a| kernels::rho_t(t, a).powi(2)))
            .collect();
        let mut inc_std = Vec::with_capacity(time.cells());
        let mut jcell = Vec::with_capacity(time.cells());
        for k in 0..time.cells() {
            let h = time.width(k);
            let mut s = Vec::with_capacity(grid.len());
            let mut j = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                let dv = rho_sq[k + 1][i] - rho_sq[k][i];
                if dv < -1e-15 {
                    return Err(Error::Numerical(format!("negative variance increment {dv} at cell {k}")));
                }
                let dv = dv.max(0.0);
                let b = grid.bracket(i);
                s.push((dv / vol).sqrt() / b);
                j.push((dv / h).sqrt() / b);
            }
            inc_std.push(s);
            jcell.push(j);
        }
        let theta = knots.iter().map(|&t| crate::torus::theta_symbol(grid, t)).collect();
        let c = knots.iter().map(|&t| c_constant(grid, t)).collect();
        let gamma_cell = if with_gamma {
            gamma_cell_rates(grid, knots, &jcell)
        } else {
            vec![0.0; time.cells()]
        };
        let mut gamma = Vec::with_capacity(knots.len());
        gamma.push(0.0);
        for k in 0..time.cells() {
            gamma.push(gamma[k] + time.width(k) * gamma_cell[k]);
        }
        Ok(Self {
            grid: grid.clone(),
            partition: Partition::new(grid),
            time,
            c,
            inc_std,
            jcell,
            theta,
            gamma,
            gamma_cell,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn cells(&self) -> usize {
        self.time.cells()
    }

    /// Wick constant `c_{t_k}`.
    pub fn c(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn c_table(&self) -> &[f64] {
        &self.c
    }

    /// Cell multiplier `Jc_k`.
    pub fn jcell(&self, k: usize) -> &[f64] {
        &self.jcell[k]
    }

    /// Standard deviation of the mode increment on cell `k`.
    pub fn increment_std(&self, k: usize) -> &[f64] {
        &self.inc_std[k]
    }

    /// Low-pass symbol `theta_{t_k}`.
    pub fn theta(&self, k: usize) -> &[f64] {
        &self.theta[k]
    }

    /// Time-discretised `gamma_{t_k}` (non-negative, non-decreasing), the
    /// counterterm matching the cell scheme; see [`super::gamma_cell_rates`].
    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma[k]
    }

    pub fn gamma_table(&self) -> &[f64] {
        &self.gamma
    }

    /// Cell rate `(gamma_{k+1} - gamma_k) / h_k`.
    pub fn gamma_cell(&self, k: usize) -> f64 {
        self.gamma_cell[k]
    }

    /// Exact variance of `W_T(n)` at the final knot.
    pub fn terminal_variance(&self, i: usize) -> f64 {
        let t = self.time.end();
        let r = kernels::rho_t(t, self.grid.abs_mode(i));
        let b = self.grid.bracket(i);
        r * r / (self.grid.volume() * b * b)
    }
}

/// One realisation of the flow: `W_{t_k}` in Fourier space at every knot.
#[derive(Clone, Debug)]
pub struct FlowPath {
    pub w: Vec<Spectrum>,
    pub seed: u64,
    pub stream: u64,
}

impl FlowPath {
    pub fn terminal(&self) -> &Spectrum {
        self.w.last().unwrap()
    }
}

fn add_increment(setup: &FlowSetup, k: usize, seed: u64, stream: u64, acc: &mut [Complex<f64>]) {
    let g = &setup.grid;
    let std = &setup.inc_std[k];
    let mut rng = cell_rng(seed, stream, k as u64);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..g.len() {
        let s = std[i];
        if s == 0.0 {
            continue;
        }
        let j = g.neg_index(i);
        if j == i {
            let a: f64 = StandardNormal.sample(&mut rng);
            acc[i].re += s * a;
        } else if i < j {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let re = s * a * inv_sqrt2;
            let im = s * b * inv_sqrt2;
            acc[i] += Complex::new(re, im);
            acc[j] += Complex::new(re, -im);
        }
    }
}

/// Samples the whole path; deterministic in `(seed, stream)`.
pub fn sample_flow(setup: &FlowSetup, seed: u64, stream: u64) -> FlowPath {
    let g = &setup.grid;
    let mut acc = vec![Complex::new(0.0, 0.0); g.len()];
    let mut w = Vec::with_capacity(setup.cells() + 1);
    w.push(SpectralField::zeros(g));
    for k in 0..setup.cells() {
        add_increment(setup, k, seed, stream, &mut acc);
        w.push(SpectralField::from_coeffs(g, acc.clone()).expect("shape"));
    }
    FlowPath { w, seed, stream }
}

/// Samples only `W_T`; bit-identical to the last knot of [`sample_flow`].
pub fn sample_terminal(setup: &FlowSetup, seed: u64, stream: u64) -> Spectrum {
    let g = &setup.grid;
    let mut acc = vec![Complex::new(0.0, 0.0); g.len()];
    for k in 0..setup.cells() {
        add_increment(setup, k, seed, stream, &mut acc);
    }
    SpectralField::from_coeffs(g, acc).expect("shape")
}
