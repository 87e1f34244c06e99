//! Machine-precision identity suites shared by the command line and the
//! acceptance target.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::{build_stochastic_vector, romberg, sample_flow, FlowSetup};
use crate::paracalc::DyadicPartition;
use crate::torus::{kernels, make_grid, SpectralField, TimeGrid};
use crate::variational::{controlled_decompose, integrate_drift_spectral, DriftPath};
use crate::Field;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `value <= tolerance`, except for orders where `value >= tolerance`.
    pub pass: bool,
}

impl SuiteResult {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value >= tolerance }
    }
}

fn random_field(grid: &std::sync::Arc<crate::Grid>, rng: &mut ChaCha8Rng) -> Field {
    let v = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(grid, v).expect("length matches grid")
}

/// `sup |f g - (f < g + f > g + f o g)| / sup |f g|` on random fields.
pub fn bony_residual(grid: &std::sync::Arc<crate::Grid>, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = DyadicPartition::new(grid);
    let f = random_field(grid, &mut rng);
    let g = random_field(grid, &mut rng);
    let prod = f.mul(&g);
    let sum = p.para_lt(&f, &g)?.add(&p.para_gt(&f, &g)?).add(&p.resonant(&f, &g)?);
    Ok(sum.sub(&prod).sup_norm() / prod.sup_norm())
}

/// Relative sup error of inverse(forward(f)).
pub fn roundtrip_residual(grid: &std::sync::Arc<crate::Grid>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_field(grid, &mut rng);
    f.forward().inverse().sub(&f).sup_norm() / f.sup_norm()
}

/// `max_n |int_0^T sigma_s(n)^2 ds - rho_T(n)^2|` over the distinct radii of the grid.
pub fn sigma_rho_residual(grid: &std::sync::Arc<crate::Grid>, t_end: f64) -> Result<f64> {
    let mut radii: Vec<f64> = grid.abs_modes().to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut worst: f64 = 0.0;
    // The zero mode is switched on at t = 0+ (rho_0 = 0) and has no density.
    for &x in radii.iter().filter(|&&x| x > 0.0) {
        // sigma_s(x) lives where x / s is in the transition band of rho.
        let (a, b) = ((x / 2.0).min(t_end), (4.0 * x).min(t_end));
        let (v, _) = romberg(|s| kernels::sigma_sq(s, x), a, b, 1e-12, 1e-13)?;
        worst = worst.max((v - kernels::rho_t(t_end, x).powi(2)).abs());
    }
    Ok(worst)
}

/// Residual of the change of variables `Z = -lambda W[3] + K` for a random
/// non-adapted drift, relative to the size of `Z`.
pub fn controlled_identity_residual(setup: &FlowSetup, lambda: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = DriftPath {
        u: (0..setup.cells()).map(|_| random_field(setup.grid(), &mut rng)).collect(),
        adapted: false,
    };
    let v = build_stochastic_vector(setup, &sample_flow(setup, seed, 0));
    let p = controlled_decompose(setup, &u, &v, lambda)?;
    let scale = p.z.iter().map(|z| z.energy().sqrt()).fold(1e-300, f64::max);
    Ok(p.identity_residual(&v) / scale)
}

/// Observed orders `log2(e_j / e_{j+1})` of the cell quadrature of
/// `int_0^T J_s ds` on one mode under successive knot doubling.
pub fn drift_quadrature_orders(grid: &std::sync::Arc<crate::Grid>, t_end: f64) -> Result<Vec<f64>> {
    let m1 = ((t_end * grid.scale() / 4.0).floor() as i32).max(1);
    let m: Vec<i32> = (0..grid.dim()).map(|i| if i == 0 { m1 } else { 0 }).collect();
    let idx = grid
        .index_of(&m)
        .ok_or_else(|| crate::Error::Invalid("grid too coarse for the probe mode".into()))?;
    let an = grid.abs_mode(idx);
    let (exact, _) = romberg(|s| kernels::sigma(s, an) / grid.bracket(idx), 0.0, t_end, 1e-12, 1e-14)?;
    let mut c = vec![Complex::new(0.0, 0.0); grid.len()];
    c[idx] = Complex::new(1.0, 0.0);
    c[grid.neg_index(idx)] = Complex::new(1.0, 0.0);
    let f = SpectralField::from_coeffs(grid, c)?.inverse();
    let mut errs = Vec::new();
    for per in [4, 8, 16, 32] {
        let s = FlowSetup::without_gamma(grid, TimeGrid::dyadic(t_end, per)?)?;
        let z = integrate_drift_spectral(&s, &vec![f.clone(); s.cells()], s.cells());
        errs.push((z.coeffs()[idx].re - exact).abs());
    }
    if errs.iter().any(|e| !(*e > 0.0)) {
        return Err(crate::Error::Numerical(format!("degenerate quadrature errors {errs:?}")));
    }
    Ok(errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Identity suites on a `d`-dimensional grid with `n` points per side.
///
/// The controlled-path suite needs a three-dimensional flow; for `d = 2` it
/// runs on the smallest three-dimensional grid instead.
pub fn identity_suites(d: usize, l: f64, n: usize, t_end: f64, seed: u64) -> Result<Vec<SuiteResult>> {
    let grid = make_grid::<f64>(d, l, n)?;
    let mut out = vec![
        SuiteResult::at_most("bony-decomposition", bony_residual(&grid, seed)?, 1e-11),
        SuiteResult::at_most("transform-roundtrip", roundtrip_residual(&grid, seed), 1e-12),
        SuiteResult::at_most("sigma-rho", sigma_rho_residual(&grid, t_end)?, 1e-6),
    ];
    let g3 = if d == 3 { grid.clone() } else { make_grid::<f64>(3, l, 8)? };
    let t3 = t_end.min(g3.max_abs_mode());
    let t3 = 2f64.powf((t3 / crate::torus::FIRST_KNOT).log2().floor()) * crate::torus::FIRST_KNOT;
    let mut worst: f64 = 0.0;
    for per in [2, 4] {
        let s = FlowSetup::new(&g3, TimeGrid::dyadic(t3, per)?)?;
        worst = worst.max(controlled_identity_residual(&s, 0.7, seed)?);
    }
    out.push(SuiteResult::at_most("controlled-path-identity", worst, 1e-12));
    let orders = drift_quadrature_orders(&g3, t3)?;
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(SuiteResult::at_least("controlled-path-knot-order", min_order, 1.0));
    Ok(out)
}
