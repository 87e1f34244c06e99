//! Renormalisation constants as exact mode sums and time quadratures.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::torus::{kernels, SpectralField};
use crate::{Field, Grid, Spectrum};

/// Relative tolerance of the per-cell Romberg quadrature of `gamma_dot`.
pub const GAMMA_RTOL: f64 = 1e-9;

/// `c_t = |Lambda|^{-1} sum_n rho_t(|n|)^2 / <n>^2` (with `rho_0 = 0`).
pub fn c_constant(grid: &Grid, t: f64) -> f64 {
    let s: f64 = (0..grid.len())
        .map(|i| {
            let r = kernels::rho_t(t, grid.abs_mode(i));
            r * r / (grid.bracket(i) * grid.bracket(i))
        })
        .sum();
    s / grid.volume()
}

/// Circular self-convolution `(a * a)(n)` of a real even mode table, via FFT.
pub(crate) fn self_convolve(grid: &std::sync::Arc<Grid>, a: &[f64], power: u32) -> Vec<f64> {
    let spec = SpectralField::from_coeffs(grid, a.iter().map(|&v| Complex::new(v, 0.0)).collect())
        .expect("shape");
    let x: Field = spec.inverse();
    let xp = x.map(|v| v.powi(power as i32));
    let out: Spectrum = xp.forward();
    out.coeffs().iter().map(|z| z.re).collect()
}

fn rho_over_bracket_sq(grid: &Grid, t: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let r = kernels::rho_t(t, grid.abs_mode(i));
            r * r / (grid.bracket(i) * grid.bracket(i))
        })
        .collect()
}

/// `gamma_dot_t = 288 |Lambda|^{-2} sum_{q1,q2} a(q1) a(q2) sigma_t^2(q1+q2) / <q1+q2>^2`
/// with `a = rho_t^2 / <.>^2` and momenta added modulo the grid.
pub fn gamma_dot(grid: &std::sync::Arc<Grid>, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let a = rho_over_bracket_sq(grid, t);
    let conv = self_convolve(grid, &a, 2);
    let s: f64 = (0..grid.len())
        .map(|i| {
            let b = grid.bracket(i);
            kernels::sigma_sq(t, grid.abs_mode(i)) / (b * b) * conv[i]
        })
        .sum();
    288.0 * s / (grid.volume() * grid.volume())
}

/// Cell rates of the time-discretised `gamma`:
/// `288 |Lambda|^{-2} sum_P Jc_k(P)^2 (a_k * a_k)(P)` with `a_k = rho_{t_k}^2 / <.>^2`.
///
/// This is exactly `E mean((Jc_k W2_k) o (Jc_k W2_k))` for the cell scheme and
/// converges to the cell average of [`gamma_dot`] as the knots are refined.
pub fn gamma_cell_rates(grid: &std::sync::Arc<Grid>, knots: &[f64], jcell: &[Vec<f64>]) -> Vec<f64> {
    let vol2 = grid.volume() * grid.volume();
    jcell
        .iter()
        .enumerate()
        .map(|(k, jk)| {
            if jk.iter().all(|&v| v == 0.0) {
                return 0.0;
            }
            let conv = self_convolve(grid, &rho_over_bracket_sq(grid, knots[k]), 2);
            let s: f64 = jk.iter().zip(&conv).map(|(j, c)| j * j * c).sum();
            288.0 * s / vol2
        })
        .collect()
}

/// Romberg integration; returns `(value, error estimate)`.
pub fn romberg(f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64, atol: f64) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    const MAX_LEVEL: usize = 16;
    let mut prev: Vec<f64> = vec![0.5 * (b - a) * (f(a) + f(b))];
    let mut n = 1usize;
    for k in 1..=MAX_LEVEL {
        let h = (b - a) / (2 * n) as f64;
        let mid: f64 = (0..n).map(|i| f(a + (2 * i + 1) as f64 * h)).sum();
        let mut row = vec![0.5 * prev[0] + h * mid];
        for j in 1..=k {
            let p = 4f64.powi(j as i32);
            let v = row[j - 1] + (row[j - 1] - prev[j - 1]) / (p - 1.0);
            row.push(v);
        }
        let err = (row[k] - prev[k - 1]).abs();
        if k >= 4 && err <= rtol * row[k].abs() + atol {
            return Ok((row[k], err));
        }
        prev = row;
        n *= 2;
    }
    Err(Error::Quadrature(format!(
        "Romberg on [{a}, {b}] did not converge in {MAX_LEVEL} levels"
    )))
}

/// `gamma_t` at every knot (cumulative), plus the summed quadrature error.
pub fn gamma_table(grid: &std::sync::Arc<Grid>, knots: &[f64]) -> Result<(Vec<f64>, f64)> {
    let start = grid.min_nonzero_mode();
    let mut out = Vec::with_capacity(knots.len());
    let mut acc = 0.0;
    let mut err = 0.0;
    out.push(0.0);
    for w in knots.windows(2) {
        let a = w[0].max(start);
        let b = w[1];
        if b > a {
            let scale = gamma_dot(grid, b).abs().max(gamma_dot(grid, 0.5 * (a + b)).abs()) * (b - a);
            let (v, e) = romberg(|u| gamma_dot(grid, u), a, b, GAMMA_RTOL, 1e-13 * scale.max(1e-300))?;
            acc += v;
            err += e;
        }
        out.push(acc);
    }
    Ok((out, err))
}

/// `gamma_t = int_0^t gamma_dot_u du`.
pub fn gamma(grid: &std::sync::Arc<Grid>, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    // Split at dyadic points so each Romberg panel sees few shell transitions.
    let mut knots = vec![0.0];
    let mut s = grid.min_nonzero_mode();
    while s < t {
        knots.push(s);
        s *= 2f64.sqrt();
    }
    knots.push(t);
    Ok(*gamma_table(grid, &knots)?.0.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::make_grid;

    #[test]
    fn c_limits() {
        let g = make_grid(2, 1.0, 16).unwrap();
        assert_eq!(c_constant(&g, 0.0), 0.0);
        assert!((c_constant(&g, 0.5) - 1.0 / g.volume()).abs() < 1e-15);
        let sat: f64 = g.brackets().iter().map(|b| 1.0 / (b * b)).sum::<f64>() / g.volume();
        assert!((c_constant(&g, 100.0) - sat).abs() < 1e-14);
    }

    #[test]
    fn c_non_decreasing() {
        let g = make_grid(3, 1.0, 8).unwrap();
        let mut prev = 0.0;
        for k in 0..60 {
            let c = c_constant(&g, 0.1 * k as f64);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn romberg_integrates_smooth_function() {
        let (v, _) = romberg(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn gamma_dot_matches_direct_double_sum() {
        let g = make_grid(3, 1.0, 4).unwrap();
        let t = 1.7;
        let a: Vec<f64> = (0..g.len())
            .map(|i| {
                let r = kernels::rho_t(t, g.abs_mode(i));
                r * r / (g.bracket(i) * g.bracket(i))
            })
            .collect();
        let mut s = 0.0;
        for i in 0..g.len() {
            for j in 0..g.len() {
                let mi = g.mode_ints(i);
                let mj = g.mode_ints(j);
                let sum: Vec<i32> = (0..3)
                    .map(|k| {
                        let v = (mi[k] + mj[k]).rem_euclid(4);
                        if v >= 2 { v - 4 } else { v }
                    })
                    .collect();
                let k = g.index_of(&sum).unwrap();
                let b = g.bracket(k);
                s += a[i] * a[j] * kernels::sigma_sq(t, g.abs_mode(k)) / (b * b);
            }
        }
        let direct = 288.0 * s / (g.volume() * g.volume());
        assert!((gamma_dot(&g, t) - direct).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn gamma_starts_at_zero_and_grows() {
        let g = make_grid(3, 1.0, 8).unwrap();
        assert_eq!(gamma(&g, 0.0).unwrap(), 0.0);
        let a = gamma(&g, 1.5).unwrap();
        let b = gamma(&g, 3.0).unwrap();
        assert!(a >= 0.0 && b > a);
    }
}
