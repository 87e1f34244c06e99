//! Discretised torus, spectral transforms, Fourier multipliers and scale kernels.

mod field;
mod grid;
pub mod kernels;
mod timegrid;

pub use field::{apply_multiplier, filter, forward_transform, inverse_pair, inverse_transform, RealField, SpectralField};
pub(crate) use field::ensure_same;
pub use grid::{TorusGrid, DEFAULT_POINT_CAP};
pub use timegrid::{TimeGrid, FIRST_KNOT};

use crate::scalar::Scalar;

/// Builds a torus grid; see [`TorusGrid::new`].
pub fn make_grid<F: Scalar>(d: usize, l: F, n: usize) -> crate::Result<std::sync::Arc<TorusGrid<F>>> {
    TorusGrid::new(d, l, n)
}

/// Symbol `n -> J_t(n) = sigma_t(|n|) / <n>` on the grid.
pub fn jay<F: Scalar>(grid: &TorusGrid<F>, t: F) -> crate::Result<Vec<F>> {
    if !(t > F::zero()) {
        return Err(crate::Error::Invalid("jay needs t > 0".into()));
    }
    Ok(grid.radial_symbol(|a| kernels::jay(t, a)))
}

/// Symbol `n -> theta_t(|n|)`.
pub fn theta_symbol<F: Scalar>(grid: &TorusGrid<F>, t: F) -> Vec<F> {
    grid.radial_symbol(|a| kernels::theta_t(t, a))
}

/// Symbol `n -> rho_t(|n|)`.
pub fn rho_symbol<F: Scalar>(grid: &TorusGrid<F>, t: F) -> Vec<F> {
    grid.radial_symbol(|a| kernels::rho_t(t, a))
}

/// Symbol `n -> <n>^s`.
pub fn bracket_power<F: Scalar>(grid: &TorusGrid<F>, s: F) -> Vec<F> {
    grid.brackets().iter().map(|&b| b.powf(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn grid2(n: usize) -> Arc<TorusGrid<f64>> {
        make_grid(2, 1.0, n).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = grid2(4);
        assert_eq!(g.len(), 16);
        let i = g.index_of(&[1, 0]).unwrap();
        assert!((g.bracket(i) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.bracket(0), 1.0);
        let g3 = make_grid::<f64>(3, 2.0, 8).unwrap();
        let j = g3.index_of(&[1, 0, 0]).unwrap();
        assert_eq!(g3.mode(j), vec![0.5, 0.0, 0.0]);
        assert!((g3.bracket(j) - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((g3.volume() - (4.0 * std::f64::consts::PI).powi(3)).abs() < 1e-9);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid::<f64>(4, 1.0, 8).is_err());
        assert!(make_grid::<f64>(2, 1.0, 12).is_err());
        assert!(make_grid::<f64>(2, -1.0, 8).is_err());
        assert!(TorusGrid::<f64>::with_cap(3, 1.0, 64, 1000).is_err());
    }

    #[test]
    fn modes_closed_under_negation() {
        let g = make_grid::<f64>(3, 1.0, 8).unwrap();
        for i in 0..g.len() {
            let j = g.neg_index(i);
            assert_eq!(g.neg_index(j), i);
            assert_eq!(g.bracket(i), g.bracket(j));
        }
    }

    #[test]
    fn constant_field_transform() {
        let g = grid2(8);
        let f = RealField::constant(&g, 1.0);
        assert_eq!(f.mean(), 1.0);
        let c = f.forward();
        assert!((c.coeffs()[0].re - 1.0).abs() < 1e-15);
        assert!(c.coeffs()[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn cosine_splits_mass() {
        let g = make_grid::<f64>(2, 2.0, 16).unwrap();
        let f = RealField::from_fn(&g, |x| (x[0] / 2.0).cos());
        let c = f.forward();
        let p = g.index_of(&[1, 0]).unwrap();
        let m = g.index_of(&[-1, 0]).unwrap();
        assert!((c.coeffs()[p].re - 0.5).abs() < 1e-14);
        assert!((c.coeffs()[m].re - 0.5).abs() < 1e-14);
        let rest: f64 = (0..g.len()).filter(|&i| i != p && i != m).map(|i| c.coeffs()[i].norm()).sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn multiplier_algebra() {
        let g = grid2(8);
        let f = RealField::from_fn(&g, |x| (x[0]).sin() + (2.0 * x[1] + x[0]).cos());
        let c = f.forward();
        let inv = bracket_power(&g, -1.0);
        let inv2 = bracket_power(&g, -2.0);
        let a = c.apply(&inv).unwrap().apply(&inv).unwrap();
        let b = c.apply(&inv2).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).norm() < 1e-15);
        }
        let id = vec![1.0; g.len()];
        assert_eq!(c.apply(&id).unwrap().coeffs(), c.coeffs());
    }

    #[test]
    fn odd_multiplier_rejected() {
        let g = grid2(4);
        let c = RealField::from_fn(&g, |x| x[0].cos()).forward();
        let odd: Vec<f64> = (0..g.len()).map(|i| g.mode_ints(i)[0] as f64).collect();
        assert!(matches!(c.apply(&odd), Err(crate::Error::OddMultiplier)));
    }

    #[test]
    fn small_sigma_keeps_only_zero_mode() {
        let g = grid2(8);
        let f = RealField::from_fn(&g, |x| 1.0 + x[0].cos() + x[1].sin());
        let s = g.radial_symbol(|a| kernels::sigma(0.5, a));
        let c = f.forward().apply(&s).unwrap();
        assert!(c.coeffs()[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn pair_inverse_matches_separate() {
        let g = make_grid::<f64>(3, 1.0, 8).unwrap();
        let a = RealField::from_fn(&g, |x| (x[0] + 2.0 * x[2]).sin());
        let b = RealField::from_fn(&g, |x| (x[1] - x[0]).cos() * x[2].cos());
        let (ra, rb) = inverse_pair(&a.forward(), &b.forward());
        for i in 0..g.len() {
            assert!((ra.values()[i] - a.values()[i]).abs() < 1e-13);
            assert!((rb.values()[i] - b.values()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn jay_rejects_nonpositive_time() {
        let g = grid2(4);
        assert!(jay(&g, 0.0).is_err());
        assert_eq!(jay(&g, 2.0).unwrap()[0], 0.0);
    }
}
