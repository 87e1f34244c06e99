use std::sync::Arc;

use num_complex::Complex;

use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real field sampled on the spatial grid.
#[derive(Clone, Debug)]
pub struct RealField<F: Scalar> {
    grid: Arc<TorusGrid<F>>,
    values: Vec<F>,
}

/// Fourier coefficients indexed by flat mode index.
///
/// Convention: `c(n) = N^{-d} sum_x f(x) e^{-i n.x}`, so `c(0)` is the
/// spatial mean and `mean(|f|^2) = sum_n |c(n)|^2`.
#[derive(Clone, Debug)]
pub struct SpectralField<F: Scalar> {
    grid: Arc<TorusGrid<F>>,
    coeffs: Vec<Complex<F>>,
    hermitian: bool,
}

fn check_grid<F: Scalar>(a: &TorusGrid<F>, b: &TorusGrid<F>) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl<F: Scalar> RealField<F> {
    pub fn zeros(grid: &Arc<TorusGrid<F>>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![F::zero(); grid.len()],
        }
    }

    pub fn constant(grid: &Arc<TorusGrid<F>>, c: F) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<TorusGrid<F>>, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &Arc<TorusGrid<F>>, f: impl Fn(&[F]) -> F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid<F>> {
        &self.grid
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    /// Normalised integral `|Lambda|^{-1} int f`.
    pub fn mean(&self) -> F {
        let s = self.values.iter().fold(F::zero(), |a, &v| a + v);
        s / F::c(self.values.len() as f64)
    }

    /// Normalised `L^p` norm; `p = inf` gives the grid maximum.
    pub fn lp_norm(&self, p: f64) -> F {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let pp = F::c(p);
        let s = self.values.iter().fold(F::zero(), |a, &v| a + v.abs().powf(pp));
        (s / F::c(self.values.len() as f64)).powf(F::one() / pp)
    }

    pub fn sup_norm(&self) -> F {
        self.values.iter().fold(F::zero(), |a, &v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Normalised pairing `mean(f g)`.
    pub fn dot(&self, other: &Self) -> F {
        debug_assert!(self.grid.same_as(&other.grid));
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(F::zero(), |a, (&x, &y)| a + x * y);
        s / F::c(self.values.len() as f64)
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        debug_assert!(self.grid.same_as(&other.grid));
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: F) -> Self {
        self.map(|v| v * c)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: F, other: &Self) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
    }

    pub fn forward(&self) -> SpectralField<F> {
        forward_transform(self)
    }
}

impl<F: Scalar> SpectralField<F> {
    pub fn zeros(grid: &Arc<TorusGrid<F>>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex::new(F::zero(), F::zero()); grid.len()],
            hermitian: true,
        }
    }

    /// Wraps coefficients; the hermitian flag is set only if the symmetry holds exactly.
    pub fn from_coeffs(grid: &Arc<TorusGrid<F>>, coeffs: Vec<Complex<F>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        let hermitian = (0..coeffs.len()).all(|i| coeffs[grid.neg_index(i)] == coeffs[i].conj());
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            hermitian,
        })
    }

    /// Wraps coefficients the caller has built with conjugate pairing.
    pub(crate) fn hermitian_unchecked(grid: &Arc<TorusGrid<F>>, coeffs: Vec<Complex<F>>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self {
            grid: grid.clone(),
            coeffs,
            hermitian: true,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid<F>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<F>] {
        &self.coeffs
    }

    /// Mutable access; clears the hermitian flag since symmetry is no longer guaranteed.
    pub fn coeffs_mut(&mut self) -> &mut [Complex<F>] {
        self.hermitian = false;
        &mut self.coeffs
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Re-establishes the flag after checking the symmetry exactly.
    pub fn recheck_hermitian(&mut self) -> bool {
        let g = &self.grid;
        self.hermitian =
            (0..self.coeffs.len()).all(|i| self.coeffs[g.neg_index(i)] == self.coeffs[i].conj());
        self.hermitian
    }

    /// `sum_n |c(n)|^2`, equal to the normalised `L^2` norm squared of the inverse.
    pub fn energy(&self) -> F {
        self.coeffs.iter().fold(F::zero(), |a, c| a + c.norm_sqr())
    }

    /// Pointwise scaling by a real symbol tabulated per flat index.
    pub fn apply(&self, symbol: &[F]) -> Result<Self> {
        apply_multiplier(self, symbol)
    }

    pub fn inverse(&self) -> RealField<F> {
        inverse_transform(self)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(self.grid.same_as(&other.grid));
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn scale(&self, c: F) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            hermitian: self.hermitian,
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: F, other: &Self) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + b * c;
        }
        self.hermitian = self.hermitian && other.hermitian;
    }
}

pub fn forward_transform<F: Scalar>(f: &RealField<F>) -> SpectralField<F> {
    let g = f.grid();
    let mut buf: Vec<Complex<F>> = f.values.iter().map(|&v| Complex::new(v, F::zero())).collect();
    g.fft_inplace(&mut buf, false);
    let inv_len = F::one() / F::c(g.len() as f64);
    for c in buf.iter_mut() {
        *c = *c * inv_len;
    }
    // Symmetrise so the flag holds exactly rather than to rounding.
    for i in 0..buf.len() {
        let j = g.neg_index(i);
        if j == i {
            buf[i].im = F::zero();
        } else if j > i {
            let a = buf[i];
            let b = buf[j];
            let half = F::c(0.5);
            let re = (a.re + b.re) * half;
            let im = (a.im - b.im) * half;
            buf[i] = Complex::new(re, im);
            buf[j] = Complex::new(re, -im);
        }
    }
    SpectralField::hermitian_unchecked(g, buf)
}

/// Inverse transform; the imaginary residue of non-hermitian input is dropped.
pub fn inverse_transform<F: Scalar>(c: &SpectralField<F>) -> RealField<F> {
    let g = c.grid();
    let mut buf = c.coeffs.clone();
    g.fft_inplace(&mut buf, true);
    RealField {
        grid: g.clone(),
        values: buf.into_iter().map(|z| z.re).collect(),
    }
}

/// Inverse transform of two hermitian fields using a single complex FFT.
pub fn inverse_pair<F: Scalar>(a: &SpectralField<F>, b: &SpectralField<F>) -> (RealField<F>, RealField<F>) {
    let g = a.grid();
    debug_assert!(g.same_as(b.grid()));
    let mut buf: Vec<Complex<F>> = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| Complex::new(x.re - y.im, x.im + y.re))
        .collect();
    g.fft_inplace(&mut buf, true);
    let (re, im): (Vec<F>, Vec<F>) = buf.into_iter().map(|z| (z.re, z.im)).unzip();
    (
        RealField {
            grid: g.clone(),
            values: re,
        },
        RealField {
            grid: g.clone(),
            values: im,
        },
    )
}

pub fn apply_multiplier<F: Scalar>(c: &SpectralField<F>, symbol: &[F]) -> Result<SpectralField<F>> {
    let g = c.grid();
    if symbol.len() != g.len() {
        return Err(Error::Shape {
            expected: g.len(),
            got: symbol.len(),
        });
    }
    if c.hermitian && (0..symbol.len()).any(|i| symbol[i] != symbol[g.neg_index(i)]) {
        return Err(Error::OddMultiplier);
    }
    Ok(SpectralField {
        grid: g.clone(),
        coeffs: c.coeffs.iter().zip(symbol).map(|(z, &m)| z * m).collect(),
        hermitian: c.hermitian,
    })
}

/// Applies a radial symbol directly to a real field.
pub fn filter<F: Scalar>(f: &RealField<F>, symbol: &[F]) -> RealField<F> {
    let s = forward_transform(f);
    let coeffs = s.coeffs.iter().zip(symbol).map(|(z, &m)| z * m).collect();
    inverse_transform(&SpectralField {
        grid: s.grid,
        coeffs,
        hermitian: true,
    })
}

pub(crate) fn ensure_same<F: Scalar>(a: &TorusGrid<F>, b: &TorusGrid<F>) -> Result<()> {
    check_grid(a, b)
}
