use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest number of grid points accepted by [`TorusGrid::new`].
pub const DEFAULT_POINT_CAP: usize = 1 << 24;

/// Discretised torus `(R / 2 pi L Z)^d` with `N` points per axis.
///
/// Flat indices are row-major over `[N; d]`. The Fourier mode attached to
/// FFT index `m` on an axis is `m / L` with `m` folded into `[-N/2, N/2)`;
/// the Nyquist entry uses `|m| = N/2` for magnitudes.
pub struct TorusGrid<F: Scalar> {
    d: usize,
    n: usize,
    l: F,
    len: usize,
    volume: F,
    ints: Vec<[i32; 3]>,
    abs_n: Vec<F>,
    bracket: Vec<F>,
    neg: Vec<usize>,
    fwd: Arc<dyn Fft<F>>,
    inv: Arc<dyn Fft<F>>,
}

impl<F: Scalar> fmt::Debug for TorusGrid<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("d", &self.d)
            .field("n", &self.n)
            .field("l", &self.l)
            .finish()
    }
}

impl<F: Scalar> TorusGrid<F> {
    pub fn new(d: usize, l: F, n: usize) -> Result<Arc<Self>> {
        Self::with_cap(d, l, n, DEFAULT_POINT_CAP)
    }

    pub fn with_cap(d: usize, l: F, n: usize, cap: usize) -> Result<Arc<Self>> {
        if d != 2 && d != 3 {
            return Err(Error::Grid(format!("dimension {d} not in {{2, 3}}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("N = {n} is not a power of two >= 2")));
        }
        if !(l > F::zero()) || !l.is_finite() {
            return Err(Error::Grid("L must be positive and finite".into()));
        }
        let len = n
            .checked_pow(d as u32)
            .filter(|&len| len <= cap)
            .ok_or_else(|| Error::Grid(format!("N^d exceeds the point cap {cap}")))?;

        let fold = |i: usize| -> i32 {
            if i < n / 2 {
                i as i32
            } else {
                i as i32 - n as i32
            }
        };
        let mut ints = Vec::with_capacity(len);
        let mut abs_n = Vec::with_capacity(len);
        let mut bracket = Vec::with_capacity(len);
        let mut neg = Vec::with_capacity(len);
        for idx in 0..len {
            let mut m = [0i32; 3];
            let mut rem = idx;
            for a in (0..d).rev() {
                m[a] = fold(rem % n);
                rem /= n;
            }
            let sq: f64 = m[..d].iter().map(|&k| (k as f64) * (k as f64)).sum();
            let an = F::c(sq.sqrt()) / l;
            abs_n.push(an);
            bracket.push((F::one() + an * an).sqrt());
            let mut nidx = 0usize;
            for &k in &m[..d] {
                let j = (-(k as i64)).rem_euclid(n as i64) as usize;
                nidx = nidx * n + j;
            }
            neg.push(nidx);
            ints.push(m);
        }

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft(n, FftDirection::Forward);
        let inv = planner.plan_fft(n, FftDirection::Inverse);
        let two_pi_l = F::c(2.0) * F::PI() * l;
        let volume = (0..d).fold(F::one(), |v, _| v * two_pi_l);
        Ok(Arc::new(Self {
            d,
            n,
            l,
            len,
            volume,
            ints,
            abs_n,
            bracket,
            neg,
            fwd,
            inv,
        }))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> F {
        self.l
    }

    /// Total number of grid points (= number of Fourier modes).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `|Lambda| = (2 pi L)^d`.
    pub fn volume(&self) -> F {
        self.volume
    }

    /// Integer FFT frequencies of a flat index (unused axes are zero).
    pub fn mode_ints(&self, idx: usize) -> [i32; 3] {
        self.ints[idx]
    }

    /// Physical mode vector `m / L` of a flat index.
    pub fn mode(&self, idx: usize) -> Vec<F> {
        self.ints[idx][..self.d]
            .iter()
            .map(|&k| F::c(k as f64) / self.l)
            .collect()
    }

    pub fn abs_mode(&self, idx: usize) -> F {
        self.abs_n[idx]
    }

    pub fn abs_modes(&self) -> &[F] {
        &self.abs_n
    }

    /// Japanese bracket `<n> = (1 + |n|^2)^(1/2)`.
    pub fn bracket(&self, idx: usize) -> F {
        self.bracket[idx]
    }

    pub fn brackets(&self) -> &[F] {
        &self.bracket
    }

    /// Flat index of `-n`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.neg[idx]
    }

    pub fn is_self_conjugate(&self, idx: usize) -> bool {
        self.neg[idx] == idx
    }

    /// Flat index of the mode with the given integer frequencies.
    pub fn index_of(&self, m: &[i32]) -> Option<usize> {
        if m.len() != self.d {
            return None;
        }
        let n = self.n as i64;
        let mut idx = 0usize;
        for &k in m {
            if (k as i64) < -n / 2 || (k as i64) > n / 2 {
                return None;
            }
            idx = idx * self.n + (k as i64).rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Largest `|n|` present on the grid.
    pub fn max_abs_mode(&self) -> F {
        self.abs_n.iter().copied().fold(F::zero(), F::max)
    }

    /// Smallest nonzero `|n|`, i.e. `1 / L`.
    pub fn min_nonzero_mode(&self) -> F {
        F::one() / self.l
    }

    /// Spatial coordinates of a flat index.
    pub fn position(&self, idx: usize) -> Vec<F> {
        let h = F::c(2.0) * F::PI() * self.l / F::c(self.n as f64);
        let mut x = vec![F::zero(); self.d];
        let mut rem = idx;
        for a in (0..self.d).rev() {
            x[a] = F::c((rem % self.n) as f64) * h;
            rem /= self.n;
        }
        x
    }

    /// Radial symbol `n -> m(|n|)` tabulated per flat index.
    pub fn radial_symbol(&self, m: impl Fn(F) -> F) -> Vec<F> {
        self.abs_n.iter().map(|&a| m(a)).collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || (self.d == other.d && self.n == other.n && self.l == other.l)
    }

    /// Unnormalised in-place d-dimensional FFT.
    pub(crate) fn fft_inplace(&self, buf: &mut [Complex<F>], inverse: bool) {
        debug_assert_eq!(buf.len(), self.len);
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.n;
        let mut scratch = vec![Complex::new(F::zero(), F::zero()); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        if self.d == 1 {
            return;
        }
        let mut lines = vec![Complex::new(F::zero(), F::zero()); self.len];
        let mut stride = n;
        for _ in 1..self.d {
            let block = stride * n;
            let mut w = 0;
            for outer in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for k in 0..n {
                        lines[w] = buf[base + k * stride];
                        w += 1;
                    }
                }
            }
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut r = 0;
            for outer in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for k in 0..n {
                        buf[base + k * stride] = lines[r];
                        r += 1;
                    }
                }
            }
            stride = block;
        }
    }
}
