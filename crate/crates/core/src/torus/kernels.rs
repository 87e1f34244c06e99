//! Smooth cutoff profiles and the scale kernels built from them.
//!
//! `rho` equals 1 on `[0, 1/2]`, decreases smoothly on `(1/2, 1)` and vanishes
//! beyond; `theta` has the same shape with plateaus at `1/4` and `1/2`. Both are
//! built from the `C^inf` step `s(y) = psi(1-y) / (psi(1-y) + psi(y))` with
//! `psi(y) = exp(-1/y)`.

use crate::scalar::Scalar;

#[inline]
fn psi<F: Scalar>(y: F) -> F {
    if y > F::zero() {
        (-y.recip()).exp()
    } else {
        F::zero()
    }
}

/// Smooth step: 1 for `y <= 0`, 0 for `y >= 1`.
#[inline]
pub fn smooth_step<F: Scalar>(y: F) -> F {
    if y <= F::zero() {
        return F::one();
    }
    if y >= F::one() {
        return F::zero();
    }
    let a = psi(F::one() - y);
    let b = psi(y);
    a / (a + b)
}

/// Derivative of [`smooth_step`].
#[inline]
pub fn smooth_step_deriv<F: Scalar>(y: F) -> F {
    if y <= F::zero() || y >= F::one() {
        return F::zero();
    }
    let one = F::one();
    let z = one - y;
    let a = psi(z);
    let b = psi(y);
    let s = a + b;
    -(a * b) * (one / (z * z) + one / (y * y)) / (s * s)
}

pub fn rho<F: Scalar>(x: F) -> F {
    smooth_step(F::c(2.0) * x - F::one())
}

pub fn rho_deriv<F: Scalar>(x: F) -> F {
    F::c(2.0) * smooth_step_deriv(F::c(2.0) * x - F::one())
}

pub fn theta<F: Scalar>(x: F) -> F {
    smooth_step(F::c(4.0) * x - F::one())
}

pub fn theta_deriv<F: Scalar>(x: F) -> F {
    F::c(4.0) * smooth_step_deriv(F::c(4.0) * x - F::one())
}

/// `rho_t(x) = rho(x / t)` with the convention `rho_0 = 0`.
pub fn rho_t<F: Scalar>(t: F, x: F) -> F {
    if t <= F::zero() {
        F::zero()
    } else {
        rho(x / t)
    }
}

/// `sigma_t(x)^2 = -2 (x/t) rho(x/t) rho'(x/t) / t = d/dt rho_t(x)^2`.
pub fn sigma_sq<F: Scalar>(t: F, x: F) -> F {
    if t <= F::zero() {
        return F::zero();
    }
    let y = x / t;
    let v = -F::c(2.0) * y * rho(y) * rho_deriv(y) / t;
    v.max(F::zero())
}

pub fn sigma<F: Scalar>(t: F, x: F) -> F {
    sigma_sq(t, x).sqrt()
}

/// `theta_t(x) = theta(x / t)`, with `theta_0 = 0`.
pub fn theta_t<F: Scalar>(t: F, x: F) -> F {
    if t <= F::zero() {
        F::zero()
    } else {
        theta(x / t)
    }
}

/// `d/dt theta(x / t) = -(x / t^2) theta'(x / t)`.
pub fn theta_t_dot<F: Scalar>(t: F, x: F) -> F {
    if t <= F::zero() {
        return F::zero();
    }
    -(x / (t * t)) * theta_deriv(x / t)
}

/// Multiplier `J_t(n) = sigma_t(|n|) / <n>`.
pub fn jay<F: Scalar>(t: F, abs_n: F) -> F {
    sigma(t, abs_n) / (F::one() + abs_n * abs_n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_support() {
        assert_eq!(rho(0.0), 1.0);
        assert_eq!(rho(0.5), 1.0);
        assert_eq!(rho(1.0), 0.0);
        assert_eq!(rho(1.7), 0.0);
        assert_eq!(theta(0.25), 1.0);
        assert_eq!(theta(0.5), 0.0);
        assert!((rho(0.75f64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn monotone_profiles() {
        let mut prev = 1.0;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0 * 1.2;
            let r = rho(x);
            assert!(r <= prev + 1e-16);
            assert!(rho_deriv(x) <= 0.0);
            prev = r;
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for &x in &[0.55f64, 0.6, 0.75, 0.9, 0.97] {
            let h = 1e-6;
            let fd = (rho(x + h) - rho(x - h)) / (2.0 * h);
            assert!((fd - rho_deriv(x)).abs() < 1e-6, "{x}");
        }
        for &x in &[0.3f64, 0.37, 0.45] {
            let h = 1e-6;
            let fd = (theta(x + h) - theta(x - h)) / (2.0 * h);
            assert!((fd - theta_deriv(x)).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn theta_and_sigma_have_disjoint_support() {
        for i in 1..200 {
            let x = i as f64 * 0.05;
            for &t in &[0.5, 1.0, 3.0, 7.5] {
                for &s in &[t, 1.3 * t, 4.0 * t] {
                    assert_eq!(theta_t(t, x) * sigma(s, x), 0.0);
                }
            }
        }
    }

    #[test]
    fn jay_vanishes_at_zero_and_beyond_t() {
        assert_eq!(jay(2.0, 0.0), 0.0);
        assert_eq!(jay(2.0, 2.0), 0.0);
        assert_eq!(jay(2.0, 0.9), 0.0);
        assert!(jay(2.0, 1.5) > 0.0);
    }

    #[test]
    fn single_precision_profiles() {
        assert_eq!(rho(0.25f32), 1.0);
        assert!((rho(0.75f32) - 0.5).abs() < 1e-6);
    }
}
