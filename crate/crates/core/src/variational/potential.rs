use crate::flow::{wick_fourth, wick_square};
use crate::Field;

/// Test functional `f` entering the tilted potential.
#[derive(Clone, Debug, Default)]
pub enum FSpec {
    #[default]
    Zero,
    /// `f(phi) = mean(phi g)`.
    Linear(Field),
}

impl FSpec {
    pub fn eval(&self, phi: &Field) -> f64 {
        match self {
            FSpec::Zero => 0.0,
            FSpec::Linear(g) => phi.dot(g),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            FSpec::Zero => FSpec::Zero,
            FSpec::Linear(g) => FSpec::Linear(g.scale(s)),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PotentialConfig {
    pub lambda: f64,
    pub f: FSpec,
}

impl PotentialConfig {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, f: FSpec::Zero }
    }
}

/// Constants of the potential at the cutoff `T`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TerminalConstants {
    /// Wick constant `c_T`.
    pub c: f64,
    /// Mass counterterm `gamma_T` (zero in two dimensions).
    pub gamma: f64,
    /// Energy counterterm `delta_T` (zero in two dimensions).
    pub delta: f64,
}

/// `|Lambda|^{-1} V^f_T(phi) = f(phi) + mean(lambda [[phi^4]] + lambda^2 gamma / 2 [[phi^2]]) - delta`.
///
/// The mass term carries `+gamma/2` with `gamma >= 0` the contraction constant
/// of the stochastic vector.
pub fn potential(phi: &Field, cfg: &PotentialConfig, k: &TerminalConstants) -> f64 {
    let lam = cfg.lambda;
    let mut v = cfg.f.eval(phi);
    if lam != 0.0 {
        v += lam * wick_fourth(phi, k.c).mean();
        if k.gamma != 0.0 {
            v += 0.5 * lam * lam * k.gamma * wick_square(phi, k.c).mean();
        }
    }
    v - k.delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::make_grid;

    #[test]
    fn zero_field_gives_three_c_squared() {
        let g = make_grid(2, 1.0, 8).unwrap();
        let z = Field::zeros(&g);
        let k = TerminalConstants { c: 0.2, ..Default::default() };
        let v = potential(&z, &PotentialConfig::new(0.5), &k);
        assert!((v - 0.5 * 3.0 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn free_linear_functional() {
        let g = make_grid(2, 1.0, 8).unwrap();
        let phi = Field::from_fn(&g, |x| x[0].cos() + 0.3);
        let gf = Field::from_fn(&g, |x| x[0].cos());
        let cfg = PotentialConfig { lambda: 0.0, f: FSpec::Linear(gf.clone()) };
        let v = potential(&phi, &cfg, &TerminalConstants { c: 1.0, gamma: 2.0, delta: 0.0 });
        assert!((v - phi.dot(&gf)).abs() < 1e-15);
        assert!((v - 0.5).abs() < 1e-12);
    }
}
