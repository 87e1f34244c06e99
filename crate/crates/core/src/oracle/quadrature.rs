use super::{OracleMethod, OracleResult};
use crate::error::{Error, Result};
use crate::flow::FlowSetup;
use crate::variational::{FSpec, PotentialConfig, TerminalConstants};

pub const MAX_QUADRATURE_DOF: usize = 4;

const START_NODES: usize = 64;
const MAX_NODES: usize = 256;
/// Node budget for the whole tensor grid.
const MAX_POINTS: f64 = 3e8;
const REL_TOL: f64 = 1e-8;

/// Gauss–Hermite nodes and weights for `int exp(-x^2) f(x) dx`.
///
/// Newton iteration on the orthonormal Hermite recurrence, started from the
/// usual asymptotic guesses.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^{-1/4}
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// One real Gaussian coordinate: standard deviation and its grid profile.
struct Dof {
    sd: f64,
    profile: Vec<f64>,
}

/// Real coordinates of the active modes: `cos(n x)` for self-conjugate modes
/// (variance `s^2`), and `2 cos(n x)`, `-2 sin(n x)` for each conjugate pair
/// (variance `s^2 / 2` each).
fn active_dofs(setup: &FlowSetup) -> Vec<Dof> {
    let g = setup.grid();
    let pts: Vec<Vec<f64>> = (0..g.len()).map(|p| g.position(p)).collect();
    let phase = |i: usize, x: &[f64]| g.mode(i).iter().zip(x).map(|(n, x)| n * x).sum::<f64>();
    let mut out = Vec::new();
    for i in 0..g.len() {
        let var = setup.terminal_variance(i);
        if var <= 0.0 {
            continue;
        }
        let j = g.neg_index(i);
        if j == i {
            out.push(Dof { sd: var.sqrt(), profile: pts.iter().map(|x| phase(i, x).cos()).collect() });
        } else if i < j {
            let sd = (0.5 * var).sqrt();
            out.push(Dof { sd, profile: pts.iter().map(|x| 2.0 * phase(i, x).cos()).collect() });
            out.push(Dof { sd, profile: pts.iter().map(|x| -2.0 * phase(i, x).sin()).collect() });
        }
    }
    out
}

struct Integrand<'a> {
    dofs: &'a [Dof],
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lambda: f64,
    c: f64,
    mass: f64,
    delta: f64,
    g: Option<Vec<f64>>,
    vol: f64,
}

impl Integrand<'_> {
    /// `|Lambda|^{-1} V` on grid values, written out independently of the
    /// library potential.
    fn potential(&self, phi: &[f64]) -> f64 {
        let n = phi.len() as f64;
        let (c, lam) = (self.c, self.lambda);
        let mut quart = 0.0;
        let mut quad = 0.0;
        let mut lin = 0.0;
        for (p, &x) in phi.iter().enumerate() {
            let x2 = x * x;
            quart += x2 * x2 - 6.0 * c * x2 + 3.0 * c * c;
            quad += x2 - c;
            if let Some(g) = &self.g {
                lin += x * g[p];
            }
        }
        (lin + lam * quart + self.mass * quad) / n - self.delta
    }

    fn sum(&self, level: usize, phi: &mut Vec<f64>, weight: f64) -> f64 {
        if level == self.dofs.len() {
            return weight * (-self.vol * self.potential(phi)).exp();
        }
        let d = &self.dofs[level];
        let mut acc = 0.0;
        let base = phi.clone();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let a = std::f64::consts::SQRT_2 * d.sd * x;
            for ((p, b), e) in phi.iter_mut().zip(&base).zip(&d.profile) {
                *p = b + a * e;
            }
            acc += self.sum(level + 1, phi, weight * w / std::f64::consts::PI.sqrt());
        }
        phi.copy_from_slice(&base);
        acc
    }
}

/// `log Z_T` by tensor Gauss–Hermite quadrature over the active modes.
///
/// Starts at 64 nodes per coordinate and doubles until the relative change
/// of `Z` is at most `1e-8`.
pub fn quadrature_partition(setup: &FlowSetup, cfg: &PotentialConfig, k: &TerminalConstants) -> Result<OracleResult> {
    let g = setup.grid();
    let dofs = active_dofs(setup);
    if dofs.len() > MAX_QUADRATURE_DOF {
        return Err(Error::Quadrature(format!(
            "{} active real degrees of freedom; quadrature handles at most {MAX_QUADRATURE_DOF}",
            dofs.len()
        )));
    }
    let vol = g.volume();
    let lin = match &cfg.f {
        FSpec::Zero => None,
        FSpec::Linear(gf) => Some(gf.values().to_vec()),
    };
    let mut nodes = START_NODES;
    let mut prev: Option<f64> = None;
    loop {
        let (x, w) = gauss_hermite(nodes);
        let integrand = Integrand {
            dofs: &dofs,
            nodes: x,
            weights: w,
            lambda: cfg.lambda,
            c: k.c,
            mass: 0.5 * cfg.lambda * cfg.lambda * k.gamma,
            delta: k.delta,
            g: lin.clone(),
            vol,
        };
        let z = integrand.sum(0, &mut vec![0.0; g.len()], 1.0);
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Quadrature(format!("partition function {z:e} at {nodes} nodes")));
        }
        if let Some(p) = prev {
            let rel = ((z - p) / z).abs();
            if rel <= REL_TOL {
                let log_z = z.ln();
                return Ok(OracleResult {
                    log_z,
                    free_energy: -log_z / vol,
                    se: 0.0,
                    method: OracleMethod::Quadrature,
                    n_samples: 0,
                    truncation: Some((z.ln() - p.ln()).abs() / vol),
                    jackknife_se: None,
                });
            }
        }
        prev = Some(z);
        nodes *= 2;
        if nodes > MAX_NODES || (nodes as f64).powi(dofs.len() as i32) > MAX_POINTS {
            return Err(Error::Quadrature(format!(
                "node doubling did not reach relative change {REL_TOL:e} within the node budget"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_moments() {
        let (x, w) = gauss_hermite(64);
        let sp = std::f64::consts::PI.sqrt();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - sp).abs() < 1e-12);
        assert!((m2 - sp / 2.0).abs() < 1e-12);
        assert!((m4 - 0.75 * sp).abs() < 1e-12);
    }

    #[test]
    fn simpson_on_a_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -10.0, 10.0, 1e-12);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }
}
