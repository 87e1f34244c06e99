use serde::{Deserialize, Serialize};

use super::{OracleMethod, OracleResult};
use crate::error::{Error, Result};
use crate::flow::constants::self_convolve;
use crate::flow::{sample_terminal, FlowSetup};
use crate::parallel::map_samples;
use crate::variational::{potential, FSpec, PotentialConfig, TerminalConstants};

/// Largest `-V` whose exponential is representable.
const EXP_LIMIT: f64 = 700.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// Regress the weights on `X = v + delta` and `X^2 - E X^2`, both exactly centred.
    pub control_variates: bool,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, workers: 1, control_variates: false }
    }
}

/// Exact `Var(|Lambda|^{-1} V(Y_T))` under the Gaussian law: the Wick powers of
/// different order are orthogonal, `Var mean([[phi^4]]) = 24 (c*c*c*c)(0)` and
/// `Var mean([[phi^2]]) = 2 (c*c)(0)` with `c(n)` the mode variance.
pub fn potential_variance(setup: &FlowSetup, cfg: &PotentialConfig, k: &TerminalConstants) -> f64 {
    let g = setup.grid();
    let c: Vec<f64> = (0..g.len()).map(|i| setup.terminal_variance(i)).collect();
    let lam = cfg.lambda;
    let mut var = 0.0;
    if lam != 0.0 {
        var += lam * lam * 24.0 * self_convolve(g, &c, 4)[0];
        let m = 0.5 * lam * lam * k.gamma;
        var += m * m * 2.0 * self_convolve(g, &c, 2)[0];
    }
    if let FSpec::Linear(gf) = &cfg.f {
        let gh = gf.forward();
        var += gh.coeffs().iter().zip(&c).map(|(z, ci)| ci * z.norm_sqr()).sum::<f64>();
    }
    var
}

fn potentials(setup: &FlowSetup, cfg: &PotentialConfig, k: &TerminalConstants, opts: &McOptions) -> Result<Vec<f64>> {
    if opts.samples < 100 {
        return Err(Error::Invalid(format!("oracle needs at least 100 samples, got {}", opts.samples)));
    }
    if k.c != setup.c(setup.cells()) {
        return Err(Error::Invalid("Wick constant does not match the sampling cutoff".into()));
    }
    let v = map_samples(opts.samples, opts.workers, |i| {
        let phi = sample_terminal(setup, opts.seed, i as u64).inverse();
        potential(&phi, cfg, k)
    });
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("potential is not finite on sample {i}")));
    }
    Ok(v)
}

/// Log of the sample mean of `exp(-|Lambda| v)`, shifted by the smallest `V`.
fn log_mean_exp(vol: f64, v: &[f64]) -> (f64, Vec<f64>, f64) {
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min) * vol;
    let w: Vec<f64> = v.iter().map(|x| (-(x * vol - vmin)).exp()).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    (mean.ln() - vmin, w, vmin)
}

/// `log Z_T = log E exp(-V_T(Y_T))` by direct sampling of `Y_T`.
///
/// The logarithm of the mean is corrected for its leading `O(1/n)` bias and
/// carries a delta-method standard error; a jackknife error is reported
/// alongside.
pub fn mc_partition(setup: &FlowSetup, cfg: &PotentialConfig, k: &TerminalConstants, opts: &McOptions) -> Result<OracleResult> {
    let vol = setup.grid().volume();
    let v = potentials(setup, cfg, k, opts)?;
    let n = v.len() as f64;
    let (_, w, shift) = log_mean_exp(vol, &v);
    let vmin = shift / vol;
    if -shift > EXP_LIMIT {
        return Err(Error::Numerical(format!(
            "exp(-V) overflows: minimum V = {shift:e} (per volume {vmin:e}); use a smaller coupling or volume"
        )));
    }

    let (mean_w, var_w) = if opts.control_variates {
        let var_v = potential_variance(setup, cfg, k);
        let x1: Vec<f64> = v.iter().map(|x| x + k.delta).collect();
        let x2: Vec<f64> = x1.iter().map(|x| x * x - var_v).collect();
        regression_cv(&w, &[x1, x2])
    } else {
        let m = w.iter().sum::<f64>() / n;
        (m, w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    };
    if !(mean_w > 0.0) {
        return Err(Error::Numerical(format!("control-variate mean {mean_w:e} is not positive")));
    }
    let rel_var = var_w / (n * mean_w * mean_w);
    let log_z = mean_w.ln() - shift + 0.5 * rel_var;
    let se = rel_var.sqrt() / vol;

    // leave-one-out logs of the plain mean
    let total: f64 = w.iter().sum();
    let loo: Vec<f64> = w.iter().map(|x| ((total - x) / (n - 1.0)).ln()).collect();
    let loo_mean = loo.iter().sum::<f64>() / n;
    let jk = ((n - 1.0) / n * loo.iter().map(|x| (x - loo_mean).powi(2)).sum::<f64>()).sqrt() / vol;

    Ok(OracleResult {
        log_z,
        free_energy: -log_z / vol,
        se,
        method: if opts.control_variates { OracleMethod::McControlVariate } else { OracleMethod::Mc },
        n_samples: v.len(),
        truncation: None,
        jackknife_se: Some(jk),
    })
}

/// Regression control variates: returns the adjusted mean and the residual
/// variance (with the fitted coefficients' degrees of freedom removed).
fn regression_cv(y: &[f64], xs: &[Vec<f64>]) -> (f64, f64) {
    let (mean, res) = cv_fit(y, xs);
    let rss: f64 = res.iter().map(|r| r * r).sum();
    (mean, rss / (y.len() - xs.len() - 1) as f64)
}

/// Least-squares fit of `y` on centred `xs`; returns the adjusted mean and
/// the residuals.
fn cv_fit(y: &[f64], xs: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = y.len();
    let p = xs.len();
    let ym = y.iter().sum::<f64>() / n as f64;
    let xm: Vec<f64> = xs.iter().map(|x| x.iter().sum::<f64>() / n as f64).collect();
    // normal equations on centred data
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..n {
        for r in 0..p {
            let xr = xs[r][i] - xm[r];
            b[r] += xr * (y[i] - ym);
            for c in 0..p {
                a[r][c] += xr * (xs[c][i] - xm[c]);
            }
        }
    }
    let beta = solve(a, b);
    let mean = ym - beta.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    let res = (0..n)
        .map(|i| {
            let fit: f64 = (0..p).map(|r| beta[r] * (xs[r][i] - xm[r])).sum();
            y[i] - ym - fit
        })
        .collect();
    (mean, res)
}

/// Small dense solve by Gaussian elimination with partial pivoting; singular
/// directions get a zero coefficient.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let p = b.len();
    let scale = a.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max);
    let mut piv_ok = vec![true; p];
    for col in 0..p {
        let r = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[r][col].abs() <= 1e-12 * scale {
            piv_ok[col] = false;
            continue;
        }
        a.swap(col, r);
        b.swap(col, r);
        for i in col + 1..p {
            let f = a[i][col] / a[col][col];
            for j in col..p {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        if !piv_ok[i] {
            continue;
        }
        let s: f64 = (i + 1..p).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// `F(f) - F(0) = -|Lambda|^{-1} log(E exp(-V_f) / E exp(-V_0))` on common
/// samples, where `tilted` and `plain` share the coupling and `plain` has no
/// test functional.
///
/// Both means are regressed on exactly centred controls (the Wick part, the
/// tilt, their squares and their product); the error is the delta-method
/// error of the log-ratio from the paired residuals.
pub fn mc_free_energy_difference(
    setup: &FlowSetup,
    tilted: &PotentialConfig,
    plain: &PotentialConfig,
    k: &TerminalConstants,
    opts: &McOptions,
) -> Result<crate::stats::Estimate> {
    if tilted.lambda != plain.lambda || !matches!(plain.f, FSpec::Zero) {
        return Err(Error::Invalid("difference needs equal couplings and an untilted reference".into()));
    }
    let vol = setup.grid().volume();
    let va = potentials(setup, tilted, k, opts)?;
    let vb = potentials(setup, plain, k, opts)?;
    let shift = va.iter().chain(&vb).cloned().fold(f64::INFINITY, f64::min) * vol;
    if -shift > EXP_LIMIT {
        return Err(Error::Numerical(format!("exp(-V) overflows: minimum V = {shift:e}")));
    }
    let wa: Vec<f64> = va.iter().map(|x| (-(x * vol - shift)).exp()).collect();
    let wb: Vec<f64> = vb.iter().map(|x| (-(x * vol - shift)).exp()).collect();

    let var_b = potential_variance(setup, plain, k);
    let f_only = PotentialConfig { lambda: 0.0, f: tilted.f.clone() };
    let var_t = potential_variance(setup, &f_only, k);
    let x1: Vec<f64> = vb.iter().map(|x| x + k.delta).collect();
    let t: Vec<f64> = va.iter().zip(&vb).map(|(a, b)| a - b).collect();
    let controls = vec![
        x1.iter().map(|x| x * x - var_b).collect(),
        t.iter().map(|x| x * x - var_t).collect(),
        x1.iter().zip(&t).map(|(a, b)| a * b).collect(),
        x1,
        t,
    ];
    let (ma, ra) = cv_fit(&wa, &controls);
    let (mb, rb) = cv_fit(&wb, &controls);
    if !(ma > 0.0 && mb > 0.0) {
        return Err(Error::Numerical(format!("control-variate means {ma:e}, {mb:e} are not positive")));
    }
    let n = wa.len() as f64;
    let p = controls.len() as f64;
    let var = ra.iter().zip(&rb).map(|(a, b)| (a / ma - b / mb).powi(2)).sum::<f64>() / (n - p - 1.0);
    Ok(crate::stats::Estimate {
        value: -(ma / mb).ln() / vol,
        se: (var / n).sqrt() / vol,
        n: wa.len(),
    })
}

/// `E[|Lambda|^{-1} V]`, an upper bound on the free energy.
pub fn jensen_bound(setup: &FlowSetup, cfg: &PotentialConfig, k: &TerminalConstants, opts: &McOptions) -> Result<OracleResult> {
    let vol = setup.grid().volume();
    let v = potentials(setup, cfg, k, opts)?;
    let e = crate::stats::Estimate::from_samples(&v);
    Ok(OracleResult {
        log_z: -e.value * vol,
        free_energy: e.value,
        se: e.se,
        method: OracleMethod::Jensen,
        n_samples: v.len(),
        truncation: None,
        jackknife_se: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_removes_an_exact_linear_dependence() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let (m, var) = regression_cv(&y, &[x]);
        assert!((m - 2.0).abs() < 1e-12);
        assert!(var < 1e-20);
    }

    #[test]
    fn solve_skips_singular_directions() {
        let x = solve(vec![vec![2.0, 0.0], vec![0.0, 0.0]], vec![4.0, 0.0]);
        assert_eq!(x, vec![2.0, 0.0]);
        // a singular leading column must not displace the live equation
        let x = solve(vec![vec![0.0, 0.0], vec![0.0, 2.0]], vec![0.0, 4.0]);
        assert_eq!(x, vec![0.0, 2.0]);
    }
}
