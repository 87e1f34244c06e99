use serde::{Deserialize, Serialize};

use super::controlled::ControlledPath;
use super::drift::{h_norm_sq, DriftPath};
use super::policy::DriftPolicy;
use super::potential::{potential, PotentialConfig, TerminalConstants};
use super::upsilon::{upsilon_terms, UpsilonMode, UpsilonTerms};
use crate::error::{Error, Result};
use crate::flow::{wick_fourth, wick_square, FlowSetup, StochasticVector};

/// Everything fixed across samples and drifts.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    pub setup: &'a FlowSetup,
    pub cfg: PotentialConfig,
    pub constants: TerminalConstants,
    pub mode: UpsilonMode,
}

impl<'a> Evaluator<'a> {
    /// Constants read from the setup; `delta` stays zero (the renormalised
    /// objective never needs it).
    pub fn new(setup: &'a FlowSetup, cfg: PotentialConfig) -> Self {
        let m = setup.cells();
        let constants = TerminalConstants {
            c: setup.c(m),
            gamma: if setup.grid().dim() == 3 { setup.gamma(m) } else { 0.0 },
            delta: 0.0,
        };
        Self { setup, cfg, constants, mode: UpsilonMode::Finite }
    }

    pub fn lambda(&self) -> f64 {
        self.cfg.lambda
    }

    /// Uses the renormalised objective (three dimensions) or the bare one.
    pub fn renormalised(&self) -> bool {
        self.setup.grid().dim() == 3
    }

    pub fn evaluate(&self, vector: &StochasticVector, policy: &DriftPolicy) -> Result<SampleEvaluation> {
        let (u, path) = policy.rollout(self.setup, vector, self.lambda())?;
        self.evaluate_path(vector, &u, &path)
    }

    pub fn evaluate_path(&self, vector: &StochasticVector, u: &DriftPath, path: &ControlledPath) -> Result<SampleEvaluation> {
        let lam = self.lambda();
        let u_norm_sq = u.h_norm_sq(self.setup);
        let l_norm_sq = h_norm_sq(self.setup, &path.l);
        let z_t = path.terminal_z();
        let bare = potential(&vector.terminal_w().add(&z_t), &self.cfg, &self.constants) + 0.5 * u_norm_sq;
        let (objective, upsilon, quartic) = if self.renormalised() {
            let ups = upsilon_terms(self.setup, vector, path, lam, &self.cfg.f, self.mode);
            let z2 = z_t.mul(&z_t);
            let quartic = lam * z2.dot(&z2);
            (ups.phi() + quartic + 0.5 * l_norm_sq, Some(ups), quartic)
        } else {
            (bare, None, 0.0)
        };
        if !objective.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite objective: bare = {bare}, |u|^2 = {u_norm_sq}, |l|^2 = {l_norm_sq}, sup|Z_T| = {}",
                z_t.sup_norm()
            )));
        }
        Ok(SampleEvaluation {
            objective,
            bare,
            offset: if self.renormalised() { stochastic_offset(self.setup, vector, lam) } else { 0.0 },
            upsilon,
            u_norm_sq,
            l_norm_sq,
            quartic,
        })
    }
}

/// Per-sample outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleEvaluation {
    /// Integrand whose mean bounds the free energy from above.
    pub objective: f64,
    /// `|Lambda|^{-1} V_T(W_T + Z_T) + 1/2 ||u||^2` with the constants of the evaluator.
    pub bare: f64,
    /// The pure-noise part of the bare functional whose mean is `delta_T`.
    pub offset: f64,
    pub upsilon: Option<UpsilonTerms>,
    pub u_norm_sq: f64,
    pub l_norm_sq: f64,
    /// `lambda ||Z_T||_{L^4}^4`.
    pub quartic: f64,
}

/// `F_T(u)` integrand: `|Lambda|^{-1} V_T(W_T + I_T(u)) + 1/2 ||u||_H^2`, no mass counterterm.
pub fn functional_2d(setup: &FlowSetup, vector: &StochasticVector, u: &DriftPath, cfg: &PotentialConfig) -> f64 {
    let m = setup.cells();
    let z = super::drift::integrate_drift(setup, u, m);
    let k = TerminalConstants { c: setup.c(m), gamma: 0.0, delta: 0.0 };
    potential(&vector.terminal_w().add(&z), cfg, &k) + 0.5 * u.h_norm_sq(setup)
}

/// The pure-noise part of the bare functional:
///
/// `lambda mean([[W_T^4]]) + lambda^2 gamma_T / 2 mean([[W_T^2]]) - lambda^2/2 ||W<3>||_H^2
///  + lambda^3/2 mean(W2_T B^2) - lambda^3 gamma_T mean(W_T B) - 4 lambda^4 mean(W_T B^3)`
///
/// with `B = W[3]_T`. The first two terms are centred, so the expectation is `delta_T`.
pub fn stochastic_offset(setup: &FlowSetup, vector: &StochasticVector, lambda: f64) -> f64 {
    let m = setup.cells();
    let l2 = lambda * lambda;
    let gamma = setup.gamma(m);
    let c = setup.c(m);
    let b = vector.terminal_bracket();
    let b2 = b.mul(b);
    let w = vector.terminal_w();
    let angle = h_norm_sq(setup, &vector.w3_angle);
    lambda * wick_fourth(w, c).mean() + 0.5 * l2 * gamma * wick_square(w, c).mean() - 0.5 * l2 * angle
        + 0.5 * l2 * lambda * vector.terminal_w2().dot(&b2)
        - l2 * lambda * gamma * w.dot(b)
        - 4.0 * l2 * l2 * w.mul(b).dot(&b2)
}
