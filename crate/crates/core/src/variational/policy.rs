use serde::{Deserialize, Serialize};

use super::controlled::{run_controlled, CausalState, ControlledPath};
use super::drift::DriftPath;
use crate::error::{Error, Result};
use crate::flow::{FlowSetup, StochasticVector};
use crate::paracalc::{para_gt_blocks, BesovIndex};
use crate::torus::{filter, SpectralField};
use crate::Field;

/// Global frequency split for the explicit drift: the radius on cell `k` is
/// `cutoff (1 + ||W2_k||_{C^{-1-reg}})^{1/(2 reg)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitOptions {
    pub cutoff: f64,
    pub regularity: f64,
    /// Abort when `sup |u_k|` exceeds this.
    pub cap: f64,
}

impl Default for ExplicitOptions {
    fn default() -> Self {
        Self { cutoff: 1.0, regularity: 0.5, cap: 1e8 }
    }
}

/// Linear causal feedback, piecewise constant on `blocks` coarse time blocks.
///
/// On cell `k` of block `b`:
/// `u_k = -lambda a_b W<3>_k - lambda c_b Jc_k(W2_k > Zflat_k) + sum_s g_{b,s} P_s W_k`
/// where `P_s` projects on the shell `s <= L|n| < s + 1`. Parameters are laid
/// out as `[a_0.., c_0.., g_{0,0}, g_{0,1}, .., g_{1,0}, ..]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPolicy {
    pub blocks: usize,
    pub shells: usize,
    pub params: Vec<f64>,
}

impl FeedbackPolicy {
    pub fn zero(blocks: usize, shells: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::Invalid("feedback policy needs at least one time block".into()));
        }
        Ok(Self { blocks, shells, params: vec![0.0; Self::param_count(blocks, shells)] })
    }

    pub fn param_count(blocks: usize, shells: usize) -> usize {
        blocks * (2 + shells)
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(Error::Shape { expected: self.params.len(), got: params.len() });
        }
        Ok(Self { params, ..self.clone() })
    }

    fn block_of(&self, k: usize, cells: usize) -> usize {
        (k * self.blocks / cells.max(1)).min(self.blocks - 1)
    }

    pub fn cubic_gain(&self, b: usize) -> f64 {
        self.params[b]
    }

    pub fn para_gain(&self, b: usize) -> f64 {
        self.params[self.blocks + b]
    }

    pub fn shell_gains(&self, b: usize) -> &[f64] {
        let o = 2 * self.blocks + b * self.shells;
        &self.params[o..o + self.shells]
    }

    fn drift(&self, s: &CausalState) -> Result<Field> {
        let b = self.block_of(s.k, s.setup.cells());
        let lam = s.lambda;
        let mut u = Field::zeros(s.setup.grid());
        let a = self.cubic_gain(b);
        if a != 0.0 && lam != 0.0 {
            u.axpy(-lam * a, &s.vector.w3_angle[s.k]);
        }
        let c = self.para_gain(b);
        if c != 0.0 && lam != 0.0 {
            u.axpy(-lam * c, s.para);
        }
        let gains = self.shell_gains(b);
        if gains.iter().any(|&g| g != 0.0) {
            let grid = s.setup.grid();
            let l = grid.scale();
            let sym: Vec<f64> = grid
                .abs_modes()
                .iter()
                .map(|&n| gains.get((n * l + 1e-9).floor() as usize).copied().unwrap_or(0.0))
                .collect();
            u.axpy(1.0, &s.vector.w_hat[s.k].apply(&sym)?.inverse());
        }
        Ok(u)
    }
}

/// Drift families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DriftPolicy {
    Zero,
    Explicit(ExplicitOptions),
    Feedback(FeedbackPolicy),
}

impl DriftPolicy {
    pub fn tag(&self) -> &'static str {
        match self {
            DriftPolicy::Zero => "zero",
            DriftPolicy::Explicit(_) => "explicit",
            DriftPolicy::Feedback(_) => "linear-feedback",
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            DriftPolicy::Feedback(p) => &p.params,
            _ => &[],
        }
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        match self {
            DriftPolicy::Feedback(p) => Ok(DriftPolicy::Feedback(p.with_params(params)?)),
            _ if params.is_empty() => Ok(self.clone()),
            _ => Err(Error::Shape { expected: 0, got: params.len() }),
        }
    }

    /// Builds the drift causally and its controlled path in one forward pass.
    pub fn rollout(
        &self,
        setup: &FlowSetup,
        vector: &StochasticVector,
        lambda: f64,
    ) -> Result<(DriftPath, ControlledPath)> {
        match self {
            DriftPolicy::Zero => run_controlled(setup, vector, lambda, |s| Ok(Field::zeros(s.setup.grid()))),
            DriftPolicy::Feedback(p) => run_controlled(setup, vector, lambda, |s| p.drift(s)),
            DriftPolicy::Explicit(opts) => {
                if setup.grid().dim() != 3 {
                    return Err(Error::Invalid("the explicit drift is defined in three dimensions".into()));
                }
                run_controlled(setup, vector, lambda, |s| explicit_step(s, opts))
            }
        }
    }
}

/// Split radius on cell `k`.
pub fn split_radius(setup: &FlowSetup, vector: &StochasticVector, k: usize, opts: &ExplicitOptions) -> Result<f64> {
    let reg = opts.regularity;
    if !(reg > 0.0) || !(opts.cutoff > 0.0) {
        return Err(Error::Invalid(format!(
            "explicit drift needs positive cutoff and regularity, got {} and {reg}",
            opts.cutoff
        )));
    }
    let norm = setup
        .partition()
        .besov_norm_blocks(&vector.w2_blocks[k], BesovIndex::holder(-1.0 - reg))?;
    Ok(opts.cutoff * (1.0 + norm).powf(0.5 / reg))
}

/// `-lambda [W<3>_k + Jc_k(U_> W2_k > Zflat_k)]`.
fn explicit_step(s: &CausalState, opts: &ExplicitOptions) -> Result<Field> {
    let lam = s.lambda;
    let grid = s.setup.grid();
    if lam == 0.0 {
        return Ok(Field::zeros(grid));
    }
    let mut u = s.vector.w3_angle[s.k].scale(-lam);
    let radius = split_radius(s.setup, s.vector, s.k, opts)?;
    if grid.max_abs_mode() > radius {
        let high = high_pass(&s.vector.w2[s.k].forward(), radius);
        let hb = s.setup.partition().decompose_spectral(&high);
        let gt = para_gt_blocks(&hb, s.zflat_blocks);
        u.axpy(-lam, &filter(&gt, s.setup.jcell(s.k)));
    }
    let sup = u.sup_norm();
    if !(sup <= opts.cap) {
        return Err(Error::Numerical(format!(
            "explicit drift diverged on cell {} (sup |u| = {sup:e} > cap {:e}); use a smaller coupling or a larger cutoff",
            s.k, opts.cap
        )));
    }
    Ok(u)
}

pub(crate) fn high_pass(f: &SpectralField<f64>, radius: f64) -> SpectralField<f64> {
    let sym: Vec<f64> = f.grid().abs_modes().iter().map(|&n| if n > radius { 1.0 } else { 0.0 }).collect();
    f.apply(&sym).expect("radial symbol")
}

/// Explicit drift for one sample.
pub fn explicit_drift(setup: &FlowSetup, vector: &StochasticVector, lambda: f64, opts: &ExplicitOptions) -> Result<DriftPath> {
    DriftPolicy::Explicit(*opts).rollout(setup, vector, lambda).map(|(u, _)| u)
}
