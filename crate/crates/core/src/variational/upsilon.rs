use serde::{Deserialize, Serialize};

use super::controlled::ControlledPath;
use super::potential::FSpec;
use crate::flow::{FlowSetup, StochasticVector};
use crate::paracalc::{para_gt_blocks, resonant_blocks};
use crate::Field;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpsilonMode {
    /// Finite cutoff: every term as it appears at `T`.
    Finite,
    /// Limit functional: the term vanishing with `T` dropped, the boundary
    /// part of the mass term dropped, products of the terminal stochastic
    /// objects expanded through their paraproduct pieces.
    Limit,
}

/// The six remainder terms plus the test functional at `W_T + Z_T`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpsilonTerms {
    pub terms: [f64; 6],
    pub f_term: f64,
}

impl UpsilonTerms {
    /// `f + sum of the six terms`.
    pub fn phi(&self) -> f64 {
        self.f_term + self.terms.iter().sum::<f64>()
    }
}

/// `W B` through `W < B + W > B + W o B`, reusing the stored resonant piece.
fn expanded_wb(setup: &FlowSetup, v: &StochasticVector) -> Field {
    let part = setup.partition();
    let m = v.cells();
    let wb = part.decompose_spectral(&v.w_hat[m]);
    let bb = part.decompose_spectral(&v.w3_bracket_hat[m]);
    let mut out = para_gt_blocks(&wb, &bb);
    out.axpy(1.0, &para_gt_blocks(&bb, &wb));
    out.axpy(1.0, &v.w3_res1);
    out
}

/// Evaluates the six remainder terms on one sample.
///
/// With `gamma` the (non-negative) contraction constant and `B = W[3]`:
///
/// * 1: `-lambda/2 K2(W2, K, K) + lambda/2 mean((W2 < K) K) - lambda^2 mean((W2 < B) K)`
/// * 2: `lambda mean((W2 > (Z - Zflat)) K)`
/// * 3: `lambda sum_k mean((W2_k > dZflat_k) K_{k+1})`
/// * 4: `4 lambda mean(W K^3) - 12 lambda^2 mean(W B K^2) + 12 lambda^3 mean(W B^2 K)`
/// * 5: `lambda^2 gamma_T / 2 mean(2 Zflat R + R^2) + lambda^2 / 2 sum_k gamma_{k+1} mean(dZflat_k^2)`,
///   `R = Z - Zflat`, `dZflat_k^2 = Zflat_{k+1}^2 - Zflat_k^2`
/// * 6: `-lambda^2 mean(W2<>[3] K) - lambda^2/2 sum_k h_k [mean(W<2><>2>_k Zflat_k^2) + K3_k]`
pub fn upsilon_terms(
    setup: &FlowSetup,
    vector: &StochasticVector,
    path: &ControlledPath,
    lambda: f64,
    f: &FSpec,
    mode: UpsilonMode,
) -> UpsilonTerms {
    let m = setup.cells();
    let part = setup.partition();
    let lam = lambda;
    let l2 = lam * lam;

    let z_t = path.terminal_z();
    let k_t = path.terminal_k();
    let zf_t = &path.zflat[m];
    let r_t = z_t.sub(zf_t);
    let w_t = vector.terminal_w();
    let b_t = vector.terminal_bracket();
    let w2b = &vector.w2_blocks[m];
    let kb = part.decompose_spectral(&path.k[m]);
    let bb = part.decompose_spectral(&vector.w3_bracket_hat[m]);

    let f_term = f.eval(&w_t.add(&z_t));
    if lam == 0.0 {
        return UpsilonTerms { terms: [0.0; 6], f_term };
    }

    // 1
    let w2_gt_k = para_gt_blocks(w2b, &kb);
    let w2_res_k = resonant_blocks(w2b, &kb);
    let k2 = w2_gt_k.dot(&k_t) - w2_res_k.dot(&k_t);
    let w2_lt_k = para_gt_blocks(&kb, w2b);
    let w2_lt_b = para_gt_blocks(&bb, w2b);
    let u1 = -0.5 * lam * k2 + 0.5 * lam * w2_lt_k.dot(&k_t) - l2 * w2_lt_b.dot(&k_t);

    // 2
    let u2 = match mode {
        UpsilonMode::Finite => {
            let rb = part.decompose(&r_t).expect("same grid");
            lam * para_gt_blocks(w2b, &rb).dot(&k_t)
        }
        UpsilonMode::Limit => 0.0,
    };

    // 3
    let u3 = lam * path.flat_increments.iter().sum::<f64>();

    // 4
    let wb = match mode {
        UpsilonMode::Finite => w_t.mul(b_t),
        UpsilonMode::Limit => expanded_wb(setup, vector),
    };
    let k_sq = k_t.mul(&k_t);
    let u4 = 4.0 * lam * w_t.mul(&k_sq).dot(&k_t) - 12.0 * l2 * wb.dot(&k_sq)
        + 12.0 * l2 * lam * wb.mul(b_t).dot(&k_t);

    // 5
    let mut flat_sum = 0.0;
    for k in 0..m {
        let a = &path.zflat[k + 1];
        let b = &path.zflat[k];
        flat_sum += setup.gamma(k + 1) * (a.dot(a) - b.dot(b));
    }
    let mut u5 = 0.5 * l2 * flat_sum;
    if mode == UpsilonMode::Finite {
        u5 += 0.5 * l2 * setup.gamma(m) * (2.0 * zf_t.dot(&r_t) + r_t.dot(&r_t));
    }

    // 6
    let mut cell_sum = 0.0;
    for k in 0..m {
        let zf = &path.zflat[k];
        let zf2 = zf.mul(zf);
        let diamond = vector.w22_diamond[k].dot(&zf2);
        let resonant = diamond + setup.gamma_cell(k) * zf2.mean();
        let k3 = path.para[k].dot(&path.para[k]) - resonant;
        cell_sum += setup.time().width(k) * (diamond + k3);
    }
    let u6 = -l2 * vector.w23_diamond.dot(&k_t) - 0.5 * l2 * cell_sum;

    UpsilonTerms {
        terms: [u1, u2, u3, u4, u5, u6],
        f_term,
    }
}
