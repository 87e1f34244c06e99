use super::sample::{FlowPath, FlowSetup};
use super::wick::{wick_cube, wick_square};
use crate::paracalc::{resonant_blocks, Blocks};
use crate::torus::{inverse_pair, SpectralField};
use crate::{Field, Spectrum};

/// One sample of the stochastic objects on the time grid.
///
/// Knot-indexed entries have `M + 1` elements, cell-indexed entries `M`.
/// Cell quantities use the cell multiplier of [`FlowSetup::jcell`]. The
/// counterterms enter with the sign that makes each renormalised product
/// centred: `W2 o W[3] - gamma W` and `(J W2) o (J W2) - gamma_dot`.
#[derive(Clone, Debug)]
pub struct StochasticVector {
    /// `W` at knots.
    pub w: Vec<Field>,
    pub w_hat: Vec<Spectrum>,
    /// `12 [[W^2]]` at knots.
    pub w2: Vec<Field>,
    /// Littlewood–Paley blocks of `w2` at knots.
    pub w2_blocks: Vec<Blocks<f64>>,
    /// `Jc_k 4 [[W_k^3]]` per cell.
    pub w3_angle: Vec<Field>,
    /// `sum_{j<k} h_j Jc_j w3_angle_j` at knots.
    pub w3_bracket: Vec<Field>,
    pub w3_bracket_hat: Vec<Spectrum>,
    /// `(Jc_k w2_k) o (Jc_k w2_k) - gamma_cell_k` per cell.
    pub w22_diamond: Vec<Field>,
    /// `W_T o W[3]_T`.
    pub w3_res1: Field,
    /// `W2_T o W[3]_T - gamma_T W_T`.
    pub w23_diamond: Field,
    /// `W2_T o W[3]_T` without counterterm.
    pub w23_bare: Field,
}

impl StochasticVector {
    pub fn cells(&self) -> usize {
        self.w3_angle.len()
    }

    pub fn terminal_w(&self) -> &Field {
        self.w.last().unwrap()
    }

    pub fn terminal_w2(&self) -> &Field {
        self.w2.last().unwrap()
    }

    pub fn terminal_bracket(&self) -> &Field {
        self.w3_bracket.last().unwrap()
    }
}

fn scaled(s: &Spectrum, sym: &[f64]) -> Spectrum {
    s.apply(sym).expect("even symbol")
}

/// Builds every component from a sampled path. Never references the coupling.
pub fn build_stochastic_vector(setup: &FlowSetup, path: &FlowPath) -> StochasticVector {
    let g = setup.grid();
    let part = setup.partition();
    let m = setup.cells();
    let mut w = Vec::with_capacity(m + 1);
    let mut w2 = Vec::with_capacity(m + 1);
    let mut w2_blocks = Vec::with_capacity(m + 1);
    let mut w3_angle = Vec::with_capacity(m);
    let mut w3_bracket = Vec::with_capacity(m + 1);
    let mut w3_bracket_hat = Vec::with_capacity(m + 1);
    let mut w22_diamond = Vec::with_capacity(m);
    let mut bracket_hat = SpectralField::zeros(g);

    for k in 0..=m {
        let wk = path.w[k].inverse();
        let ck = setup.c(k);
        let w2k = wick_square(&wk, ck).scale(12.0);
        let w2_hat = w2k.forward();
        w2_blocks.push(part.decompose_spectral(&w2_hat));
        w3_bracket_hat.push(bracket_hat.clone());
        if k < m {
            let jk = setup.jcell(k);
            let w3k = wick_cube(&wk, ck).scale(4.0);
            let angle_hat = scaled(&w3k.forward(), jk);
            let (angle, bracket) = inverse_pair(&angle_hat, &bracket_hat);
            w3_angle.push(angle);
            w3_bracket.push(bracket);
            bracket_hat.axpy(setup.time().width(k), &scaled(&angle_hat, jk));

            let jw2 = part.decompose_spectral(&scaled(&w2_hat, jk));
            let gd = setup.gamma_cell(k);
            w22_diamond.push(resonant_blocks(&jw2, &jw2).map(|v| v - gd));
        } else {
            w3_bracket.push(bracket_hat.inverse());
        }
        w.push(wk);
        w2.push(w2k);
    }

    let wt = &w[m];
    let bt = &w3_bracket[m];
    let bt_blocks = part.decompose_spectral(&w3_bracket_hat[m]);
    let w3_res1 = resonant_blocks(&part.decompose_spectral(&path.w[m]), &bt_blocks);
    let w23_bare = resonant_blocks(&w2_blocks[m], &bt_blocks);
    let gt = setup.gamma(m);
    let w23_diamond = w23_bare.zip_map(wt, |a, b| a - gt * b);
    debug_assert!(bt.is_finite());

    StochasticVector {
        w,
        w_hat: path.w.clone(),
        w2,
        w2_blocks,
        w3_angle,
        w3_bracket,
        w3_bracket_hat,
        w22_diamond,
        w3_res1,
        w23_diamond,
        w23_bare,
    }
}

/// Terminal cubic objects needed by the `delta` estimator, without the
/// resonant products: `(sum_k h_k mean(w3_angle_k^2), W_T, W2_T, W[3]_T)`.
pub(crate) fn cubic_chain(setup: &FlowSetup, path: &FlowPath) -> (f64, Field, Field, Field) {
    let g = setup.grid();
    let m = setup.cells();
    let mut energy = 0.0;
    let mut bracket_hat = SpectralField::zeros(g);
    for k in 0..m {
        let wk = path.w[k].inverse();
        let jk = setup.jcell(k);
        let angle_hat = scaled(&wick_cube(&wk, setup.c(k)).scale(4.0).forward(), jk);
        let h = setup.time().width(k);
        energy += h * angle_hat.energy();
        bracket_hat.axpy(h, &scaled(&angle_hat, jk));
    }
    let wt = path.w[m].inverse();
    let w2t = wick_square(&wt, setup.c(m)).scale(12.0);
    (energy, wt, w2t, bracket_hat.inverse())
}
