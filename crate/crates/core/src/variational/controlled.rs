use super::drift::DriftPath;
use crate::error::{Error, Result};
use crate::flow::{FlowSetup, StochasticVector};
use crate::paracalc::{para_gt_blocks, Blocks};
use crate::torus::{filter, SpectralField};
use crate::{Field, Spectrum};

/// A drift together with the fields of the renormalising change of variables.
///
/// `Z = I(u)`, `Zflat_k = theta_k Z_k`, `K = I(w)` with
/// `w_k = u_k + lambda W<3>_k` and `l_k = w_k + lambda Jc_k(W2_k > Zflat_k)`,
/// so that `Z_k = K_k - lambda W[3]_k` holds exactly on the knots.
#[derive(Clone, Debug)]
pub struct ControlledPath {
    pub lambda: f64,
    /// `Z` at knots (Fourier side).
    pub z: Vec<Spectrum>,
    /// `theta_k Z_k` at knots.
    pub zflat: Vec<Field>,
    /// `K` at knots (Fourier side).
    pub k: Vec<Spectrum>,
    /// Per cell.
    pub w: Vec<Field>,
    /// Per cell.
    pub l: Vec<Field>,
    /// `Jc_k(W2_k > Zflat_k)` per cell.
    pub para: Vec<Field>,
    /// `mean((W2_k > (Zflat_{k+1} - Zflat_k)) K_{k+1})` per cell.
    pub flat_increments: Vec<f64>,
}

impl ControlledPath {
    pub fn terminal_z(&self) -> Field {
        self.z.last().unwrap().inverse()
    }

    pub fn terminal_k(&self) -> Field {
        self.k.last().unwrap().inverse()
    }

    /// `max_k ||Z_k + lambda W[3]_k - K_k||_{L^2}`.
    pub fn identity_residual(&self, vector: &StochasticVector) -> f64 {
        self.z
            .iter()
            .zip(&self.k)
            .zip(&vector.w3_bracket_hat)
            .map(|((z, k), b)| {
                let mut r = z.clone();
                r.axpy(self.lambda, b);
                r.axpy(-1.0, k);
                r.energy().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// What a causal drift may look at on cell `k`: the stochastic vector up to
/// knot `k` and the controlled fields built from earlier cells.
pub struct CausalState<'a> {
    pub setup: &'a FlowSetup,
    pub vector: &'a StochasticVector,
    pub lambda: f64,
    pub k: usize,
    pub z: &'a Spectrum,
    pub zflat_blocks: &'a Blocks<f64>,
    /// `Jc_k(W2_k > Zflat_k)`.
    pub para: &'a Field,
}

/// Runs the forward pass, asking `drift` for `u_k` once per cell.
pub(crate) fn run_controlled<D>(
    setup: &FlowSetup,
    vector: &StochasticVector,
    lambda: f64,
    mut drift: D,
) -> Result<(DriftPath, ControlledPath)>
where
    D: FnMut(&CausalState) -> Result<Field>,
{
    let m = setup.cells();
    if vector.cells() != m {
        return Err(Error::Shape { expected: m, got: vector.cells() });
    }
    let part = setup.partition();
    let grid = setup.grid();
    let mut z = SpectralField::zeros(grid);
    let mut kk = SpectralField::zeros(grid);
    let mut out = ControlledPath {
        lambda,
        z: Vec::with_capacity(m + 1),
        zflat: Vec::with_capacity(m + 1),
        k: Vec::with_capacity(m + 1),
        w: Vec::with_capacity(m),
        l: Vec::with_capacity(m),
        para: Vec::with_capacity(m),
        flat_increments: Vec::with_capacity(m),
    };
    let mut u = Vec::with_capacity(m);
    let mut prev: Option<Field> = None; // W2_{k-1} > Zflat_{k-1}

    for k in 0..=m {
        let fb = part.decompose_spectral(&z.apply(setup.theta(k))?);
        let k_real = kk.inverse();
        if k > 0 {
            let gt = para_gt_blocks(&vector.w2_blocks[k - 1], &fb);
            let inc = gt.sub(prev.as_ref().unwrap());
            out.flat_increments.push(inc.dot(&k_real));
        }
        out.zflat.push(fb.total());
        out.z.push(z.clone());
        out.k.push(kk.clone());
        if k == m {
            break;
        }

        let gt = para_gt_blocks(&vector.w2_blocks[k], &fb);
        let jk = setup.jcell(k);
        let para = filter(&gt, jk);
        let uk = drift(&CausalState {
            setup,
            vector,
            lambda,
            k,
            z: &z,
            zflat_blocks: &fb,
            para: &para,
        })?;
        if !uk.is_finite() {
            return Err(Error::Numerical(format!("drift is not finite on cell {k}")));
        }
        let mut wk = uk.clone();
        wk.axpy(lambda, &vector.w3_angle[k]);
        let mut lk = wk.clone();
        lk.axpy(lambda, &para);

        let h = setup.time().width(k);
        z.axpy(h, &uk.forward().apply(jk)?);
        kk.axpy(h, &wk.forward().apply(jk)?);
        u.push(uk);
        out.w.push(wk);
        out.l.push(lk);
        out.para.push(para);
        prev = Some(gt);
    }
    Ok((DriftPath { u, adapted: true }, out))
}

/// Change of variables for a given drift.
///
/// The drift is used as given; whether it is adapted is recorded in
/// `u.adapted` and not re-checked.
pub fn controlled_decompose(
    setup: &FlowSetup,
    u: &DriftPath,
    vector: &StochasticVector,
    lambda: f64,
) -> Result<ControlledPath> {
    if u.u.len() != setup.cells() {
        return Err(Error::Shape { expected: setup.cells(), got: u.u.len() });
    }
    run_controlled(setup, vector, lambda, |s| Ok(u.u[s.k].clone())).map(|(_, p)| p)
}
