//! Littlewood–Paley blocks, Besov norms, paraproducts and the commutator forms.
//!
//! Block `j = -1` is `chi(|n|) = rho(|n|)`; for `j >= 0` the block symbol is
//! `chi(|n| / 2^{j+1}) - chi(|n| / 2^j)`, supported in `(2^{j-1}, 2^{j+1})`.
//! Symbols are renormalised per mode so that they sum to one exactly on the
//! grid. Paraproduct convention: `f > g = sum_{j < i-1} D_i f D_j g`,
//! `f < g = g > f`, `f o g = sum_{|i-j| <= 1} D_i f D_j g`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::torus::{ensure_same, inverse_pair, kernels, RealField, SpectralField, TorusGrid};

/// Besov exponents `(s, p, q)`; `p` and `q` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, q: f64) -> Self {
        Self { s, p, q }
    }

    /// `H^s = B^s_{2,2}`.
    pub fn sobolev(s: f64) -> Self {
        Self::new(s, 2.0, 2.0)
    }

    /// `C^s = B^s_{inf,inf}`.
    pub fn holder(s: f64) -> Self {
        Self::new(s, f64::INFINITY, f64::INFINITY)
    }
}

/// Block symbols of the dyadic partition of unity on a grid.
#[derive(Clone, Debug)]
pub struct DyadicPartition<F: Scalar> {
    grid: Arc<TorusGrid<F>>,
    symbols: Vec<Vec<F>>,
}

/// A field split into its Littlewood–Paley blocks (index `b = j + 1`).
#[derive(Clone, Debug)]
pub struct Blocks<F: Scalar> {
    blocks: Vec<RealField<F>>,
}

impl<F: Scalar> Blocks<F> {
    pub fn block(&self, j: i32) -> &RealField<F> {
        &self.blocks[(j + 1) as usize]
    }

    pub fn as_slice(&self) -> &[RealField<F>] {
        &self.blocks
    }

    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    /// Sum of all blocks (recovers the field).
    pub fn total(&self) -> RealField<F> {
        let mut acc = RealField::zeros(self.blocks[0].grid());
        for b in &self.blocks {
            acc.axpy(F::one(), b);
        }
        acc
    }
}

fn chi<F: Scalar>(x: F) -> F {
    kernels::rho(x)
}

impl<F: Scalar> DyadicPartition<F> {
    pub fn new(grid: &Arc<TorusGrid<F>>) -> Self {
        let max = grid.max_abs_mode();
        let mut j_max: i32 = 0;
        while F::c(2f64.powi(j_max)) < max {
            j_max += 1;
        }
        let mut symbols: Vec<Vec<F>> = Vec::with_capacity((j_max + 2) as usize);
        symbols.push(grid.radial_symbol(chi));
        for j in 0..=j_max {
            let lo = F::c(2f64.powi(j));
            let hi = F::c(2f64.powi(j + 1));
            symbols.push(grid.radial_symbol(|a| chi(a / hi) - chi(a / lo)));
        }
        for i in 0..grid.len() {
            let s = symbols.iter().fold(F::zero(), |acc, sym| acc + sym[i]);
            for sym in symbols.iter_mut() {
                sym[i] = sym[i] / s;
            }
        }
        while symbols.len() > 1 && symbols.last().unwrap().iter().all(|&v| v == F::zero()) {
            symbols.pop();
        }
        Self {
            grid: grid.clone(),
            symbols,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid<F>> {
        &self.grid
    }

    /// Largest block index present.
    pub fn j_max(&self) -> i32 {
        self.symbols.len() as i32 - 2
    }

    pub fn symbol(&self, j: i32) -> Result<&[F]> {
        if j < -1 || j > self.j_max() {
            return Err(Error::BlockIndex(j));
        }
        Ok(&self.symbols[(j + 1) as usize])
    }

    pub fn symbols(&self) -> &[Vec<F>] {
        &self.symbols
    }

    /// `Delta_j f`.
    pub fn lp_block(&self, f: &RealField<F>, j: i32) -> Result<RealField<F>> {
        ensure_same(&self.grid, f.grid())?;
        let sym = self.symbol(j)?;
        Ok(f.forward().apply(sym)?.inverse())
    }

    pub fn decompose(&self, f: &RealField<F>) -> Result<Blocks<F>> {
        ensure_same(&self.grid, f.grid())?;
        Ok(self.decompose_spectral(&f.forward()))
    }

    pub fn decompose_spectral(&self, f: &SpectralField<F>) -> Blocks<F> {
        let parts: Vec<SpectralField<F>> = self
            .symbols
            .iter()
            .map(|s| {
                let c = f.coeffs().iter().zip(s).map(|(z, &m)| z * m).collect();
                SpectralField::from_coeffs(&self.grid, c).expect("shape")
            })
            .collect();
        let mut blocks = Vec::with_capacity(parts.len());
        let mut it = parts.chunks(2);
        for pair in &mut it {
            if pair.len() == 2 {
                let (a, b) = inverse_pair(&pair[0], &pair[1]);
                blocks.push(a);
                blocks.push(b);
            } else {
                blocks.push(pair[0].inverse());
            }
        }
        Blocks { blocks }
    }

    /// `||(2^{js} ||Delta_j f||_{L^p})_j||_{l^q}` with normalised `L^p`.
    pub fn besov_norm(&self, f: &RealField<F>, idx: BesovIndex) -> Result<F> {
        let b = self.decompose(f)?;
        self.besov_norm_blocks(&b, idx)
    }

    pub fn besov_norm_blocks(&self, b: &Blocks<F>, idx: BesovIndex) -> Result<F> {
        if !(idx.p >= 1.0) || !(idx.q >= 1.0) {
            return Err(Error::Invalid(format!("Besov exponents p = {}, q = {} below 1", idx.p, idx.q)));
        }
        let terms = b.blocks.iter().enumerate().map(|(k, blk)| {
            let j = k as f64 - 1.0;
            F::c(2f64.powf(j * idx.s)) * blk.lp_norm(idx.p)
        });
        Ok(if idx.q.is_infinite() {
            terms.fold(F::zero(), F::max)
        } else {
            let q = F::c(idx.q);
            terms.fold(F::zero(), |a, t| a + t.powf(q)).powf(F::one() / q)
        })
    }

    /// `f > g`: high frequencies of `f` modulated by low frequencies of `g`.
    pub fn para_gt(&self, f: &RealField<F>, g: &RealField<F>) -> Result<RealField<F>> {
        ensure_same(f.grid(), g.grid())?;
        Ok(para_gt_blocks(&self.decompose(f)?, &self.decompose(g)?))
    }

    /// `f < g = g > f`.
    pub fn para_lt(&self, f: &RealField<F>, g: &RealField<F>) -> Result<RealField<F>> {
        self.para_gt(g, f)
    }

    /// `f o g`.
    pub fn resonant(&self, f: &RealField<F>, g: &RealField<F>) -> Result<RealField<F>> {
        ensure_same(f.grid(), g.grid())?;
        Ok(resonant_blocks(&self.decompose(f)?, &self.decompose(g)?))
    }

    /// `K1(f, g, h) = (f > g) o h - g (f o h)`.
    pub fn k1(&self, f: &RealField<F>, g: &RealField<F>, h: &RealField<F>) -> Result<RealField<F>> {
        ensure_same(f.grid(), g.grid())?;
        ensure_same(f.grid(), h.grid())?;
        let fb = self.decompose(f)?;
        let hb = self.decompose(h)?;
        let fg = para_gt_blocks(&fb, &self.decompose(g)?);
        let first = resonant_blocks(&self.decompose(&fg)?, &hb);
        Ok(first.sub(&g.mul(&resonant_blocks(&fb, &hb))))
    }

    /// `K2(f, g, h) = mean[(f > g) h - (f o h) g]`.
    pub fn k2(&self, f: &RealField<F>, g: &RealField<F>, h: &RealField<F>) -> Result<F> {
        ensure_same(f.grid(), g.grid())?;
        ensure_same(f.grid(), h.grid())?;
        let fb = self.decompose(f)?;
        let gt = para_gt_blocks(&fb, &self.decompose(g)?);
        let res = resonant_blocks(&fb, &self.decompose(h)?);
        Ok(gt.dot(h) - res.dot(g))
    }

    /// `K3` with multiplier `J_t`.
    pub fn k3(
        &self,
        t: F,
        phi: &RealField<F>,
        psi: &RealField<F>,
        g1: &RealField<F>,
        g2: &RealField<F>,
    ) -> Result<F> {
        let j = crate::torus::jay(&self.grid, t)?;
        self.k3_with(&j, phi, psi, g1, g2)
    }

    /// `mean[J(phi > g1) J(psi > g2) - (J phi o J psi) g1 g2]` for an even symbol `J`.
    pub fn k3_with(
        &self,
        jsym: &[F],
        phi: &RealField<F>,
        psi: &RealField<F>,
        g1: &RealField<F>,
        g2: &RealField<F>,
    ) -> Result<F> {
        for x in [psi, g1, g2] {
            ensure_same(phi.grid(), x.grid())?;
        }
        let a = self.para_gt(phi, g1)?.forward().apply(jsym)?.inverse();
        let b = self.para_gt(psi, g2)?.forward().apply(jsym)?.inverse();
        let jp = phi.forward().apply(jsym)?.inverse();
        let jq = psi.forward().apply(jsym)?.inverse();
        let r = self.resonant(&jp, &jq)?;
        Ok(a.dot(&b) - r.mul(g1).dot(g2))
    }
}

/// Partial sums `S_k g = sum_{j <= k} Delta_j g`, indexed by `k + 1`.
fn partial_sums<F: Scalar>(g: &Blocks<F>) -> Vec<RealField<F>> {
    let mut out = Vec::with_capacity(g.blocks.len());
    let mut acc = RealField::zeros(g.blocks[0].grid());
    for b in &g.blocks {
        acc.axpy(F::one(), b);
        out.push(acc.clone());
    }
    out
}

/// `f > g` from precomputed blocks.
pub fn para_gt_blocks<F: Scalar>(f: &Blocks<F>, g: &Blocks<F>) -> RealField<F> {
    let grid = f.blocks[0].grid();
    let mut out = RealField::zeros(grid);
    let sums = partial_sums(g);
    // block index i (>= 1) pairs with S_{i-2} g, stored at position i - 1
    for (bi, fb) in f.blocks.iter().enumerate().skip(2) {
        let si = (bi - 2).min(sums.len() - 1);
        let s = &sums[si];
        for ((o, &x), &y) in out.values_mut().iter_mut().zip(fb.values()).zip(s.values()) {
            *o = *o + x * y;
        }
    }
    out
}

/// `f o g` from precomputed blocks.
pub fn resonant_blocks<F: Scalar>(f: &Blocks<F>, g: &Blocks<F>) -> RealField<F> {
    let grid = f.blocks[0].grid();
    let mut out = RealField::zeros(grid);
    let ng = g.blocks.len();
    for (bi, fb) in f.blocks.iter().enumerate() {
        let lo = bi.saturating_sub(1);
        let hi = (bi + 1).min(ng - 1);
        if lo > hi {
            continue;
        }
        let vals = out.values_mut();
        for gb in &g.blocks[lo..=hi] {
            for ((o, &x), &y) in vals.iter_mut().zip(fb.values()).zip(gb.values()) {
                *o = *o + x * y;
            }
        }
    }
    out
}

/// `(sum_n <n>^{2s} |f(n)|^2)^{1/2}`.
pub fn sobolev_norm<F: Scalar>(f: &SpectralField<F>, s: F) -> F {
    let g = f.grid();
    f.coeffs()
        .iter()
        .zip(g.brackets())
        .fold(F::zero(), |a, (z, &b)| a + b.powf(F::c(2.0) * s) * z.norm_sqr())
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::make_grid;

    fn field(g: &Arc<TorusGrid<f64>>, seed: u64) -> RealField<f64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        RealField::from_values(g, (0..g.len()).map(|_| next()).collect()).unwrap()
    }

    #[test]
    fn partition_of_unity_and_separation() {
        for (d, l, n) in [(2, 1.0, 16), (3, 2.0, 8), (3, 1.0, 16)] {
            let g = make_grid::<f64>(d, l, n).unwrap();
            let p = DyadicPartition::new(&g);
            for i in 0..g.len() {
                let s: f64 = p.symbols().iter().map(|s| s[i]).sum();
                assert!((s - 1.0).abs() < 1e-14);
                for a in 0..p.symbols().len() {
                    for b in a + 2..p.symbols().len() {
                        assert_eq!(p.symbols()[a][i] * p.symbols()[b][i], 0.0);
                    }
                }
            }
            assert!(p.symbols().last().unwrap().iter().any(|&v| v != 0.0));
        }
    }

    #[test]
    fn constant_lives_in_lowest_block() {
        let g = make_grid::<f64>(2, 1.0, 16).unwrap();
        let p = DyadicPartition::new(&g);
        let f = RealField::constant(&g, 3.0);
        assert!((p.lp_block(&f, -1).unwrap().values()[5] - 3.0).abs() < 1e-14);
        for j in 0..=p.j_max() {
            assert!(p.lp_block(&f, j).unwrap().sup_norm() < 1e-14);
        }
        assert!(p.lp_block(&f, p.j_max() + 1).is_err());
        assert!(p.para_gt(&f, &field(&g, 1)).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn blocks_sum_to_field() {
        let g = make_grid::<f64>(3, 1.0, 8).unwrap();
        let p = DyadicPartition::new(&g);
        let f = field(&g, 7);
        let t = p.decompose(&f).unwrap().total();
        for (a, b) in t.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn annulus_mode_hits_one_block() {
        let g = make_grid::<f64>(2, 1.0, 32).unwrap();
        let p = DyadicPartition::new(&g);
        // |n| = 2^k is the only radius where a single block is active.
        let k = 2;
        let f = RealField::from_fn(&g, |x| (4.0 * x[0]).cos());
        for j in -1..=p.j_max() {
            let b = p.lp_block(&f, j).unwrap().sup_norm();
            if j == k {
                assert!((b - 1.0).abs() < 1e-12);
            } else {
                assert!(b < 1e-12);
            }
        }
    }

    #[test]
    fn besov_of_constant_and_zero() {
        let g = make_grid::<f64>(2, 1.0, 16).unwrap();
        let p = DyadicPartition::new(&g);
        let one = RealField::constant(&g, 1.0);
        for s in [-1.0, -0.5, 0.0, 0.7] {
            let v = p.besov_norm(&one, BesovIndex::new(s, 4.0, 2.0)).unwrap();
            assert!((v - 2f64.powf(-s)).abs() < 1e-12);
        }
        let z = RealField::zeros(&g);
        assert_eq!(p.besov_norm(&z, BesovIndex::holder(-0.5)).unwrap(), 0.0);
        assert!(p.besov_norm(&z, BesovIndex::new(0.0, 0.5, 1.0)).is_err());
    }

    #[test]
    fn bony_identity() {
        let g = make_grid::<f64>(2, 1.0, 32).unwrap();
        let p = DyadicPartition::new(&g);
        let f = field(&g, 3);
        let h = field(&g, 4);
        let lt = p.para_lt(&f, &h).unwrap();
        let gt = p.para_gt(&f, &h).unwrap();
        let re = p.resonant(&f, &h).unwrap();
        let prod = f.mul(&h);
        let err = lt.add(&gt).add(&re).sub(&prod).sup_norm() / prod.sup_norm();
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn k1_with_unit_middle_argument() {
        let g = make_grid::<f64>(2, 1.0, 16).unwrap();
        let p = DyadicPartition::new(&g);
        let f = field(&g, 5);
        let h = field(&g, 6);
        let one = RealField::constant(&g, 1.0);
        // f > 1 keeps the blocks of f with index >= 1.
        let high = f.sub(&p.lp_block(&f, -1).unwrap()).sub(&p.lp_block(&f, 0).unwrap());
        let expect = p.resonant(&high, &h).unwrap().sub(&p.resonant(&f, &h).unwrap());
        let got = p.k1(&f, &one, &h).unwrap();
        assert!(got.sub(&expect).sup_norm() < 1e-12);
    }

    #[test]
    fn k3_vanishes_for_small_t() {
        let g = make_grid::<f64>(2, 1.0, 16).unwrap();
        let p = DyadicPartition::new(&g);
        let a = field(&g, 1);
        let b = field(&g, 2);
        assert_eq!(p.k3(0.9, &a, &b, &a, &b).unwrap(), 0.0);
        let z = RealField::zeros(&g);
        assert_eq!(p.k3(3.0, &a, &b, &z, &b).unwrap(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g1 = make_grid::<f64>(2, 1.0, 8).unwrap();
        let g2 = make_grid::<f64>(2, 1.0, 16).unwrap();
        let p = DyadicPartition::new(&g1);
        assert!(matches!(p.para_gt(&field(&g1, 1), &field(&g2, 1)), Err(Error::GridMismatch)));
    }
}
