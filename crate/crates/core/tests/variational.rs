use phi4_core::flow::{build_stochastic_vector, romberg, sample_flow, FlowSetup, StochasticVector};
use phi4_core::torus::{kernels, make_grid, SpectralField, TimeGrid};
use phi4_core::variational::*;
use phi4_core::{Field, Spectrum};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup3(n: usize, t: f64, per_octave: usize) -> FlowSetup {
    let g = make_grid::<f64>(3, 1.0, n).unwrap();
    FlowSetup::new(&g, TimeGrid::dyadic(t, per_octave).unwrap()).unwrap()
}

fn vector(setup: &FlowSetup, stream: u64) -> StochasticVector {
    build_stochastic_vector(setup, &sample_flow(setup, 11, stream))
}

fn random_drift(setup: &FlowSetup, seed: u64) -> DriftPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = (0..setup.cells())
        .map(|_| {
            let v: Vec<f64> = (0..setup.grid().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Field::from_values(setup.grid(), v).unwrap()
        })
        .collect();
    DriftPath { u, adapted: false }
}

fn feedback(params: Vec<f64>) -> DriftPolicy {
    let mut p = FeedbackPolicy::zero(2, 2).unwrap();
    p.params = params;
    DriftPolicy::Feedback(p)
}

#[test]
fn zero_coupling_leaves_the_drift_alone() {
    let s = setup3(8, 2.0, 2);
    let v = vector(&s, 0);
    let u = random_drift(&s, 1);
    let p = controlled_decompose(&s, &u, &v, 0.0).unwrap();
    for k in 0..s.cells() {
        assert_eq!(p.l[k].values(), u.u[k].values());
        assert_eq!(p.w[k].values(), u.u[k].values());
    }
    for (z, k) in p.z.iter().zip(&p.k) {
        assert_eq!(z.coeffs(), k.coeffs());
    }
}

#[test]
fn zero_drift_gives_cubic_remainder() {
    let s = setup3(8, 2.0, 2);
    let v = vector(&s, 0);
    let p = controlled_decompose(&s, &DriftPath::zero(&s), &v, 0.3).unwrap();
    for k in 0..s.cells() {
        let want = v.w3_angle[k].scale(0.3);
        let err = p.l[k].sub(&want).sup_norm();
        assert!(err <= 1e-15 * (1.0 + want.sup_norm()), "cell {k}: {err}");
    }
}

#[test]
fn change_of_variables_identity_on_refined_grids() {
    for per in [2, 4] {
        let s = setup3(8, 4.0, per);
        let v = vector(&s, 3);
        let u = random_drift(&s, 5);
        let p = controlled_decompose(&s, &u, &v, 0.7).unwrap();
        let scale = p.z.iter().map(|z| z.energy().sqrt()).fold(1e-300, f64::max);
        assert!(p.identity_residual(&v) <= 1e-13 * scale);
    }
}

#[test]
fn flat_part_sees_only_the_terminal_field() {
    let s = setup3(8, 4.0, 3);
    let v = vector(&s, 1);
    let u = random_drift(&s, 2);
    let p = controlled_decompose(&s, &u, &v, 0.5).unwrap();
    let zt = p.z.last().unwrap();
    for k in 0..=s.cells() {
        let want = zt.apply(s.theta(k)).unwrap().inverse();
        assert!(p.zflat[k].sub(&want).sup_norm() <= 1e-13 * (1.0 + want.sup_norm()));
    }
}

/// Single mode, constant in time: `I_T(v)(n) = v(n) sum_k h_k Jc_k(n)`, which
/// tends to `v(n) int_0^T sigma_s(|n|) / <n> ds`.
#[test]
fn drift_integral_converges_to_the_time_integral() {
    let g = make_grid::<f64>(2, 1.0, 16).unwrap();
    let idx = g.index_of(&[3, 1]).unwrap();
    let an = g.abs_mode(idx);
    let t_end = 8.0;
    let (exact, _) = romberg(|s| kernels::sigma(s, an) / g.bracket(idx), 0.0, t_end, 1e-12, 1e-14).unwrap();
    let mut errs = vec![];
    for per in [4, 8, 16, 32] {
        let s = FlowSetup::without_gamma(&g, TimeGrid::dyadic(t_end, per).unwrap()).unwrap();
        let mut c = vec![Complex::new(0.0, 0.0); g.len()];
        c[idx] = Complex::new(1.0, 0.0);
        c[g.neg_index(idx)] = Complex::new(1.0, 0.0);
        let f = SpectralField::from_coeffs(&g, c).unwrap().inverse();
        let u = DriftPath { u: vec![f; s.cells()], adapted: true };
        let z: Spectrum = integrate_drift_spectral(&s, &u.u, s.cells());
        errs.push((z.coeffs()[idx].re - exact).abs());
        let z_real = integrate_drift(&s, &u, s.cells());
        assert!((z_real.forward().coeffs()[idx].re - z.coeffs()[idx].re).abs() < 1e-13);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.0, "errors {errs:?}");
    }
}

#[test]
fn zero_coupling_has_no_remainders() {
    let s = setup3(8, 2.0, 2);
    let v = vector(&s, 0);
    let p = controlled_decompose(&s, &random_drift(&s, 9), &v, 0.0).unwrap();
    let t = upsilon_terms(&s, &v, &p, 0.0, &FSpec::Zero, UpsilonMode::Finite);
    assert_eq!(t.terms, [0.0; 6]);
}

/// `u = -lambda W<3>` makes `w = 0`, hence `K = 0`.
#[test]
fn vanishing_k_kills_the_k_terms() {
    let s = setup3(8, 4.0, 2);
    let v = vector(&s, 4);
    let lam = 0.4;
    let (_, p) = feedback(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).rollout(&s, &v, lam).unwrap();
    assert!(p.k.iter().all(|k| k.energy() == 0.0));
    let t = upsilon_terms(&s, &v, &p, lam, &FSpec::Zero, UpsilonMode::Finite);
    assert_eq!(t.terms[0], 0.0);
    assert_eq!(t.terms[3], 0.0);
    assert_eq!(t.terms[2], 0.0);
}

/// The Ito terms discarded by the change of variables, computed directly.
fn martingale_terms(s: &FlowSetup, v: &StochasticVector, u: &DriftPath, p: &ControlledPath, lam: f64) -> f64 {
    let m = s.cells();
    let wt = v.terminal_w();
    let c = s.c(m);
    let cube = wt.map(|x| 4.0 * (x * x * x - 3.0 * c * x));
    let zt = p.z[m].inverse();
    let mut m1 = cube.dot(&zt);
    for k in 0..m {
        m1 -= s.time().width(k) * v.w3_angle[k].dot(&u.u[k]);
    }
    let part = s.partition();
    let mut m3 = 0.0;
    for k in 0..m {
        let dw2 = v.w2[k + 1].sub(&v.w2[k]);
        let gt = part.para_gt(&dw2, &p.zflat[k + 1]).unwrap();
        m3 += gt.dot(&p.k[k + 1].inverse());
    }
    lam * (m1 + m3)
}

#[test]
fn renormalised_and_bare_objectives_agree_pathwise() {
    let s = setup3(8, 4.0, 3);
    let pol = feedback(vec![0.6, 0.3, 0.8, -0.5, 0.4, 0.2, -0.3, 0.5]);
    for (stream, lam) in [(0, 0.3), (1, 1.0), (2, 2.5)] {
        let v = vector(&s, stream);
        let ev = Evaluator::new(&s, PotentialConfig::new(lam));
        let (u, p) = pol.rollout(&s, &v, lam).unwrap();
        let e = ev.evaluate_path(&v, &u, &p).unwrap();
        let mart = martingale_terms(&s, &v, &u, &p, lam);
        let gap = e.bare - e.objective - e.offset - mart;
        let scale = e.bare.abs() + e.objective.abs() + e.offset.abs() + mart.abs();
        assert!(gap.abs() <= 1e-11 * scale, "lambda {lam}: gap {gap:e} vs scale {scale:e}");
    }
}

#[test]
fn bare_objective_is_the_two_dimensional_functional() {
    let g = make_grid::<f64>(2, 1.0, 16).unwrap();
    let s = FlowSetup::new(&g, TimeGrid::dyadic(4.0, 3).unwrap()).unwrap();
    let v = vector(&s, 0);
    let pol = feedback(vec![0.5, 0.2, 0.3, 0.1, -0.2, 0.4, 0.0, 0.1]);
    let cfg = PotentialConfig::new(0.5);
    let (u, p) = pol.rollout(&s, &v, 0.5).unwrap();
    let e = Evaluator::new(&s, cfg.clone()).evaluate_path(&v, &u, &p).unwrap();
    let f = functional_2d(&s, &v, &u, &cfg);
    assert!((e.objective - f).abs() <= 1e-12 * (1.0 + f.abs()));
    assert!(e.upsilon.is_none());
}

#[test]
fn explicit_drift_remainder_is_the_low_part() {
    let s = setup3(8, 4.0, 2);
    let v = vector(&s, 6);
    let lam = 0.5;
    let opts = ExplicitOptions { cutoff: 0.05, regularity: 0.5, cap: 1e8 };
    let (u, p) = DriftPolicy::Explicit(opts).rollout(&s, &v, lam).unwrap();
    let part = s.partition();
    let mut any_high = false;
    for k in 0..s.cells() {
        let r = split_radius(&s, &v, k, &opts).unwrap();
        let low: Vec<f64> = s.grid().abs_modes().iter().map(|&n| if n > r { 0.0 } else { 1.0 }).collect();
        any_high |= low.iter().any(|&x| x == 0.0);
        let w2_low = v.w2[k].forward().apply(&low).unwrap().inverse();
        let gt = part.para_gt(&w2_low, &p.zflat[k]).unwrap();
        let want = gt.forward().apply(s.jcell(k)).unwrap().inverse().scale(lam);
        assert!(p.l[k].sub(&want).sup_norm() <= 1e-12 * (1.0 + want.sup_norm()), "cell {k}");
    }
    assert!(any_high, "cutoff too large to exercise the split");
    assert!(u.adapted);
    let zero = explicit_drift(&s, &v, 0.0, &opts).unwrap();
    assert!(zero.u.iter().all(|f| f.sup_norm() == 0.0));
}

#[test]
fn explicit_drift_reports_divergence() {
    let s = setup3(8, 4.0, 2);
    let v = vector(&s, 6);
    let opts = ExplicitOptions { cutoff: 0.05, regularity: 0.5, cap: 1e-6 };
    let err = explicit_drift(&s, &v, 0.5, &opts).unwrap_err();
    assert!(err.to_string().contains("diverged"), "{err}");
}

#[test]
fn explicit_drift_needs_three_dimensions() {
    let g = make_grid::<f64>(2, 1.0, 8).unwrap();
    let s = FlowSetup::new(&g, TimeGrid::dyadic(2.0, 2).unwrap()).unwrap();
    let v = vector(&s, 0);
    assert!(explicit_drift(&s, &v, 0.1, &ExplicitOptions::default()).is_err());
}

#[test]
fn optimiser_at_zero_coupling_returns_to_zero() {
    let g = make_grid::<f64>(2, 1.0, 8).unwrap();
    let s = FlowSetup::new(&g, TimeGrid::dyadic(2.0, 2).unwrap()).unwrap();
    let ev = Evaluator::new(&s, PotentialConfig::new(0.0));
    let start = feedback(vec![0.0, 0.0, 0.0, 0.0, 0.4, -0.3, 0.2, 0.5]);
    let opts = OptimizeOptions { iterations: 3, train_samples: 16, eval_samples: 32, ..Default::default() };
    let r = optimize(&ev, &start, &opts).unwrap();
    // the objective is 1/2 ||u||^2 here; gains on empty shells are inert
    assert!(r.estimate.value.abs() < 1e-12, "{:?} {:?}", r.estimate, r.policy.params());
    assert!(r.trace[0].objective > 1e-3);
    for w in r.trace.windows(2) {
        assert!(w[1].best <= w[0].best);
    }
}
