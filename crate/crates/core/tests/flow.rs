use phi4_core::flow::{delta_constant, gamma, FlowSetup};
use phi4_core::torus::{make_grid, TimeGrid};

#[test]
fn discrete_gamma_approaches_the_continuous_integral() {
    let g = make_grid::<f64>(3, 1.0, 8).unwrap();
    let exact = gamma(&g, 4.0).unwrap();
    let errs: Vec<f64> = [2, 4, 8, 16]
        .iter()
        .map(|&p| {
            let s = FlowSetup::new(&g, TimeGrid::dyadic(4.0, p).unwrap()).unwrap();
            (s.gamma(s.cells()) - exact).abs()
        })
        .collect();
    // first order in the knot spacing
    assert!(errs.windows(2).all(|w| (1.7..2.3).contains(&(w[0] / w[1]))), "{errs:?}");
    assert!(errs[3] < 0.1 * exact.abs(), "{errs:?} vs {exact}");
}

#[test]
fn angle_energy_sum_matches_sampling() {
    let g = make_grid::<f64>(3, 1.0, 8).unwrap();
    let s = FlowSetup::new(&g, TimeGrid::dyadic(2.0, 2).unwrap()).unwrap();
    let d = delta_constant(&s, 0.2, 200, 5, 1).unwrap();
    let mc = &d.angle_energy_mc;
    assert!(d.angle_energy_exact > 0.0);
    assert!((mc.value - d.angle_energy_exact).abs() <= 3.0 * mc.se, "{} vs {mc:?}", d.angle_energy_exact);
}

#[test]
fn delta_is_negative_and_quadratic_at_weak_coupling() {
    let g = make_grid::<f64>(3, 1.0, 8).unwrap();
    let s = FlowSetup::new(&g, TimeGrid::dyadic(2.0, 2).unwrap()).unwrap();
    let d = delta_constant(&s, 0.1, 50, 9, 1).unwrap();
    assert!(d.value < 0.0);
    let lead = |l: f64| -0.5 * l * l * d.angle_energy_exact;
    let rel: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&l| (d.at(l).value / lead(l) - 1.0).abs()).collect();
    assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
    assert!(d.at(0.0).value == 0.0 && d.at(0.0).se == 0.0);
}
