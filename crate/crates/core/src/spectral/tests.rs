use super::*;
use crate::convexity::BusemannOptions;
use crate::error::GeomError;
use crate::fd;
use crate::geodesic::{ShootingOptions, StableOptions};
use crate::model::{registry, RadialProfile, TangentVector};
use crate::quadrature::AngularRule;
use nalgebra::DVector;
use proptest::prelude::*;
use std::f64::consts::PI;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Distance to the origin of the Poincare ball.
fn ball_radius(x: &DVector<f64>) -> f64 {
    2.0 * x.norm().atanh()
}

#[test]
fn horosphere_curvature_of_model_spaces() {
    let opts = BusemannOptions::default();
    let e2 = registry::euclidean(2).unwrap();
    let c = horosphere_mean_curvature(&e2, &TangentVector::new(v(&[0.0, 0.0]), v(&[1.0, 0.0])), &v(&[0.4, -1.0]), &opts, 1e-2).unwrap();
    assert!(c.jacobi.abs() < 1e-8 && c.trace.unwrap().abs() < 1e-6);
    for n in [2usize, 3] {
        let m = registry::hyperbolic_ball(n).unwrap();
        let mut dir = vec![0.0; n];
        dir[0] = 0.5;
        let mut p = vec![0.1; n];
        p[0] = -0.3;
        let c = horosphere_mean_curvature(&m, &TangentVector::new(DVector::zeros(n), v(&dir)), &v(&p), &opts, 1e-2).unwrap();
        assert!((c.jacobi - (n as f64 - 1.0)).abs() < 1e-6, "{c:?}");
        assert!(c.discrepancy().unwrap() < 1e-4, "{c:?}");
    }
}

#[test]
fn horosphere_curvature_on_hyperbolic_times_line() {
    let m = registry::product(registry::hyperbolic_ball(2).unwrap(), registry::euclidean(1).unwrap()).unwrap();
    let o = DVector::zeros(3);
    let opts = BusemannOptions::default();
    for alpha in [0.3f64, 1.0] {
        // the ball metric at the origin is 4 delta
        let d = v(&[alpha.cos() / 2.0, 0.0, alpha.sin()]);
        let c = horosphere_mean_curvature(&m, &TangentVector::new(o.clone(), d), &v(&[0.1, 0.2, 0.5]), &opts, 1e-2).unwrap();
        assert!((c.jacobi - alpha.cos()).abs() < 1e-4, "alpha {alpha}: {c:?}");
    }
}

#[test]
fn horosphere_scan_is_constant_on_hyperbolic_plane() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let opts = ScanOptions { directions: 4, points: 3, radius: 1.5, cross_check_every: 5, ..ScanOptions::default() };
    let s = horosphere_scan(&m, &v(&[0.0, 0.0]), &opts).unwrap();
    assert_eq!(s.samples.len(), 12);
    assert!((s.mean - 1.0).abs() < 1e-6 && s.spread < 1e-6, "{} {}", s.mean, s.spread);
    assert!(s.max_discrepancy < 1e-4);
}

#[test]
fn area_profiles_match_closed_forms() {
    let e3 = registry::euclidean(3).unwrap();
    let rule = AngularRule::sphere(3, 6, 8);
    let p = area_profile(&e3, &DVector::zeros(3), 4.0, 1e-2, 10, &rule).unwrap();
    for (r, c) in cheeger_ratio_scan(&p, &[0.5, 1.0, 4.0]).unwrap() {
        assert!((c - 3.0 / r).abs() < 1e-8 * c, "r = {r}: {c}");
    }
    let h2 = registry::hyperbolic_ball(2).unwrap();
    let p = area_profile(&h2, &v(&[0.0, 0.0]), 15.0, 1e-2, 5, &AngularRule::circle(4)).unwrap();
    for (r, c) in cheeger_ratio_scan(&p, &[1.0, 5.0, 15.0]).unwrap() {
        let want = r.sinh() / (r.cosh() - 1.0);
        assert!((c / want - 1.0).abs() < 1e-6, "r = {r}: {c} vs {want}");
    }
    let k = p.r.len() - 1;
    assert!((p.area[k] / (2.0 * PI * 15f64.sinh()) - 1.0).abs() < 1e-6);
    assert!(cheeger_ratio_scan(&p, &[1.003]).is_err());
    let h3 = registry::hyperbolic_ball(3).unwrap();
    let p = area_profile(&h3, &DVector::zeros(3), 12.0, 1e-2, 10, &AngularRule::sphere(3, 4, 4)).unwrap();
    let want = 4.0 * PI * 12f64.sinh().powi(2);
    assert!((p.area.last().unwrap() / want - 1.0).abs() < 1e-6);
    let fit = p.growth_fit().unwrap();
    assert!((fit.rate - 2.0).abs() < 1e-3, "{fit:?}");
}

#[test]
fn rayleigh_quotients() {
    let h2 = registry::hyperbolic_ball(2).unwrap();
    let p = area_profile(&h2, &v(&[0.0, 0.0]), 16.0, 1e-2, 5, &AngularRule::circle(4)).unwrap();
    let fit = p.growth_fit().unwrap();
    assert!((fit.rate - 1.0).abs() < 1e-6, "{fit:?}");
    let mut last = f64::INFINITY;
    for n in [1usize, 10, 100] {
        let r = rayleigh_lambda0(&p, 1.0, n).unwrap();
        let a = 0.5 * (1.0 + 1.0 / n as f64);
        assert!((r.value / (a * a) - 1.0).abs() < 1e-6, "n = {n}: {r:?}");
        assert!(r.value <= last && r.value >= 0.25);
        assert!(r.identity_residual < 1e-5, "{}", r.identity_residual);
        last = r.value;
    }
    assert!(rayleigh_lambda0(&p, 1.0, 100).unwrap().value < 0.25 * 1.05);
    assert!(matches!(rayleigh_lambda0(&p, 0.0, 2), Err(GeomError::Divergence(_))));
    let e2 = registry::euclidean(2).unwrap();
    let p = area_profile(&e2, &v(&[0.0, 0.0]), 20.0, 1e-2, 5, &AngularRule::circle(4)).unwrap();
    for n in [1usize, 3] {
        let r = rayleigh_lambda0(&p, 0.0, n).unwrap();
        assert!((r.value - 0.25 / (n * n) as f64).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn spherical_functions_of_hyperbolic_space() {
    let h3 = registry::hyperbolic_ball(3).unwrap();
    for lambda in [0.5f64, 1.0, 2.0] {
        let s = spherical_function(&h3, lambda, 10.0, 1e-3).unwrap();
        assert!((s.eigenvalue - lambda * lambda - 1.0).abs() < 1e-15);
        assert!(s.residual < 1e-6, "residual {}", s.residual);
        for (r, phi) in s.r.iter().zip(&s.phi) {
            let want = if *r == 0.0 { 1.0 } else { (lambda * r).sin() / (lambda * r.sinh()) };
            assert!((phi - want).abs() < 1e-6, "lambda {lambda} r {r}: {phi} vs {want}");
        }
    }
    let s = spherical_function(&h3, 0.0, 2.0, 1e-3).unwrap();
    assert!((s.phi[0] - 1.0).abs() < 1e-15 && (s.phi[1] - 1.0).abs() < 1e-5);
    let e3 = registry::euclidean(3).unwrap();
    let s = spherical_function(&e3, 1.0, 10.0, 1e-3).unwrap();
    assert!((s.phi.last().unwrap() - 10f64.sin() / 10.0).abs() < 1e-8);
    let w = registry::warped(RadialProfile::Polynomial(vec![1.0, 0.0, 1.0]), 2).unwrap();
    assert!(matches!(spherical_function(&w, 1.0, 5.0, 1e-3), Err(GeomError::Unsupported(_))));
}

#[test]
fn spherical_function_is_an_eigenfunction_on_hyperbolic_plane() {
    let h2 = registry::hyperbolic_ball(2).unwrap();
    let s = spherical_function(&h2, 1.0, 8.0, 1e-3).unwrap();
    assert!(s.residual < 1e-6);
    for (k, r) in [0.7f64, 2.0, 4.5, 6.0].iter().enumerate() {
        let a = 0.4 + k as f64;
        let x = v(&[(r / 2.0).tanh() * a.cos(), (r / 2.0).tanh() * a.sin()]);
        let (lap, _) = fd::laplacian(&h2, &x, 1e-2, |y| s.eval(ball_radius(y))).unwrap();
        let phi = s.eval(*r).unwrap();
        assert!((lap + 1.25 * phi).abs() < 1e-6, "r {r}: {lap} vs {}", -1.25 * phi);
    }
}

#[test]
fn plancherel_densities() {
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
    let d3 = c_function_density(3, &grid, 1.0).unwrap();
    for (l, d) in d3.lambda.iter().zip(&d3.density) {
        assert_eq!(*d, l * l);
    }
    assert!((d3.regime_constants.c - 1.0).abs() < 1e-15 && d3.bounds_hold());
    let d5 = c_function_density(5, &grid, 1.0).unwrap();
    assert!((d5.eval(2.0) - 4.0 * 5.0).abs() < 1e-12);
    for n in [2usize, 4, 6] {
        let d = c_function_density(n, &grid, 1.0).unwrap();
        assert!(d.bounds_hold() && d.regime_constants.c.is_finite());
        // small-lambda regime: density / lambda^2 bounded above and below
        let ratios: Vec<f64> = d.lambda.iter().zip(&d.density).filter(|(l, _)| **l > 0.0 && **l <= 1.0).map(|(l, x)| x / (l * l)).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(lo > 0.0 && hi < 1e3, "n {n}: {lo} {hi}");
    }
    // n = 2: lambda tanh(pi lambda) ~ pi lambda^2
    assert!((hyperbolic_density(2, 1e-4) / 1e-8 - PI).abs() < 1e-6);
    assert!(hyperbolic_density(4, 0.0) == 0.0);
}

#[test]
fn essential_range_matches_grid_scan() {
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
    let d = c_function_density(3, &grid, 1.0).unwrap();
    let b = 1.0;
    let xs: Vec<f64> = (0..20).map(|k| b + (k as f64 - 9.5) * 0.013).collect();
    let eps = [1e-3, 1e-2, 1e-1];
    let scan = ScanGrid { spacing: 1e-3, max: 20.0 };
    let er = essential_range(2.0, &d, &xs, &eps, scan).unwrap();
    assert_eq!(er.bottom, 1.0);
    assert!(er.all_match);
    for vd in &er.verdicts {
        assert_eq!(vd.included, vd.x >= b || vd.eps > b - vd.x, "{vd:?}");
    }
    assert_eq!(er.exclusion_witnesses.len(), 10);
    let edge = essential_range(2.0, &d, &[b - 0.1, b], &[0.1, 1e-6], scan).unwrap();
    assert!(!edge.verdicts[0].included && edge.verdicts[0].interval.is_none());
    assert!(edge.verdicts[2].included && edge.verdicts[3].included);
}

#[test]
fn radialisation_fixed_points_and_symmetry() {
    let h2 = registry::hyperbolic_ball(2).unwrap();
    let o = v(&[0.0, 0.0]);
    let bundle = SphereBundle::new(&h2, &o, 3.0, 1e-2, 10, &AngularRule::circle(16)).unwrap();
    let f = |x: &DVector<f64>| Ok((ball_radius(x)).cos());
    let r = radialise(&bundle, f).unwrap();
    for (rk, fk) in r.r.iter().zip(&r.values) {
        assert!((fk - rk.cos()).abs() < 1e-8, "r {rk}");
    }
    let opts = ShootingOptions { step: 1e-2, ..ShootingOptions::default() };
    let idem = idempotence_residual(&h2, &bundle, |x| Ok(x[0] * x[0] + 0.3 * x[1]), &opts).unwrap();
    assert!(idem < 1e-8, "{idem}");
    let e2 = registry::euclidean(2).unwrap();
    let bundle = SphereBundle::new(&e2, &o, 2.0, 1e-2, 10, &AngularRule::circle(16)).unwrap();
    let r = radialise(&bundle, |x| Ok(x[0])).unwrap();
    assert!(r.values.iter().all(|x| x.abs() < 1e-14));
}

fn bump(x: &DVector<f64>) -> crate::error::Result<f64> {
    let s = ((x[0] - 0.3).powi(2) + x[1].powi(2)) / 0.25;
    Ok(if s < 1.0 { (-1.0 / (1.0 - s)).exp() } else { 0.0 })
}

#[test]
fn radialisation_commutes_with_laplacian_on_hyperbolic_plane() {
    let h2 = registry::hyperbolic_ball(2).unwrap();
    let bundle = SphereBundle::new(&h2, &v(&[0.0, 0.0]), 2.5, 2.5e-3, 1, &AngularRule::circle(256)).unwrap();
    let c = commutation_residual(&h2, &bundle, bump, 2e-3, 0.1).unwrap();
    assert!(c.residual < 1e-5, "{c:?}");
}

#[test]
fn rank_checks_on_product_of_planes() {
    let m = registry::product(registry::hyperbolic_ball(2).unwrap(), registry::hyperbolic_ball(2).unwrap()).unwrap();
    let o = DVector::zeros(4);
    let root = RootData::of(&m).unwrap();
    assert_eq!(root.factor_h, vec![1.0, 1.0]);
    assert!((root.rho_norm.powi(2) - 0.5).abs() < 1e-15);
    assert!((root.sup_pairing() - 2.0 * root.rho_norm).abs() < 1e-12);
    let dirs = vec![v(&[0.5, 0.0, 0.0, 0.0]), v(&[0.25, 0.0, 0.25, 0.0]), v(&[0.0, 0.3, 0.4, 0.0])];
    let opts = StableOptions { step: 2e-2, schedule: (1..=12).map(|k| 10.0 * k as f64).collect(), tol: 1e-6 };
    let rep = rank_higher_checks(&m, &o, &dirs, &[0.0, 1.0, 2.0], &opts).unwrap();
    assert!(rep.max_error < 1e-3 && rep.max_drift < 1e-3, "{rep:?}");
    assert!((rep.samples[1].predicted - 2f64.sqrt()).abs() < 1e-12);
    assert!((rep.sup_measured - 2f64.sqrt()).abs() < 1e-3);
    let hr = registry::product(registry::hyperbolic_ball(2).unwrap(), registry::euclidean(1).unwrap()).unwrap();
    let rep = rank_higher_checks(&hr, &DVector::zeros(3), &[v(&[0.0, 0.0, 1.0])], &[0.0], &opts).unwrap();
    assert!(rep.samples[0].measured[0].abs() < 1e-3);
    assert!(matches!(
        rank_higher_checks(&registry::hyperbolic_ball(2).unwrap(), &v(&[0.0, 0.0]), &[v(&[1.0, 0.0])], &[0.0], &opts),
        Err(GeomError::Unsupported(_))
    ));
}

#[test]
fn product_grid_is_unit_and_contains_diagonal() {
    let m = registry::product(registry::hyperbolic_ball(2).unwrap(), registry::hyperbolic_ball(2).unwrap()).unwrap();
    let o = DVector::zeros(4);
    let dirs = product_direction_grid(&m, &o, 8, 4, 2).unwrap();
    assert_eq!(dirs.len(), 68);
    let g = m.metric(&o).unwrap();
    let root = RootData::of(&m).unwrap();
    for d in &dirs {
        assert!((crate::linalg::norm(&g, d) - 1.0).abs() < 1e-14);
    }
    let norms = root.factor_norms(&m, &TangentVector::new(o, dirs[64].clone())).unwrap();
    assert!((root.predicted(&norms) - 2f64.sqrt()).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn essential_range_interval_is_exact_preimage(x in 0.0f64..6.0, eps in 1e-3f64..1.0, l in 0.0f64..4.0) {
        let d = c_function_density(3, &[0.5, 1.0], 1.0).unwrap();
        let er = essential_range(2.0, &d, &[x], &[eps], ScanGrid { spacing: 0.5, max: 20.0 }).unwrap();
        let inside = ((l * l + 1.0) - x).abs() < eps;
        let in_interval = er.verdicts[0].interval.map_or(false, |(lo, hi)| l > lo && l < hi);
        if ((l * l + 1.0 - x).abs() - eps).abs() > 1e-9 {
            prop_assert_eq!(inside, in_interval);
        }
    }

    #[test]
    fn density_is_nonnegative_and_increasing(n in 2usize..9, a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(hyperbolic_density(n, lo) >= 0.0);
        prop_assert!(hyperbolic_density(n, lo) <= hyperbolic_density(n, hi) * (1.0 + 1e-12));
    }

    #[test]
    fn rho_norm_is_sup_of_pairing(h1 in 0.0f64..3.0, h2 in 0.0f64..3.0, t in 0.0f64..1.5707) {
        let root = RootData { factor_h: vec![h1, h2], factor_dims: vec![2, 2], rho_norm: 0.5 * (h1 * h1 + h2 * h2).sqrt() };
        prop_assert!(root.predicted(&[t.cos(), t.sin()]) <= 2.0 * root.rho_norm + 1e-12);
    }
}

