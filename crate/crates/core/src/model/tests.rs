use super::registry::*;
use super::*;
use proptest::prelude::*;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn polar_hyperbolic() -> ChartManifold {
    // dr^2 + sinh^2 r dtheta^2 on r > 0
    custom("polar", 2, |x| vec![1.0, 0.0, 0.0, x[0].sinh().powi(2)], |x| x[0] > 0.0).unwrap()
}

/// Central differences of the metric and connection as an independent check
/// of the analytic jets.
fn fd_check(m: &ChartManifold, x: &[f64], rel: f64) {
    let n = m.dim();
    let h = 1e-6;
    let mut g = vec![0.0; n * n];
    let mut dg = vec![0.0; n * n * n];
    m.metric_jet_into(x, &mut g, &mut dg, None);
    let mut gam = vec![0.0; n * n * n];
    let mut dgam = vec![0.0; n.pow(4)];
    m.connection_into(x, &mut gam, Some(&mut dgam));
    let scale_g = g.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let scale_gam = gam.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    for k in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        let hk = h * x[k].abs().max(1.0);
        xp[k] += hk;
        xm[k] -= hk;
        let (mut gp, mut gm) = (vec![0.0; n * n], vec![0.0; n * n]);
        m.metric_into(&xp, &mut gp);
        m.metric_into(&xm, &mut gm);
        for e in 0..n * n {
            let fd = (gp[e] - gm[e]) / (2.0 * hk);
            let an = dg[k * n * n + e];
            assert!((fd - an).abs() <= rel * scale_g.max(an.abs()) * 1e3, "{}: dg[{k}][{e}] {an} vs {fd}", m.name());
        }
        let (mut cp, mut cm) = (vec![0.0; n.pow(3)], vec![0.0; n.pow(3)]);
        m.connection_into(&xp, &mut cp, None);
        m.connection_into(&xm, &mut cm, None);
        for e in 0..n.pow(3) {
            let fd = (cp[e] - cm[e]) / (2.0 * hk);
            let an = dgam[k * n.pow(3) + e];
            assert!((fd - an).abs() <= rel * scale_gam.max(an.abs()) * 1e3, "{}: dGamma[{k}][{e}] {an} vs {fd}", m.name());
        }
    }
}

#[test]
fn analytic_jets_match_finite_differences() {
    let cases: Vec<(ChartManifold, Vec<f64>)> = vec![
        (hyperbolic_ball(3).unwrap(), vec![0.3, -0.2, 0.4]),
        (hyperbolic_halfspace(2).unwrap(), vec![0.7, 1.3]),
        (sphere2().unwrap(), vec![0.4, -1.1]),
        (warped(RadialProfile::Sinh, 3).unwrap(), vec![0.5, -0.7, 0.2]),
        (warped(RadialProfile::Polynomial(vec![1.0, 1.0]), 2).unwrap(), vec![0.8, 0.3]),
        (warped(RadialProfile::Polynomial(vec![1.0, -0.01, 0.0005]), 2).unwrap(), vec![2.5, -1.0]),
        (product(hyperbolic_ball(2).unwrap(), euclidean(1).unwrap()).unwrap(), vec![0.1, 0.5, 3.0]),
    ];
    for (m, x) in &cases {
        fd_check(m, x, 1e-6);
    }
}

#[test]
fn ball_origin_christoffels_vanish() {
    let m = hyperbolic_ball(2).unwrap();
    let c = m.christoffel(&v(&[0.0, 0.0])).unwrap();
    assert!(c.data.iter().all(|x| *x == 0.0));
}

#[test]
fn polar_chart_christoffels() {
    let m = polar_hyperbolic();
    let c = m.christoffel(&v(&[1.0, 0.3])).unwrap();
    let (s, ch) = (1f64.sinh(), 1f64.cosh());
    assert!((c.get(0, 1, 1) + s * ch).abs() < 1e-6);
    assert!((c.get(1, 0, 1) - ch / s).abs() < 1e-6);
    assert!((c.get(1, 1, 0) - ch / s).abs() < 1e-6);
}

#[test]
fn polar_chart_curvature_by_finite_differences() {
    let m = polar_hyperbolic();
    let k = m.sectional_curvature(&v(&[1.2, 0.0]), &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
    assert!((k + 1.0).abs() < 1e-5, "{k}");
}

#[test]
fn constant_curvature_models() {
    let cases: Vec<(ChartManifold, Vec<f64>, f64)> = vec![
        (euclidean(3).unwrap(), vec![1.0, 2.0, 3.0], 0.0),
        (hyperbolic_ball(2).unwrap(), vec![0.5, 0.3], -1.0),
        (hyperbolic_ball(3).unwrap(), vec![-0.2, 0.6, 0.1], -1.0),
        (hyperbolic_halfspace(3).unwrap(), vec![0.4, -2.0, 0.3], -1.0),
        (sphere2().unwrap(), vec![2.0, -0.5], 1.0),
        (warped(RadialProfile::Sinh, 2).unwrap(), vec![1.5, -0.4], -1.0),
        (warped(RadialProfile::Sinh, 3).unwrap(), vec![0.0, 0.0, 0.0], -1.0),
    ];
    for (m, x, k) in cases {
        let n = m.dim();
        let x = v(&x);
        for (a, b) in [(0usize, 1usize), (0, n - 1), (1, n - 1)] {
            if a == b {
                continue;
            }
            let mut u = DVector::from_element(n, 0.1);
            u[a] = 1.0;
            let mut w = DVector::from_element(n, -0.2);
            w[b] = 0.7;
            let s = m.sectional_curvature(&x, &u, &w).unwrap();
            assert!((s - k).abs() < 1e-9, "{}: {s} vs {k}", m.name());
        }
        assert_eq!(m.constant_curvature(), Some(k));
    }
}

#[test]
fn ricci_of_hyperbolic_spaces() {
    let h2 = hyperbolic_ball(2).unwrap();
    let r = h2.ricci(&v(&[0.2, 0.1]), &v(&[1.0, 3.0])).unwrap();
    assert!((r + 1.0).abs() < 1e-10);
    let h3 = hyperbolic_halfspace(3).unwrap();
    let r = h3.ricci(&v(&[0.0, 0.0, 2.0]), &v(&[1.0, 0.0, 1.0])).unwrap();
    assert!((r + 2.0).abs() < 1e-10);
}

#[test]
fn degenerate_plane_rejected() {
    let m = hyperbolic_ball(2).unwrap();
    let e = m.sectional_curvature(&v(&[0.1, 0.1]), &v(&[1.0, 2.0]), &v(&[2.0, 4.0]));
    assert_eq!(e, Err(GeomError::DegeneratePlane));
}

#[test]
fn domain_violations_rejected() {
    let m = hyperbolic_ball(2).unwrap();
    assert!(matches!(m.metric(&v(&[0.8, 0.7])), Err(GeomError::Domain(_))));
    let h = hyperbolic_halfspace(2).unwrap();
    assert!(matches!(h.christoffel(&v(&[0.0, -1.0])), Err(GeomError::Domain(_))));
    assert!(matches!(h.metric(&v(&[0.0])), Err(GeomError::Precondition(_))));
}

#[test]
fn warped_polynomial_curvatures() {
    // phi = r + r^3: radial curvature -6/(1 + r^2)
    let m = warped(RadialProfile::Polynomial(vec![1.0, 1.0]), 3).unwrap();
    let x = v(&[0.6, -0.3, 0.9]);
    let r = x.norm();
    let u = &x / r;
    let w = v(&[0.3, 0.6, 0.0]);
    let k = m.sectional_curvature(&x, &u, &w).unwrap();
    assert!((k + 6.0 / (1.0 + r * r)).abs() < 1e-9, "{k}");
    // plane tangent to the sphere: (1 - phi'^2)/phi^2
    let w2 = u.cross(&w);
    let phi = r + r.powi(3);
    let dphi = 1.0 + 3.0 * r * r;
    let k2 = m.sectional_curvature(&x, &w, &w2).unwrap();
    assert!((k2 - (1.0 - dphi * dphi) / (phi * phi)).abs() < 1e-9, "{k2}");
    let p = m.profile().unwrap();
    assert!((p.radial_curvature(r) + 6.0 / (1.0 + r * r)).abs() < 1e-12);
    assert!((p.tangential_curvature(r) - (1.0 - dphi * dphi) / (phi * phi)).abs() < 1e-12);
}

#[test]
fn sign_changing_surrogate_changes_sign() {
    let p = RadialProfile::Polynomial(vec![1.0, -0.01, 0.0005]);
    assert!((p.radial_curvature(0.0) - 0.06).abs() < 1e-15);
    assert!(p.radial_curvature(4.0) < 0.0);
    let m = warped(p, 2).unwrap();
    assert!(m.flags().no_focal_points);
    let k0 = m.sectional_curvature(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
    let k4 = m.sectional_curvature(&v(&[4.0, 0.0]), &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap();
    assert!(k0 > 0.0 && k4 < 0.0, "{k0} {k4}");
}

#[test]
fn product_mixed_planes_are_flat() {
    let m = product(hyperbolic_ball(2).unwrap(), hyperbolic_ball(2).unwrap()).unwrap();
    let x = v(&[0.1, 0.2, -0.3, 0.1]);
    let k = m.sectional_curvature(&x, &v(&[1.0, 0.0, 0.0, 0.0]), &v(&[0.0, 0.0, 1.0, 0.0])).unwrap();
    assert!(k.abs() < 1e-12);
    let r = m.ricci(&x, &v(&[1.0, 0.5, 2.0, -1.0])).unwrap();
    let g = m.metric(&x).unwrap();
    assert!(r < 0.0 && r >= -1.0 - 1e-12, "{r} {g}");
    assert!(m.flags().negative_ricci);
}

#[test]
fn warped_sinh_matches_ball_distance_from_pole() {
    let m = warped(RadialProfile::Sinh, 3).unwrap();
    let x = v(&[0.3, -1.2, 0.4]);
    let d = m.distance_oracle(&v(&[0.0, 0.0, 0.0]), &x).unwrap();
    assert!((d - x.norm()).abs() < 1e-12);
}

#[test]
fn model_spec_round_trip() {
    let spec = ModelSpec::Product {
        factors: vec![ModelSpec::HyperbolicBall { dim: 2 }, ModelSpec::Euclidean { dim: 1 }],
    };
    let m = spec.build().unwrap();
    assert_eq!(m.dim(), 3);
    assert!(!m.flags().negative_ricci);
    assert!(ModelSpec::Euclidean { dim: 0 }.build().is_err());
}

fn any_model_point() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (0usize..6, prop::collection::vec(-0.55f64..0.55, 3))
}

fn pick(k: usize) -> ChartManifold {
    match k {
        0 => hyperbolic_ball(3).unwrap(),
        1 => sphere2().unwrap(),
        2 => warped(RadialProfile::Polynomial(vec![1.0, 1.0]), 3).unwrap(),
        3 => warped(RadialProfile::Sinh, 2).unwrap(),
        4 => product(hyperbolic_ball(2).unwrap(), euclidean(1).unwrap()).unwrap(),
        _ => hyperbolic_halfspace(3).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_symmetric_positive_definite((k, x) in any_model_point()) {
        let m = pick(k);
        let mut x = x[..m.dim()].to_vec();
        if k == 5 { x[2] = x[2].abs() + 0.1; }
        let g = m.metric(&v(&x)).unwrap();
        prop_assert!((&g - g.transpose()).abs().max() <= 1e-12 * g.abs().max());
        prop_assert!(g.clone().cholesky().is_some());
    }

    #[test]
    fn connection_is_torsion_free_and_metric((k, x) in any_model_point()) {
        let m = pick(k);
        let n = m.dim();
        let mut x = x[..n].to_vec();
        if k == 5 { x[2] = x[2].abs() + 0.1; }
        let c = m.christoffel(&v(&x)).unwrap();
        prop_assert!(c.max_asymmetry() <= 1e-12 * c.data.iter().fold(1.0f64, |a, b| a.max(b.abs())));
        // d_k g_ij = Gamma^l_ki g_lj + Gamma^l_kj g_il
        let g = m.metric(&v(&x)).unwrap();
        let dg = m.metric_derivatives(&v(&x)).unwrap();
        for kk in 0..n { for i in 0..n { for j in 0..n {
            let mut s = 0.0;
            for l in 0..n { s += c.get(l, kk, i) * g[(l, j)] + c.get(l, kk, j) * g[(i, l)]; }
            prop_assert!((s - dg[kk][(i, j)]).abs() <= 1e-10 * (1.0 + dg[kk][(i, j)].abs()));
        }}}
    }

    #[test]
    fn riemann_has_curvature_symmetries((k, x) in any_model_point()) {
        let m = pick(k);
        let n = m.dim();
        let mut x = x[..n].to_vec();
        if k == 5 { x[2] = x[2].abs() + 0.1; }
        let r = m.riemann(&v(&x)).unwrap();
        let g = m.metric(&v(&x)).unwrap();
        // lowered R_{lkij} = g_lq R^q_kij: antisymmetric in (i,j) and (l,k), pair symmetric
        let low = |l: usize, kk: usize, i: usize, j: usize| (0..n).map(|q| g[(l, q)] * r.get(q, kk, i, j)).sum::<f64>();
        let scale = r.data.iter().fold(1.0f64, |a, b| a.max(b.abs())) * g.abs().max();
        for a in 0..n { for b in 0..n { for c in 0..n { for d in 0..n {
            prop_assert!((low(a, b, c, d) + low(a, b, d, c)).abs() <= 1e-9 * scale);
            prop_assert!((low(a, b, c, d) + low(b, a, c, d)).abs() <= 1e-9 * scale);
            prop_assert!((low(a, b, c, d) - low(c, d, a, b)).abs() <= 1e-9 * scale);
        }}}}
    }
}
