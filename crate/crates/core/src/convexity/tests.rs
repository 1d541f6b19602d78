use super::*;
use crate::error::GeomError;
use crate::fd;
use crate::geodesic::{exp_map, radial_curvature_audit, IntegratorOptions, ShootingOptions};
use crate::linalg;
use crate::model::registry;
use crate::model::{RadialProfile, TangentVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn unit(m: &crate::ChartManifold, o: &DVector<f64>, v: &[f64]) -> TangentVector {
    TangentVector::new(o.clone(), dv(v)).normalized(m).unwrap()
}

/// Busemann function of the Poincare ball for the ray from 0 towards `xi`.
fn ball_busemann(xi: &DVector<f64>, x: &DVector<f64>) -> f64 {
    ((x - xi).norm_squared() / (1.0 - x.norm_squared())).ln()
}

/// Its gradient vector `G^{-1} db` with `G = 4 / (1 - |x|^2)^2`.
fn ball_busemann_gradient(xi: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let s = 1.0 - x.norm_squared();
    let db = (x - xi) * (2.0 / (x - xi).norm_squared()) + x * (2.0 / s);
    db * (s * s / 4.0)
}

fn ball_distance(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    let t = 2.0 * (p - q).norm_squared() / ((1.0 - p.norm_squared()) * (1.0 - q.norm_squared()));
    (1.0 + t).acosh()
}

fn shooting() -> ShootingOptions {
    ShootingOptions { step: 5e-3, ..ShootingOptions::default() }
}

#[test]
fn flat_busemann_matches_linear_function() {
    for n in [2, 3] {
        let m = registry::euclidean(n).unwrap();
        let o = DVector::zeros(n);
        let mut raw = vec![0.0; n];
        raw[0] = 0.6;
        raw[1] = -0.8;
        let v = unit(&m, &o, &raw);
        let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
        for x in [vec![1.0, 2.0, -0.5], vec![-3.0, 0.25, 1.5], vec![0.0, 0.0, 4.0]] {
            let x = dv(&x[..n]);
            let ev = ray.full(&x, None).unwrap();
            assert!((ev.value + x.dot(&v.components)).abs() < 1e-8, "{}", ev.value);
            assert!((ev.gradient.unwrap() + &v.components).abs().max() < 1e-8);
            assert!(ev.hessian.unwrap().abs().max() < 1e-8);
            assert_eq!(ev.direction_estimator, Some(Estimator::Transported));
        }
    }
}

#[test]
fn busemann_along_its_ray() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let o = DVector::zeros(2);
    let v = unit(&m, &o, &[0.6, 0.8]);
    let x = exp_map(&m, &TangentVector::new(o.clone(), &v.components * 2.0), 1e-3).unwrap();
    let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
    let ev = ray.gradient(&x).unwrap();
    assert!((ev.value + 2.0).abs() < 1e-8, "{}", ev.value);
    // gradient is minus the ray velocity at x
    let xi = &v.components / v.components.norm();
    let expect = ball_busemann_gradient(&xi, &x);
    let vel = &x.map(|_| 0.0) - &expect;
    assert!((ev.gradient.unwrap() + vel).abs().max() < 1e-8);
}

#[test]
fn hyperbolic_busemann_matches_closed_form() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let o = DVector::zeros(2);
    let v = unit(&m, &o, &[1.0, 1.0]);
    let xi = &v.components / v.components.norm();
    let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
    for x in [[0.2, -0.3], [-0.6, 0.1], [0.9, 0.3], [-0.97, -0.1]] {
        let x = dv(&x);
        let ev = ray.full(&x, None).unwrap();
        let g = m.metric(&x).unwrap();
        assert!((ev.value - ball_busemann(&xi, &x)).abs() < 1e-6);
        let grad = ev.gradient.clone().unwrap();
        assert!(linalg::norm(&g, &(&grad - ball_busemann_gradient(&xi, &x))) < 1e-6);
        // Id on the complement of the gradient, 0 along it
        let ev_h = linalg::metric_eigenvalues(&g, ev.hessian.as_ref().unwrap()).unwrap();
        assert!(ev_h[0].abs() < 1e-6 && (ev_h[1] - 1.0).abs() < 1e-6, "{ev_h:?}");
        assert!(ev.raw.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", ev.raw);
    }
}

#[test]
fn halfspace_busemann_matches_closed_form() {
    let m = registry::hyperbolic_halfspace(2).unwrap();
    let o = dv(&[0.0, 1.0]);
    let v = unit(&m, &o, &[0.6, 0.8]);
    // the ray is a semicircle centred on the axis ending at xi
    let (vx, vy) = (v.components[0], v.components[1]);
    let c = vy / vx;
    let xi = c + (1.0 + c * c).sqrt();
    let b = |x: &DVector<f64>| (((x[0] - xi).powi(2) + x[1] * x[1]) / x[1]).ln() - ((xi * xi + 1.0) / 1.0).ln();
    let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
    for x in [[0.5, 0.7], [-1.0, 2.0], [2.0, 0.3]] {
        let x = dv(&x);
        let ev = ray.value(&x).unwrap();
        assert!((ev.value - b(&x)).abs() < 1e-6, "{} {}", ev.value, b(&x));
    }
}

#[test]
fn busemann_hessian_agrees_with_finite_differences() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let o = DVector::zeros(2);
    let v = unit(&m, &o, &[0.3, -1.0]);
    let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
    let x = dv(&[0.35, 0.2]);
    let ev = ray.full(&x, None).unwrap();
    let h = ev.hessian.unwrap();
    let fdh = fd::covariant_hessian(&m, &x, 1e-2, |y| ray.truncated_value(y, ev.anchor)).unwrap();
    let tol = (5.0 * fdh.error).max(1e-3);
    assert!((&fdh.hessian - &h).abs().max() < tol, "{} vs {}", fdh.hessian, h);
    // derivative of b along its gradient is |grad b|^2 = 1
    let grad = ev.gradient.unwrap();
    let d = fdh.differential.dot(&grad);
    assert!((d - 1.0).abs() < 1e-3, "{d}");
}

#[test]
fn product_busemann_hessian_is_rank_one() {
    let h2 = registry::hyperbolic_ball(2).unwrap();
    let m = registry::product(h2, registry::euclidean(1).unwrap()).unwrap();
    let o = DVector::zeros(3);
    let v = unit(&m, &o, &[1.0, 0.0, 0.0]);
    let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
    let x = dv(&[0.2, 0.4, 1.5]);
    let ev = ray.full(&x, None).unwrap();
    let g = m.metric(&x).unwrap();
    let hs = ev.hessian.unwrap();
    let eig = linalg::metric_eigenvalues(&g, &hs).unwrap();
    assert!(eig[0].abs() < 1e-6 && eig[1].abs() < 1e-6 && (eig[2] - 1.0).abs() < 1e-6, "{eig:?}");
    // the flat factor is annihilated
    let e3 = dv(&[0.0, 0.0, 1.0]);
    assert!((&hs * &e3).abs().max() < 1e-6);
    let xi = dv(&[1.0, 0.0]);
    let xh = dv(&[0.2, 0.4]);
    assert!((ev.value - ball_busemann(&xi, &xh)).abs() < 1e-6);
}

#[test]
fn distance_hessian_flat_and_hyperbolic() {
    let e = registry::euclidean(3).unwrap();
    let p = dv(&[0.0, 1.0, 0.0]);
    let q = dv(&[2.0, 1.0, -1.0]);
    let h = distance_hessian(&e, &p, &q, &shooting()).unwrap();
    let d = &q - &p;
    let r = d.norm();
    let nh = &d / r;
    let want = (DMatrix::identity(3, 3) - &nh * nh.transpose()) / r;
    assert!((h - want).abs().max() < 1e-10);

    let m = registry::hyperbolic_ball(2).unwrap();
    let p = dv(&[0.1, -0.2]);
    let q = dv(&[-0.5, 0.4]);
    let r = ball_distance(&p, &q);
    let h = distance_hessian(&m, &p, &q, &shooting()).unwrap();
    let g = m.metric(&q).unwrap();
    let eig = linalg::metric_eigenvalues(&g, &h).unwrap();
    assert!(eig[0].abs() < 1e-8, "{eig:?}");
    assert!((eig[1] - 1.0 / r.tanh()).abs() < 1e-8, "{eig:?}");
    assert!(matches!(distance_hessian(&m, &p, &p, &shooting()), Err(GeomError::Domain(_))));
}

#[test]
fn distance_squared_and_exhaustion() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let p = DVector::zeros(2);
    // |q| = tanh(1) gives d(p, q) = 2
    let q = dv(&[1f64.tanh(), 0.0]);
    let h = distance_sq_hessian(&m, &p, &q, &shooting()).unwrap();
    let g = m.metric(&q).unwrap();
    let eig = linalg::metric_eigenvalues(&g, &h).unwrap();
    assert!((eig[0] - 1.0).abs() < 1e-8 && (eig[1] - 2.0 / 2f64.tanh()).abs() < 1e-8, "{eig:?}");
    assert_eq!(distance_sq_hessian(&m, &p, &p, &shooting()).unwrap(), m.metric(&p).unwrap());

    let ex = exhaustion_f(&m, &p, &q, &shooting()).unwrap();
    assert!((ex.value - 5f64.sqrt()).abs() < 1e-8);
    let min = linalg::metric_eigenvalues(&g, &ex.hessian).unwrap()[0];
    assert!((min - 5f64.powf(-1.5)).abs() < 1e-4, "{min}");
    assert!(linalg::norm(&g, &ex.gradient) <= 1.0);

    let e = registry::euclidean(2).unwrap();
    let ex = exhaustion_f(&e, &dv(&[1.0, 1.0]), &dv(&[4.0, 1.0]), &shooting()).unwrap();
    assert!((ex.value - 10f64.sqrt()).abs() < 1e-12);
    let at = exhaustion_f(&e, &p, &p, &shooting()).unwrap();
    assert_eq!(at.value, 1.0);
    assert_eq!(at.gradient.norm(), 0.0);
    let h = distance_sq_hessian(&e, &p, &dv(&[0.3, -2.0]), &shooting()).unwrap();
    assert!((h - DMatrix::identity(2, 2)).abs().max() < 1e-10);
}

fn audit(m: &crate::ChartManifold, p: &DVector<f64>, t_max: f64) -> crate::geodesic::CurvatureAudit {
    let dirs: Vec<DVector<f64>> = crate::quadrature::sphere_points(m.dim(), 8);
    radial_curvature_audit(m, p, &dirs, t_max, 0.5, 1e-9, &IntegratorOptions::with_step(1e-2)).unwrap()
}

#[test]
fn lambda_ratio_oracles() {
    let io = IntegratorOptions::with_step(1e-3);
    let e = registry::euclidean(3).unwrap();
    let o = DVector::zeros(3);
    let a = audit(&e, &o, 5.0);
    let rep = lambda_ratio_check(&e, &unit(&e, &o, &[1.0, 2.0, 2.0]), 5.0, Some(&a), HypothesisMode::Enforce, &io).unwrap();
    assert!(rep.holds && rep.max_deviation < 1e-9, "{rep:?}");

    let h = registry::hyperbolic_ball(2).unwrap();
    let o = DVector::zeros(2);
    let a = audit(&h, &o, 3.0);
    let rep = lambda_ratio_check(&h, &unit(&h, &o, &[1.0, 0.0]), 3.0, Some(&a), HypothesisMode::Enforce, &io).unwrap();
    assert!(rep.holds);
    // lambda(s) = tanh(s), so the largest excess is at the end of the grid
    assert!((rep.max_excess - (3f64.tanh() - 3.0)).abs() < 1e-3 || rep.max_excess > 1e-3 - 1.0);

    let s = registry::sphere2().unwrap();
    let o = DVector::zeros(2);
    let a = audit(&s, &o, 1.5);
    assert!(a.violated);
    let v = unit(&s, &o, &[1.0, 0.0]);
    let err = lambda_ratio_check(&s, &v, 1.5, Some(&a), HypothesisMode::Enforce, &io);
    assert!(matches!(err, Err(GeomError::Hypothesis(_))));
    assert!(matches!(lambda_ratio_check(&s, &v, 1.5, None, HypothesisMode::Enforce, &io), Err(GeomError::Hypothesis(_))));
    let rep = lambda_ratio_check(&s, &v, 1.5, Some(&a), HypothesisMode::Diagnostic, &io).unwrap();
    assert!(!rep.holds);
    assert!((rep.max_excess - (1.5f64.tan() - 1.5)).abs() < 1e-6, "{rep:?}");
}

#[test]
fn lambda_ratio_tracks_tanh() {
    let h = registry::hyperbolic_ball(3).unwrap();
    let o = DVector::zeros(3);
    let a = audit(&h, &o, 2.0);
    let v = unit(&h, &o, &[0.0, 1.0, 1.0]);
    let rep = lambda_ratio_check(&h, &v, 2.0, Some(&a), HypothesisMode::Enforce, &IntegratorOptions::with_step(1e-3)).unwrap();
    // excess tanh(s) - s is maximal (closest to zero) at small s
    assert!(rep.max_excess <= 0.0 && rep.max_excess > -1e-6, "{rep:?}");
    assert!(rep.hypothesis_verified);
}

#[test]
fn radial_profile_matches_closed_forms() {
    let n = 3;
    let e = registry::euclidean(n).unwrap();
    let prof = radial_profile(&e, &unit(&e, &DVector::zeros(3), &[0.0, 0.0, 1.0]), 6.0, 1e-2).unwrap();
    let nf = n as f64;
    // a = Delta f = (n - 1) u^{-1/2} + u^{-3/2} with u = 1 + r^2
    let a = |r: f64| (nf + (nf - 1.0) * r * r) / (1.0 + r * r).powf(1.5);
    for k in (5..prof.r.len() - 5).step_by(37) {
        let r = prof.r[k];
        assert!((prof.laplacian[k] - a(r)).abs() < 1e-10);
        let u = 1.0 + r * r;
        let d1 = -r * ((nf - 1.0) * u.powf(-1.5) + 3.0 * u.powf(-2.5));
        let d2 = -(nf - 1.0) * u.powf(-1.5) - 3.0 * u.powf(-2.5) + 3.0 * (nf - 1.0) * r * r * u.powf(-2.5) + 15.0 * r * r * u.powf(-3.5);
        let want = d2 + d1 * (nf - 1.0) / r;
        assert!((prof.bilaplacian[k] - want).abs() < 1e-5, "{} {want}", prof.bilaplacian[k]);
    }

    let h = registry::hyperbolic_ball(2).unwrap();
    let prof = radial_profile(&h, &unit(&h, &DVector::zeros(2), &[1.0, 0.0]), 8.0, 1e-2).unwrap();
    for k in (1..prof.r.len()).step_by(53) {
        let r = prof.r[k];
        let f = (1.0 + r * r).sqrt();
        let want = 1.0 / (f * f * f) + r / f / r.tanh();
        assert!((prof.laplacian[k] - want).abs() < 1e-7, "{r} {} {want}", prof.laplacian[k]);
    }
}

#[test]
fn radial_constants_flat_and_hyperbolic() {
    let e = registry::euclidean(3).unwrap();
    let region = RadialRegion { directions: crate::quadrature::sphere_points(3, 4), r_max: 20.0 };
    let c = radial_theorem_constants(&e, &DVector::zeros(3), &region, 1e-2).unwrap();
    assert!(c.c1.abs() < 1e-6);
    assert!((c.alpha - c.c2 / 4.0).abs() < 1e-12);
    assert!(c.beta >= -1.5 * c.c1 - 0.25 * c.c2 - 1e-6);

    let h = registry::hyperbolic_ball(2).unwrap();
    let region = RadialRegion { directions: crate::quadrature::sphere_points(2, 3), r_max: 10.0 };
    let c = radial_theorem_constants(&h, &DVector::zeros(2), &region, 1e-2).unwrap();
    assert!(c.c1.is_finite() && c.c2.is_finite());
    assert!(c.beta >= -1.5 * c.c1 - 0.25 * c.c2 - 1e-6, "{c:?}");
}

#[test]
fn boundary_measures() {
    let m = registry::hyperbolic_ball(3).unwrap();
    let o = DVector::zeros(3);
    for mu in [BoundaryMeasure::uniform(&m, o.clone(), 17).unwrap(), BoundaryMeasure::dyadic(&m, o.clone(), 12).unwrap()] {
        assert!((mu.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = m.metric(&o).unwrap();
        assert!(mu.directions.iter().all(|d| (linalg::norm(&g, d) - 1.0).abs() < 1e-12));
    }
    let bad = BoundaryMeasure::new(&m, o.clone(), vec![dv(&[1.0, 0.0, 0.0])], vec![0.5]);
    assert!(matches!(bad, Err(GeomError::Precondition(_))));
}

#[test]
fn averaged_f_flat_cancels() {
    let m = registry::euclidean(2).unwrap();
    let mu = BoundaryMeasure::uniform(&m, DVector::zeros(2), 8).unwrap();
    let v = averaged_f(&m, &mu, &dv(&[0.7, -1.2]), &BusemannOptions::default()).unwrap();
    assert!(v.gradient.abs().max() < 1e-8);
    assert!(v.hessian.abs().max() < 1e-8);
    let f = AveragedF::new(&m, mu, &BusemannOptions::default()).unwrap();
    let samples = ball_samples(&m, &DVector::zeros(2), 2.0, 4, 1e-2).unwrap();
    let cert = certify_strict_convexity(&m, &ConvexTarget::AveragedF(&f), &samples, 1e-3).unwrap();
    assert!(!cert.strict && cert.min_hessian_eigenvalue.abs() < 1e-6);
}

#[test]
fn averaged_f_laplacian_on_hyperbolic_space() {
    let m = registry::hyperbolic_ball(3).unwrap();
    let mu = BoundaryMeasure::uniform(&m, DVector::zeros(3), 6).unwrap();
    let f = AveragedF::new(&m, mu, &BusemannOptions::default()).unwrap();
    let v = f.evaluate(&dv(&[0.3, -0.1, 0.2])).unwrap();
    assert!((v.laplacian - 2.0).abs() < 1e-3, "{}", v.laplacian);
    let g = m.metric(&dv(&[0.3, -0.1, 0.2])).unwrap();
    assert!(linalg::norm(&g, &v.gradient) <= 1.0 + 1e-9);
    assert!(linalg::metric_eigenvalues(&g, &v.hessian).unwrap()[0] > -1e-6);
}

#[test]
fn exhaustion_certificate_on_hyperbolic_plane() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let o = DVector::zeros(2);
    let samples = ball_samples(&m, &o, 5.0, 100, 1e-2).unwrap();
    assert!(samples.iter().all(|x| ball_distance(&o, x) <= 5.0 + 1e-6));
    let target = ConvexTarget::ExhaustionF { center: o.clone(), opts: shooting() };
    let cert = certify_strict_convexity(&m, &target, &samples, 1e-3).unwrap();
    assert!(cert.strict, "{}", cert.min_hessian_eigenvalue);
    assert!(cert.gradient_bound <= 1.0);
    for s in &cert.samples {
        let r = ball_distance(&o, &dv(&s.point));
        assert!(s.min_eigenvalue >= (1.0 + r * r).powf(-1.5) - 1e-6);
    }
    let target = ConvexTarget::DistanceSq { center: o.clone(), opts: shooting() };
    let cert = certify_strict_convexity(&m, &target, &samples[..10], 0.5).unwrap();
    assert!(cert.strict);
}

#[test]
fn gradient_lines_are_geodesics() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let o = DVector::zeros(2);
    let v = unit(&m, &o, &[1.0, 0.0]);
    let rep = integral_curve_check(&m, &v, &dv(&[0.1, 0.3]), 5.0, 0.2, &BusemannOptions::default()).unwrap();
    assert!(rep.max_deviation < 1e-3, "{rep:?}");
    let e = registry::euclidean(2).unwrap();
    let rep = integral_curve_check(&e, &unit(&e, &o, &[0.0, 1.0]), &dv(&[1.0, 1.0]), 5.0, 0.5, &BusemannOptions::default()).unwrap();
    assert!(rep.max_deviation < 1e-10);
}

#[test]
fn non_convergent_schedule_reports_gaps() {
    let m = registry::euclidean(2).unwrap();
    let opts = BusemannOptions { value_tol: 0.0, ..BusemannOptions::default() };
    let ray = BusemannRay::new(&m, &unit(&m, &DVector::zeros(2), &[1.0, 0.0]), &opts).unwrap();
    match ray.value(&dv(&[0.0, 3.0])) {
        Err(GeomError::NonConvergence { gaps }) => assert_eq!(gaps.len(), 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn warped_surrogate_radial_constants_satisfy_bound() {
    let m = registry::warped(RadialProfile::Polynomial(vec![1.0, 1.0]), 2).unwrap();
    let region = RadialRegion { directions: crate::quadrature::sphere_points(2, 2), r_max: 5.0 };
    let c = radial_theorem_constants(&m, &DVector::zeros(2), &region, 1e-2).unwrap();
    assert!(c.beta >= -1.5 * c.c1 - 0.25 * c.c2 - 1e-6, "{c:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn busemann_hessian_invariants(angle in 0.0..std::f64::consts::TAU, x0 in -0.6..0.6f64, x1 in -0.6..0.6f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let m = registry::hyperbolic_ball(2).unwrap();
        let o = DVector::zeros(2);
        let v = unit(&m, &o, &[angle.cos(), angle.sin()]);
        let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
        let x = dv(&[x0, x1]);
        let ev = ray.full(&x, None).unwrap();
        let g = m.metric(&x).unwrap();
        let grad = ev.gradient.unwrap();
        let h = ev.hessian.unwrap();
        prop_assert!((linalg::norm(&g, &grad) - 1.0).abs() < 1e-4);
        prop_assert!((&h * &grad).norm() < 1e-4);
        let w = dv(&[a, b]);
        let perp = &w - &grad * linalg::inner(&g, &w, &grad);
        let full = w.dot(&(&h * &w));
        let proj = perp.dot(&(&h * &perp));
        prop_assert!((full - proj).abs() < 1e-6);
        prop_assert!(linalg::metric_eigenvalues(&g, &h).unwrap()[0] > -1e-6);
        let t = ev.raw.windows(2).all(|w| w[1] <= w[0] + 1e-6);
        prop_assert!(t);
    }
}
