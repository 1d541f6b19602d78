//! Public-API checks against closed forms computed independently here.

use horolab_core::convexity::{BusemannOptions, BusemannRay};
use horolab_core::geodesic::{distance, ShootingOptions};
use horolab_core::model::registry;
use horolab_core::TangentVector;
use nalgebra::DVector;

fn ball_distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let q = 2.0 * (x - y).norm_squared() / ((1.0 - x.norm_squared()) * (1.0 - y.norm_squared()));
    (1.0 + q).acosh()
}

fn ball_busemann(zeta: &DVector<f64>, x: &DVector<f64>) -> f64 {
    ((zeta - x).norm_squared() / (1.0 - x.norm_squared())).ln()
}

#[test]
fn ball_distance_matches_cross_ratio_formula() {
    let m = registry::hyperbolic_ball(3).unwrap();
    let pairs = [([0.1, -0.2, 0.3], [-0.4, 0.1, 0.2]), ([0.0, 0.0, 0.0], [0.6, 0.3, -0.2]), ([0.5, 0.5, 0.1], [-0.5, 0.3, 0.0])];
    for (a, b) in pairs {
        let (x, y) = (DVector::from_column_slice(&a), DVector::from_column_slice(&b));
        let d = distance(&m, &x, &y, &ShootingOptions::default()).unwrap();
        assert!((d - ball_distance(&x, &y)).abs() < 1e-6, "{d} vs {}", ball_distance(&x, &y));
    }
}

#[test]
fn ball_busemann_matches_poisson_logarithm() {
    let m = registry::hyperbolic_ball(2).unwrap();
    let zeta = DVector::from_column_slice(&[0.6, 0.8]);
    // unit speed at the origin: the metric there is 4 delta
    let v = TangentVector::new(DVector::zeros(2), &zeta / 2.0);
    let ray = BusemannRay::new(&m, &v, &BusemannOptions::default()).unwrap();
    for p in [[0.2, -0.1], [-0.5, 0.3], [0.3, 0.4]] {
        let x = DVector::from_column_slice(&p);
        let b = ray.value(&x).unwrap().value;
        assert!((b - ball_busemann(&zeta, &x)).abs() < 1e-5, "{b} vs {}", ball_busemann(&zeta, &x));
    }
}
