//! Closed-form distances, Busemann functions and curvatures where known.

use super::{ChartManifold, Conformal, Kind, RadialProfile};
use nalgebra::DVector;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn ball_distance(p: &[f64], q: &[f64]) -> f64 {
    let dp = 1.0 - p.iter().map(|v| v * v).sum::<f64>();
    let dq = 1.0 - q.iter().map(|v| v * v).sum::<f64>();
    let t = 2.0 * dist2(p, q) / (dp * dq);
    // acosh(1 + t) computed stably for small t
    (t + (t * (t + 2.0)).sqrt()).ln_1p()
}

/// Poincare ball coordinates of a point given in normal coordinates of H^n.
fn normal_to_ball(x: &[f64]) -> Vec<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return x.to_vec();
    }
    let s = (r / 2.0).tanh() / r;
    x.iter().map(|v| v * s).collect()
}

impl ChartManifold {
    /// Constant sectional curvature, when the model has one.
    pub fn constant_curvature(&self) -> Option<f64> {
        match &self.kind {
            Kind::Euclidean => Some(0.0),
            Kind::Conformal(Conformal::PoincareBall) | Kind::Conformal(Conformal::HalfSpace) => Some(-1.0),
            Kind::Conformal(Conformal::Stereographic { .. }) => Some(1.0),
            Kind::Warped(RadialProfile::Sinh) => Some(-1.0),
            Kind::Warped(RadialProfile::Polynomial(c)) if c.len() == 1 => Some(0.0),
            Kind::Product(a, b) if a.is_euclidean() && b.is_euclidean() => Some(0.0),
            _ => None,
        }
    }

    /// Closed-form geodesic distance, when available.
    pub fn distance_oracle(&self, p: &DVector<f64>, q: &DVector<f64>) -> Option<f64> {
        let (p, q) = (p.as_slice(), q.as_slice());
        match &self.kind {
            Kind::Euclidean => Some(dist2(p, q).sqrt()),
            Kind::Conformal(Conformal::PoincareBall) => Some(ball_distance(p, q)),
            Kind::Conformal(Conformal::HalfSpace) => {
                let n = p.len();
                let t = dist2(p, q) / (2.0 * p[n - 1] * q[n - 1]);
                Some((t + (t * (t + 2.0)).sqrt()).ln_1p())
            }
            Kind::Conformal(Conformal::Stereographic { .. }) => {
                let lift = |x: &[f64]| {
                    let s = x.iter().map(|v| v * v).sum::<f64>();
                    let mut y: Vec<f64> = x.iter().map(|v| 2.0 * v / (1.0 + s)).collect();
                    y.push((s - 1.0) / (s + 1.0));
                    y
                };
                let chord = dist2(&lift(p), &lift(q)).sqrt();
                Some(2.0 * (chord / 2.0).min(1.0).asin())
            }
            Kind::Warped(RadialProfile::Sinh) => Some(ball_distance(&normal_to_ball(p), &normal_to_ball(q))),
            Kind::Warped(RadialProfile::Polynomial(c)) if c.len() == 1 => Some(dist2(p, q).sqrt()),
            Kind::Product(a, b) => {
                let na = a.dim;
                let da = a.distance_oracle(&DVector::from_column_slice(&p[..na]), &DVector::from_column_slice(&q[..na]))?;
                let db = b.distance_oracle(&DVector::from_column_slice(&p[na..]), &DVector::from_column_slice(&q[na..]))?;
                Some((da * da + db * db).sqrt())
            }
            _ => None,
        }
    }

    /// Closed-form Busemann function of the ray from `o` with unit initial
    /// velocity `v`, normalised so that it vanishes at `o` and decreases with
    /// unit speed along the ray. Available for flat models, the ball and
    /// the warped sinh model with `o = 0`, the half-space with any base point, and products of those.
    pub fn busemann_oracle(&self, o: &DVector<f64>, v: &DVector<f64>, x: &DVector<f64>) -> Option<f64> {
        match &self.kind {
            Kind::Euclidean => Some(-(x - o).dot(v)),
            Kind::Conformal(Conformal::PoincareBall) => {
                if o.norm() != 0.0 {
                    return None;
                }
                let xi = v / v.norm();
                let d = 1.0 - x.norm_squared();
                Some(((x - &xi).norm_squared() / d).ln())
            }
            Kind::Conformal(Conformal::HalfSpace) => {
                let n = o.len();
                let y0 = o[n - 1];
                let vy = v[n - 1];
                let horiz: DVector<f64> = DVector::from_fn(n, |i, _| if i + 1 < n { v[i] } else { 0.0 });
                let hn = horiz.norm();
                if hn <= 1e-14 * v.norm() {
                    return Some(if vy > 0.0 {
                        -(x[n - 1] / y0).ln()
                    } else {
                        let mut xi = o.clone();
                        xi[n - 1] = 0.0;
                        ((x - &xi).norm_squared() / (x[n - 1] * y0)).ln()
                    });
                }
                let e = horiz / hn;
                let radius = y0 * v.norm() / hn;
                let mut xi = o + e * (y0 * vy / hn + radius);
                xi[n - 1] = 0.0;
                let bx = ((x - &xi).norm_squared() / x[n - 1]).ln();
                let bo = ((o - &xi).norm_squared() / y0).ln();
                Some(bx - bo)
            }
            Kind::Warped(RadialProfile::Sinh) => {
                if o.norm() != 0.0 {
                    return None;
                }
                let xi = v / v.norm();
                let xb = DVector::from_vec(normal_to_ball(x.as_slice()));
                let d = 1.0 - xb.norm_squared();
                Some(((&xb - &xi).norm_squared() / d).ln())
            }
            Kind::Product(a, b) => {
                let na = a.dim;
                let split = |w: &DVector<f64>| (w.rows(0, na).into_owned(), w.rows(na, w.len() - na).into_owned());
                let (oa, ob) = split(o);
                let (va, vb) = split(v);
                let (xa, xb) = split(x);
                let ga = a.metric(&oa).ok()?;
                let gb = b.metric(&ob).ok()?;
                let na_ = crate::linalg::norm(&ga, &va);
                let nb_ = crate::linalg::norm(&gb, &vb);
                let part = |m: &ChartManifold, o: &DVector<f64>, v: &DVector<f64>, x: &DVector<f64>, s: f64| {
                    if s == 0.0 {
                        Some(0.0)
                    } else {
                        m.busemann_oracle(o, &(v / s), x).map(|b| s * b)
                    }
                };
                Some(part(a, &oa, &va, &xa, na_)? + part(b, &ob, &vb, &xb, nb_)?)
            }
            _ => None,
        }
    }
}
