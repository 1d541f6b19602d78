//! Hessians of distance functions, the exhaustion function, the `lambda(s) <= s`
//! comparison and the radial constants `c1, c2, alpha, beta`.

use crate::error::{GeomError, Result};
use crate::geodesic::{integrate_jacobi_tensor, log_map, CurvatureAudit, IntegratorOptions, ShootingOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Data of `r = d(p, .)` at `q`: shape operator of the distance sphere in a
/// parallel frame and the unit radial velocity.
struct RadialJet {
    r: f64,
    point: DVector<f64>,
    velocity: DVector<f64>,
    frame: DMatrix<f64>,
    shape: DMatrix<f64>,
}

fn radial_jet(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>, opts: &ShootingOptions) -> Result<RadialJet> {
    let lm = log_map(model, p, q, opts)?;
    let r = lm.length;
    if r == 0.0 {
        return Err(GeomError::Domain("distance function is not smooth at its base point".into()));
    }
    let u = TangentVector::new(p.clone(), &lm.velocity / r);
    let m = model.dim() - 1;
    let io = IntegratorOptions { step: opts.step, record_every: usize::MAX };
    let field = integrate_jacobi_tensor(model, &u, r, &DMatrix::zeros(m, m), &DMatrix::identity(m, m), &io)?;
    if let Some(t) = field.path.truncated_at {
        return Err(GeomError::Domain(format!("geodesic left the chart at t = {t}")));
    }
    let y = field.values.last().unwrap();
    let yp = field.derivatives.last().unwrap();
    if linalg::condition_ratio(y) < 1e-12 {
        return Err(GeomError::ConjugatePoint { t: r });
    }
    let inv = y.clone().try_inverse().ok_or(GeomError::ConjugatePoint { t: r })?;
    let node = field.path.end();
    Ok(RadialJet {
        r,
        point: node.point.clone(),
        velocity: node.velocity.clone(),
        frame: node.frame.clone(),
        shape: linalg::sym(&(yp * inv)),
    })
}

impl RadialJet {
    fn coordinate(&self, model: &ChartManifold, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let g = model.metric(&self.point)?;
        Ok(linalg::sym(&(&g * &self.frame * s * self.frame.transpose() * &g)))
    }

    fn dr(&self, model: &ChartManifold) -> Result<DMatrix<f64>> {
        let g = model.metric(&self.point)?;
        let c = &g * &self.velocity;
        Ok(&c * c.transpose())
    }
}

/// Covariant Hessian of `r = d(p, .)` at `q`, assembled from the Jacobi
/// tensor `Y(0) = 0, Y'(0) = Id` as `Hess r = Y' Y^{-1}` on the normal space.
pub fn distance_hessian(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>, opts: &ShootingOptions) -> Result<DMatrix<f64>> {
    let jet = radial_jet(model, p, q, opts)?;
    jet.coordinate(model, &jet.shape)
}

/// Hessian of `u = r^2 / 2`, `dr (x) dr + r Hess r`; the metric at `q = p`.
pub fn distance_sq_hessian(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>, opts: &ShootingOptions) -> Result<DMatrix<f64>> {
    if p == q {
        return model.metric(p);
    }
    let jet = radial_jet(model, p, q, opts)?;
    Ok(jet.dr(model)? + jet.coordinate(model, &(&jet.shape * jet.r))?)
}

/// Value, gradient vector and Hessian of `f = sqrt(1 + r^2)`.
#[derive(Debug, Clone)]
pub struct ExhaustionValue {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub distance: f64,
}

/// The exhaustion function `f = sqrt(1 + r^2)` with
/// `Hess f = (1 + r^2)^{-3/2} dr^2 + r (1 + r^2)^{-1/2} Hess r`.
pub fn exhaustion_f(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>, opts: &ShootingOptions) -> Result<ExhaustionValue> {
    if p == q {
        return Ok(ExhaustionValue {
            value: 1.0,
            gradient: DVector::zeros(model.dim()),
            hessian: model.metric(p)?,
            distance: 0.0,
        });
    }
    let jet = radial_jet(model, p, q, opts)?;
    let r = jet.r;
    let f = (1.0 + r * r).sqrt();
    let hessian = jet.dr(model)? / (f * f * f) + jet.coordinate(model, &(&jet.shape * (r / f)))?;
    Ok(ExhaustionValue { value: f, gradient: &jet.velocity * (r / f), hessian, distance: r })
}

/// Whether `lambda_ratio_check` insists on a passing curvature audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisMode {
    Enforce,
    /// Run regardless and report the outcome.
    Diagnostic,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaReport {
    /// `max (lambda(s) - s)` over the grid and frame directions.
    pub max_excess: f64,
    /// `max |lambda(s) - s|`.
    pub max_deviation: f64,
    /// `(s, frame column)` of the largest excess.
    pub witness: (f64, usize),
    pub holds: bool,
    pub samples: usize,
    pub hypothesis_verified: bool,
}

/// Slack allowed in `lambda(s) <= s`.
pub const LAMBDA_SLACK: f64 = 1e-6;

/// Evaluates `lambda(s) = |Y(s)|^2 / <Y'(s), Y(s)>` for the Jacobi fields
/// with `Y(0) = 0` and `Y'(0)` running over the parallel frame along the
/// geodesic of `v`. A non-positive denominator counts as an infinite excess.
pub fn lambda_ratio_check(
    model: &ChartManifold,
    v: &TangentVector,
    t_max: f64,
    audit: Option<&CurvatureAudit>,
    mode: HypothesisMode,
    opts: &IntegratorOptions,
) -> Result<LambdaReport> {
    let verified = matches!(audit, Some(a) if !a.violated);
    if mode == HypothesisMode::Enforce {
        match audit {
            None => return Err(GeomError::Hypothesis("radial curvature audit not run".into())),
            Some(a) if a.violated => {
                return Err(GeomError::Hypothesis(format!(
                    "radial curvature {} > 0 at t = {}",
                    a.max_curvature, a.witness.1
                )))
            }
            _ => {}
        }
    }
    let v = v.normalized(model)?;
    let m = model.dim() - 1;
    let field = integrate_jacobi_tensor(model, &v, t_max, &DMatrix::zeros(m, m), &DMatrix::identity(m, m), opts)?;
    if let Some(t) = field.path.truncated_at {
        return Err(GeomError::Domain(format!("geodesic left the chart at t = {t}")));
    }
    let mut report = LambdaReport {
        max_excess: f64::NEG_INFINITY,
        max_deviation: 0.0,
        witness: (0.0, 0),
        holds: true,
        samples: 0,
        hypothesis_verified: verified,
    };
    for (k, node) in field.path.nodes.iter().enumerate().skip(1) {
        let s = node.t;
        let y = &field.values[k];
        let yp = &field.derivatives[k];
        for c in 0..m {
            let yc = y.column(c);
            let den = yp.column(c).dot(&yc);
            let excess = if den > 0.0 { yc.norm_squared() / den - s } else { f64::INFINITY };
            report.samples += 1;
            report.max_deviation = report.max_deviation.max(excess.abs());
            if excess > report.max_excess {
                report.max_excess = excess;
                report.witness = (s, c);
            }
        }
    }
    report.holds = report.max_excess <= LAMBDA_SLACK;
    Ok(report)
}

/// Radial sampling region for `radial_theorem_constants`.
#[derive(Debug, Clone)]
pub struct RadialRegion {
    /// Directions at `p`; normalised internally.
    pub directions: Vec<DVector<f64>>,
    pub r_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialConstants {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    /// `inf (2 Delta h - Delta^2 f) / (4 h)` with `Delta h = 3 Delta f / f^4 + 12 |grad f|^2 / f^5`.
    pub beta: f64,
    /// Same infimum with `Delta h = -3 Delta f / f^4 + 12 |grad f|^2 / f^5`,
    /// the Laplacian of `h = f^{-3}` under the trace convention.
    pub beta_trace: f64,
    /// `sup |Delta f|` and `sup |Delta^2 f|` over the grid.
    pub max_laplacian: f64,
    pub max_bilaplacian: f64,
    pub samples: usize,
}

/// Profiles of `Delta f` and `Delta^2 f` along one geodesic from `p`.
#[derive(Debug, Clone)]
pub struct RadialProfileSample {
    pub r: Vec<f64>,
    pub laplacian: Vec<f64>,
    pub bilaplacian: Vec<f64>,
}

/// `Delta f` and `Delta^2 f` for `f = sqrt(1 + r^2)` along the geodesic of `u`
/// at spacing `h`. `Delta f = f'' + f' Delta r` with `Delta r = tr(Y' Y^{-1})`;
/// `Delta^2 f` applies the radial part `a'' + a' Delta r` of the Laplacian to
/// `a = Delta f` by central differences, Richardson-combined over `h` and `2h`.
/// Interior nodes `2 <= k <= N - 2` carry the bilaplacian.
pub fn radial_profile(model: &ChartManifold, u: &TangentVector, r_max: f64, h: f64) -> Result<RadialProfileSample> {
    let n = model.dim();
    let m = n - 1;
    let u = u.normalized(model)?;
    let io = IntegratorOptions { step: h, record_every: 1 };
    let field = integrate_jacobi_tensor(model, &u, r_max, &DMatrix::zeros(m, m), &DMatrix::identity(m, m), &io)?;
    if let Some(t) = field.path.truncated_at {
        return Err(GeomError::Domain(format!("radial grid leaves the chart at r = {t}")));
    }
    let nodes = &field.path.nodes;
    let hh = field.path.step;
    let mut rs = Vec::with_capacity(nodes.len());
    let mut lap = Vec::with_capacity(nodes.len());
    let mut dr = Vec::with_capacity(nodes.len());
    for (k, node) in nodes.iter().enumerate() {
        let r = node.t;
        rs.push(r);
        if k == 0 {
            lap.push(n as f64);
            dr.push(f64::NAN);
            continue;
        }
        let y = &field.values[k];
        let inv = y.clone().try_inverse().ok_or(GeomError::ConjugatePoint { t: r })?;
        let delta_r = (&field.derivatives[k] * inv).trace();
        let f = (1.0 + r * r).sqrt();
        lap.push(1.0 / (f * f * f) + r / f * delta_r);
        dr.push(delta_r);
    }
    let len = lap.len();
    let mut bil = vec![f64::NAN; len];
    for k in 2..len.saturating_sub(2) {
        let d2a = (lap[k + 1] - 2.0 * lap[k] + lap[k - 1]) / (hh * hh);
        let d2b = (lap[k + 2] - 2.0 * lap[k] + lap[k - 2]) / (4.0 * hh * hh);
        let d1a = (lap[k + 1] - lap[k - 1]) / (2.0 * hh);
        let d1b = (lap[k + 2] - lap[k - 2]) / (4.0 * hh);
        let d2 = (4.0 * d2a - d2b) / 3.0;
        let d1 = (4.0 * d1a - d1b) / 3.0;
        bil[k] = d2 + d1 * dr[k];
    }
    Ok(RadialProfileSample { r: rs, laplacian: lap, bilaplacian: bil })
}

/// Constants of the radial absolute-continuity argument for `f = sqrt(1 + r^2)`
/// and `h = f^{-3}` over geodesic rays from `p` of length `region.r_max`
/// sampled at spacing `grid`.
pub fn radial_theorem_constants(model: &ChartManifold, p: &DVector<f64>, region: &RadialRegion, grid: f64) -> Result<RadialConstants> {
    model.check_point(p)?;
    if region.directions.is_empty() || !(region.r_max > 0.0) || !(grid > 0.0) {
        return Err(GeomError::Precondition("radial region needs directions, r_max > 0 and grid > 0".into()));
    }
    let mut out = RadialConstants {
        c1: 0.0,
        c2: 0.0,
        alpha: 0.0,
        beta: f64::INFINITY,
        beta_trace: f64::INFINITY,
        max_laplacian: 0.0,
        max_bilaplacian: 0.0,
        samples: 0,
    };
    for d in &region.directions {
        let prof = radial_profile(model, &TangentVector::new(p.clone(), d.clone()), region.r_max, grid)?;
        for k in 0..prof.r.len() {
            let (r, a, b) = (prof.r[k], prof.laplacian[k], prof.bilaplacian[k]);
            out.c1 = out.c1.max(-a);
            out.max_laplacian = out.max_laplacian.max(a.abs());
            if !b.is_finite() {
                continue;
            }
            out.samples += 1;
            let f = (1.0 + r * r).sqrt();
            let f3 = f * f * f;
            let grad2 = r * r / (f * f);
            out.c2 = out.c2.max(b * f3);
            out.max_bilaplacian = out.max_bilaplacian.max(b.abs());
            let dh = 3.0 * a / f.powi(4) + 12.0 * grad2 / f.powi(5);
            let dh_trace = -3.0 * a / f.powi(4) + 12.0 * grad2 / f.powi(5);
            out.beta = out.beta.min(f3 / 4.0 * (2.0 * dh - b));
            out.beta_trace = out.beta_trace.min(f3 / 4.0 * (2.0 * dh_trace - b));
        }
    }
    out.alpha = 1.5 * out.c1 + 0.25 * out.c2;
    Ok(out)
}
