//! Boundary-value Jacobi tensors, stable tensors, and focal/conjugate checks.

use super::flow::Layout;
use super::path::{grid, initial_frame, integrate_state, integrate_with, IntegratorOptions, JacobiTensorField};
use crate::error::{GeomError, Result};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

fn fundamental_pair(m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut y = DMatrix::zeros(m, 2 * m);
    let mut yp = DMatrix::zeros(m, 2 * m);
    for i in 0..m {
        y[(i, i)] = 1.0;
        yp[(i, m + i)] = 1.0;
    }
    (y, yp)
}

/// Relative size below which `Y2(s)` is treated as singular.
const SINGULAR: f64 = 1e-9;

/// Jacobi tensor `D` along the geodesic of `v` with `D(0) = Id`, `D(s) = 0`.
/// Fails with `ConjugatePoint` when `s` is conjugate to the start.
pub fn jacobi_tensor_bvp(model: &ChartManifold, v: &TangentVector, s: f64, opts: &IntegratorOptions) -> Result<JacobiTensorField> {
    opts.validate()?;
    let frame = initial_frame(model, v)?;
    let m = model.dim() - 1;
    let (y0, y0p) = fundamental_pair(m);
    let pair = integrate_with(model, v, &frame, Some((&y0, &y0p)), s, opts)?;
    if let Some(t) = pair.path.truncated_at {
        return Err(GeomError::Domain(format!("geodesic left the chart at t = {t}")));
    }
    let last = pair.values.len() - 1;
    let y1s = pair.values[last].columns(0, m).into_owned();
    let y2s = pair.values[last].columns(m, m).into_owned();
    let scale = pair.values.iter().map(|y| y.columns(m, m).abs().max()).fold(1e-300, f64::max);
    if linalg::condition_ratio(&y2s) < SINGULAR || y2s.abs().max() < SINGULAR * scale {
        return Err(GeomError::ConjugatePoint { t: s });
    }
    let mix = y2s.lu().solve(&y1s).ok_or(GeomError::ConjugatePoint { t: s })?;
    let values = pair
        .values
        .iter()
        .map(|y| y.columns(0, m) - y.columns(m, m) * &mix)
        .collect();
    let derivatives = pair
        .derivatives
        .iter()
        .map(|y| y.columns(0, m) - y.columns(m, m) * &mix)
        .collect();
    Ok(JacobiTensorField { path: pair.path, values, derivatives })
}

/// Settings for the stable Jacobi tensor limit.
#[derive(Debug, Clone, PartialEq)]
pub struct StableOptions {
    pub step: f64,
    /// Increasing boundary parameters `s_k`.
    pub schedule: Vec<f64>,
    /// Operator-norm tolerance on successive extrapolated estimates.
    pub tol: f64,
}

impl Default for StableOptions {
    fn default() -> Self {
        StableOptions { step: 1e-3, schedule: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0], tol: 1e-8 }
    }
}

/// Stable Jacobi tensor at the start of a geodesic.
#[derive(Debug, Clone)]
pub struct StableJacobiTensor {
    pub base: DVector<f64>,
    /// Unit initial direction.
    pub direction: DVector<f64>,
    /// Orthonormal frame of the normal space, as columns.
    pub frame: DMatrix<f64>,
    /// Symmetrised `D'(0)` in the frame.
    pub derivative: DMatrix<f64>,
    /// Boundary parameter at which the estimate was accepted.
    pub s_used: f64,
    /// Last successive gap (operator norm).
    pub gap: f64,
    pub gaps: Vec<f64>,
    /// Raw boundary estimates `-Y2(s_k)^{-1} Y1(s_k)`.
    pub raw: Vec<DMatrix<f64>>,
    /// Operator norm of the antisymmetric part of the accepted estimate.
    pub asymmetry: f64,
}

impl StableJacobiTensor {
    /// `-tr D'(0)`, the mean curvature of the horosphere through the base.
    pub fn mean_curvature(&self) -> f64 {
        -self.derivative.trace()
    }

    /// `D'(0)` as a symmetric bilinear form in chart coordinates,
    /// `G F D' F^T G`.
    pub fn coordinate_form(&self, model: &ChartManifold) -> Result<DMatrix<f64>> {
        let g = model.metric(&self.base)?;
        Ok(&g * &self.frame * &self.derivative * self.frame.transpose() * &g)
    }
}

/// Limit of `D_s'(0)` as `s -> infinity` along the geodesic of `u`.
///
/// The boundary estimates are extrapolated linearly in `1/s` between
/// consecutive schedule points, which removes the `1/s` decay in flat
/// directions; exponentially converging directions are unaffected to
/// leading order. Accepts at the first gap below `opts.tol`.
pub fn stable_jacobi_tensor(model: &ChartManifold, u: &TangentVector, opts: &StableOptions) -> Result<StableJacobiTensor> {
    let io = IntegratorOptions::with_step(opts.step);
    io.validate()?;
    model.check_vector(u)?;
    if opts.schedule.len() < 3 || opts.schedule.windows(2).any(|w| !(w[1] > w[0])) || opts.schedule[0] <= 0.0 {
        return Err(GeomError::Precondition("schedule needs at least three increasing positive values".into()));
    }
    let u = u.normalized(model)?;
    let frame = initial_frame(model, &u)?;
    let n = model.dim();
    let m = n - 1;
    let layout = Layout { n, fc: m, jc: 2 * m, variational: false };
    let mut y0 = vec![0.0; layout.len()];
    y0[..n].copy_from_slice(u.base.as_slice());
    y0[n..2 * n].copy_from_slice(u.components.as_slice());
    y0[layout.frame()..layout.frame() + n * m].copy_from_slice(frame.as_slice());
    let (a, b) = fundamental_pair(m);
    let yoff = layout.y();
    let ypoff = layout.yp();
    y0[yoff..yoff + 2 * m * m].copy_from_slice(a.as_slice());
    y0[ypoff..ypoff + 2 * m * m].copy_from_slice(b.as_slice());

    let t_max = *opts.schedule.last().unwrap();
    let (_, h) = grid(t_max, opts.step);
    let checkpoints: Vec<usize> = opts.schedule.iter().map(|s| (s / h).round() as usize).collect();
    let mut raw: Vec<DMatrix<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut extrap: Vec<DMatrix<f64>> = Vec::new();
    let mut gaps: Vec<f64> = Vec::new();
    let mut failure: Option<GeomError> = None;
    let mut accepted: Option<usize> = None;
    let run = integrate_state(model, layout, y0, t_max, opts.step, |k, s| {
        if !checkpoints.contains(&k) {
            return true;
        }
        let y = DMatrix::from_column_slice(m, 2 * m, &s[yoff..yoff + 2 * m * m]);
        let y1 = y.columns(0, m).into_owned();
        let y2 = y.columns(m, m).into_owned();
        // fields start with unit derivative, so a vanishing one has a tiny
        // singular value in absolute terms; mixed growth rates alone do not
        // make the relative condition number meaningful
        if linalg::smallest_singular(&y2) < SINGULAR * (k as f64 * h).min(1.0) {
            failure = Some(GeomError::Hypothesis(format!("conjugate point before s = {}", k as f64 * h)));
            return false;
        }
        let d = match y2.lu().solve(&y1) {
            Some(sol) => -sol,
            None => {
                failure = Some(GeomError::Hypothesis("singular boundary tensor".into()));
                return false;
            }
        };
        let t = k as f64 * h;
        if let (Some(prev), Some(&tp)) = (raw.last(), times.last()) {
            let e = &d + (&d - prev) * (tp / (t - tp));
            if let Some(pe) = extrap.last() {
                gaps.push(linalg::op_norm(&(&e - pe)));
            }
            extrap.push(e);
        }
        raw.push(d);
        times.push(t);
        if let Some(&g) = gaps.last() {
            if g < opts.tol {
                accepted = Some(extrap.len() - 1);
                return false;
            }
        }
        true
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let idx = match accepted {
        Some(i) => i,
        None => {
            if run.left_domain && raw.len() < 3 {
                return Err(GeomError::Domain("geodesic left the chart before the schedule completed".into()));
            }
            return Err(GeomError::NonConvergence { gaps });
        }
    };
    let est = extrap[idx].clone();
    let asymmetry = linalg::op_norm(&((&est - est.transpose()) * 0.5));
    Ok(StableJacobiTensor {
        base: u.base.clone(),
        direction: u.components.clone(),
        frame,
        derivative: linalg::sym(&est),
        s_used: times[idx + 1],
        gap: *gaps.last().unwrap(),
        gaps,
        raw,
        asymmetry,
    })
}

/// Result of monitoring `|Y|^2` along Jacobi fields vanishing at the start.
#[derive(Debug, Clone, Serialize)]
pub struct FocalReport {
    /// True when `|Y c|^2` is strictly increasing for every `c` on the sampled interval.
    pub increasing: bool,
    /// First parameter where the derivative of `|Y c|^2` fails to be positive.
    pub first_violation: Option<f64>,
    /// Smallest eigenvalue of `sym(Y'^T Y)` over the sampled nodes.
    pub min_rate: f64,
}

/// Checks that `t -> |Y(t) c|^2` is strictly increasing for all `c`, where
/// `Y(0) = 0`. The derivative is `2 c^T sym(Y'^T Y) c`.
pub fn focal_monitor(field: &JacobiTensorField) -> Result<FocalReport> {
    if field.values.is_empty() {
        return Err(GeomError::Precondition("Jacobi field has no samples".into()));
    }
    if field.values[0].abs().max() > 0.0 {
        return Err(GeomError::Precondition("focal monitor needs Y(0) = 0".into()));
    }
    let mut min_rate = f64::INFINITY;
    let mut first = None;
    for (k, (y, yp)) in field.values.iter().zip(&field.derivatives).enumerate().skip(1) {
        let rate = linalg::sym_eigenvalues(&(yp.transpose() * y))[0];
        min_rate = min_rate.min(rate);
        if first.is_none() && rate <= 0.0 {
            first = Some(field.path.nodes[k].t);
        }
    }
    Ok(FocalReport { increasing: first.is_none(), first_violation: first, min_rate })
}

fn hermite(y0: &DMatrix<f64>, d0: &DMatrix<f64>, y1: &DMatrix<f64>, d1: &DMatrix<f64>, h: f64, s: f64) -> DMatrix<f64> {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

/// Zeros of `det Y(t)` for `t > 0`, located to within `tol` by bisection on
/// the cubic Hermite interpolant between nodes.
pub fn conjugate_points(field: &JacobiTensorField, tol: f64) -> Result<Vec<f64>> {
    let vals = &field.values;
    if vals.is_empty() || vals[0].nrows() != vals[0].ncols() {
        return Err(GeomError::Precondition("conjugate scan needs a square Jacobi tensor".into()));
    }
    let nodes = &field.path.nodes;
    let mut roots = Vec::new();
    let det = |y: &DMatrix<f64>| y.determinant();
    for k in 1..vals.len() - 1 {
        let (a, b) = (det(&vals[k]), det(&vals[k + 1]));
        if a == 0.0 {
            roots.push(nodes[k].t);
            continue;
        }
        if a * b >= 0.0 {
            continue;
        }
        let (t0, t1) = (nodes[k].t, nodes[k + 1].t);
        let h = t1 - t0;
        let f = |s: f64| det(&hermite(&vals[k], &field.derivatives[k], &vals[k + 1], &field.derivatives[k + 1], h, s));
        let (mut lo, mut hi) = (0.0, 1.0);
        let flo = f(lo);
        while (hi - lo) * h > tol {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(t0 + 0.5 * (lo + hi) * h);
    }
    Ok(roots)
}

/// Largest eigenvalue of the curvature operator along sampled radial geodesics.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureAudit {
    pub max_curvature: f64,
    pub violated: bool,
    /// `(direction index, t, value)` of the largest sample.
    pub witness: (usize, f64, f64),
    pub samples: usize,
}

/// Samples `max eig <R(., u)u, .>` along geodesics from `p` in `directions`
/// up to `t_max` every `sample_every` parameter units; flags values above `tol`.
pub fn radial_curvature_audit(
    model: &ChartManifold,
    p: &DVector<f64>,
    directions: &[DVector<f64>],
    t_max: f64,
    sample_every: f64,
    tol: f64,
    opts: &IntegratorOptions,
) -> Result<CurvatureAudit> {
    let g0 = model.metric(p)?;
    let mut best = (0usize, 0.0, f64::NEG_INFINITY);
    let mut samples = 0;
    for (i, d) in directions.iter().enumerate() {
        let u = TangentVector::new(p.clone(), d / linalg::norm(&g0, d));
        let every = ((sample_every / opts.step).round() as usize).max(1);
        let path = super::integrate_geodesic(model, &u, t_max, &IntegratorOptions { step: opts.step, record_every: every })?;
        for node in &path.nodes {
            let op = model.curvature_operator(&node.point, &node.frame, &node.velocity)?;
            let top = *linalg::sym_eigenvalues(&op).last().unwrap();
            samples += 1;
            if top > best.2 {
                best = (i, node.t, top);
            }
        }
    }
    Ok(CurvatureAudit { max_curvature: best.2, violated: best.2 > tol, witness: best, samples })
}
