//! Exponential and logarithm maps by shooting.

use super::flow::Layout;
use super::path::integrate_state;
use crate::error::{GeomError, Result};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingOptions {
    /// Integration step measured in arc length.
    pub step: f64,
    pub max_iter: usize,
    /// Relative tolerance on the Newton step (metric norm at the start).
    pub tol: f64,
    /// Initial guess for the velocity at the start point.
    pub initial: Option<DVector<f64>>,
    /// Also transport an orthonormal basis to the end point.
    pub transport: bool,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions { step: 1e-3, max_iter: 60, tol: 1e-12, initial: None, transport: false }
    }
}

/// Solution of the two-point problem from `p` to `q`.
#[derive(Debug, Clone)]
pub struct LogMap {
    pub start: DVector<f64>,
    /// Initial velocity reaching `q` at parameter 1.
    pub velocity: DVector<f64>,
    /// Metric length of `velocity`, the geodesic distance.
    pub length: f64,
    /// Velocity at parameter 1.
    pub end_velocity: DVector<f64>,
    /// Orthonormal basis at `p` and its parallel transport to `q` (columns),
    /// when requested.
    pub start_basis: Option<DMatrix<f64>>,
    pub end_basis: Option<DMatrix<f64>>,
    pub iterations: usize,
    /// Euclidean coordinate residual of the endpoint.
    pub residual: f64,
}

struct Shot {
    end: DVector<f64>,
    end_velocity: DVector<f64>,
    jacobian: DMatrix<f64>,
    end_basis: Option<DMatrix<f64>>,
}

fn shoot(model: &ChartManifold, p: &DVector<f64>, w: &DVector<f64>, len: f64, basis: Option<&DMatrix<f64>>, opts: &ShootingOptions) -> Option<Shot> {
    let n = model.dim();
    let fc = basis.map(|b| b.ncols()).unwrap_or(0);
    let layout = Layout { n, fc, jc: 0, variational: true };
    let (dx, dv, fo) = (layout.dx(), layout.dv(), layout.frame());
    let mut y = vec![0.0; layout.len()];
    y[..n].copy_from_slice(p.as_slice());
    y[n..2 * n].copy_from_slice(w.as_slice());
    if let Some(b) = basis {
        y[fo..fo + n * fc].copy_from_slice(b.as_slice());
    }
    for c in 0..n {
        y[dv + c * n + c] = 1.0;
    }
    let steps = (len / opts.step).ceil().max(8.0);
    let run = integrate_state(model, layout, y, 1.0, 1.0 / steps, |_, _| true);
    if run.left_domain || run.state.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let s = run.state;
    Some(Shot {
        end: DVector::from_column_slice(&s[..n]),
        end_velocity: DVector::from_column_slice(&s[n..2 * n]),
        jacobian: DMatrix::from_column_slice(n, n, &s[dx..dx + n * n]),
        end_basis: basis.map(|_| DMatrix::from_column_slice(n, fc, &s[fo..fo + n * fc])),
    })
}

/// Initial guess: coordinate difference rescaled to the metric length of the
/// straight chord.
fn chord_guess(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    let d = q - p;
    let n = model.dim();
    let mut g = vec![0.0; n * n];
    let samples = 16;
    let mut vals = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let x = p + &d * (k as f64 / samples as f64);
        if !model.contains(x.as_slice()) {
            return Ok(d);
        }
        model.metric_into(x.as_slice(), &mut g);
        let gm = DMatrix::from_row_slice(n, n, &g);
        vals.push(linalg::norm(&gm, &d));
    }
    let chord = crate::quadrature::simpson(&vals, 1.0 / samples as f64);
    let gp = model.metric(p)?;
    let np = linalg::norm(&gp, &d);
    Ok(if np > 0.0 { d * (chord / np) } else { d })
}

/// Velocity at `p` of the geodesic reaching `q` at parameter 1.
pub fn log_map(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>, opts: &ShootingOptions) -> Result<LogMap> {
    model.check_point(p)?;
    model.check_point(q)?;
    if !(opts.step > 0.0) {
        return Err(GeomError::Precondition("shooting step must be positive".into()));
    }
    let n = model.dim();
    let gp = model.metric(p)?;
    let gq = model.metric(q)?;
    let basis = if opts.transport { Some(linalg::orthonormal_basis(&gp)?) } else { None };
    if p == q {
        return Ok(LogMap {
            start: p.clone(),
            velocity: DVector::zeros(n),
            length: 0.0,
            end_velocity: DVector::zeros(n),
            start_basis: basis.clone(),
            end_basis: basis,
            iterations: 0,
            residual: 0.0,
        });
    }
    let merit = |x: &DVector<f64>| linalg::norm(&gq, &(q - x));
    let mut w = match &opts.initial {
        Some(w) => w.clone(),
        None => chord_guess(model, p, q)?,
    };
    let mut len = linalg::norm(&gp, &w);
    let mut shot = match shoot(model, p, &w, len, basis.as_ref(), opts) {
        Some(s) => s,
        None => {
            w = chord_guess(model, p, q)?;
            len = linalg::norm(&gp, &w);
            shoot(model, p, &w, len, basis.as_ref(), opts).ok_or_else(|| GeomError::Convergence {
                what: "shooting (initial guess leaves the chart)".into(),
                residual: f64::INFINITY,
            })?
        }
    };
    let mut cur = merit(&shot.end);
    let floor = |x: &DVector<f64>| 4.0 * f64::EPSILON * (1.0 + x.abs().max());
    for iter in 1..=opts.max_iter {
        let r = q - &shot.end;
        if r.abs().max() <= floor(q) {
            return Ok(finish(p, q, w, len, shot, basis, iter - 1));
        }
        let delta = match shot.jacobian.clone().lu().solve(&r) {
            Some(d) => d,
            None => {
                return Err(GeomError::Convergence { what: "shooting (singular Jacobian)".into(), residual: cur })
            }
        };
        let dn = linalg::norm(&gp, &delta);
        // cap the first steps at the current length scale
        let cap = (0.5 * len).max(1.0);
        let mut alpha = if dn > cap { cap / dn } else { 1.0 };
        let mut accepted = None;
        for _ in 0..30 {
            let wt = &w + &delta * alpha;
            let lt = linalg::norm(&gp, &wt);
            if let Some(st) = shoot(model, p, &wt, lt, basis.as_ref(), opts) {
                let mt = merit(&st.end);
                if mt < cur * (1.0 - 1e-4 * alpha) || mt == 0.0 {
                    accepted = Some((wt, lt, st, mt));
                    break;
                }
            }
            alpha *= 0.5;
            if dn * alpha <= opts.tol * (1.0 + len) {
                break;
            }
        }
        match accepted {
            Some((wt, lt, st, mt)) => {
                w = wt;
                len = lt;
                shot = st;
                cur = mt;
                if dn * alpha <= opts.tol * (1.0 + len) {
                    return Ok(finish(p, q, w, len, shot, basis, iter));
                }
            }
            None => {
                // no further decrease: accept if at the precision floor of the chart
                let res = (q - &shot.end).abs().max();
                if res <= 1e-6 * (1.0 + q.abs().max()) {
                    return Ok(finish(p, q, w, len, shot, basis, iter));
                }
                return Err(GeomError::Convergence { what: "shooting (line search)".into(), residual: cur });
            }
        }
    }
    Err(GeomError::Convergence { what: "shooting (iteration limit)".into(), residual: cur })
}

fn finish(p: &DVector<f64>, q: &DVector<f64>, w: DVector<f64>, len: f64, shot: Shot, basis: Option<DMatrix<f64>>, iterations: usize) -> LogMap {
    LogMap {
        start: p.clone(),
        velocity: w,
        length: len,
        residual: (q - &shot.end).abs().max(),
        end_velocity: shot.end_velocity,
        end_basis: shot.end_basis,
        start_basis: basis,
        iterations,
    }
}

impl LogMap {
    /// Parallel transport of `vector` (at the end point) back to the start.
    pub fn transport_back(&self, model: &ChartManifold, q: &DVector<f64>, vector: &DVector<f64>) -> Result<DVector<f64>> {
        let (sb, eb) = match (&self.start_basis, &self.end_basis) {
            (Some(s), Some(e)) => (s, e),
            _ => return Err(GeomError::Precondition("log map computed without transport".into())),
        };
        let gq = model.metric(q)?;
        let comps = eb.transpose() * gq * vector;
        Ok(sb * comps)
    }
}

/// Geodesic distance via the logarithm map.
pub fn distance(model: &ChartManifold, p: &DVector<f64>, q: &DVector<f64>, opts: &ShootingOptions) -> Result<f64> {
    Ok(log_map(model, p, q, opts)?.length)
}

/// End point of the geodesic with initial velocity `v` at parameter 1.
pub fn exp_map(model: &ChartManifold, v: &TangentVector, step: f64) -> Result<DVector<f64>> {
    model.check_vector(v)?;
    let n = model.dim();
    let g = model.metric(&v.base)?;
    let len = linalg::norm(&g, &v.components);
    if len == 0.0 {
        return Ok(v.base.clone());
    }
    let layout = Layout { n, fc: 0, jc: 0, variational: false };
    let mut y = vec![0.0; layout.len()];
    y[..n].copy_from_slice(v.base.as_slice());
    y[n..].copy_from_slice(v.components.as_slice());
    let steps = (len / step).ceil().max(8.0);
    let run = integrate_state(model, layout, y, 1.0, 1.0 / steps, |_, _| true);
    if run.left_domain {
        return Err(GeomError::Domain("geodesic left the chart".into()));
    }
    Ok(DVector::from_column_slice(&run.state[..n]))
}
