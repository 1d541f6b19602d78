//! Geodesic paths with parallel frames, and Jacobi tensors along them.

use super::flow::{Flow, Layout};
use crate::error::{GeomError, Result};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::ode::{Halt, Rk4};
use nalgebra::{DMatrix, DVector};

/// Step control for the fixed-step integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Nominal step; the effective step divides the interval evenly.
    pub step: f64,
    /// Keep every k-th node.
    pub record_every: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { step: 1e-3, record_every: 1 }
    }
}

impl IntegratorOptions {
    pub fn with_step(step: f64) -> Self {
        IntegratorOptions { step, ..Default::default() }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || self.record_every == 0 {
            return Err(GeomError::Precondition("integrator step must be positive".into()));
        }
        Ok(())
    }
}

/// Number of steps and effective step size covering `[0, t]`.
pub(crate) fn grid(t: f64, step: f64) -> (usize, f64) {
    let k = (t / step - 1e-9).ceil().max(1.0) as usize;
    (k, t / k as f64)
}

/// Outcome of a raw state integration.
pub(crate) struct Run {
    pub state: Vec<f64>,
    pub steps: usize,
    pub h: f64,
    pub left_domain: bool,
}

pub(crate) fn integrate_state<F: FnMut(usize, &[f64]) -> bool>(
    model: &ChartManifold,
    layout: Layout,
    mut y: Vec<f64>,
    t_max: f64,
    step: f64,
    observe: F,
) -> Run {
    let (steps, h) = grid(t_max, step);
    let mut flow = Flow::new(model, layout);
    let mut rk = Rk4::new(y.len());
    let halt = rk.run(&mut flow, &mut y, h, steps, observe);
    let (done, left) = match halt {
        Halt::Completed => (steps, false),
        Halt::Domain(k) => (k - 1, true),
        Halt::Observer(k) => (k, false),
    };
    Run { state: y, steps: done, h, left_domain: left }
}

/// One recorded node of a geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNode {
    pub t: f64,
    pub point: DVector<f64>,
    pub velocity: DVector<f64>,
    /// Parallel orthonormal frame of the normal bundle, as columns.
    pub frame: DMatrix<f64>,
}

/// A sampled geodesic with a parallel frame.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub initial: TangentVector,
    pub initial_frame: DMatrix<f64>,
    pub nodes: Vec<PathNode>,
    /// Effective step of the integrator.
    pub step: f64,
    pub record_every: usize,
    /// Requested parameter length.
    pub length: f64,
    /// Parameter at which the path left the chart, if it did.
    pub truncated_at: Option<f64>,
}

fn unpack_frame(y: &[f64], off: usize, n: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, cols, &y[off..off + n * cols])
}

pub(crate) fn initial_frame(model: &ChartManifold, v: &TangentVector) -> Result<DMatrix<f64>> {
    let g = model.metric(&v.base)?;
    linalg::complement_frame(&g, &v.components)
}

fn check_start(model: &ChartManifold, v: &TangentVector, t_max: f64) -> Result<()> {
    model.check_vector(v)?;
    if v.components.iter().any(|c| !c.is_finite()) {
        return Err(GeomError::Precondition("non-finite initial velocity".into()));
    }
    if v.components.iter().all(|c| *c == 0.0) {
        return Err(GeomError::TrivialInitialData);
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(GeomError::Precondition("integration length must be positive".into()));
    }
    Ok(())
}

/// Integrates the geodesic with initial velocity `v` on `[0, t_max]`
/// together with a parallel orthonormal frame of its normal bundle.
/// Leaving the chart truncates the path and sets `truncated_at`.
pub fn integrate_geodesic(model: &ChartManifold, v: &TangentVector, t_max: f64, opts: &IntegratorOptions) -> Result<GeodesicPath> {
    opts.validate()?;
    check_start(model, v, t_max)?;
    let frame = initial_frame(model, v)?;
    let field = integrate_with(model, v, &frame, None, t_max, opts)?;
    Ok(field.path)
}

/// Jacobi tensor along a geodesic, in the coordinates of its parallel frame.
#[derive(Debug, Clone)]
pub struct JacobiTensorField {
    pub path: GeodesicPath,
    /// `Y(t)`, one `m x c` matrix per node.
    pub values: Vec<DMatrix<f64>>,
    /// `Y'(t)`.
    pub derivatives: Vec<DMatrix<f64>>,
}

impl JacobiTensorField {
    /// Coordinate vector of column `c` of `Y` at node `k`.
    pub fn coordinate_field(&self, k: usize, c: usize) -> DVector<f64> {
        &self.path.nodes[k].frame * self.values[k].column(c)
    }

    /// `Y'^T Z - Y^T Z'` between columns of this tensor at node `k`.
    pub fn wronskian(&self, k: usize) -> DMatrix<f64> {
        let y = &self.values[k];
        let yp = &self.derivatives[k];
        yp.transpose() * y - y.transpose() * yp
    }
}

pub(crate) fn integrate_with(
    model: &ChartManifold,
    v: &TangentVector,
    frame: &DMatrix<f64>,
    jacobi: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<JacobiTensorField> {
    let n = model.dim();
    let m = n - 1;
    let fc = frame.ncols();
    let jc = jacobi.map(|(y, _)| y.ncols()).unwrap_or(0);
    let layout = Layout { n, fc, jc, variational: false };
    let mut y0 = vec![0.0; layout.len()];
    y0[..n].copy_from_slice(v.base.as_slice());
    y0[n..2 * n].copy_from_slice(v.components.as_slice());
    y0[layout.frame()..layout.frame() + n * fc].copy_from_slice(frame.as_slice());
    if let Some((y, yp)) = jacobi {
        if y.nrows() != m || yp.nrows() != m || yp.ncols() != jc {
            return Err(GeomError::Precondition(format!("Jacobi data must be {m} x c matrices")));
        }
        y0[layout.y()..layout.y() + m * jc].copy_from_slice(y.as_slice());
        y0[layout.yp()..layout.yp() + m * jc].copy_from_slice(yp.as_slice());
    }
    let (yoff, ypoff, foff) = (layout.y(), layout.yp(), layout.frame());
    let every = opts.record_every;
    let (_, h) = grid(t_max, opts.step);
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    let mut derivatives = Vec::new();
    let mut push = |t: f64, s: &[f64]| {
        nodes.push(PathNode {
            t,
            point: DVector::from_column_slice(&s[..n]),
            velocity: DVector::from_column_slice(&s[n..2 * n]),
            frame: unpack_frame(s, foff, n, fc),
        });
        if jc > 0 {
            values.push(DMatrix::from_column_slice(m, jc, &s[yoff..yoff + m * jc]));
            derivatives.push(DMatrix::from_column_slice(m, jc, &s[ypoff..ypoff + m * jc]));
        }
    };
    push(0.0, &y0);
    let (steps, _) = grid(t_max, opts.step);
    let run = integrate_state(model, layout, y0, t_max, opts.step, |k, s| {
        if k % every == 0 || k == steps {
            push(k as f64 * h, s);
        }
        true
    });
    let truncated_at = if run.left_domain {
        Some(run.steps as f64 * run.h)
    } else {
        None
    };
    let path = GeodesicPath {
        initial: v.clone(),
        initial_frame: frame.clone(),
        nodes,
        step: run.h,
        record_every: every,
        length: t_max,
        truncated_at,
    };
    Ok(JacobiTensorField { path, values, derivatives })
}

impl GeodesicPath {
    pub fn end(&self) -> &PathNode {
        self.nodes.last().unwrap()
    }

    /// Largest deviation of the speed from its initial value.
    pub fn speed_drift(&self, model: &ChartManifold) -> Result<f64> {
        let g0 = model.metric(&self.initial.base)?;
        let s0 = linalg::norm(&g0, &self.initial.components);
        let mut worst: f64 = 0.0;
        for node in &self.nodes {
            let g = model.metric(&node.point)?;
            worst = worst.max((linalg::norm(&g, &node.velocity) - s0).abs());
        }
        Ok(worst)
    }

    /// Largest deviation of `[v/|v|, frame]` from an orthonormal basis.
    pub fn frame_defect(&self, model: &ChartManifold) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for node in &self.nodes {
            let g = model.metric(&node.point)?;
            let s = linalg::norm(&g, &node.velocity);
            let mut cols = vec![&node.velocity / s];
            cols.extend(node.frame.column_iter().map(|c| c.into_owned()));
            let b = DMatrix::from_columns(&cols);
            let gram = b.transpose() * &g * &b;
            worst = worst.max((gram - DMatrix::identity(cols.len(), cols.len())).abs().max());
        }
        Ok(worst)
    }

    /// Index of the recorded node closest to parameter `t`.
    pub fn node_at(&self, t: f64) -> usize {
        let k = (t / (self.step * self.record_every as f64)).round().max(0.0) as usize;
        k.min(self.nodes.len() - 1)
    }

    /// Jacobi tensor with initial data `(y0, y0p)` along this path. The path is
    /// re-integrated jointly from the same initial data and step, so nodes
    /// coincide with `self.nodes`.
    pub fn jacobi_tensor(&self, model: &ChartManifold, y0: &DMatrix<f64>, y0p: &DMatrix<f64>) -> Result<JacobiTensorField> {
        if y0.iter().chain(y0p.iter()).all(|c| *c == 0.0) {
            return Err(GeomError::TrivialInitialData);
        }
        let opts = IntegratorOptions { step: self.step, record_every: self.record_every };
        integrate_with(model, &self.initial, &self.initial_frame, Some((y0, y0p)), self.length, &opts)
    }
}

/// Integrates the Jacobi tensor with initial data `(y0, y0p)` (in the
/// parallel frame completing `v`) along the geodesic of `v`.
pub fn integrate_jacobi_tensor(
    model: &ChartManifold,
    v: &TangentVector,
    t_max: f64,
    y0: &DMatrix<f64>,
    y0p: &DMatrix<f64>,
    opts: &IntegratorOptions,
) -> Result<JacobiTensorField> {
    opts.validate()?;
    check_start(model, v, t_max)?;
    if y0.iter().chain(y0p.iter()).all(|c| *c == 0.0) {
        return Err(GeomError::TrivialInitialData);
    }
    let frame = initial_frame(model, v)?;
    integrate_with(model, v, &frame, Some((y0, y0p)), t_max, opts)
}
