//! Radialisation `R_o f(r)`, the average of `f` over the geodesic sphere of
//! radius `r` about `o` with respect to its induced area.

use crate::error::{GeomError, Result};
use crate::fd;
use crate::geodesic::{distance, integrate_jacobi_tensor, IntegratorOptions, ShootingOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::quadrature::AngularRule;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// Geodesic spheres about `o` sampled along the rays of an angular rule.
#[derive(Debug, Clone)]
pub struct SphereBundle {
    pub origin: DVector<f64>,
    pub spacing: f64,
    pub r: Vec<f64>,
    /// `points[dir][k]`, the point at radius `r[k]` on ray `dir`.
    pub points: Vec<Vec<DVector<f64>>>,
    /// `weights[dir][k]`, area weights normalised to sum one at each radius.
    pub weights: Vec<Vec<f64>>,
    /// `laplacian_r[dir][k] = tr(Y' Y^{-1})`, the Laplacian of `d(o, .)`.
    pub laplacian_r: Vec<Vec<f64>>,
}

impl SphereBundle {
    pub fn new(model: &ChartManifold, o: &DVector<f64>, r_max: f64, step: f64, record_every: usize, rule: &AngularRule) -> Result<Self> {
        let n = model.dim();
        if n < 2 || rule.is_empty() || rule.directions[0].len() != n {
            return Err(GeomError::Precondition(format!("angular rule must live on the unit sphere of R^{n}")));
        }
        let e = linalg::orthonormal_basis(&model.metric(o)?)?;
        let y0 = DMatrix::zeros(n - 1, n - 1);
        let y0p = DMatrix::identity(n - 1, n - 1);
        let opts = IntegratorOptions { step, record_every };
        type Ray = (Vec<DVector<f64>>, Vec<f64>, Vec<f64>);
        let rays: Vec<Result<Ray>> = rule
            .directions
            .par_iter()
            .map(|theta| {
                let v = TangentVector::new(o.clone(), &e * theta);
                let field = integrate_jacobi_tensor(model, &v, r_max, &y0, &y0p, &opts)?;
                if let Some(t) = field.path.truncated_at {
                    return Err(GeomError::Domain(format!("radial geodesic leaves the chart at r = {t}")));
                }
                let points = field.path.nodes.iter().map(|nd| nd.point.clone()).collect();
                let dets = field.values.iter().map(|y| y.determinant()).collect();
                let lap = field
                    .values
                    .iter()
                    .zip(&field.derivatives)
                    .enumerate()
                    .map(|(k, (y, yp))| {
                        if k == 0 {
                            return f64::INFINITY;
                        }
                        y.clone().try_inverse().map_or(f64::NAN, |yi| (yp * yi).trace())
                    })
                    .collect();
                Ok((points, dets, lap))
            })
            .collect();
        let mut points = Vec::with_capacity(rays.len());
        let mut dets = Vec::with_capacity(rays.len());
        let mut laplacian_r = Vec::with_capacity(rays.len());
        for r in rays {
            let (p, d, l) = r?;
            points.push(p);
            dets.push(d);
            laplacian_r.push(l);
        }
        let nk = points[0].len();
        let spacing = r_max / (nk - 1) as f64;
        let mut weights = vec![vec![0.0; nk]; rule.len()];
        for k in 0..nk {
            // at r = 0 the determinant vanishes and the angular weights are used
            let raw: Vec<f64> = (0..rule.len()).map(|i| rule.weights[i] * if k == 0 { 1.0 } else { dets[i][k] }).collect();
            let total: f64 = raw.iter().sum();
            if !(total > 0.0) {
                return Err(GeomError::ConjugatePoint { t: k as f64 * spacing });
            }
            for i in 0..rule.len() {
                weights[i][k] = raw[i] / total;
            }
        }
        Ok(SphereBundle { origin: o.clone(), spacing, r: (0..nk).map(|k| k as f64 * spacing).collect(), points, weights, laplacian_r })
    }

    pub fn directions(&self) -> usize {
        self.points.len()
    }
}

/// Tabulated radial function with local cubic interpolation.
#[derive(Debug, Clone, Serialize)]
pub struct RadialFunction {
    pub spacing: f64,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialFunction {
    pub fn eval(&self, r: f64) -> Result<f64> {
        let m = self.values.len();
        let last = self.r[m - 1];
        if !(r >= 0.0 && r <= last * (1.0 + 1e-12)) || m < 4 {
            return Err(GeomError::Domain(format!("radius {r} outside the tabulated range [0, {last}]")));
        }
        let k = ((r / self.spacing).floor() as usize).clamp(1, m - 3) - 1;
        let t = r / self.spacing - k as f64;
        let y = &self.values[k..k + 4];
        // Lagrange through nodes 0, 1, 2, 3
        Ok(-y[0] * (t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0 + y[1] * t * (t - 2.0) * (t - 3.0) / 2.0
            - y[2] * t * (t - 1.0) * (t - 3.0) / 2.0
            + y[3] * t * (t - 1.0) * (t - 2.0) / 6.0)
    }

    /// Five-point first and second derivatives at interior node `k`.
    fn derivatives(&self, k: usize) -> (f64, f64) {
        let v = &self.values;
        let h = self.spacing;
        let d1 = (-v[k + 2] + 8.0 * v[k + 1] - 8.0 * v[k - 1] + v[k - 2]) / (12.0 * h);
        let d2 = (-v[k + 2] + 16.0 * v[k + 1] - 30.0 * v[k] + 16.0 * v[k - 1] - v[k - 2]) / (12.0 * h * h);
        (d1, d2)
    }
}

/// `R_o f` on the radial grid of the bundle.
pub fn radialise<F>(bundle: &SphereBundle, f: F) -> Result<RadialFunction>
where
    F: Fn(&DVector<f64>) -> Result<f64> + Sync,
{
    let values: Vec<Result<Vec<f64>>> = bundle.points.par_iter().map(|ray| ray.iter().map(&f).collect()).collect();
    let mut out = vec![0.0; bundle.r.len()];
    for (i, v) in values.into_iter().enumerate() {
        for (k, x) in v?.into_iter().enumerate() {
            out[k] += bundle.weights[i][k] * x;
        }
    }
    Ok(RadialFunction { spacing: bundle.spacing, r: bundle.r.clone(), values: out })
}

/// `sup_k |R_o(F o d_o)(r_k) - F(r_k)|` for `F = R_o f`, with the distance to
/// `o` recomputed by shooting at every sample point.
pub fn idempotence_residual<F>(model: &ChartManifold, bundle: &SphereBundle, f: F, opts: &ShootingOptions) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64> + Sync,
{
    let first = radialise(bundle, f)?;
    let o = &bundle.origin;
    let second = radialise(bundle, |x| {
        let d = if x == o { 0.0 } else { distance(model, o, x, opts)? };
        first.eval(d.min(*first.r.last().unwrap()))
    })?;
    Ok(first.values.iter().zip(&second.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationReport {
    /// `sup |R_o(Delta f)(r) - (F'' + F' Delta r)|` over interior radii and rays.
    pub residual: f64,
    pub witness_radius: f64,
    /// Largest finite-difference error estimate of `Delta f`.
    pub fd_error: f64,
}

/// Compares `R_o Delta f` with `Delta R_o f`, the latter evaluated along each
/// ray as `F'' + F' Delta r` from five-point differences of `F = R_o f`.
/// Radii with `r < r_min` are skipped.
pub fn commutation_residual<F>(model: &ChartManifold, bundle: &SphereBundle, f: F, fd_step: f64, r_min: f64) -> Result<CommutationReport>
where
    F: Fn(&DVector<f64>) -> Result<f64> + Sync,
{
    let big_f = radialise(bundle, &f)?;
    let errs: Vec<Result<Vec<(f64, f64)>>> = bundle
        .points
        .par_iter()
        .map(|ray| ray.iter().map(|x| fd::laplacian(model, x, fd_step, &f)).collect())
        .collect();
    let mut lap = vec![0.0; bundle.r.len()];
    let mut fd_error: f64 = 0.0;
    for (i, e) in errs.into_iter().enumerate() {
        for (k, (l, err)) in e?.into_iter().enumerate() {
            lap[k] += bundle.weights[i][k] * l;
            fd_error = fd_error.max(err);
        }
    }
    let mut residual: f64 = 0.0;
    let mut witness_radius = 0.0;
    for k in 2..bundle.r.len() - 2 {
        if bundle.r[k] < r_min {
            continue;
        }
        let (d1, d2) = big_f.derivatives(k);
        for i in 0..bundle.directions() {
            let res = (lap[k] - (d2 + d1 * bundle.laplacian_r[i][k])).abs();
            if res > residual {
                residual = res;
                witness_radius = bundle.r[k];
            }
        }
    }
    Ok(CommutationReport { residual, witness_radius, fd_error })
}
