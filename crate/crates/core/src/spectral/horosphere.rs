//! Mean curvature of horospheres, `h = Delta b_v`.

use crate::convexity::{ball_samples, BusemannOptions, BusemannRay};
use crate::error::{GeomError, Result};
use crate::fd;
use crate::geodesic::stable_jacobi_tensor;
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::quadrature::sphere_points;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

/// Both routes to `Delta b_v(p)`.
#[derive(Debug, Clone, Serialize)]
pub struct HorosphereCurvature {
    /// `-tr D'(0)` of the stable Jacobi tensor along the asymptotic direction.
    pub jacobi: f64,
    /// Finite-difference Laplacian of the truncated Busemann function at the
    /// accepted anchor, when requested.
    pub trace: Option<f64>,
    pub trace_error: Option<f64>,
}

impl HorosphereCurvature {
    pub fn discrepancy(&self) -> Option<f64> {
        self.trace.map(|t| (t - self.jacobi).abs())
    }
}

fn curvature_on_ray(ray: &BusemannRay<'_>, model: &ChartManifold, p: &DVector<f64>, fd_step: Option<f64>) -> Result<HorosphereCurvature> {
    let ev = ray.gradient(p)?;
    let u = -ev.gradient.clone().unwrap();
    let st = stable_jacobi_tensor(model, &TangentVector::new(p.clone(), u), &ray.options().stable)?;
    let (trace, trace_error) = match fd_step {
        Some(h) => {
            let (lap, err) = fd::laplacian(model, p, h, |x| ray.truncated_value(x, ev.anchor))?;
            (Some(lap), Some(err))
        }
        None => (None, None),
    };
    Ok(HorosphereCurvature { jacobi: st.mean_curvature(), trace, trace_error })
}

/// `Delta b_v(p)` by the Jacobi route and by finite differences of `b_v`.
pub fn horosphere_mean_curvature(
    model: &ChartManifold,
    v: &TangentVector,
    p: &DVector<f64>,
    opts: &BusemannOptions,
    fd_step: f64,
) -> Result<HorosphereCurvature> {
    let ray = BusemannRay::new(model, v, opts)?;
    curvature_on_ray(&ray, model, p, Some(fd_step))
}

#[derive(Debug, Clone, Serialize)]
pub struct HorosphereSample {
    pub direction: Vec<f64>,
    pub point: Vec<f64>,
    pub laplacian: f64,
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HorosphereScan {
    pub samples: Vec<HorosphereSample>,
    pub mean: f64,
    /// `max - min` of the sampled `Delta b_v`.
    pub spread: f64,
    /// Largest disagreement between the two routes where both were computed.
    pub max_discrepancy: f64,
}

/// Scan settings: `directions` unit vectors at `o`, `points` sample points of
/// the ball of radius `radius`, and a finite-difference cross-check on every
/// `cross_check_every`-th sample (0 disables it).
#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub directions: usize,
    pub points: usize,
    pub radius: f64,
    pub cross_check_every: usize,
    pub fd_step: f64,
    pub busemann: BusemannOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { directions: 32, points: 10, radius: 2.0, cross_check_every: 16, fd_step: 1e-2, busemann: BusemannOptions::default() }
    }
}

/// `Delta b_v(p)` over a grid of directions at `o` and points near `o`.
pub fn horosphere_scan(model: &ChartManifold, o: &DVector<f64>, opts: &ScanOptions) -> Result<HorosphereScan> {
    if opts.directions == 0 || opts.points == 0 {
        return Err(GeomError::Precondition("scan needs directions and points".into()));
    }
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    let dirs: Vec<DVector<f64>> = sphere_points(model.dim(), opts.directions).into_iter().map(|c| &e * c).collect();
    let points = ball_samples(model, o, opts.radius, opts.points, opts.busemann.step)?;
    let rays = dirs
        .par_iter()
        .map(|d| BusemannRay::new(model, &TangentVector::new(o.clone(), d.clone()), &opts.busemann))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..dirs.len()).flat_map(|i| (0..points.len()).map(move |j| (i, j))).collect();
    let results: Vec<Result<HorosphereCurvature>> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let check = opts.cross_check_every > 0 && k % opts.cross_check_every == 0;
            curvature_on_ray(&rays[i], model, &points[j], check.then_some(opts.fd_step))
        })
        .collect();
    let mut samples = Vec::with_capacity(jobs.len());
    let mut max_discrepancy: f64 = 0.0;
    for (&(i, j), r) in jobs.iter().zip(results) {
        let c = r?;
        if let Some(d) = c.discrepancy() {
            max_discrepancy = max_discrepancy.max(d);
        }
        samples.push(HorosphereSample {
            direction: dirs[i].iter().copied().collect(),
            point: points[j].iter().copied().collect(),
            laplacian: c.jacobi,
            trace: c.trace,
        });
    }
    let mean = samples.iter().map(|s| s.laplacian).sum::<f64>() / samples.len() as f64;
    let max = samples.iter().map(|s| s.laplacian).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|s| s.laplacian).fold(f64::INFINITY, f64::min);
    Ok(HorosphereScan { samples, mean, spread: max - min, max_discrepancy })
}
