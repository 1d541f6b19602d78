//! Averages of Busemann functions over a boundary measure.

use super::busemann::{BusemannOptions, BusemannRay};
use crate::error::{GeomError, Result};
use crate::geodesic::{log_map, ShootingOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::quadrature::sphere_points;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Finitely supported probability measure on the unit sphere at `o`.
#[derive(Debug, Clone)]
pub struct BoundaryMeasure {
    pub base: DVector<f64>,
    /// Unit vectors at `base`.
    pub directions: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl BoundaryMeasure {
    pub fn new(model: &ChartManifold, base: DVector<f64>, directions: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        model.check_point(&base)?;
        if directions.is_empty() || directions.len() != weights.len() {
            return Err(GeomError::Precondition("measure needs one positive weight per direction".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(GeomError::Precondition("measure weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GeomError::Precondition(format!("measure weights sum to {total}, not 1")));
        }
        let g = model.metric(&base)?;
        let directions = directions
            .into_iter()
            .map(|d| {
                let n = linalg::norm(&g, &d);
                if n > 0.0 && n.is_finite() {
                    Ok(d / n)
                } else {
                    Err(GeomError::Precondition("measure direction must be nonzero".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundaryMeasure { base, directions, weights })
    }

    /// Unit directions in an orthonormal basis at `o`: `k` equispaced angles
    /// in dimension 2, a low-discrepancy sphere point set otherwise.
    fn unit_directions(model: &ChartManifold, base: &DVector<f64>, k: usize) -> Result<Vec<DVector<f64>>> {
        let g = model.metric(base)?;
        let e = linalg::orthonormal_basis(&g)?;
        Ok(sphere_points(model.dim(), k).into_iter().map(|c| &e * c).collect())
    }

    /// `k` directions with uniform weights `1/k`.
    pub fn uniform(model: &ChartManifold, base: DVector<f64>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(GeomError::Precondition("measure needs at least one direction".into()));
        }
        let dirs = Self::unit_directions(model, &base, k)?;
        Self::new(model, base, dirs, vec![1.0 / k as f64; k])
    }

    /// `k` directions with weights proportional to `2^{-j}`, `j = 1..k`.
    pub fn dyadic(model: &ChartManifold, base: DVector<f64>, k: usize) -> Result<Self> {
        if k == 0 || k > 60 {
            return Err(GeomError::Precondition("dyadic measure needs 1..=60 directions".into()));
        }
        let dirs = Self::unit_directions(model, &base, k)?;
        let raw: Vec<f64> = (1..=k).map(|j| 0.5f64.powi(j as i32)).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // absorb rounding so the sum is 1 to the last bit
        let s: f64 = weights.iter().sum();
        weights[0] += 1.0 - s;
        Self::new(model, base, dirs, weights)
    }
}

/// Value, gradient vector and Hessian of `F = sum w_k b_{v_k}`.
#[derive(Debug, Clone)]
pub struct AveragedValue {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Metric trace of the Hessian.
    pub laplacian: f64,
}

/// Rays of a boundary measure, integrated once and reused across points.
pub struct AveragedF<'a> {
    model: &'a ChartManifold,
    measure: BoundaryMeasure,
    rays: Vec<BusemannRay<'a>>,
}

impl<'a> AveragedF<'a> {
    pub fn new(model: &'a ChartManifold, measure: BoundaryMeasure, opts: &BusemannOptions) -> Result<Self> {
        let rays = measure
            .directions
            .par_iter()
            .map(|d| BusemannRay::new(model, &TangentVector::new(measure.base.clone(), d.clone()), opts))
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(AveragedF { model, measure, rays })
    }

    pub fn measure(&self) -> &BoundaryMeasure {
        &self.measure
    }

    /// Evaluates every direction; any failure yields a `Partial` error.
    pub fn evaluate(&self, p: &DVector<f64>) -> Result<AveragedValue> {
        self.model.check_point(p)?;
        let opts = ShootingOptions { step: self.rays[0].options().step, ..ShootingOptions::default() };
        let bound = log_map(self.model, &self.measure.base, p, &opts)?.length;
        let results: Vec<Result<_>> = self.rays.par_iter().map(|r| r.full(p, Some(bound))).collect();
        let n = self.model.dim();
        let mut value = 0.0;
        let mut gradient = DVector::zeros(n);
        let mut hessian = DMatrix::zeros(n, n);
        let mut failed = 0;
        let mut first = None;
        for (res, w) in results.into_iter().zip(&self.measure.weights) {
            match res {
                Ok(ev) => {
                    value += w * ev.value;
                    gradient += ev.gradient.unwrap() * *w;
                    hessian += ev.hessian.unwrap() * *w;
                }
                Err(e) => {
                    if first.is_none() {
                        first = Some(e.to_string());
                    }
                    failed += 1;
                }
            }
        }
        if failed > 0 {
            return Err(GeomError::Partial { total: self.rays.len(), failed, first: first.unwrap() });
        }
        let laplacian = linalg::metric_trace(&self.model.metric(p)?, &hessian)?;
        Ok(AveragedValue { value, gradient, hessian, laplacian })
    }
}

pub fn averaged_f(model: &ChartManifold, measure: &BoundaryMeasure, p: &DVector<f64>, opts: &BusemannOptions) -> Result<AveragedValue> {
    AveragedF::new(model, measure.clone(), opts)?.evaluate(p)
}
