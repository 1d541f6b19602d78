//! Sampled strict-convexity certificates.

use super::averaged::AveragedF;
use super::distance::{distance_sq_hessian, exhaustion_f};
use crate::error::{GeomError, Result};
use crate::geodesic::{exp_map, ShootingOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::quadrature::halton_point;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionId {
    ExhaustionF,
    AveragedF,
    DistanceSq,
}

/// A function whose Hessian is certified.
pub enum ConvexTarget<'a> {
    ExhaustionF { center: DVector<f64>, opts: ShootingOptions },
    DistanceSq { center: DVector<f64>, opts: ShootingOptions },
    AveragedF(&'a AveragedF<'a>),
}

impl ConvexTarget<'_> {
    pub fn id(&self) -> FunctionId {
        match self {
            ConvexTarget::ExhaustionF { .. } => FunctionId::ExhaustionF,
            ConvexTarget::DistanceSq { .. } => FunctionId::DistanceSq,
            ConvexTarget::AveragedF(_) => FunctionId::AveragedF,
        }
    }

    /// Smallest metric eigenvalue of the Hessian and the gradient norm at `x`.
    fn sample(&self, model: &ChartManifold, x: &DVector<f64>) -> Result<(f64, f64)> {
        let g = model.metric(x)?;
        let (h, grad) = match self {
            ConvexTarget::ExhaustionF { center, opts } => {
                let e = exhaustion_f(model, center, x, opts)?;
                (e.hessian, linalg::norm(&g, &e.gradient))
            }
            ConvexTarget::DistanceSq { center, opts } => {
                let h = distance_sq_hessian(model, center, x, opts)?;
                let r = if center == x { 0.0 } else { crate::geodesic::distance(model, center, x, opts)? };
                (h, r)
            }
            ConvexTarget::AveragedF(f) => {
                let v = f.evaluate(x)?;
                (v.hessian, linalg::norm(&g, &v.gradient))
            }
        };
        Ok((linalg::metric_eigenvalues(&g, &h)?[0], grad))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub point: Vec<f64>,
    pub min_eigenvalue: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityCertificate {
    pub function_id: FunctionId,
    pub margin: f64,
    pub strict: bool,
    pub min_hessian_eigenvalue: f64,
    pub worst_point: Vec<f64>,
    pub gradient_bound: f64,
    pub samples: Vec<SampleRecord>,
}

/// Certifies `min eig Hess > margin` at every sample point.
pub fn certify_strict_convexity(
    model: &ChartManifold,
    target: &ConvexTarget<'_>,
    sample_points: &[DVector<f64>],
    margin: f64,
) -> Result<ConvexityCertificate> {
    if sample_points.is_empty() {
        return Err(GeomError::Precondition("certificate needs sample points".into()));
    }
    let results: Vec<Result<(f64, f64)>> = match target {
        // the averaged function parallelises over directions internally
        ConvexTarget::AveragedF(_) => sample_points.iter().map(|x| target.sample(model, x)).collect(),
        _ => sample_points.par_iter().map(|x| target.sample(model, x)).collect(),
    };
    let mut samples = Vec::with_capacity(sample_points.len());
    for (x, r) in sample_points.iter().zip(results) {
        let (min_eigenvalue, gradient_norm) = r?;
        samples.push(SampleRecord { point: x.iter().copied().collect(), min_eigenvalue, gradient_norm });
    }
    let worst = samples
        .iter()
        .min_by(|a, b| a.min_eigenvalue.total_cmp(&b.min_eigenvalue))
        .unwrap();
    let min = worst.min_eigenvalue;
    Ok(ConvexityCertificate {
        function_id: target.id(),
        margin,
        strict: min > margin,
        min_hessian_eigenvalue: min,
        worst_point: worst.point.clone(),
        gradient_bound: samples.iter().map(|s| s.gradient_norm).fold(0.0, f64::max),
        samples,
    })
}

/// `count` deterministic points of the metric ball of radius `radius` about
/// `o`: Halton points of the unit ball in an orthonormal frame, mapped by `exp_o`.
pub fn ball_samples(model: &ChartManifold, o: &DVector<f64>, radius: f64, count: usize, step: f64) -> Result<Vec<DVector<f64>>> {
    let n = model.dim();
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count {
        let h = halton_point(k, n);
        k += 1;
        let c = DVector::from_iterator(n, h.iter().map(|t| 2.0 * t - 1.0));
        if c.norm_squared() > 1.0 {
            continue;
        }
        let v = TangentVector::new(o.clone(), &e * c * radius);
        out.push(exp_map(model, &v, step)?);
    }
    Ok(out)
}
