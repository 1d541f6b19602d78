//! Products of constant-curvature factors: `Delta b_v = sum_i |v_i| h_i`.

use crate::error::{GeomError, Result};
use crate::geodesic::{integrate_geodesic, stable_jacobi_tensor, IntegratorOptions, StableOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RootData {
    /// Horosphere mean curvature of each factor.
    pub factor_h: Vec<f64>,
    pub factor_dims: Vec<usize>,
    /// `|rho| = sqrt(sum h_i^2) / 2`.
    pub rho_norm: f64,
}

impl RootData {
    /// Flattens a product into factors that each claim a constant horosphere
    /// mean curvature.
    pub fn of(model: &ChartManifold) -> Result<Self> {
        fn walk(m: &ChartManifold, h: &mut Vec<f64>, d: &mut Vec<usize>) -> Result<()> {
            match m.factors() {
                Some((a, b)) => {
                    walk(a, h, d)?;
                    walk(b, h, d)
                }
                None => {
                    let hi = m.flags().asymptotically_harmonic.ok_or_else(|| {
                        GeomError::Unsupported(format!("factor {} has no constant horosphere curvature", m.name()))
                    })?;
                    h.push(hi);
                    d.push(m.dim());
                    Ok(())
                }
            }
        }
        if model.factors().is_none() {
            return Err(GeomError::Unsupported(format!("{} is not a product", model.name())));
        }
        let (mut factor_h, mut factor_dims) = (Vec::new(), Vec::new());
        walk(model, &mut factor_h, &mut factor_dims)?;
        let rho_norm = 0.5 * factor_h.iter().map(|h| h * h).sum::<f64>().sqrt();
        Ok(RootData { factor_h, factor_dims, rho_norm })
    }

    /// Factor norms `|v_i|` of a tangent vector.
    pub fn factor_norms(&self, model: &ChartManifold, v: &TangentVector) -> Result<Vec<f64>> {
        let g = model.metric(&v.base)?;
        let mut out = Vec::with_capacity(self.factor_dims.len());
        let mut off = 0;
        for &d in &self.factor_dims {
            let gi = g.view((off, off), (d, d)).into_owned();
            let vi = v.components.rows(off, d).into_owned();
            out.push(linalg::norm(&gi, &vi));
            off += d;
        }
        Ok(out)
    }

    /// `<v, 2 rho> = sum_i |v_i| h_i`.
    pub fn predicted(&self, norms: &[f64]) -> f64 {
        norms.iter().zip(&self.factor_h).map(|(a, h)| a * h).sum()
    }

    /// Value of `sum_i |v_i| h_i` at the maximiser `v ∝ (h_i)`.
    pub fn sup_pairing(&self) -> f64 {
        let norm = (2.0 * self.rho_norm).max(f64::MIN_POSITIVE);
        self.factor_h.iter().map(|h| h * h / norm).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RankSample {
    pub direction: Vec<f64>,
    pub factor_norms: Vec<f64>,
    pub predicted: f64,
    /// `Delta b_v` at `gamma_v(s)` for each `s` of the check.
    pub measured: Vec<f64>,
    pub error: f64,
    /// `max - min` of `measured` along the geodesic.
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub root: RootData,
    pub samples: Vec<RankSample>,
    pub max_error: f64,
    pub max_drift: f64,
    /// Largest measured `Delta b_v`.
    pub sup_measured: f64,
    /// `(sup_measured / 2)^2`.
    pub rho_sq_estimate: f64,
}

/// Measures `Delta b_v = -tr D'(0)` of the stable Jacobi tensor along
/// `gamma_v` at the parameters `along`, for unit `directions` at `o`.
pub fn rank_higher_checks(
    model: &ChartManifold,
    o: &DVector<f64>,
    directions: &[DVector<f64>],
    along: &[f64],
    opts: &StableOptions,
) -> Result<RankReport> {
    let root = RootData::of(model)?;
    if directions.is_empty() || along.is_empty() || along.iter().any(|s| !(*s >= 0.0)) {
        return Err(GeomError::Precondition("need directions and nonnegative parameters".into()));
    }
    let s_max = along.iter().copied().fold(0.0, f64::max);
    let results: Vec<Result<RankSample>> = directions
        .par_iter()
        .map(|d| {
            let v = TangentVector::new(o.clone(), d.clone()).normalized(model)?;
            let norms = root.factor_norms(model, &v)?;
            let predicted = root.predicted(&norms);
            let path = integrate_geodesic(model, &v, s_max.max(opts.step), &IntegratorOptions::with_step(opts.step))?;
            let measured = along
                .iter()
                .map(|&s| {
                    let node = &path.nodes[path.node_at(s)];
                    let u = TangentVector::new(node.point.clone(), node.velocity.clone());
                    Ok(stable_jacobi_tensor(model, &u, opts)?.mean_curvature())
                })
                .collect::<Result<Vec<f64>>>()?;
            let error = measured.iter().map(|m| (m - predicted).abs()).fold(0.0, f64::max);
            let max = measured.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = measured.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(RankSample { direction: v.components.iter().copied().collect(), factor_norms: norms, predicted, measured, error, drift: max - min })
        })
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_error = samples.iter().map(|s| s.error).fold(0.0, f64::max);
    let max_drift = samples.iter().map(|s| s.drift).fold(0.0, f64::max);
    let sup_measured = samples.iter().flat_map(|s| s.measured.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    Ok(RankReport { root, samples, max_error, max_drift, sup_measured, rho_sq_estimate: (sup_measured / 2.0).powi(2) })
}

/// Smallest Hopf angle of the product grid. Stable tensors along `v` need
/// `s` of order `1/min |v_i|` to converge but lose the slow mode once
/// `exp(max |v_i| s)` reaches the rounding level, so the factor norms are kept
/// within a ratio of about 4.
pub const GRID_MIN_ANGLE: f64 = 0.25;

/// Unit directions at `o` of a product of two surfaces: Hopf angles
/// `phi_j` equispaced (midpoints) in `[GRID_MIN_ANGLE, pi/2 - GRID_MIN_ANGLE]`
/// times circle angles in each factor,
/// followed by the diagonal directions `phi = pi/4`.
pub fn product_direction_grid(model: &ChartManifold, o: &DVector<f64>, polar: usize, first: usize, second: usize) -> Result<Vec<DVector<f64>>> {
    if model.dim() != 4 {
        return Err(GeomError::Unsupported("direction grid is defined for products of two surfaces".into()));
    }
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    let mut out = Vec::new();
    let circle = |k: usize, m: usize| {
        let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        (a.cos(), a.sin())
    };
    let mut push = |phi: f64, a: (f64, f64), b: (f64, f64)| {
        let (c, s) = (phi.cos(), phi.sin());
        out.push(&e * DVector::from_vec(vec![c * a.0, c * a.1, s * b.0, s * b.1]));
    };
    for j in 0..polar {
        let phi = GRID_MIN_ANGLE + (j as f64 + 0.5) * (std::f64::consts::FRAC_PI_2 - 2.0 * GRID_MIN_ANGLE) / polar as f64;
        for k in 0..first {
            for l in 0..second {
                push(phi, circle(k, first), circle(l, second));
            }
        }
    }
    for k in 0..first {
        push(std::f64::consts::FRAC_PI_4, circle(k, first), circle(0, 1));
    }
    Ok(out)
}
