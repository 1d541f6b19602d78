//! Spectral quantities of asymptotically harmonic models: horosphere mean
//! curvature, Cheeger ratios, Rayleigh bounds for the bottom of the spectrum,
//! spherical functions, Plancherel densities, radialisation and products.

mod horosphere;
mod plancherel;
mod radialise;
mod rank;
mod spherical;
mod volume;

pub use horosphere::{horosphere_mean_curvature, horosphere_scan, HorosphereCurvature, HorosphereSample, HorosphereScan, ScanOptions};
pub use plancherel::{
    c_function_density, essential_range, hyperbolic_density, EssentialRange, PlancherelDensity, RangeVerdict, RegimeConstants, ScanGrid,
};
pub use radialise::{commutation_residual, idempotence_residual, radialise, CommutationReport, RadialFunction, SphereBundle};
pub use rank::{product_direction_grid, GRID_MIN_ANGLE, rank_higher_checks, RankReport, RankSample, RootData};
pub use spherical::{spherical_function, SphericalFunction};
pub use volume::{area_profile, cheeger_ratio_scan, rayleigh_lambda0, AreaProfile, GrowthFit, RayleighReport};

use crate::error::{GeomError, Result};
use crate::model::ChartManifold;
use crate::quadrature::AngularRule;
use nalgebra::DVector;
use serde::Serialize;
use std::collections::BTreeMap;

/// Settings of [`spectral_report`].
#[derive(Debug, Clone)]
pub struct SpectralConfig {
    pub scan: ScanOptions,
    pub r_max: f64,
    pub step: f64,
    pub record_every: usize,
    pub rule: AngularRule,
    /// Radii of the Cheeger ratios; nodes of the area profile.
    pub radii: Vec<f64>,
    /// Indices `n` of the test functions `f_n`.
    pub n_indices: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub model_id: String,
    pub h_samples: Vec<HorosphereSample>,
    pub h_mean: f64,
    pub h_spread: f64,
    pub cheeger_ratios: Vec<(f64, f64)>,
    pub lambda0_upper: f64,
    pub lambda0_index: usize,
    pub essential_range_bottom: f64,
    pub residuals: BTreeMap<String, f64>,
}

impl SpectralReport {
    /// Names of violated invariants: Cheeger ratios below `h` and a Rayleigh
    /// bound below `h^2/4`.
    pub fn violations(&self, asymptotically_harmonic: bool) -> Vec<String> {
        let mut out = Vec::new();
        if asymptotically_harmonic {
            for &(r, c) in &self.cheeger_ratios {
                if c < self.h_mean - 1e-3 {
                    out.push(format!("cheeger ratio {c} at r = {r} below h = {}", self.h_mean));
                }
            }
        }
        if self.lambda0_upper < self.h_mean * self.h_mean / 4.0 - 1e-3 {
            out.push(format!("Rayleigh bound {} below h^2/4", self.lambda0_upper));
        }
        out
    }
}

/// Horosphere scan, Cheeger ratios and the best Rayleigh bound about `o`.
pub fn spectral_report(model: &ChartManifold, o: &DVector<f64>, cfg: &SpectralConfig) -> Result<SpectralReport> {
    if cfg.n_indices.is_empty() {
        return Err(GeomError::Precondition("need at least one test function index".into()));
    }
    let scan = horosphere_scan(model, o, &cfg.scan)?;
    let profile = area_profile(model, o, cfg.r_max, cfg.step, cfg.record_every, &cfg.rule)?;
    let cheeger_ratios = cheeger_ratio_scan(&profile, &cfg.radii)?;
    let h = model.flags().asymptotically_harmonic.unwrap_or(scan.mean);
    let mut best: Option<RayleighReport> = None;
    for &n in &cfg.n_indices {
        let r = rayleigh_lambda0(&profile, scan.mean, n)?;
        if best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.unwrap();
    let mut residuals = BTreeMap::new();
    residuals.insert("horosphere_routes".to_string(), scan.max_discrepancy);
    residuals.insert("rayleigh_identity".to_string(), best.identity_residual);
    residuals.insert("growth_fit".to_string(), best.growth.residual);
    residuals.insert("rayleigh_tail_fraction".to_string(), best.tail_fraction);
    Ok(SpectralReport {
        model_id: model.name().to_string(),
        h_samples: scan.samples,
        h_mean: scan.mean,
        h_spread: scan.spread,
        cheeger_ratios,
        lambda0_upper: best.value,
        lambda0_index: best.n_index,
        essential_range_bottom: h * h / 4.0,
        residuals,
    })
}

#[cfg(test)]
mod tests;
