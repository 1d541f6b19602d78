//! Sphere areas from Jacobi determinants, Cheeger ratios and Rayleigh
//! quotients of exponentially decaying radial test functions.

use crate::error::{GeomError, Result};
use crate::geodesic::{integrate_jacobi_tensor, IntegratorOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::quadrature::{cumulative, simpson, AngularRule};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// Area `S(r)` of geodesic spheres about `o` and volume `V(r)` of balls on a
/// uniform radial grid.
#[derive(Debug, Clone, Serialize)]
pub struct AreaProfile {
    pub spacing: f64,
    pub r: Vec<f64>,
    pub area: Vec<f64>,
    pub volume: Vec<f64>,
}

/// Integrates `det Y` with `Y(0) = 0, Y'(0) = I` along the rays `exp_o(r E theta)`
/// for the directions `theta` of `rule`, `E` an orthonormal basis at `o`.
/// Nodes are recorded every `record_every` steps of size `step`.
pub fn area_profile(
    model: &ChartManifold,
    o: &DVector<f64>,
    r_max: f64,
    step: f64,
    record_every: usize,
    rule: &AngularRule,
) -> Result<AreaProfile> {
    let n = model.dim();
    if n < 2 {
        return Err(GeomError::Precondition("area profile needs dimension >= 2".into()));
    }
    if rule.is_empty() || rule.directions[0].len() != n {
        return Err(GeomError::Precondition(format!("angular rule must live on the unit sphere of R^{n}")));
    }
    if !(r_max > 0.0) {
        return Err(GeomError::Precondition("radius must be positive".into()));
    }
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    let y0 = DMatrix::zeros(n - 1, n - 1);
    let y0p = DMatrix::identity(n - 1, n - 1);
    let opts = IntegratorOptions { step, record_every };
    let dets: Vec<Result<Vec<f64>>> = rule
        .directions
        .par_iter()
        .map(|theta| {
            let v = TangentVector::new(o.clone(), &e * theta);
            let field = integrate_jacobi_tensor(model, &v, r_max, &y0, &y0p, &opts)?;
            if let Some(t) = field.path.truncated_at {
                return Err(GeomError::Domain(format!("radial geodesic leaves the chart at r = {t}")));
            }
            Ok(field.values.iter().map(|y| y.determinant()).collect())
        })
        .collect();
    let mut area: Vec<f64> = Vec::new();
    for (d, w) in dets.into_iter().zip(&rule.weights) {
        let d = d?;
        if area.is_empty() {
            area = vec![0.0; d.len()];
        }
        for (a, x) in area.iter_mut().zip(&d) {
            *a += w * x;
        }
    }
    let spacing = r_max / (area.len() - 1) as f64;
    let r: Vec<f64> = (0..area.len()).map(|k| k as f64 * spacing).collect();
    let volume = cumulative(&area, spacing);
    Ok(AreaProfile { spacing, r, area, volume })
}

impl AreaProfile {
    fn index_of(&self, r: f64) -> Result<usize> {
        let k = (r / self.spacing).round();
        if !(k >= 0.0) || (k * self.spacing - r).abs() > 1e-9 * r.max(1.0) || k as usize >= self.r.len() {
            return Err(GeomError::Precondition(format!("radius {r} is not a node of the area profile")));
        }
        Ok(k as usize)
    }

    /// Least-squares fit of `ln S` on `[r_max/2, r_max]` in the basis
    /// `1, r, ln r, 1/r`.
    pub fn growth_fit(&self) -> Result<GrowthFit> {
        let r_max = *self.r.last().unwrap();
        let rows: Vec<usize> = (0..self.r.len()).filter(|&k| self.r[k] >= r_max / 2.0 && self.r[k] > 0.0).collect();
        if rows.len() < 8 {
            return Err(GeomError::Precondition("too few nodes for a growth fit".into()));
        }
        let mut a = DMatrix::zeros(rows.len(), 4);
        let mut b = DVector::zeros(rows.len());
        for (i, &k) in rows.iter().enumerate() {
            let r = self.r[k];
            if !(self.area[k] > 0.0) {
                return Err(GeomError::Domain(format!("nonpositive sphere area at r = {r}")));
            }
            a[(i, 0)] = 1.0;
            a[(i, 1)] = r;
            a[(i, 2)] = r.ln();
            a[(i, 3)] = 1.0 / r;
            b[i] = self.area[k].ln();
        }
        let c = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|_| GeomError::Convergence { what: "growth fit".into(), residual: f64::NAN })?;
        let residual = (&a * &c - &b).amax();
        Ok(GrowthFit { constant: c[0], rate: c[1], power: c[2], inverse: c[3], residual })
    }
}

/// `ln S(r) ~ constant + rate r + power ln r + inverse / r`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthFit {
    pub constant: f64,
    pub rate: f64,
    pub power: f64,
    pub inverse: f64,
    /// Largest residual of the fit in `ln S`.
    pub residual: f64,
}

impl GrowthFit {
    pub fn area(&self, r: f64) -> f64 {
        self.weighted_area(r, 0.0)
    }

    /// `exp(-decay r) S_fit(r)`, combined in the exponent.
    pub fn weighted_area(&self, r: f64, decay: f64) -> f64 {
        (self.constant + (self.rate - decay) * r + self.power * r.ln() + self.inverse / r).exp()
    }
}

/// `(r, S(r)/V(r))` at the requested radii, which must be profile nodes.
pub fn cheeger_ratio_scan(profile: &AreaProfile, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    radii
        .iter()
        .map(|&r| {
            let k = profile.index_of(r)?;
            if k == 0 {
                return Err(GeomError::Precondition("Cheeger ratio needs a positive radius".into()));
            }
            let ratio = profile.area[k] / profile.volume[k];
            if !ratio.is_finite() {
                return Err(GeomError::Divergence(format!("nonfinite Cheeger ratio at r = {r}")));
            }
            Ok((r, ratio))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RayleighReport {
    pub n_index: usize,
    /// Decay rate `a = (h + 1/n)/2` of `f_n = exp(-a d(o, .))`.
    pub rate: f64,
    /// `int |grad f|^2 / int f^2`.
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Share of the denominator contributed by the fitted tail.
    pub tail_fraction: f64,
    pub growth: GrowthFit,
    /// `max |f' + a f| / (a f)` with `f'` by finite differences on the grid.
    pub identity_residual: f64,
}

/// `int_R^inf exp(-2 a r) S_fit(r) dr`, integrated in panels until they are
/// negligible.
fn tail_integral(fit: &GrowthFit, rate: f64, from: f64) -> Result<f64> {
    let decay = 2.0 * rate - fit.rate;
    let panel = (10.0 / decay).clamp(1.0, 1e3);
    let nodes = 2 * (panel / 0.05).ceil() as usize;
    let h = panel / nodes as f64;
    let mut total = 0.0;
    let mut start = from;
    for _ in 0..1_000 {
        let vals: Vec<f64> = (0..=nodes)
            .map(|k| {
                let r = start + k as f64 * h;
                fit.weighted_area(r, 2.0 * rate)
            })
            .collect();
        let part = simpson(&vals, h);
        if !part.is_finite() {
            return Err(GeomError::Divergence("nonfinite tail integrand".into()));
        }
        total += part;
        start += panel;
        if part <= 1e-17 * total && vals[nodes] <= vals[0] {
            return Ok(total);
        }
    }
    Err(GeomError::Divergence("tail integral did not become negligible".into()))
}

/// Rayleigh quotient of `f_n = exp(-(h + 1/n) d(o, .)/2)` by radial quadrature
/// of `f^2 S` and `f'^2 S`, with the tail beyond the profile taken from the
/// growth fit.
pub fn rayleigh_lambda0(profile: &AreaProfile, h: f64, n_index: usize) -> Result<RayleighReport> {
    if n_index == 0 {
        return Err(GeomError::Precondition("test function index starts at 1".into()));
    }
    let rate = 0.5 * (h + 1.0 / n_index as f64);
    let growth = profile.growth_fit()?;
    if 2.0 * rate <= growth.rate {
        return Err(GeomError::Divergence(format!(
            "exponent {} does not exceed the volume growth rate {}",
            2.0 * rate,
            growth.rate
        )));
    }
    let dr = profile.spacing;
    if profile.r.len() < 8 {
        return Err(GeomError::Precondition("area profile too short".into()));
    }
    let f: Vec<f64> = profile.r.iter().map(|r| (-rate * r).exp()).collect();
    let m = f.len();
    // fourth-order differences, one-sided at both ends
    let df: Vec<f64> = (0..m)
        .map(|k| {
            let d = if k == 0 {
                -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
            } else if k == 1 {
                -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
            } else if k == m - 2 {
                3.0 * f[m - 1] + 10.0 * f[m - 2] - 18.0 * f[m - 3] + 6.0 * f[m - 4] - f[m - 5]
            } else if k == m - 1 {
                25.0 * f[m - 1] - 48.0 * f[m - 2] + 36.0 * f[m - 3] - 16.0 * f[m - 4] + 3.0 * f[m - 5]
            } else {
                -f[k + 2] + 8.0 * f[k + 1] - 8.0 * f[k - 1] + f[k - 2]
            };
            d / (12.0 * dr)
        })
        .collect();
    let identity_residual = (0..m).map(|k| (df[k] + rate * f[k]).abs() / (rate * f[k])).fold(0.0, f64::max);
    let den_vals: Vec<f64> = (0..m).map(|k| f[k] * f[k] * profile.area[k]).collect();
    let num_vals: Vec<f64> = (0..m).map(|k| df[k] * df[k] * profile.area[k]).collect();
    let r_end = *profile.r.last().unwrap();
    let tail = tail_integral(&growth, rate, r_end)?;
    // the fit is matched to the last node so the tail joins continuously
    let scale = profile.area[m - 1] / growth.area(r_end);
    let tail = tail * scale;
    let den_body = simpson(&den_vals, dr);
    let denominator = den_body + tail;
    // on the tail |f'| = a f exactly
    let numerator = simpson(&num_vals, dr) + rate * rate * tail;
    let value = numerator / denominator;
    if !value.is_finite() {
        return Err(GeomError::Divergence("nonfinite Rayleigh quotient".into()));
    }
    Ok(RayleighReport {
        n_index,
        rate,
        value,
        numerator,
        denominator,
        tail_fraction: tail / denominator,
        growth,
        identity_residual,
    })
}
