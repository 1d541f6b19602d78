//! Plancherel densities of real hyperbolic spaces and the essential range of
//! the multiplication operator `m(lambda) = lambda^2 + h^2/4`.

use crate::error::{GeomError, Result};
use crate::quadrature::gauss_legendre;
use serde::Serialize;
use std::f64::consts::PI;

/// `|c(lambda)|^{-2}` of `H^n` normalised so that the leading power has
/// coefficient one.
pub fn hyperbolic_density(n: usize, lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    if n % 2 == 1 {
        let rho = (n - 1) / 2;
        (0..rho).map(|k| l2 + (k * k) as f64).product()
    } else {
        let half = (n - 1) as f64 / 2.0;
        let mut p = lambda * (PI * lambda).tanh();
        let mut k = 0.5;
        while k + 1.0 <= half {
            p *= l2 + k * k;
            k += 1.0;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegimeConstants {
    /// `C` in `lambda / C <= |c|^{-1}` on `[0, K)` and
    /// `lambda^{(n-1)/2} / C <= |c|^{-1}` on `[K, inf)`.
    pub c: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlancherelDensity {
    pub n: usize,
    /// Horosphere mean curvature `n - 1`.
    pub h: f64,
    pub lambda: Vec<f64>,
    pub density: Vec<f64>,
    pub regime_constants: RegimeConstants,
}

impl PlancherelDensity {
    pub fn eval(&self, lambda: f64) -> f64 {
        hyperbolic_density(self.n, lambda)
    }

    /// Does each grid point satisfy its regime's lower bound?
    pub fn bounds_hold(&self) -> bool {
        let RegimeConstants { c, k } = self.regime_constants;
        let p = (self.n as f64 - 1.0) / 2.0;
        self.lambda.iter().zip(&self.density).all(|(&l, &d)| {
            let lower = if l < k { l / c } else { l.powf(p) / c };
            lower <= d.sqrt() * (1.0 + 1e-12)
        })
    }
}

/// Density on the grid and the smallest `C` for which both lower bounds hold
/// at every grid point, with the regime boundary `k`.
pub fn c_function_density(n: usize, lambda_grid: &[f64], k: f64) -> Result<PlancherelDensity> {
    if n < 2 {
        return Err(GeomError::Precondition("c-function needs n >= 2".into()));
    }
    if lambda_grid.iter().any(|l| !(*l >= 0.0)) || !(k > 0.0) {
        return Err(GeomError::Precondition("grid must be nonnegative and K positive".into()));
    }
    let p = (n as f64 - 1.0) / 2.0;
    let density: Vec<f64> = lambda_grid.iter().map(|&l| hyperbolic_density(n, l)).collect();
    let mut c: f64 = 0.0;
    for (&l, &d) in lambda_grid.iter().zip(&density) {
        if l == 0.0 {
            continue;
        }
        let lower = if l < k { l } else { l.powf(p) };
        c = c.max(lower / d.sqrt());
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(GeomError::Convergence { what: "c-function lower bound fit".into(), residual: c });
    }
    Ok(PlancherelDensity {
        n,
        h: n as f64 - 1.0,
        lambda: lambda_grid.to_vec(),
        density,
        regime_constants: RegimeConstants { c, k },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeVerdict {
    pub x: f64,
    pub eps: f64,
    /// Preimage `m^{-1}(x - eps, x + eps)` as `[lo, hi)`, if nonempty.
    pub interval: Option<(f64, f64)>,
    /// Plancherel measure of the preimage.
    pub measure: f64,
    /// Smallest and largest grid points with `|m - x| < eps` and positive density.
    pub brute_force: Option<(f64, f64)>,
    /// Closed form and grid scan agree within one grid cell.
    pub matches: bool,
    pub included: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EssentialRange {
    /// `h^2/4`.
    pub bottom: f64,
    pub verdicts: Vec<RangeVerdict>,
    /// For each grid `x` below the bottom, the `eps = h^2/4 - x` whose preimage
    /// is empty.
    pub exclusion_witnesses: Vec<(f64, f64)>,
    pub all_match: bool,
}

/// Settings of the brute-force scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanGrid {
    pub spacing: f64,
    pub max: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid { spacing: 1e-4, max: 20.0 }
    }
}

fn measure(density: &PlancherelDensity, lo: f64, hi: f64) -> f64 {
    let (z, w) = gauss_legendre(32);
    let (c, r) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
    z.iter().zip(&w).map(|(z, w)| w * r * density.eval(c + r * z)).sum()
}

/// Membership of each `x` in the essential range of `m` under the Plancherel
/// measure, decided per `eps` from the closed-form preimage and checked
/// against a grid scan.
pub fn essential_range(h: f64, density: &PlancherelDensity, x_grid: &[f64], eps_grid: &[f64], scan: ScanGrid) -> Result<EssentialRange> {
    if eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(GeomError::Precondition("eps must be positive".into()));
    }
    let bottom = h * h / 4.0;
    let cells = (scan.max / scan.spacing).round() as usize;
    let mut verdicts = Vec::with_capacity(x_grid.len() * eps_grid.len());
    for &x in x_grid {
        for &eps in eps_grid {
            let gap = bottom - x;
            // eps equal to the gap up to rounding of `bottom - x` counts as equal
            let interval = if eps - gap <= 4.0 * f64::EPSILON * bottom.max(x.abs()) {
                None
            } else {
                Some(((x - eps - bottom).max(0.0).sqrt(), (eps - gap).sqrt()))
            };
            if let Some((_, hi)) = interval {
                if hi > scan.max {
                    return Err(GeomError::Precondition(format!("scan grid ends below the preimage bound {hi}")));
                }
            }
            let measure = interval.map_or(0.0, |(lo, hi)| measure(density, lo, hi));
            let mut brute: Option<(f64, f64)> = None;
            for j in 0..=cells {
                let l = j as f64 * scan.spacing;
                if (l * l + gap).abs() < eps && density.eval(l) > 0.0 {
                    brute = Some(brute.map_or((l, l), |(a, _)| (a, l)));
                }
            }
            let matches = match (interval, brute) {
                (None, None) => true,
                (Some((lo, hi)), Some((a, b))) => (a - lo).abs() <= scan.spacing && (b - hi).abs() <= scan.spacing,
                // an interval shorter than a cell may hold no grid point
                (Some((lo, hi)), None) => hi - lo < scan.spacing,
                (None, Some(_)) => false,
            };
            verdicts.push(RangeVerdict { x, eps, interval, measure, brute_force: brute, matches, included: measure > 0.0 });
        }
    }
    let exclusion_witnesses = x_grid
        .iter()
        .filter(|&&x| x < bottom)
        .map(|&x| {
            let eps = bottom - x;
            debug_assert!(eps > 0.0);
            (x, eps)
        })
        .collect();
    let all_match = verdicts.iter().all(|v| v.matches);
    Ok(EssentialRange { bottom, verdicts, exclusion_witnesses, all_match })
}
