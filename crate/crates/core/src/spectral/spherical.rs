//! Radial eigenfunctions `phi_lambda` of harmonic models.

use crate::error::{GeomError, Result};
use crate::model::{ChartManifold, RadialDensity};
use crate::ode::{Halt, Rk4, System};
use serde::Serialize;

/// `phi_lambda` on a uniform grid with `phi(0) = 1`, `phi'(0) = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct SphericalFunction {
    pub lambda: f64,
    /// Eigenvalue `lambda^2 + h^2/4` of `-Delta`.
    pub eigenvalue: f64,
    pub spacing: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `sup |phi'' + (A'/A) phi' + mu phi|` with five-point differences of the
    /// stored values.
    pub residual: f64,
}

struct Radial {
    density: RadialDensity,
    mu: f64,
}

impl System for Radial {
    fn dim(&self) -> usize {
        3
    }

    // state (r, phi, phi')
    fn rhs(&mut self, y: &[f64], dy: &mut [f64]) -> bool {
        dy[0] = 1.0;
        dy[1] = y[2];
        dy[2] = -self.density.log_derivative(y[0]) * y[2] - self.mu * y[1];
        true
    }
}

/// Series `1 + a2 r^2 + a4 r^4` about the regular singular point.
fn series(density: RadialDensity, mu: f64, r: f64) -> (f64, f64) {
    let n = density.dim() as f64;
    let a2 = -mu / (2.0 * n);
    let curv = match density {
        RadialDensity::Hyperbolic { .. } => 2.0 * (n - 1.0) / 3.0,
        RadialDensity::Euclidean { .. } => 0.0,
    };
    let a4 = -a2 * (curv + mu) / (4.0 * (n + 2.0));
    (1.0 + a2 * r * r + a4 * r.powi(4), 2.0 * a2 * r + 4.0 * a4 * r.powi(3))
}

/// Solves `phi'' + (A'/A) phi' + (lambda^2 + h^2/4) phi = 0` on `[0, r_max]`
/// with the model's radial density. The series is used on `[0, 1e-2]`.
pub fn spherical_function(model: &ChartManifold, lambda: f64, r_max: f64, step: f64) -> Result<SphericalFunction> {
    let density = model
        .flags()
        .radial_density
        .ok_or_else(|| GeomError::Unsupported(format!("{} has no known radial density", model.name())))?;
    if !(step > 0.0 && step <= 1e-2) || !(r_max > 10.0 * step) || !lambda.is_finite() {
        return Err(GeomError::Precondition("need 0 < step <= 1e-2 and r_max > 10 step".into()));
    }
    let h = density.horosphere_mean_curvature();
    let mu = lambda * lambda + h * h / 4.0;
    let steps = (r_max / step).round() as usize;
    let spacing = r_max / steps as f64;
    let start = ((1e-2 / spacing).round() as usize).max(1);
    let mut phi = Vec::with_capacity(steps + 1);
    let mut dphi = Vec::with_capacity(steps + 1);
    for k in 0..=start {
        let (p, d) = series(density, mu, k as f64 * spacing);
        phi.push(p);
        dphi.push(d);
    }
    let mut y = [start as f64 * spacing, phi[start], dphi[start]];
    let mut sys = Radial { density, mu };
    let halt = Rk4::new(3).run(&mut sys, &mut y, spacing, steps - start, |_, s| {
        phi.push(s[1]);
        dphi.push(s[2]);
        true
    });
    if halt != Halt::Completed {
        return Err(GeomError::Domain("radial integration stopped early".into()));
    }
    let r: Vec<f64> = (0..=steps).map(|k| k as f64 * spacing).collect();
    let mut residual: f64 = 0.0;
    for k in start.max(2)..steps - 1 {
        let d2 = (-phi[k + 2] + 16.0 * phi[k + 1] - 30.0 * phi[k] + 16.0 * phi[k - 1] - phi[k - 2]) / (12.0 * spacing * spacing);
        let d1 = (-phi[k + 2] + 8.0 * phi[k + 1] - 8.0 * phi[k - 1] + phi[k - 2]) / (12.0 * spacing);
        residual = residual.max((d2 + density.log_derivative(r[k]) * d1 + mu * phi[k]).abs());
    }
    Ok(SphericalFunction { lambda, eigenvalue: mu, spacing, r, phi, dphi, residual })
}

impl SphericalFunction {
    /// Cubic Hermite interpolation of `phi` at `r`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let last = *self.r.last().unwrap();
        if !(0.0..=last).contains(&r) {
            return Err(GeomError::Domain(format!("radius {r} outside [0, {last}]")));
        }
        let k = ((r / self.spacing).floor() as usize).min(self.r.len() - 2);
        let h = self.spacing;
        let t = (r - self.r[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.phi[k]
            + (t3 - 2.0 * t2 + t) * h * self.dphi[k]
            + (-2.0 * t3 + 3.0 * t2) * self.phi[k + 1]
            + (t3 - t2) * h * self.dphi[k + 1])
    }
}
