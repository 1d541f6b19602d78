//! Radial profiles `phi` of warped metrics `dr^2 + phi(r)^2 dtheta^2`.
//!
//! A profile is stored as the odd series `phi(r) = sum_j c_j r^(2j+1)` with
//! `c_0 = 1`, which keeps the metric smooth at the pole.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialProfile {
    /// `phi = sinh r` (constant curvature -1).
    Sinh,
    /// Odd polynomial with the given coefficients of `r, r^3, r^5, ...`.
    Polynomial(Vec<f64>),
}

/// `P(s) = phi(r)/r` and `Q(s) = (P(s) - 1)/s` with their first two
/// derivatives in `s = r^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProfileJet {
    pub p: [f64; 3],
    pub q: [f64; 3],
}

impl RadialProfile {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            RadialProfile::Sinh => Ok(()),
            RadialProfile::Polynomial(c) => {
                if c.is_empty() || (c[0] - 1.0).abs() > 0.0 {
                    return Err("leading coefficient of the profile must be 1".into());
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err("profile coefficients must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn jet(&self, s: f64) -> ProfileJet {
        let mut out = ProfileJet::default();
        let mut c = 1.0;
        let mut j = 0usize;
        loop {
            if let RadialProfile::Polynomial(v) = self {
                match v.get(j) {
                    Some(x) => c = *x,
                    None => break,
                }
            }
            let jf = j as f64;
            let sp = |k: usize| s.powi((j - k) as i32);
            let term = c * sp(0);
            out.p[0] += term;
            if j >= 1 {
                let t = c * sp(1);
                out.p[1] += jf * t;
                out.q[0] += t;
            }
            if j >= 2 {
                let t = c * sp(2);
                out.p[2] += jf * (jf - 1.0) * t;
                out.q[1] += (jf - 1.0) * t;
            }
            if j >= 3 {
                out.q[2] += (jf - 1.0) * (jf - 2.0) * c * sp(3);
            }
            j += 1;
            if let RadialProfile::Sinh = self {
                if (j > 4 && j as f64 > s.sqrt() && term <= 1e-18 * out.p[0]) || j > 400 {
                    break;
                }
                c /= ((2 * j) * (2 * j + 1)) as f64;
            }
        }
        out
    }

    /// `(phi, phi', phi'')` at radius `r`.
    pub fn phi(&self, r: f64) -> (f64, f64, f64) {
        let s = r * r;
        let jet = self.jet(s);
        let (p, dp, ddp) = (jet.p[0], jet.p[1], jet.p[2]);
        (r * p, p + 2.0 * s * dp, r * (6.0 * dp + 4.0 * s * ddp))
    }

    /// Curvature of radial planes, `-phi''/phi`.
    pub fn radial_curvature(&self, r: f64) -> f64 {
        let jet = self.jet(r * r);
        // phi''/phi = (6P' + 4sP'')/P, finite at r = 0
        -(6.0 * jet.p[1] + 4.0 * r * r * jet.p[2]) / jet.p[0]
    }

    /// Curvature of planes tangent to the geodesic sphere, `(1 - phi'^2)/phi^2`.
    pub fn tangential_curvature(&self, r: f64) -> f64 {
        let s = r * r;
        let jet = self.jet(s);
        let (p, dp) = (jet.p[0], jet.p[1]);
        // 1 - phi'^2 = -(phi' - 1)(phi' + 1), phi' - 1 = s(Q + 2P')
        let dphi = p + 2.0 * s * dp;
        -(jet.q[0] + 2.0 * dp) * (dphi + 1.0) / (p * p)
    }
}

