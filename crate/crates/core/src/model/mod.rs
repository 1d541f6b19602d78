//! Chart-based Riemannian model manifolds.
//!
//! Every model is a single global chart with an explicit metric. Closed-form
//! models provide first and second metric derivatives analytically so that the
//! connection and its derivative are exact; custom metrics fall back to
//! central finite differences.

mod curvature;
mod metric;
mod oracle;
pub mod profile;
pub mod registry;

pub use curvature::{jacobi_operator_into, Christoffel, Riemann};
pub use metric::CustomMetric;
pub use profile::RadialProfile;
pub use registry::ModelSpec;

use crate::error::{GeomError, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Conformally flat charts `g = e^{2 sigma} delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Conformal {
    /// Poincare ball, `sigma = ln 2 - ln(1 - |x|^2)`.
    PoincareBall,
    /// Upper half-space in the last coordinate, `sigma = -ln y`.
    HalfSpace,
    /// Stereographic chart of the unit sphere, restricted to `|x| < guard`.
    Stereographic { guard: f64 },
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    Euclidean,
    Conformal(Conformal),
    /// Cartesian normal coordinates of `dr^2 + phi(r)^2 dtheta^2`.
    Warped(RadialProfile),
    Product(Box<ChartManifold>, Box<ChartManifold>),
    Custom(CustomMetric),
}

/// Radial volume density of a harmonic model, as needed by radial ODEs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadialDensity {
    /// `A(r) = r^{n-1}`.
    Euclidean { dim: usize },
    /// `A(r) = sinh^{n-1} r`.
    Hyperbolic { dim: usize },
}

impl RadialDensity {
    /// `A'(r)/A(r)`.
    pub fn log_derivative(&self, r: f64) -> f64 {
        match *self {
            RadialDensity::Euclidean { dim } => (dim as f64 - 1.0) / r,
            RadialDensity::Hyperbolic { dim } => (dim as f64 - 1.0) / r.tanh(),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            RadialDensity::Euclidean { dim } | RadialDensity::Hyperbolic { dim } => dim,
        }
    }

    /// Mean curvature of horospheres (0 for flat space).
    pub fn horosphere_mean_curvature(&self) -> f64 {
        match *self {
            RadialDensity::Euclidean { .. } => 0.0,
            RadialDensity::Hyperbolic { dim } => dim as f64 - 1.0,
        }
    }
}

/// Structural claims a model makes about itself. They are claims: the
/// numerical checks are expected to confirm or refute them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFlags {
    pub no_focal_points: bool,
    pub negative_ricci: bool,
    /// Constant horosphere mean curvature, when claimed.
    pub asymptotically_harmonic: Option<f64>,
    /// Present for harmonic models whose radial density is known.
    pub radial_density: Option<RadialDensity>,
}

/// Tolerances attached to a model instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelTolerances {
    /// Relative step of finite-difference metric derivatives (custom metrics).
    pub fd_step: f64,
    /// Allowed asymmetry of the metric.
    pub symmetry: f64,
}

impl Default for ModelTolerances {
    fn default() -> Self {
        ModelTolerances { fd_step: 1e-5, symmetry: 1e-8 }
    }
}

/// A Riemannian manifold given by one chart.
#[derive(Debug, Clone)]
pub struct ChartManifold {
    pub(crate) name: String,
    pub(crate) dim: usize,
    pub(crate) kind: Kind,
    pub(crate) flags: ModelFlags,
    pub(crate) tolerances: ModelTolerances,
}

/// A tangent vector in chart components, attached to a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: DVector<f64>,
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: DVector<f64>, components: DVector<f64>) -> Self {
        TangentVector { base, components }
    }

    pub fn norm(&self, m: &ChartManifold) -> Result<f64> {
        let g = m.metric(&self.base)?;
        Ok(crate::linalg::norm(&g, &self.components))
    }

    pub fn normalized(&self, m: &ChartManifold) -> Result<TangentVector> {
        let n = self.norm(m)?;
        if !(n > 0.0) {
            return Err(GeomError::TrivialInitialData);
        }
        Ok(TangentVector::new(self.base.clone(), &self.components / n))
    }
}

impl ChartManifold {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> &ModelFlags {
        &self.flags
    }

    pub fn tolerances(&self) -> &ModelTolerances {
        &self.tolerances
    }

    pub fn with_tolerances(mut self, tol: ModelTolerances) -> Self {
        self.tolerances = tol;
        self
    }

    pub fn with_flags(mut self, flags: ModelFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Factors of a product model.
    pub fn factors(&self) -> Option<(&ChartManifold, &ChartManifold)> {
        match &self.kind {
            Kind::Product(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Radial profile of a warped model.
    pub fn profile(&self) -> Option<&RadialProfile> {
        match &self.kind {
            Kind::Warped(p) => Some(p),
            _ => None,
        }
    }

    pub fn conformal_kind(&self) -> Option<Conformal> {
        match &self.kind {
            Kind::Conformal(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, Kind::Euclidean)
    }

    /// Whether the chart contains `x`.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match &self.kind {
            Kind::Euclidean | Kind::Warped(_) => true,
            Kind::Conformal(Conformal::PoincareBall) => {
                let s: f64 = x.iter().map(|c| c * c).sum();
                1.0 - s > 0.0
            }
            Kind::Conformal(Conformal::HalfSpace) => x[self.dim - 1] > 0.0,
            Kind::Conformal(Conformal::Stereographic { guard }) => {
                x.iter().map(|c| c * c).sum::<f64>() < guard * guard
            }
            Kind::Product(a, b) => a.contains(&x[..a.dim]) && b.contains(&x[a.dim..]),
            Kind::Custom(c) => c.contains(x),
        }
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(GeomError::Precondition(format!(
                "point has {} coordinates, model dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if !self.contains(x.as_slice()) {
            return Err(GeomError::Domain(format!("{:?} not in chart of {}", x.as_slice(), self.name)));
        }
        Ok(())
    }

    pub fn check_vector(&self, v: &TangentVector) -> Result<()> {
        self.check_point(&v.base)?;
        if v.components.len() != self.dim {
            return Err(GeomError::Precondition("tangent vector has wrong dimension".into()));
        }
        Ok(())
    }

    /// Metric matrix at `x`.
    pub fn metric(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let n = self.dim;
        let mut g = vec![0.0; n * n];
        self.metric_into(x.as_slice(), &mut g);
        let gm = DMatrix::from_row_slice(n, n, &g);
        let asym = (&gm - gm.transpose()).abs().max();
        if asym > self.tolerances.symmetry * gm.abs().max().max(1.0) {
            return Err(GeomError::Precondition(format!("metric asymmetric by {asym:e}")));
        }
        Ok(gm)
    }

    /// Metric derivatives `d_k g` at `x` (one matrix per coordinate).
    pub fn metric_derivatives(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(x)?;
        let n = self.dim;
        let mut g = vec![0.0; n * n];
        let mut dg = vec![0.0; n * n * n];
        self.metric_jet_into(x.as_slice(), &mut g, &mut dg, None);
        Ok((0..n).map(|k| DMatrix::from_row_slice(n, n, &dg[k * n * n..(k + 1) * n * n])).collect())
    }

    /// Christoffel symbols of the second kind at `x`.
    pub fn christoffel(&self, x: &DVector<f64>) -> Result<Christoffel> {
        self.check_point(x)?;
        let n = self.dim;
        let mut gamma = vec![0.0; n * n * n];
        self.connection_into(x.as_slice(), &mut gamma, None);
        Ok(Christoffel { dim: n, data: gamma })
    }
}

#[cfg(test)]
mod tests;
