//! Named model constructors and their serialisable specification.

use super::{ChartManifold, Conformal, CustomMetric, Kind, ModelFlags, ModelTolerances, RadialDensity, RadialProfile};
use crate::error::{GeomError, Result};
use serde::{Deserialize, Serialize};

fn need_dim(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(GeomError::Precondition(format!("{what} needs dimension >= {min}, got {n}")));
    }
    if n > 12 {
        return Err(GeomError::Precondition(format!("dimension {n} exceeds the supported maximum of 12")));
    }
    Ok(())
}

fn hyperbolic_flags(n: usize) -> ModelFlags {
    ModelFlags {
        no_focal_points: true,
        negative_ricci: true,
        asymptotically_harmonic: Some(n as f64 - 1.0),
        radial_density: Some(RadialDensity::Hyperbolic { dim: n }),
    }
}

fn build(name: String, dim: usize, kind: Kind, flags: ModelFlags) -> ChartManifold {
    ChartManifold { name, dim, kind, flags, tolerances: ModelTolerances::default() }
}

pub fn euclidean(n: usize) -> Result<ChartManifold> {
    need_dim(n, 1, "euclidean")?;
    let flags = ModelFlags {
        no_focal_points: true,
        negative_ricci: false,
        asymptotically_harmonic: Some(0.0),
        radial_density: Some(RadialDensity::Euclidean { dim: n }),
    };
    Ok(build(format!("euclidean({n})"), n, Kind::Euclidean, flags))
}

pub fn hyperbolic_ball(n: usize) -> Result<ChartManifold> {
    need_dim(n, 2, "hyperbolic_ball")?;
    Ok(build(format!("hyperbolic_ball({n})"), n, Kind::Conformal(Conformal::PoincareBall), hyperbolic_flags(n)))
}

pub fn hyperbolic_halfspace(n: usize) -> Result<ChartManifold> {
    need_dim(n, 2, "hyperbolic_halfspace")?;
    Ok(build(format!("hyperbolic_halfspace({n})"), n, Kind::Conformal(Conformal::HalfSpace), hyperbolic_flags(n)))
}

/// Unit sphere in the stereographic chart from the north pole. Points are
/// kept within `|x| < guard` to stay away from the pole.
pub fn sphere2() -> Result<ChartManifold> {
    sphere2_guarded(1e3)
}

pub fn sphere2_guarded(guard: f64) -> Result<ChartManifold> {
    if !(guard > 0.0) {
        return Err(GeomError::Precondition("guard radius must be positive".into()));
    }
    let flags = ModelFlags {
        no_focal_points: false,
        negative_ricci: false,
        asymptotically_harmonic: None,
        radial_density: None,
    };
    Ok(build("sphere2".into(), 2, Kind::Conformal(Conformal::Stereographic { guard }), flags))
}

/// `dr^2 + phi(r)^2 dtheta^2` in Cartesian normal coordinates around a pole.
pub fn warped(profile: RadialProfile, n: usize) -> Result<ChartManifold> {
    need_dim(n, 2, "warped")?;
    profile.validate().map_err(GeomError::Precondition)?;
    let flags = match &profile {
        RadialProfile::Sinh => hyperbolic_flags(n),
        RadialProfile::Polynomial(c) if c.len() == 1 => ModelFlags {
            no_focal_points: true,
            negative_ricci: false,
            asymptotically_harmonic: Some(0.0),
            radial_density: Some(RadialDensity::Euclidean { dim: n }),
        },
        RadialProfile::Polynomial(_) => {
            // claimed when phi is increasing on the sampled range; checked numerically elsewhere
            let increasing = (0..=500).all(|k| profile.phi(0.1 * k as f64).1 > 0.0);
            ModelFlags {
                no_focal_points: increasing,
                negative_ricci: false,
                asymptotically_harmonic: None,
                radial_density: None,
            }
        }
    };
    let label = match &profile {
        RadialProfile::Sinh => "sinh".to_string(),
        RadialProfile::Polynomial(c) => format!("{c:?}"),
    };
    Ok(build(format!("warped({label},{n})"), n, Kind::Warped(profile), flags))
}

/// Riemannian product with block-diagonal metric.
pub fn product(a: ChartManifold, b: ChartManifold) -> Result<ChartManifold> {
    need_dim(a.dim + b.dim, 2, "product")?;
    let fa = &a.flags;
    let fb = &b.flags;
    let flat = fa.asymptotically_harmonic == Some(0.0) && fb.asymptotically_harmonic == Some(0.0) && a.is_euclidean() && b.is_euclidean();
    let flags = ModelFlags {
        no_focal_points: fa.no_focal_points && fb.no_focal_points,
        negative_ricci: fa.negative_ricci && fb.negative_ricci,
        asymptotically_harmonic: if flat { Some(0.0) } else { None },
        radial_density: if flat { Some(RadialDensity::Euclidean { dim: a.dim + b.dim }) } else { None },
    };
    let name = format!("product({},{})", a.name, b.name);
    let dim = a.dim + b.dim;
    Ok(build(name, dim, Kind::Product(Box::new(a), Box::new(b)), flags))
}

/// Metric supplied as a closure; derivatives by finite differences.
pub fn custom(
    name: &str,
    dim: usize,
    metric: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
) -> Result<ChartManifold> {
    need_dim(dim, 1, "custom")?;
    let flags = ModelFlags {
        no_focal_points: false,
        negative_ricci: false,
        asymptotically_harmonic: None,
        radial_density: None,
    };
    Ok(build(name.into(), dim, Kind::Custom(CustomMetric::new(metric, domain)), flags))
}

/// Serialisable model description used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Euclidean { dim: usize },
    HyperbolicBall { dim: usize },
    HyperbolicHalfspace { dim: usize },
    Sphere2 {
        #[serde(default)]
        guard: Option<f64>,
    },
    Warped { dim: usize, profile: RadialProfile },
    Product { factors: Vec<ModelSpec> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<ChartManifold> {
        match self {
            ModelSpec::Euclidean { dim } => euclidean(*dim),
            ModelSpec::HyperbolicBall { dim } => hyperbolic_ball(*dim),
            ModelSpec::HyperbolicHalfspace { dim } => hyperbolic_halfspace(*dim),
            ModelSpec::Sphere2 { guard } => sphere2_guarded(guard.unwrap_or(1e3)),
            ModelSpec::Warped { dim, profile } => warped(profile.clone(), *dim),
            ModelSpec::Product { factors } => {
                if factors.len() < 2 {
                    return Err(GeomError::Precondition("product needs at least two factors".into()));
                }
                let mut it = factors.iter();
                let mut acc = it.next().unwrap().build()?;
                for f in it {
                    acc = product(acc, f.build()?)?;
                }
                Ok(acc)
            }
        }
    }
}

/// Registry entry for listing.
#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub kind: &'static str,
    pub parameters: &'static str,
    pub description: &'static str,
}

pub fn list_models() -> Vec<ModelInfo> {
    vec![
        ModelInfo { kind: "euclidean", parameters: "dim", description: "flat space, identity metric" },
        ModelInfo { kind: "hyperbolic_ball", parameters: "dim", description: "curvature -1, Poincare ball chart" },
        ModelInfo { kind: "hyperbolic_halfspace", parameters: "dim", description: "curvature -1, upper half-space chart" },
        ModelInfo { kind: "sphere2", parameters: "guard (optional)", description: "unit 2-sphere, stereographic chart" },
        ModelInfo {
            kind: "warped",
            parameters: "dim, profile = \"sinh\" | { polynomial = [1, c3, c5, ...] }",
            description: "dr^2 + phi(r)^2 dtheta^2 in normal coordinates",
        },
        ModelInfo { kind: "product", parameters: "factors = [model, model, ...]", description: "Riemannian product" },
    ]
}
