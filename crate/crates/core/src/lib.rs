//! Numerical laboratory for manifolds without focal points: geodesics and
//! Jacobi tensors, Busemann functions and convexity certificates, and
//! spectral quantities of asymptotically harmonic models.

pub mod convexity;
pub mod error;
pub mod fd;
pub mod geodesic;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod spectral;

pub use error::{GeomError, Result};
pub use model::{ChartManifold, TangentVector};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
