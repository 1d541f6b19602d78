//! Geodesics, parallel frames and Jacobi tensors.

mod flow;
mod jacobi;
mod logmap;
mod path;

pub use jacobi::{
    conjugate_points, focal_monitor, jacobi_tensor_bvp, radial_curvature_audit, stable_jacobi_tensor, CurvatureAudit,
    FocalReport, StableJacobiTensor, StableOptions,
};
pub use logmap::{distance, exp_map, log_map, LogMap, ShootingOptions};
pub use path::{integrate_geodesic, integrate_jacobi_tensor, GeodesicPath, IntegratorOptions, JacobiTensorField, PathNode};

#[cfg(test)]
mod tests;
