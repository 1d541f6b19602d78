//! Busemann functions, distance-based exhaustion functions and convexity
//! certificates.

mod averaged;
mod busemann;
mod certificate;
mod distance;

pub use averaged::{averaged_f, AveragedF, AveragedValue, BoundaryMeasure};
pub use busemann::{
    busemann_gradient, busemann_hessian, busemann_value, integral_curve_check, BusemannEvaluation, BusemannOptions,
    BusemannRay, Estimator, IntegralCurveReport,
};
pub use certificate::{ball_samples, certify_strict_convexity, ConvexTarget, ConvexityCertificate, FunctionId, SampleRecord};
pub use distance::{
    distance_hessian, distance_sq_hessian, exhaustion_f, lambda_ratio_check, radial_profile, radial_theorem_constants,
    ExhaustionValue, HypothesisMode, LambdaReport, RadialConstants, RadialProfileSample, RadialRegion, LAMBDA_SLACK,
};

#[cfg(test)]
mod tests;
