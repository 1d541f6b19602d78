//! Experiment kinds: parameters, execution and verdicts.

use crate::config::{parse_params, Checker, Diagnostic, ExperimentEntry, ExperimentKind, Params};
use crate::report::{details, ExperimentOutcome, Series, Verdict};
use horolab_core::convexity::{
    ball_samples, certify_strict_convexity, lambda_ratio_check, radial_theorem_constants, AveragedF, BoundaryMeasure, BusemannOptions,
    BusemannRay, ConvexTarget, HypothesisMode, RadialRegion,
};
use horolab_core::error::{GeomError, Result};
use horolab_core::geodesic::{
    conjugate_points, focal_monitor, integrate_geodesic, integrate_jacobi_tensor, radial_curvature_audit, stable_jacobi_tensor,
    IntegratorOptions, ShootingOptions, StableOptions,
};
use horolab_core::linalg;
use horolab_core::model::{ChartManifold, Conformal, RadialDensity, TangentVector};
use horolab_core::quadrature::{sphere_points, AngularRule};
use horolab_core::{fd, spectral};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn default_schedule() -> Vec<f64> {
    vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
}

/// Default base point: the origin, or `(0, ..., 0, 1)` in the half-space,
/// factor by factor for products.
pub fn default_base(model: &ChartManifold) -> DVector<f64> {
    if let Some((a, b)) = model.factors() {
        let (a, b) = (default_base(a), default_base(b));
        return DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied());
    }
    let mut o = DVector::zeros(model.dim());
    if model.conformal_kind() == Some(Conformal::HalfSpace) {
        o[model.dim() - 1] = 1.0;
    }
    o
}

fn base_point(model: &ChartManifold, base: &Option<Vec<f64>>) -> Result<DVector<f64>> {
    let o = match base {
        Some(b) => {
            if b.len() != model.dim() {
                return Err(GeomError::Precondition(format!("base point needs {} coordinates", model.dim())));
            }
            DVector::from_column_slice(b)
        }
        None => default_base(model),
    };
    model.check_point(&o)?;
    Ok(o)
}

/// Unit vector at `o` with orthonormal-frame components `c` (first axis by default).
fn unit_vector(model: &ChartManifold, o: &DVector<f64>, c: &Option<Vec<f64>>) -> Result<TangentVector> {
    let n = model.dim();
    let c = match c {
        Some(c) if c.len() == n => DVector::from_column_slice(c),
        Some(_) => return Err(GeomError::Precondition(format!("direction needs {n} components"))),
        None => DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 }),
    };
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    TangentVector::new(o.clone(), e * c).normalized(model)
}

/// `count` well-spread unit vectors at `o`.
pub fn unit_directions(model: &ChartManifold, o: &DVector<f64>, count: usize) -> Result<Vec<DVector<f64>>> {
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    Ok(sphere_points(model.dim(), count).into_iter().map(|c| &e * c).collect())
}

/// Angular rule for sphere areas: circle, product-adapted in dimension four
/// when the model is a product of two surfaces, tensor rule otherwise.
pub fn angular_rule(model: &ChartManifold, polar: usize, azimuth: usize) -> AngularRule {
    match model.dim() {
        2 => AngularRule::circle(azimuth),
        4 if matches!(model.factors(), Some((a, _)) if a.dim() == 2) => AngularRule::hopf(polar, azimuth),
        n => AngularRule::sphere(n, polar, azimuth),
    }
}

fn vec_of(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

// ---------------------------------------------------------------- geodesic

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicParams {
    pub base: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub t_max: f64,
    pub step: f64,
    pub record_every: usize,
    /// Allowed drift of the speed along the path.
    pub tol: f64,
}

impl Default for GeodesicParams {
    fn default() -> Self {
        GeodesicParams { base: None, direction: None, t_max: 5.0, step: 1e-3, record_every: 10, tol: 1e-8 }
    }
}

impl Params for GeodesicParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.positive("t_max", self.t_max);
        c.positive("step", self.step);
        c.positive("tol", self.tol);
        c.at_least("record_every", self.record_every, 1);
    }
}

fn run_geodesic(model: &ChartManifold, p: &GeodesicParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let v = unit_vector(model, &o, &p.direction)?;
    let path = integrate_geodesic(model, &v, p.t_max, &IntegratorOptions { step: p.step, record_every: p.record_every })?;
    let drift = path.speed_drift(model)?;
    let defect = path.frame_defect(model)?;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..model.dim()).map(|i| format!("x{i}")));
    let mut s = Series { name: "path".into(), header, rows: Vec::new() };
    for node in &path.nodes {
        let mut row = vec![node.t];
        row.extend(node.point.iter());
        s.rows.push(row);
    }
    out.series.push(s);
    out.scalar("speed_drift", drift);
    out.scalar("frame_defect", defect);
    let end = path.end();
    out.scalar("t_end", end.t);
    if let Some(t) = path.truncated_at {
        out.scalar("truncated_at", t);
    }
    if let Some(d) = model.distance_oracle(&o, &end.point) {
        out.scalar("oracle_distance", d);
        if model.flags().no_focal_points && path.truncated_at.is_none() {
            out.require((d - end.t).abs() <= 1e-6, || format!("endpoint distance {d} differs from arc length {}", end.t));
        }
    }
    out.require(drift <= p.tol, || format!("speed drift {drift:e} exceeds {:e}", p.tol));
    Ok(())
}

// ---------------------------------------------------------------- jacobi

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobiParams {
    pub base: Option<Vec<f64>>,
    pub directions: usize,
    pub t_max: f64,
    pub step: f64,
    pub record_every: usize,
    pub conjugate_tol: f64,
    /// Run `lambda(s) <= s` even when the curvature audit fails.
    pub diagnostic: bool,
    pub audit_every: f64,
}

impl Default for JacobiParams {
    fn default() -> Self {
        JacobiParams {
            base: None,
            directions: 16,
            t_max: 5.0,
            step: 1e-3,
            record_every: 10,
            conjugate_tol: 1e-10,
            diagnostic: false,
            audit_every: 0.1,
        }
    }
}

impl Params for JacobiParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("directions", self.directions, 1);
        c.positive("t_max", self.t_max);
        c.positive("step", self.step);
        c.at_least("record_every", self.record_every, 1);
        c.positive("conjugate_tol", self.conjugate_tol);
        c.positive("audit_every", self.audit_every);
    }
}

#[derive(Debug, Serialize)]
struct JacobiDirection {
    direction: Vec<f64>,
    conjugate_points: Vec<f64>,
    max_excess: Option<f64>,
    max_deviation: Option<f64>,
    witness_s: Option<f64>,
    holds: Option<bool>,
    error: Option<String>,
}

fn run_jacobi(model: &ChartManifold, p: &JacobiParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let dirs = unit_directions(model, &o, p.directions)?;
    let io = IntegratorOptions { step: p.step, record_every: p.record_every };
    let audit = radial_curvature_audit(model, &o, &dirs, p.t_max, p.audit_every, 1e-10, &io)?;
    let mode = if p.diagnostic { HypothesisMode::Diagnostic } else { HypothesisMode::Enforce };
    let m = model.dim() - 1;
    let mut rows = Vec::new();
    let mut series = Series::new("jacobi", &["t", "det_y", "direction"]);
    for (i, d) in dirs.iter().enumerate() {
        let v = TangentVector::new(o.clone(), d.clone());
        let field = integrate_jacobi_tensor(model, &v, p.t_max, &DMatrix::zeros(m, m), &DMatrix::identity(m, m), &io)?;
        let conj = conjugate_points(&field, p.conjugate_tol)?;
        if i == 0 {
            for (node, y) in field.path.nodes.iter().zip(&field.values) {
                series.push(vec![node.t, y.determinant(), 0.0]);
            }
        }
        let mut row = JacobiDirection {
            direction: vec_of(d),
            conjugate_points: conj,
            max_excess: None,
            max_deviation: None,
            witness_s: None,
            holds: None,
            error: None,
        };
        match lambda_ratio_check(model, &v, p.t_max, Some(&audit), mode, &io) {
            Ok(r) => {
                row.max_excess = Some(r.max_excess);
                row.max_deviation = Some(r.max_deviation);
                row.witness_s = Some(r.witness.0);
                row.holds = Some(r.holds);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    out.series.push(series);
    let excess = rows.iter().filter_map(|r| r.max_excess).fold(f64::NEG_INFINITY, f64::max);
    let deviation = rows.iter().filter_map(|r| r.max_deviation).fold(0.0, f64::max);
    let conjugate = rows.iter().map(|r| r.conjugate_points.len()).sum::<usize>();
    out.scalar("lambda_max_excess", excess);
    out.scalar("lambda_max_deviation", deviation);
    out.scalar("conjugate_points", conjugate as f64);
    out.scalar("audit_max_curvature", audit.max_curvature);
    out.scalar("audit_violated", if audit.violated { 1.0 } else { 0.0 });
    let errors: Vec<&String> = rows.iter().filter_map(|r| r.error.as_ref()).collect();
    out.require(errors.is_empty(), || format!("lambda check refused: {}", errors[0]));
    out.require(rows.iter().all(|r| r.holds != Some(false)), || format!("lambda(s) - s reaches {excess:e}"));
    out.require(conjugate == 0, || format!("{conjugate} conjugate point(s) found"));
    out.details = serde_json::json!({ "audit": details(&audit), "directions": details(&rows) });
    Ok(())
}

// ---------------------------------------------------------------- focal-scan

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocalParams {
    pub base: Option<Vec<f64>>,
    pub directions: usize,
    pub t_max: f64,
    pub step: f64,
    pub record_every: usize,
    pub conjugate_tol: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        FocalParams { base: None, directions: 16, t_max: 20.0, step: 1e-2, record_every: 1, conjugate_tol: 1e-10 }
    }
}

impl Params for FocalParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("directions", self.directions, 1);
        c.positive("t_max", self.t_max);
        c.positive("step", self.step);
        c.at_least("record_every", self.record_every, 1);
        c.positive("conjugate_tol", self.conjugate_tol);
    }
}

#[derive(Debug, Serialize)]
struct FocalDirection {
    direction: Vec<f64>,
    increasing: bool,
    first_violation: Option<f64>,
    min_rate: f64,
    conjugate_points: Vec<f64>,
    truncated_at: Option<f64>,
}

/// Extreme sectional curvatures of planes containing the ray direction.
#[derive(Debug, Serialize)]
struct CurvatureWitness {
    value: f64,
    direction: usize,
    t: f64,
    point: Vec<f64>,
}

fn run_focal(model: &ChartManifold, p: &FocalParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let dirs = unit_directions(model, &o, p.directions)?;
    let io = IntegratorOptions { step: p.step, record_every: p.record_every };
    let m = model.dim() - 1;
    let mut rows = Vec::new();
    let mut lo = CurvatureWitness { value: f64::INFINITY, direction: 0, t: 0.0, point: vec![] };
    let mut hi = CurvatureWitness { value: f64::NEG_INFINITY, direction: 0, t: 0.0, point: vec![] };
    for (i, d) in dirs.iter().enumerate() {
        let v = TangentVector::new(o.clone(), d.clone());
        let field = integrate_jacobi_tensor(model, &v, p.t_max, &DMatrix::zeros(m, m), &DMatrix::identity(m, m), &io)?;
        let rep = focal_monitor(&field)?;
        let conj = conjugate_points(&field, p.conjugate_tol)?;
        for node in &field.path.nodes {
            let op = model.curvature_operator(&node.point, &node.frame, &node.velocity)?;
            let eig = linalg::sym_eigenvalues(&op);
            let (a, b) = (eig[0], *eig.last().unwrap());
            if a < lo.value {
                lo = CurvatureWitness { value: a, direction: i, t: node.t, point: vec_of(&node.point) };
            }
            if b > hi.value {
                hi = CurvatureWitness { value: b, direction: i, t: node.t, point: vec_of(&node.point) };
            }
        }
        rows.push(FocalDirection {
            direction: vec_of(d),
            increasing: rep.increasing,
            first_violation: rep.first_violation,
            min_rate: rep.min_rate,
            conjugate_points: conj,
            truncated_at: field.path.truncated_at,
        });
    }
    let first = rows.iter().filter_map(|r| r.first_violation).fold(f64::INFINITY, f64::min);
    let monotone = rows.iter().all(|r| r.increasing);
    out.scalar("monotone", if monotone { 1.0 } else { 0.0 });
    if first.is_finite() {
        out.scalar("first_violation", first);
    }
    out.scalar("min_rate", rows.iter().map(|r| r.min_rate).fold(f64::INFINITY, f64::min));
    out.scalar("curvature_min", lo.value);
    out.scalar("curvature_max", hi.value);
    out.scalar("curvature_sign_change", if lo.value < 0.0 && hi.value > 0.0 { 1.0 } else { 0.0 });
    out.scalar("conjugate_points", rows.iter().map(|r| r.conjugate_points.len()).sum::<usize>() as f64);
    out.require(monotone, || format!("|Y|^2 stops increasing at t = {first}"));
    out.details = serde_json::json!({
        "directions": details(&rows),
        "curvature_min": details(&lo),
        "curvature_max": details(&hi),
    });
    Ok(())
}

// ---------------------------------------------------------------- busemann

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusemannParams {
    pub base: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub points: usize,
    /// Sample points lie within this distance of the base point.
    pub radius: f64,
    pub schedule: Vec<f64>,
    pub step: f64,
    pub value_tol: f64,
    pub direction_tol: f64,
    pub stable_step: f64,
    pub stable_tol: f64,
    /// Tolerances against closed forms, when available.
    pub oracle_tol: f64,
    pub hessian_tol: f64,
}

impl Default for BusemannParams {
    fn default() -> Self {
        BusemannParams {
            base: None,
            direction: None,
            points: 50,
            radius: 5.0,
            schedule: default_schedule(),
            step: 5e-3,
            value_tol: 1e-5,
            direction_tol: 1e-6,
            stable_step: 5e-3,
            stable_tol: 1e-8,
            oracle_tol: 1e-4,
            hessian_tol: 1e-3,
        }
    }
}

impl Params for BusemannParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("points", self.points, 1);
        c.positive("radius", self.radius);
        c.all_positive("schedule", &self.schedule);
        c.increasing("schedule", &self.schedule);
        c.require("schedule", self.schedule.len() >= 3, "needs at least three values");
        for (k, v) in [
            ("step", self.step),
            ("value_tol", self.value_tol),
            ("direction_tol", self.direction_tol),
            ("stable_step", self.stable_step),
            ("stable_tol", self.stable_tol),
            ("oracle_tol", self.oracle_tol),
            ("hessian_tol", self.hessian_tol),
        ] {
            c.positive(k, v);
        }
    }
}

impl BusemannParams {
    pub fn options(&self) -> BusemannOptions {
        BusemannOptions {
            schedule: self.schedule.clone(),
            value_tol: self.value_tol,
            direction_tol: self.direction_tol,
            monotone_slack: 1e-6,
            step: self.step,
            stable: StableOptions { step: self.stable_step, schedule: self.schedule.clone(), tol: self.stable_tol },
        }
    }
}

/// `count` points `exp_o(w)` with `w` uniform in the tangent ball of radius `radius`.
pub fn random_ball_points(model: &ChartManifold, o: &DVector<f64>, radius: f64, count: usize, seed: u64, step: f64) -> Result<Vec<DVector<f64>>> {
    let n = model.dim();
    let e = linalg::orthonormal_basis(&model.metric(o)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r2 = c.norm_squared();
        if r2 > 1.0 || r2 < 1e-6 {
            continue;
        }
        let w = &e * c * radius;
        out.push(horolab_core::geodesic::exp_map(model, &TangentVector::new(o.clone(), w), step)?);
    }
    Ok(out)
}

fn run_busemann(model: &ChartManifold, p: &BusemannParams, seed: u64, out: &mut ExperimentOutcome) -> Result<()> {
    use rayon::prelude::*;
    let o = base_point(model, &p.base)?;
    let v = unit_vector(model, &o, &p.direction)?;
    let opts = p.options();
    let ray = BusemannRay::new(model, &v, &opts)?;
    let points = random_ball_points(model, &o, p.radius, p.points, seed, p.step)?;
    let kappa = model.constant_curvature();
    let evals: Vec<Result<_>> = points.par_iter().map(|x| ray.full(x, None)).collect();
    let mut series = Series::new("busemann", &["sample", "value", "oracle", "gradient_norm", "hessian_error"]);
    let (mut value_err, mut hess_err, mut grad_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for (k, (x, ev)) in points.iter().zip(evals).enumerate() {
        let ev = match ev {
            Ok(ev) => ev,
            Err(e) => {
                failures.push(format!("sample {k}: {e}"));
                continue;
            }
        };
        let g = model.metric(x)?;
        let grad = ev.gradient.clone().unwrap();
        let gnorm = linalg::norm(&g, &grad);
        grad_err = grad_err.max((gnorm - 1.0).abs());
        let oracle = model.busemann_oracle(&o, &v.components, x);
        if let Some(b) = oracle {
            value_err = value_err.max((ev.value - b).abs());
        }
        let mut herr = f64::NAN;
        if let Some(k) = kappa.filter(|k| *k <= 0.0) {
            // Hess b = sqrt(-K) (g - db (x) db)
            let db = &g * &grad;
            let want = (&g - &db * db.transpose()) * (-k).sqrt();
            let e = linalg::orthonormal_basis(&g)?;
            herr = linalg::op_norm(&(e.transpose() * (ev.hessian.as_ref().unwrap() - want) * &e));
            hess_err = hess_err.max(herr);
        }
        series.push(vec![k as f64, ev.value, oracle.unwrap_or(f64::NAN), gnorm, herr]);
    }
    out.series.push(series);
    let st = stable_jacobi_tensor(model, &v, &opts.stable)?;
    out.scalar("gradient_norm_error", grad_err);
    out.scalar("stable_trace", -st.mean_curvature());
    out.scalar("samples", points.len() as f64);
    out.scalar("failures", failures.len() as f64);
    out.require(failures.is_empty(), || failures[0].clone());
    out.require(grad_err <= p.oracle_tol, || format!("gradient norm deviates from 1 by {grad_err:e}"));
    let has_oracle = model.busemann_oracle(&o, &v.components, &o).is_some();
    if has_oracle {
        out.scalar("value_error", value_err);
        out.require(value_err <= p.oracle_tol, || format!("value error {value_err:e} exceeds {:e}", p.oracle_tol));
    }
    if let Some(k) = kappa.filter(|k| *k <= 0.0) {
        out.scalar("hessian_error", hess_err);
        out.require(hess_err <= p.hessian_tol, || format!("Hessian error {hess_err:e} exceeds {:e}", p.hessian_tol));
        let want = DMatrix::identity(model.dim() - 1, model.dim() - 1) * -(-k).sqrt();
        let derr = (&st.derivative - want).abs().max();
        out.scalar("stable_derivative_error", derr);
        out.require(derr <= p.oracle_tol, || format!("D'(0) error {derr:e} exceeds {:e}", p.oracle_tol));
    }
    out.details = serde_json::json!({ "failures": failures, "stable_s_used": st.s_used, "stable_gap": st.gap });
    Ok(())
}

// ---------------------------------------------------------------- convexity-cert

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CertFunction {
    ExhaustionF,
    DistanceSq,
    AveragedF,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Uniform,
    Dyadic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvexityParams {
    pub base: Option<Vec<f64>>,
    pub function: CertFunction,
    pub measure: MeasureKind,
    pub directions: usize,
    pub points: usize,
    pub radius: f64,
    pub margin: f64,
    pub step: f64,
    /// Expected constant Laplacian of the averaged function, if any.
    pub expect_laplacian: Option<f64>,
    pub laplacian_tol: f64,
    /// Points (from the start of the sample list) where the bilaplacian is estimated.
    pub bilaplacian_points: usize,
    pub bilaplacian_tol: f64,
    pub fd_step: f64,
}

impl Default for ConvexityParams {
    fn default() -> Self {
        ConvexityParams {
            base: None,
            function: CertFunction::ExhaustionF,
            measure: MeasureKind::Uniform,
            directions: 64,
            points: 100,
            radius: 3.0,
            margin: 0.1,
            step: 5e-3,
            expect_laplacian: None,
            laplacian_tol: 1e-3,
            bilaplacian_points: 0,
            bilaplacian_tol: 1e-2,
            fd_step: 5e-2,
        }
    }
}

impl Params for ConvexityParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("directions", self.directions, 1);
        c.at_least("points", self.points, 1);
        c.positive("radius", self.radius);
        c.nonnegative("margin", self.margin);
        c.positive("step", self.step);
        c.positive("laplacian_tol", self.laplacian_tol);
        c.positive("bilaplacian_tol", self.bilaplacian_tol);
        c.positive("fd_step", self.fd_step);
        c.require("bilaplacian_points", self.bilaplacian_points <= self.points, "cannot exceed points");
        c.require(
            "directions",
            !(self.measure == MeasureKind::Dyadic && self.directions > 60),
            "dyadic measures support at most 60 directions",
        );
    }
}

fn run_convexity(model: &ChartManifold, p: &ConvexityParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let samples = ball_samples(model, &o, p.radius, p.points, p.step)?;
    let shoot = ShootingOptions { step: p.step, ..ShootingOptions::default() };
    let bopts = BusemannParams { step: p.step, stable_step: p.step, ..BusemannParams::default() }.options();
    let averaged = match p.function {
        CertFunction::AveragedF => {
            let measure = match p.measure {
                MeasureKind::Uniform => BoundaryMeasure::uniform(model, o.clone(), p.directions)?,
                MeasureKind::Dyadic => BoundaryMeasure::dyadic(model, o.clone(), p.directions)?,
            };
            Some(AveragedF::new(model, measure, &bopts)?)
        }
        _ => None,
    };
    let target = match p.function {
        CertFunction::ExhaustionF => ConvexTarget::ExhaustionF { center: o.clone(), opts: shoot.clone() },
        CertFunction::DistanceSq => ConvexTarget::DistanceSq { center: o.clone(), opts: shoot.clone() },
        CertFunction::AveragedF => ConvexTarget::AveragedF(averaged.as_ref().unwrap()),
    };
    let cert = certify_strict_convexity(model, &target, &samples, p.margin)?;
    out.scalar("min_hessian_eigenvalue", cert.min_hessian_eigenvalue);
    out.scalar("gradient_bound", cert.gradient_bound);
    out.scalar("margin", p.margin);
    let mut series = Series::new("certificate", &["sample", "min_eigenvalue", "gradient_norm"]);
    for (k, s) in cert.samples.iter().enumerate() {
        series.push(vec![k as f64, s.min_eigenvalue, s.gradient_norm]);
    }
    out.series.push(series);
    out.require(cert.strict, || {
        format!("min Hessian eigenvalue {} does not exceed margin {} (worst point {:?})", cert.min_hessian_eigenvalue, p.margin, cert.worst_point)
    });
    if let Some(f) = &averaged {
        let mut lap_dev: f64 = 0.0;
        let mut lap_range = (f64::INFINITY, f64::NEG_INFINITY);
        let mut bilap: f64 = 0.0;
        for (k, x) in samples.iter().enumerate() {
            if k >= p.bilaplacian_points.max(4) {
                break;
            }
            let l = f.evaluate(x)?.laplacian;
            lap_range = (lap_range.0.min(l), lap_range.1.max(l));
            if let Some(want) = p.expect_laplacian {
                lap_dev = lap_dev.max((l - want).abs());
            }
            if k < p.bilaplacian_points {
                let (b, _) = fd::laplacian(model, x, p.fd_step, |y| Ok(f.evaluate(y)?.laplacian))?;
                bilap = bilap.max(b.abs());
            }
        }
        out.scalar("laplacian_min", lap_range.0);
        out.scalar("laplacian_max", lap_range.1);
        if let Some(want) = p.expect_laplacian {
            out.scalar("laplacian_deviation", lap_dev);
            out.require(lap_dev <= p.laplacian_tol, || format!("Laplacian deviates from {want} by {lap_dev:e}"));
        }
        if p.bilaplacian_points > 0 {
            out.scalar("bilaplacian_max", bilap);
            out.require(bilap <= p.bilaplacian_tol, || format!("|bilaplacian| reaches {bilap:e}"));
        }
    }
    out.details = serde_json::json!({
        "function_id": details(&cert.function_id),
        "strict": cert.strict,
        "worst_point": cert.worst_point,
    });
    Ok(())
}

// ---------------------------------------------------------------- radial-constants

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialParams {
    pub base: Option<Vec<f64>>,
    pub directions: usize,
    pub r_max: f64,
    pub grid: f64,
}

impl Default for RadialParams {
    fn default() -> Self {
        RadialParams { base: None, directions: 8, r_max: 20.0, grid: 0.05 }
    }
}

impl Params for RadialParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("directions", self.directions, 1);
        c.positive("r_max", self.r_max);
        c.positive("grid", self.grid);
    }
}

fn run_radial(model: &ChartManifold, p: &RadialParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let region = RadialRegion { directions: unit_directions(model, &o, p.directions)?, r_max: p.r_max };
    let c = radial_theorem_constants(model, &o, &region, p.grid)?;
    out.scalar("c1", c.c1);
    out.scalar("c2", c.c2);
    out.scalar("alpha", c.alpha);
    out.scalar("beta", c.beta);
    out.scalar("beta_trace", c.beta_trace);
    out.scalar("max_laplacian", c.max_laplacian);
    out.scalar("max_bilaplacian", c.max_bilaplacian);
    let bound = -1.5 * c.c1 - c.c2 / 4.0;
    out.scalar("beta_lower_bound", bound);
    out.require(c.beta >= bound - 1e-6, || format!("beta = {} below -3c1/2 - c2/4 = {bound}", c.beta));
    out.details = details(&c);
    Ok(())
}

// ---------------------------------------------------------------- spectral

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralParams {
    pub base: Option<Vec<f64>>,
    pub directions: usize,
    pub points: usize,
    pub radius: f64,
    pub cross_check_every: usize,
    pub fd_step: f64,
    pub schedule: Vec<f64>,
    pub busemann_step: f64,
    pub r_max: f64,
    pub step: f64,
    pub record_every: usize,
    pub polar: usize,
    pub azimuth: usize,
    pub radii: Vec<f64>,
    pub n_indices: Vec<usize>,
    pub spherical_lambdas: Vec<f64>,
    pub spherical_r_max: f64,
    pub spherical_step: f64,
    /// Tolerances on `h` against the claimed value and on its spread.
    pub h_tol: f64,
    pub spread_tol: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            base: None,
            directions: 32,
            points: 10,
            radius: 2.0,
            cross_check_every: 16,
            fd_step: 1e-2,
            schedule: default_schedule(),
            busemann_step: 5e-3,
            r_max: 16.0,
            step: 1e-2,
            record_every: 5,
            polar: 8,
            azimuth: 8,
            radii: vec![1.0, 5.0, 10.0, 15.0],
            n_indices: vec![1, 10, 100],
            spherical_lambdas: vec![],
            spherical_r_max: 10.0,
            spherical_step: 1e-3,
            h_tol: 1e-3,
            spread_tol: 1e-3,
        }
    }
}

impl Params for SpectralParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("directions", self.directions, 1);
        c.at_least("points", self.points, 1);
        c.positive("radius", self.radius);
        c.positive("fd_step", self.fd_step);
        c.all_positive("schedule", &self.schedule);
        c.increasing("schedule", &self.schedule);
        c.require("schedule", self.schedule.len() >= 3, "needs at least three values");
        c.positive("busemann_step", self.busemann_step);
        c.positive("r_max", self.r_max);
        c.positive("step", self.step);
        c.at_least("record_every", self.record_every, 1);
        c.at_least("polar", self.polar, 1);
        c.at_least("azimuth", self.azimuth, 1);
        c.all_positive("radii", &self.radii);
        c.require("radii", self.radii.iter().all(|r| *r <= self.r_max), "must not exceed r_max");
        c.require("n_indices", !self.n_indices.is_empty() && self.n_indices.iter().all(|n| *n > 0), "needs positive indices");
        for (i, l) in self.spherical_lambdas.iter().enumerate() {
            c.nonnegative(&format!("spherical_lambdas[{i}]"), *l);
        }
        c.positive("spherical_r_max", self.spherical_r_max);
        c.positive("spherical_step", self.spherical_step);
        c.positive("h_tol", self.h_tol);
        c.positive("spread_tol", self.spread_tol);
    }
}

fn run_spectral(model: &ChartManifold, p: &SpectralParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let busemann = BusemannParams { schedule: p.schedule.clone(), step: p.busemann_step, stable_step: p.busemann_step, ..BusemannParams::default() };
    let cfg = spectral::SpectralConfig {
        scan: spectral::ScanOptions {
            directions: p.directions,
            points: p.points,
            radius: p.radius,
            cross_check_every: p.cross_check_every,
            fd_step: p.fd_step,
            busemann: busemann.options(),
        },
        r_max: p.r_max,
        step: p.step,
        record_every: p.record_every,
        rule: angular_rule(model, p.polar, p.azimuth),
        radii: p.radii.clone(),
        n_indices: p.n_indices.clone(),
    };
    let rep = spectral::spectral_report(model, &o, &cfg)?;
    out.scalar("h_mean", rep.h_mean);
    out.scalar("h_spread", rep.h_spread);
    out.scalar("lambda0_upper", rep.lambda0_upper);
    out.scalar("lambda0_index", rep.lambda0_index as f64);
    out.scalar("essential_range_bottom", rep.essential_range_bottom);
    for (k, v) in &rep.residuals {
        out.scalar(&format!("residual_{k}"), *v);
    }
    let mut cheeger = Series::new("cheeger", &["r", "ratio"]);
    for &(r, c) in &rep.cheeger_ratios {
        cheeger.push(vec![r, c]);
        out.scalar(&format!("cheeger_r{r}"), c);
    }
    out.series.push(cheeger);
    let mut hs = Series::new("horosphere", &["sample", "laplacian"]);
    for (k, s) in rep.h_samples.iter().enumerate() {
        hs.push(vec![k as f64, s.laplacian]);
    }
    out.series.push(hs);
    let claimed = model.flags().asymptotically_harmonic;
    out.scalar("asymptotically_harmonic_detected", if rep.h_spread <= p.spread_tol { 1.0 } else { 0.0 });
    if let Some(h0) = claimed {
        out.require((rep.h_mean - h0).abs() <= p.h_tol, || format!("h = {} differs from claimed {h0}", rep.h_mean));
        out.require(rep.h_spread <= p.spread_tol, || format!("h spread {} exceeds {}", rep.h_spread, p.spread_tol));
    }
    let violations = rep.violations(claimed.is_some());
    out.require(violations.is_empty(), || violations[0].clone());
    let mut spherical = Vec::new();
    if !p.spherical_lambdas.is_empty() {
        let mut worst_residual: f64 = 0.0;
        let mut worst_closed: f64 = 0.0;
        let h3 = matches!(model.flags().radial_density, Some(RadialDensity::Hyperbolic { dim: 3 }));
        for &l in &p.spherical_lambdas {
            let s = spectral::spherical_function(model, l, p.spherical_r_max, p.spherical_step)?;
            worst_residual = worst_residual.max(s.residual);
            if h3 {
                for (r, phi) in s.r.iter().zip(&s.phi) {
                    let want = if *r == 0.0 {
                        1.0
                    } else if l == 0.0 {
                        r / r.sinh()
                    } else {
                        (l * r).sin() / (l * r.sinh())
                    };
                    worst_closed = worst_closed.max((phi - want).abs());
                }
            }
            spherical.push(serde_json::json!({ "lambda": l, "eigenvalue": s.eigenvalue, "residual": s.residual }));
        }
        out.scalar("spherical_residual", worst_residual);
        out.require(worst_residual < 1e-6, || format!("spherical eigen-relation residual {worst_residual:e}"));
        if h3 {
            out.scalar("spherical_closed_form_error", worst_closed);
            out.require(worst_closed < 1e-6, || format!("spherical function differs from closed form by {worst_closed:e}"));
        }
    }
    out.details = serde_json::json!({
        "model_id": rep.model_id,
        "cheeger_ratios": rep.cheeger_ratios,
        "residuals": rep.residuals,
        "spherical": spherical,
    });
    Ok(())
}

// ---------------------------------------------------------------- essential-range

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EssentialParams {
    /// Values of `x`; by default `x_count` values `h^2/4 + (k - (x_count-1)/2) x_step`.
    pub x_values: Option<Vec<f64>>,
    pub x_count: usize,
    pub x_step: f64,
    pub eps: Vec<f64>,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub regime_k: f64,
    pub scan_spacing: f64,
    pub scan_max: f64,
}

impl Default for EssentialParams {
    fn default() -> Self {
        EssentialParams {
            x_values: None,
            x_count: 20,
            x_step: 0.013,
            eps: vec![1e-3, 1e-2, 1e-1],
            lambda_max: 20.0,
            lambda_step: 0.05,
            regime_k: 1.0,
            scan_spacing: 1e-4,
            scan_max: 20.0,
        }
    }
}

impl Params for EssentialParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("x_count", self.x_count, 1);
        c.positive("x_step", self.x_step);
        c.require("eps", !self.eps.is_empty(), "needs at least one value");
        c.all_positive("eps", &self.eps);
        c.positive("lambda_max", self.lambda_max);
        c.positive("lambda_step", self.lambda_step);
        c.positive("regime_k", self.regime_k);
        c.positive("scan_spacing", self.scan_spacing);
        c.positive("scan_max", self.scan_max);
    }
}

fn run_essential(model: &ChartManifold, p: &EssentialParams, out: &mut ExperimentOutcome) -> Result<()> {
    let n = match model.flags().radial_density {
        Some(RadialDensity::Hyperbolic { dim }) => dim,
        _ => return Err(GeomError::Unsupported(format!("{} has no hyperbolic Plancherel density", model.name()))),
    };
    let h = model.flags().asymptotically_harmonic.unwrap_or(n as f64 - 1.0);
    let bottom = h * h / 4.0;
    let xs = p.x_values.clone().unwrap_or_else(|| {
        let mid = (p.x_count as f64 - 1.0) / 2.0;
        (0..p.x_count).map(|k| bottom + (k as f64 - mid) * p.x_step).collect()
    });
    let steps = (p.lambda_max / p.lambda_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * p.lambda_step).collect();
    let density = spectral::c_function_density(n, &grid, p.regime_k)?;
    let er = spectral::essential_range(h, &density, &xs, &p.eps, spectral::ScanGrid { spacing: p.scan_spacing, max: p.scan_max })?;
    let included_ok = er.verdicts.iter().filter(|v| v.x >= bottom).all(|v| v.included);
    let excluded_ok = er.exclusion_witnesses.iter().all(|&(x, eps)| {
        er.verdicts.iter().all(|v| v.x != x || v.eps > eps || !v.included)
            && spectral::essential_range(h, &density, &[x], &[eps], spectral::ScanGrid { spacing: p.scan_spacing, max: p.scan_max })
                .map(|r| !r.verdicts[0].included && r.verdicts[0].brute_force.is_none())
                .unwrap_or(false)
    });
    out.scalar("essential_range_bottom", er.bottom);
    out.scalar("regime_c", density.regime_constants.c);
    out.scalar("regime_k", density.regime_constants.k);
    out.scalar("verdicts", er.verdicts.len() as f64);
    out.scalar("mismatches", er.verdicts.iter().filter(|v| !v.matches).count() as f64);
    out.scalar("exclusion_witnesses", er.exclusion_witnesses.len() as f64);
    let mut s = Series::new("essential_range", &["x", "eps", "lo", "hi", "measure", "included", "matches"]);
    for v in &er.verdicts {
        let (lo, hi) = v.interval.unwrap_or((f64::NAN, f64::NAN));
        s.push(vec![v.x, v.eps, lo, hi, v.measure, v.included as u8 as f64, v.matches as u8 as f64]);
    }
    out.series.push(s);
    out.require(density.bounds_hold(), || "c-function lower bounds fail on the grid".into());
    out.require(er.all_match, || "closed-form preimage disagrees with the grid scan".into());
    out.require(included_ok, || "some x >= h^2/4 has an empty preimage".into());
    out.require(excluded_ok, || "an x < h^2/4 is not excluded by its witness eps".into());
    out.details = serde_json::json!({
        "exclusion_witnesses": er.exclusion_witnesses,
        "regime_constants": details(&density.regime_constants),
    });
    Ok(())
}

// ---------------------------------------------------------------- rank-checks

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankParams {
    pub base: Option<Vec<f64>>,
    /// Hopf angles and factor angles of the direction grid (products of two surfaces).
    pub polar: usize,
    pub first: usize,
    pub second: usize,
    /// Direction count for other products.
    pub directions: usize,
    pub along: Vec<f64>,
    pub step: f64,
    pub schedule: Vec<f64>,
    pub tol: f64,
    pub error_tol: f64,
    /// Rayleigh bound with `h = 2 |rho|`.
    pub rayleigh: bool,
    pub n_index: usize,
    pub r_max: f64,
    pub area_step: f64,
    pub rule_polar: usize,
    pub rule_azimuth: usize,
    /// Averaged Busemann function over this many grid directions (0 disables).
    pub laplacian_directions: usize,
    pub laplacian_points: usize,
    pub laplacian_radius: f64,
    /// Only directions whose factor norms all reach this value enter the average.
    pub laplacian_min_component: f64,
    pub busemann_schedule: Vec<f64>,
    pub busemann_stable_tol: f64,
    pub busemann_direction_tol: f64,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            base: None,
            polar: 8,
            first: 4,
            second: 2,
            directions: 64,
            along: vec![0.0, 1.0, 2.0],
            step: 2e-2,
            schedule: (2..=7).map(|k| 5.0 * k as f64).collect(),
            tol: 1e-5,
            error_tol: 1e-3,
            rayleigh: true,
            n_index: 100,
            r_max: 16.0,
            area_step: 2e-2,
            rule_polar: 16,
            rule_azimuth: 4,
            laplacian_directions: 8,
            laplacian_points: 3,
            laplacian_radius: 1.0,
            laplacian_min_component: 0.6,
            busemann_schedule: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            busemann_stable_tol: 1e-6,
            busemann_direction_tol: 1e-5,
        }
    }
}

impl Params for RankParams {
    fn check(&self, c: &mut Checker<'_>) {
        c.at_least("polar", self.polar, 1);
        c.at_least("first", self.first, 1);
        c.at_least("second", self.second, 1);
        c.at_least("directions", self.directions, 1);
        c.require("along", !self.along.is_empty() && self.along.iter().all(|s| *s >= 0.0), "needs nonnegative parameters");
        c.positive("step", self.step);
        c.all_positive("schedule", &self.schedule);
        c.increasing("schedule", &self.schedule);
        c.require("schedule", self.schedule.len() >= 3, "needs at least three values");
        c.positive("tol", self.tol);
        c.positive("error_tol", self.error_tol);
        c.at_least("n_index", self.n_index, 1);
        c.positive("r_max", self.r_max);
        c.positive("area_step", self.area_step);
        c.at_least("rule_polar", self.rule_polar, 1);
        c.at_least("rule_azimuth", self.rule_azimuth, 1);
        c.positive("laplacian_radius", self.laplacian_radius);
        c.nonnegative("laplacian_min_component", self.laplacian_min_component);
        c.all_positive("busemann_schedule", &self.busemann_schedule);
        c.increasing("busemann_schedule", &self.busemann_schedule);
        c.require("busemann_schedule", self.busemann_schedule.len() >= 3, "needs at least three values");
        c.positive("busemann_stable_tol", self.busemann_stable_tol);
        c.positive("busemann_direction_tol", self.busemann_direction_tol);
    }
}

fn run_rank(model: &ChartManifold, p: &RankParams, out: &mut ExperimentOutcome) -> Result<()> {
    let o = base_point(model, &p.base)?;
    let dirs = match spectral::product_direction_grid(model, &o, p.polar, p.first, p.second) {
        Ok(d) => d,
        Err(GeomError::Unsupported(_)) => unit_directions(model, &o, p.directions)?,
        Err(e) => return Err(e),
    };
    let opts = StableOptions { step: p.step, schedule: p.schedule.clone(), tol: p.tol };
    let rep = spectral::rank_higher_checks(model, &o, &dirs, &p.along, &opts)?;
    let rho_sq = rep.root.rho_norm * rep.root.rho_norm;
    out.scalar("directions", rep.samples.len() as f64);
    out.scalar("max_error", rep.max_error);
    out.scalar("max_drift", rep.max_drift);
    out.scalar("sup_measured", rep.sup_measured);
    out.scalar("rho_norm_sq", rho_sq);
    out.scalar("rho_sq_estimate", rep.rho_sq_estimate);
    out.scalar("sup_pairing_defect", (rep.root.sup_pairing() - 2.0 * rep.root.rho_norm).abs());
    let mut s = Series::new("rank", &["sample", "predicted", "measured_min", "measured_max"]);
    for (k, r) in rep.samples.iter().enumerate() {
        let lo = r.measured.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.measured.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s.push(vec![k as f64, r.predicted, lo, hi]);
    }
    out.series.push(s);
    out.require(rep.max_error <= p.error_tol, || format!("Delta b_v misses sum |v_i| h_i by {:e}", rep.max_error));
    out.require(rep.max_drift <= p.error_tol, || format!("Delta b_v drifts by {:e} along geodesics", rep.max_drift));
    out.require(
        (rep.root.sup_pairing() - 2.0 * rep.root.rho_norm).abs() <= 1e-9,
        || "sup of the pairing differs from 2|rho|".into(),
    );
    if p.rayleigh {
        let rule = angular_rule(model, p.rule_polar, p.rule_azimuth);
        let profile = spectral::area_profile(model, &o, p.r_max, p.area_step, 1, &rule)?;
        let r = spectral::rayleigh_lambda0(&profile, 2.0 * rep.root.rho_norm, p.n_index)?;
        out.scalar("lambda0_upper", r.value);
        out.scalar("growth_rate", r.growth.rate);
        out.require(r.value >= rho_sq * 0.95, || format!("Rayleigh bound {} below 0.95 |rho|^2", r.value));
    }
    if p.laplacian_directions > 0 {
        let chosen: Vec<DVector<f64>> = rep
            .samples
            .iter()
            .zip(&dirs)
            .filter(|(s, _)| s.factor_norms.iter().all(|a| *a >= p.laplacian_min_component))
            .map(|(_, d)| d.clone())
            .take(p.laplacian_directions)
            .collect();
        if chosen.is_empty() {
            return Err(GeomError::Precondition("no grid direction meets laplacian_min_component".into()));
        }
        let k = chosen.len();
        let measure = BoundaryMeasure::new(model, o.clone(), chosen, vec![1.0 / k as f64; k])?;
        let bopts = BusemannParams { schedule: p.busemann_schedule.clone(), stable_tol: p.busemann_stable_tol,
            direction_tol: p.busemann_direction_tol,
            ..BusemannParams::default()
        };
        let f = AveragedF::new(model, measure, &bopts.options())?;
        let pts = ball_samples(model, &o, p.laplacian_radius, p.laplacian_points, 5e-3)?;
        let mut worst: f64 = 0.0;
        for x in &pts {
            worst = worst.max(f.evaluate(x)?.laplacian.abs());
        }
        out.scalar("averaged_laplacian_max", worst);
        out.scalar("averaged_directions", k as f64);
        let bound = 2.0 * rep.root.rho_norm + 1e-3;
        out.require(worst <= bound, || format!("|Delta F| = {worst} exceeds 2|rho| + 1e-3"));
    }
    out.details = serde_json::json!({ "root": details(&rep.root) });
    Ok(())
}

// ---------------------------------------------------------------- dispatch

/// Parses and range-checks the parameters of `kind`.
pub fn check_params(kind: ExperimentKind, table: &toml::Table, prefix: &str) -> std::result::Result<(), Vec<Diagnostic>> {
    match kind {
        ExperimentKind::Geodesic => parse_params::<GeodesicParams>(table, prefix).map(|_| ()),
        ExperimentKind::Jacobi => parse_params::<JacobiParams>(table, prefix).map(|_| ()),
        ExperimentKind::FocalScan => parse_params::<FocalParams>(table, prefix).map(|_| ()),
        ExperimentKind::Busemann => parse_params::<BusemannParams>(table, prefix).map(|_| ()),
        ExperimentKind::ConvexityCert => parse_params::<ConvexityParams>(table, prefix).map(|_| ()),
        ExperimentKind::RadialConstants => parse_params::<RadialParams>(table, prefix).map(|_| ()),
        ExperimentKind::Spectral => parse_params::<SpectralParams>(table, prefix).map(|_| ()),
        ExperimentKind::EssentialRange => parse_params::<EssentialParams>(table, prefix).map(|_| ()),
        ExperimentKind::RankChecks => parse_params::<RankParams>(table, prefix).map(|_| ()),
    }
}

fn params<P: crate::config::Params>(table: &toml::Table) -> Result<P> {
    parse_params::<P>(table, "params")
        .map_err(|d| GeomError::Precondition(d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")))
}

/// Runs one experiment; numerical failures become an `error` verdict.
pub fn run_experiment(entry: &ExperimentEntry, seed: u64) -> ExperimentOutcome {
    let kind = entry.kind.as_str();
    let model = match entry.model.build() {
        Ok(m) => m,
        Err(e) => return ExperimentOutcome::errored(&entry.name, kind, "?", e.to_string()),
    };
    let mut out = ExperimentOutcome::new(&entry.name, kind, model.name());
    let res = match entry.kind {
        ExperimentKind::Geodesic => params(&entry.params).and_then(|p| run_geodesic(&model, &p, &mut out)),
        ExperimentKind::Jacobi => params(&entry.params).and_then(|p| run_jacobi(&model, &p, &mut out)),
        ExperimentKind::FocalScan => params(&entry.params).and_then(|p| run_focal(&model, &p, &mut out)),
        ExperimentKind::Busemann => params(&entry.params).and_then(|p| run_busemann(&model, &p, seed, &mut out)),
        ExperimentKind::ConvexityCert => params(&entry.params).and_then(|p| run_convexity(&model, &p, &mut out)),
        ExperimentKind::RadialConstants => params(&entry.params).and_then(|p| run_radial(&model, &p, &mut out)),
        ExperimentKind::Spectral => params(&entry.params).and_then(|p| run_spectral(&model, &p, &mut out)),
        ExperimentKind::EssentialRange => params(&entry.params).and_then(|p| run_essential(&model, &p, &mut out)),
        ExperimentKind::RankChecks => params(&entry.params).and_then(|p| run_rank(&model, &p, &mut out)),
    };
    if let Err(e) = res {
        out.verdict = Verdict::Error;
        out.message = Some(e.to_string());
    }
    out
}

/// Convenience for callers holding typed parameters.
pub fn entry<P: Serialize>(name: &str, kind: ExperimentKind, model: horolab_core::model::ModelSpec, p: &P) -> ExperimentEntry {
    let params = match toml::Value::try_from(p).expect("parameters serialise") {
        toml::Value::Table(t) => t,
        _ => unreachable!("parameters are structs"),
    };
    ExperimentEntry { name: name.into(), kind, model, params }
}
