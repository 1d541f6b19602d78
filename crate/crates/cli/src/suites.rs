//! Named acceptance suites: fixed checks against closed forms at pinned tolerances.

use crate::config::{ExperimentConfig, ExperimentKind, DEFAULT_CONFIG};
use crate::experiments::{
    entry, run_experiment, BusemannParams, ConvexityParams, CertFunction, EssentialParams, FocalParams, JacobiParams, MeasureKind,
    RadialParams, RankParams, SpectralParams,
};
use crate::report::{to_json, ExperimentOutcome, Verdict};
use crate::runner::{run, RunOptions};
use horolab_core::convexity::{lambda_ratio_check, BusemannOptions, BusemannRay, HypothesisMode};
use horolab_core::error::{GeomError, Result};
use horolab_core::geodesic::{log_map, radial_curvature_audit, stable_jacobi_tensor, IntegratorOptions, ShootingOptions, StableOptions};
use horolab_core::model::{registry, ModelSpec, RadialProfile, TangentVector};
use horolab_core::quadrature::{sphere_points, AngularRule};
use horolab_core::spectral::{
    commutation_residual, horosphere_mean_curvature, horosphere_scan, idempotence_residual, spherical_function, ScanOptions, SphereBundle,
};
use nalgebra::DVector;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One numeric comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, relation: "<=", limit, passed: value <= limit }
    }

    pub fn lt(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, relation: "<", limit, passed: value < limit }
    }

    pub fn ge(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, relation: ">=", limit, passed: value >= limit }
    }

    pub fn gt(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, relation: ">", limit, passed: value > limit }
    }

    pub fn eq(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, relation: "==", limit, passed: value == limit }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, relation: "==", limit: 1.0, passed: ok }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok" } else { "FAIL" };
        write!(f, "{:<44} {:>13.6e} {} {:<13.6e} {tag}", self.name, self.value, self.relation, self.limit)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub key: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
    /// Set when the criterion fails exactly as the documented analysis predicts.
    pub expected_failure: Option<String>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let note = match &self.expected_failure {
            Some(_) if !self.passed => " [expected: see analysis]",
            _ => "",
        };
        format!(
            "criterion {:>2} {:<16} {verdict} ({} checks, {:.1} s) {}{note}",
            self.id,
            self.key,
            self.checks.len(),
            self.seconds,
            self.title
        )
    }
}

/// `(id, key, title)` of every criterion.
pub const CRITERIA: [(usize, &str, &str); 13] = [
    (1, "flat", "flat-space closed forms"),
    (2, "hyperbolic", "Busemann functions of H^2 and H^3"),
    (3, "mean-curvature", "horosphere mean curvature"),
    (4, "cheeger", "Cheeger ratios and bottom of the spectrum on H^2"),
    (5, "essential-range", "essential range of the Plancherel multiplier"),
    (6, "spherical", "spherical functions"),
    (7, "lambda-ratio", "lambda(s) <= s"),
    (8, "focal", "focal point detection"),
    (9, "convexity", "strict convexity of the averaged Busemann function"),
    (10, "radial-constants", "radial continuity constants"),
    (11, "rank", "higher rank: H^2 x H^2"),
    (12, "radialisation", "radialisation"),
    (13, "determinism", "reproducible runs"),
];

/// Criterion ids for a suite name: `acceptance` (or `all`), a key, or a number.
pub fn select(name: &str) -> std::result::Result<Vec<usize>, String> {
    if name == "acceptance" || name == "all" {
        return Ok(CRITERIA.iter().map(|c| c.0).collect());
    }
    CRITERIA
        .iter()
        .find(|c| c.1 == name || c.0.to_string() == name)
        .map(|c| vec![c.0])
        .ok_or_else(|| {
            let keys: Vec<&str> = CRITERIA.iter().map(|c| c.1).collect();
            format!("unknown suite {name:?}; expected acceptance or one of {}", keys.join(", "))
        })
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub threads: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { threads: None, seed: 1, out: None }
    }
}

struct Ctx {
    checks: Vec<Check>,
    errors: Vec<String>,
    expected_failure: Option<String>,
    seed: u64,
}

impl Ctx {
    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Runs one experiment; an error verdict is recorded as a failed check.
    fn experiment<P: Serialize>(&mut self, name: &str, kind: ExperimentKind, model: ModelSpec, p: &P) -> ExperimentOutcome {
        let out = run_experiment(&entry(name, kind, model, p), self.seed);
        if out.verdict == Verdict::Error {
            self.errors.push(format!("{name}: {}", out.message.clone().unwrap_or_default()));
            self.push(Check::holds(format!("{name} ran"), false));
        }
        out
    }
}

fn scalar(o: &ExperimentOutcome, key: &str) -> f64 {
    o.scalars.get(key).copied().unwrap_or(f64::NAN)
}

fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn ball(dim: usize) -> ModelSpec {
    ModelSpec::HyperbolicBall { dim }
}

fn flat(dim: usize) -> ModelSpec {
    ModelSpec::Euclidean { dim }
}

fn warped(coeffs: &[f64]) -> ModelSpec {
    ModelSpec::Warped { dim: 2, profile: RadialProfile::Polynomial(coeffs.to_vec()) }
}

fn product(a: ModelSpec, b: ModelSpec) -> ModelSpec {
    ModelSpec::Product { factors: vec![a, b] }
}

/// Runs the given criteria in a pool of `opts.threads` workers.
pub fn run_suites(ids: &[usize], opts: &SuiteOptions) -> Vec<CriterionReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().expect("thread pool");
    pool.install(|| ids.iter().map(|&id| run_criterion(id, opts)).collect())
}

pub fn run_criterion(id: usize, opts: &SuiteOptions) -> CriterionReport {
    let (_, key, title) = *CRITERIA.iter().find(|c| c.0 == id).expect("known criterion");
    let start = Instant::now();
    let mut cx = Ctx { checks: Vec::new(), errors: Vec::new(), expected_failure: None, seed: opts.seed };
    let res = match id {
        1 => flat_suite(&mut cx),
        2 => hyperbolic_suite(&mut cx),
        3 => mean_curvature_suite(&mut cx),
        4 => cheeger_suite(&mut cx),
        5 => essential_range_suite(&mut cx),
        6 => spherical_suite(&mut cx),
        7 => lambda_suite(&mut cx),
        8 => focal_suite(&mut cx),
        9 => convexity_suite(&mut cx),
        10 => radial_suite(&mut cx),
        11 => rank_suite(&mut cx),
        12 => radialisation_suite(&mut cx),
        13 => determinism_suite(&mut cx, opts),
        _ => unreachable!(),
    };
    if let Err(e) = res {
        cx.errors.push(e.to_string());
        cx.push(Check::holds("completed without numerical error", false));
    }
    let passed = cx.checks.iter().all(|c| c.passed) && cx.errors.is_empty();
    CriterionReport {
        id,
        key,
        title,
        passed,
        checks: cx.checks,
        errors: cx.errors,
        expected_failure: if passed { None } else { cx.expected_failure },
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn write_reports(dir: &Path, reports: &[CriterionReport]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in reports {
        std::fs::write(dir.join(format!("suite-{:02}-{}.json", r.id, r.key)), to_json(r))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- 1

fn flat_suite(cx: &mut Ctx) -> Result<()> {
    let shoot = ShootingOptions::default();
    let pts = [[1.0, 2.0, -0.5], [-3.0, 0.25, 1.5], [0.5, -4.0, 2.0], [0.0, 0.0, 0.0]];
    for n in [2usize, 3] {
        let m = registry::euclidean(n)?;
        let o = DVector::zeros(n);
        let (mut dist, mut log) = (0.0f64, 0.0f64);
        for p in &pts {
            for q in &pts {
                let (p, q) = (dv(&p[..n]), dv(&q[..n]));
                if p == q {
                    continue;
                }
                let l = log_map(&m, &p, &q, &shoot)?;
                dist = dist.max((l.length - (&q - &p).norm()).abs());
                log = log.max((&l.velocity - (&q - &p)).abs().max());
            }
        }
        cx.push(Check::le(format!("E{n} distance error"), dist, 1e-8));
        cx.push(Check::le(format!("E{n} log map error"), log, 1e-8));

        let mut raw = vec![0.0; n];
        raw[0] = 0.6;
        raw[1] = -0.8;
        let v = TangentVector::new(o.clone(), dv(&raw)).normalized(&m)?;
        let ray = BusemannRay::new(&m, &v, &BusemannOptions::default())?;
        let (mut val, mut grad, mut hess) = (0.0f64, 0.0f64, 0.0f64);
        for x in &pts[..3] {
            let x = dv(&x[..n]);
            let ev = ray.full(&x, None)?;
            val = val.max((ev.value + x.dot(&v.components)).abs());
            grad = grad.max((ev.gradient.unwrap() + &v.components).abs().max());
            hess = hess.max(ev.hessian.unwrap().abs().max());
        }
        cx.push(Check::le(format!("E{n} Busemann value error"), val, 1e-8));
        cx.push(Check::le(format!("E{n} Busemann gradient error"), grad, 1e-8));
        cx.push(Check::le(format!("E{n} Busemann Hessian"), hess, 1e-8));

        let st = stable_jacobi_tensor(&m, &v, &StableOptions::default())?;
        cx.push(Check::le(format!("E{n} stable tensor |D'(0)|"), st.derivative.abs().max(), 1e-8));
        let h = horosphere_mean_curvature(&m, &v, &dv(&pts[0][..n]), &BusemannOptions::default(), 1e-2)?;
        cx.push(Check::le(format!("E{n} horosphere mean curvature |h|"), h.jacobi.abs(), 1e-8));

        let io = IntegratorOptions::with_step(1e-3);
        let audit = radial_curvature_audit(&m, &o, &sphere_points(n, 8), 5.0, 0.5, 1e-9, &IntegratorOptions::with_step(1e-2))?;
        let lr = lambda_ratio_check(&m, &v, 5.0, Some(&audit), HypothesisMode::Enforce, &io)?;
        cx.push(Check::le(format!("E{n} |lambda(s) - s|"), lr.max_deviation, 1e-8));
    }
    Ok(())
}

// ---------------------------------------------------------------- 2

fn hyperbolic_suite(cx: &mut Ctx) -> Result<()> {
    for n in [2usize, 3] {
        let p = BusemannParams { points: 50, radius: 5.0, ..BusemannParams::default() };
        let o = cx.experiment(&format!("h{n}-busemann"), ExperimentKind::Busemann, ball(n), &p);
        cx.push(Check::eq(format!("H{n} samples (d <= 5)"), scalar(&o, "samples"), 50.0));
        cx.push(Check::eq(format!("H{n} failed evaluations"), scalar(&o, "failures"), 0.0));
        cx.push(Check::le(format!("H{n} Busemann value error"), scalar(&o, "value_error"), 1e-4));
        cx.push(Check::le(format!("H{n} Busemann Hessian error"), scalar(&o, "hessian_error"), 1e-3));
        cx.push(Check::le(format!("H{n} stable tensor D'(0) + Id"), scalar(&o, "stable_derivative_error"), 1e-4));
        cx.push(Check::le(format!("H{n} | |grad b| - 1 |"), scalar(&o, "gradient_norm_error"), 1e-4));
    }
    Ok(())
}

// ---------------------------------------------------------------- 3

fn mean_curvature_suite(cx: &mut Ctx) -> Result<()> {
    let opts = ScanOptions::default();
    for n in [2usize, 3] {
        let m = registry::hyperbolic_ball(n)?;
        let s = horosphere_scan(&m, &DVector::zeros(n), &opts)?;
        cx.push(Check::ge(format!("H{n} samples"), s.samples.len() as f64, 320.0));
        cx.push(Check::le(format!("H{n} |h - {}|", n - 1), (s.mean - (n as f64 - 1.0)).abs(), 1e-3));
        cx.push(Check::lt(format!("H{n} spread of h"), s.spread, 1e-3));
        cx.push(Check::le(format!("H{n} route discrepancy"), s.max_discrepancy, 1e-3));
    }
    // H^2 x R: h = cos(alpha) for directions at angle alpha to the hyperbolic factor.
    // Nearly vertical directions converge too slowly for a desk-scale schedule.
    let m = registry::product(registry::hyperbolic_ball(2)?, registry::euclidean(1)?)?;
    let mut bopts = BusemannOptions { direction_tol: 1e-4, ..BusemannOptions::default() };
    bopts.stable.tol = 1e-6;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for alpha in [0.0f64, 0.5, 1.1] {
        // the ball metric at the origin is 4 delta
        let v = TangentVector::new(DVector::zeros(3), dv(&[alpha.cos() / 2.0, 0.0, alpha.sin()]));
        for p in [[0.1, 0.2, 0.5], [-0.3, 0.1, -1.0]] {
            let h = horosphere_mean_curvature(&m, &v, &dv(&p), &bopts, 1e-2)?.jacobi;
            lo = lo.min(h);
            hi = hi.max(h);
        }
    }
    cx.push(Check::gt("H2xR spread of h", hi - lo, 0.5));
    Ok(())
}

// ---------------------------------------------------------------- 4

fn cheeger_suite(cx: &mut Ctx) -> Result<()> {
    let p = SpectralParams { directions: 8, points: 4, ..SpectralParams::default() };
    let o = cx.experiment("h2-spectral", ExperimentKind::Spectral, ball(2), &p);
    let h = scalar(&o, "h_mean");
    cx.push(Check::le("|h - 1|", (h - 1.0).abs(), 1e-3));
    for r in &p.radii {
        let c = scalar(&o, &format!("cheeger_r{r}"));
        cx.push(Check::ge(format!("Cheeger ratio / h at r = {r}"), c / h, 1.0 - 1e-3));
    }
    let c15 = scalar(&o, "cheeger_r15");
    cx.push(Check::le("|ratio(15) / h - 1|", (c15 / h - 1.0).abs(), 0.02));
    let l = scalar(&o, "lambda0_upper");
    cx.push(Check::ge("Rayleigh lambda0 upper bound", l, 0.25));
    cx.push(Check::le("Rayleigh excess over 1/4 (relative)", l / 0.25 - 1.0, 0.05));
    cx.push(Check::eq("Rayleigh index", scalar(&o, "lambda0_index"), 100.0));
    cx.push(Check::eq("bottom of essential range", scalar(&o, "essential_range_bottom"), 0.25));
    Ok(())
}

// ---------------------------------------------------------------- 5

fn essential_range_suite(cx: &mut Ctx) -> Result<()> {
    for n in [3usize, 2] {
        let o = cx.experiment(&format!("h{n}-essential"), ExperimentKind::EssentialRange, ball(n), &EssentialParams::default());
        cx.push(Check::eq(format!("H{n} verdicts"), scalar(&o, "verdicts"), 60.0));
        cx.push(Check::eq(format!("H{n} mismatches against brute force"), scalar(&o, "mismatches"), 0.0));
        cx.push(Check::eq(format!("H{n} exclusion witnesses"), scalar(&o, "exclusion_witnesses"), 10.0));
        cx.push(Check::holds(format!("H{n} inclusions and exclusions"), o.verdict.passed()));
    }
    Ok(())
}

// ---------------------------------------------------------------- 6

fn spherical_suite(cx: &mut Ctx) -> Result<()> {
    let h3 = registry::hyperbolic_ball(3)?;
    let h2 = registry::hyperbolic_ball(2)?;
    for lambda in [0.5f64, 1.0, 2.0] {
        let s = spherical_function(&h3, lambda, 10.0, 1e-3)?;
        let err = s
            .r
            .iter()
            .zip(&s.phi)
            .map(|(r, phi)| {
                let want = if *r == 0.0 { 1.0 } else { (lambda * r).sin() / (lambda * r.sinh()) };
                (phi - want).abs()
            })
            .fold(0.0, f64::max);
        cx.push(Check::le(format!("H3 lambda = {lambda}: closed-form error on [0, 10]"), err, 1e-6));
        cx.push(Check::lt(format!("H3 lambda = {lambda}: eigen-relation residual"), s.residual, 1e-6));
        let s = spherical_function(&h2, lambda, 10.0, 1e-3)?;
        cx.push(Check::lt(format!("H2 lambda = {lambda}: eigen-relation residual"), s.residual, 1e-6));
    }
    Ok(())
}

// ---------------------------------------------------------------- 7

fn lambda_suite(cx: &mut Ctx) -> Result<()> {
    let p = JacobiParams { directions: 16, t_max: 20.0, step: 1e-3, record_every: 20, ..JacobiParams::default() };
    for (name, model) in [("h2", ball(2)), ("h3", ball(3)), ("warped-cubic", warped(&[1.0, 1.0]))] {
        let o = cx.experiment(&format!("{name}-lambda"), ExperimentKind::Jacobi, model, &p);
        cx.push(Check::le(format!("{name}: max lambda(s) - s"), scalar(&o, "lambda_max_excess"), 1e-6));
        cx.push(Check::holds(format!("{name}: verdict"), o.verdict.passed()));
    }
    let o = cx.experiment("e3-lambda", ExperimentKind::Jacobi, flat(3), &p);
    cx.push(Check::le("E3: max |lambda(s) - s|", scalar(&o, "lambda_max_deviation"), 1e-9));
    let sp = JacobiParams { directions: 4, t_max: 1.5, diagnostic: true, ..JacobiParams::default() };
    let o = cx.experiment("s2-lambda", ExperimentKind::Jacobi, ModelSpec::Sphere2 { guard: None }, &sp);
    cx.push(Check::gt("S2 (diagnostic): violation lambda(s) - s", scalar(&o, "lambda_max_excess"), 1e-6));
    cx.push(Check::eq("S2 (diagnostic): curvature audit flagged", scalar(&o, "audit_violated"), 1.0));
    cx.push(Check::holds("S2 (diagnostic): fail verdict", o.verdict == Verdict::Fail));
    Ok(())
}

// ---------------------------------------------------------------- 8

fn focal_suite(cx: &mut Ctx) -> Result<()> {
    let o = cx.experiment(
        "s2-focal",
        ExperimentKind::FocalScan,
        ModelSpec::Sphere2 { guard: None },
        &FocalParams { directions: 4, t_max: 2.5, step: 1e-3, ..FocalParams::default() },
    );
    cx.push(Check::le("S2 |witness - pi/2|", (scalar(&o, "first_violation") - std::f64::consts::FRAC_PI_2).abs(), 0.01));
    cx.push(Check::holds("S2 fail verdict", o.verdict == Verdict::Fail));
    let p = FocalParams { directions: 16, t_max: 20.0, ..FocalParams::default() };
    let o = cx.experiment("h2-focal", ExperimentKind::FocalScan, ball(2), &p);
    cx.push(Check::eq("H2 monotone to T = 20", scalar(&o, "monotone"), 1.0));
    let o = cx.experiment("surrogate-focal", ExperimentKind::FocalScan, warped(&[1.0, -0.01, 0.0005]), &p);
    cx.push(Check::eq("sign-changing surrogate monotone to T = 20", scalar(&o, "monotone"), 1.0));
    cx.push(Check::gt("surrogate positive curvature witness", scalar(&o, "curvature_max"), 0.0));
    cx.push(Check::lt("surrogate negative curvature witness", scalar(&o, "curvature_min"), 0.0));
    Ok(())
}

// ---------------------------------------------------------------- 9

/// Radius beyond which `0.5 sech^2(r/2) <= 0.1`.
pub fn averaged_margin_radius(margin: f64) -> f64 {
    2.0 * (1.0 / (2.0 * margin).sqrt()).acosh()
}

fn convexity_suite(cx: &mut Ctx) -> Result<()> {
    let p = ConvexityParams {
        function: CertFunction::AveragedF,
        measure: MeasureKind::Uniform,
        directions: 64,
        points: 100,
        radius: 3.0,
        margin: 0.1,
        expect_laplacian: Some(1.0),
        laplacian_tol: 1e-3,
        bilaplacian_points: 2,
        bilaplacian_tol: 1e-2,
        ..ConvexityParams::default()
    };
    let h = cx.experiment("h2-averaged", ExperimentKind::ConvexityCert, ball(2), &p);
    let min_eig = scalar(&h, "min_hessian_eigenvalue");
    let margin = Check::gt("H2 K=64 min Hessian eigenvalue", min_eig, 0.1);
    let margin_ok = margin.passed;
    cx.push(margin);
    cx.push(Check::le("H2 |Delta F - 1|", scalar(&h, "laplacian_deviation"), 1e-3));
    cx.push(Check::lt("H2 |Delta^2 F|", scalar(&h, "bilaplacian_max"), 1e-2));
    let e = cx.experiment("e2-averaged", ExperimentKind::ConvexityCert, flat(2), &ConvexityParams { expect_laplacian: None, bilaplacian_points: 0, ..p });
    cx.push(Check::lt("E2 |min Hessian eigenvalue| (not strict)", scalar(&e, "min_hessian_eigenvalue").abs(), 1e-6));
    cx.push(Check::holds("E2 certificate not strict", e.verdict == Verdict::Fail));

    // The average of g - db (x) db over the uniform visual measure of o has
    // smallest eigenvalue 0.5 sech^2(r/2) at distance r, so margin 0.1 is
    // attainable only for r < 2 acosh(sqrt 5).
    if !margin_ok && cx.checks.iter().filter(|c| !c.passed).count() == 1 && cx.errors.is_empty() {
        let worst: Vec<f64> = serde_json::from_value(h.details["worst_point"].clone()).unwrap_or_default();
        let m = registry::hyperbolic_ball(2)?;
        let r = m.distance_oracle(&DVector::zeros(2), &dv(&worst)).unwrap_or(f64::NAN);
        let oracle = 0.5 / (r / 2.0).cosh().powi(2);
        let limit = averaged_margin_radius(0.1);
        if (min_eig - oracle).abs() <= 5e-3 && r > limit {
            cx.expected_failure = Some(format!(
                "margin 0.1 unattainable on r <= 3: min eigenvalue {min_eig:.5} at r = {r:.4} matches 0.5 sech^2(r/2) = {oracle:.5}; \
                 the bound exceeds 0.1 only for r < {limit:.4}"
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- 10

fn radial_suite(cx: &mut Ctx) -> Result<()> {
    let o = cx.experiment("e3-radial", ExperimentKind::RadialConstants, flat(3), &RadialParams { directions: 8, r_max: 20.0, grid: 1e-2, base: None });
    let (c1, c2) = (scalar(&o, "c1"), scalar(&o, "c2"));
    cx.push(Check::le("E3 |c1|", c1.abs(), 1e-6));
    cx.push(Check::le("E3 |alpha - c2/4|", (scalar(&o, "alpha") - c2 / 4.0).abs(), 1e-12));
    let mut runs = vec![("E3", o)];
    for (name, model, r_max) in [
        ("H2", ball(2), 10.0),
        ("H3", ball(3), 8.0),
        ("warped cubic", warped(&[1.0, 1.0]), 5.0),
        ("surrogate", warped(&[1.0, -0.01, 0.0005]), 10.0),
    ] {
        let o = cx.experiment(&format!("{name}-radial"), ExperimentKind::RadialConstants, model, &RadialParams { directions: 4, r_max, grid: 1e-2, base: None });
        runs.push((name, o));
    }
    for (name, o) in &runs {
        let bound = -1.5 * scalar(o, "c1") - scalar(o, "c2") / 4.0 - 1e-6;
        cx.push(Check::ge(format!("{name} beta >= -3c1/2 - c2/4 - 1e-6"), scalar(o, "beta"), bound));
    }
    Ok(())
}

// ---------------------------------------------------------------- 11

fn rank_suite(cx: &mut Ctx) -> Result<()> {
    let o = cx.experiment("h2xh2-rank", ExperimentKind::RankChecks, product(ball(2), ball(2)), &RankParams::default());
    cx.push(Check::ge("directions", scalar(&o, "directions"), 64.0));
    cx.push(Check::le("max |Delta b_v - (|v1| + |v2|)|", scalar(&o, "max_error"), 1e-3));
    cx.push(Check::le("| |rho|^2 - 0.5 |", (scalar(&o, "rho_norm_sq") - 0.5).abs(), 1e-12));
    cx.push(Check::gt("Rayleigh lambda0 upper bound", scalar(&o, "lambda0_upper"), 0.475));
    cx.push(Check::le("max |Delta F|", scalar(&o, "averaged_laplacian_max"), 2f64.sqrt() + 1e-3));
    Ok(())
}

// ---------------------------------------------------------------- 12

fn radialisation_suite(cx: &mut Ctx) -> Result<()> {
    let h2 = registry::hyperbolic_ball(2)?;
    let o2 = DVector::zeros(2);
    let bundle = SphereBundle::new(&h2, &o2, 3.0, 1e-2, 10, &AngularRule::circle(16))?;
    let opts = ShootingOptions { step: 1e-2, ..ShootingOptions::default() };
    let idem = idempotence_residual(&h2, &bundle, |x| Ok(x[0] * x[0] + 0.3 * x[1]), &opts)?;
    cx.push(Check::le("H2 idempotence residual", idem, 1e-8));

    let bump = |c: [f64; 3], rho2: f64| {
        move |x: &DVector<f64>| -> Result<f64> {
            let s = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / rho2;
            Ok(if s < 1.0 { (-1.0 / (1.0 - s)).exp() } else { 0.0 })
        }
    };
    let fine = SphereBundle::new(&h2, &o2, 2.5, 2.5e-3, 1, &AngularRule::circle(256))?;
    let c = commutation_residual(&h2, &fine, bump([0.3, 0.0, 0.0], 0.25), 2e-3, 0.1)?;
    cx.push(Check::lt("H2 commutation residual (bump)", c.residual, 1e-5));

    let hr = registry::product(registry::hyperbolic_ball(2)?, registry::euclidean(1)?)?;
    let b3 = SphereBundle::new(&hr, &DVector::zeros(3), 2.0, 1e-2, 1, &AngularRule::sphere(3, 8, 8))?;
    let c = commutation_residual(&hr, &b3, bump([0.15, 0.0, 0.5], 0.5), 1e-2, 0.1)?;
    cx.push(Check::gt("H2xR commutation residual (control)", c.residual, 1e-2));
    Ok(())
}

// ---------------------------------------------------------------- 13

/// Configuration used for the double runs.
pub fn determinism_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(DEFAULT_CONFIG).expect("default configuration is valid");
    cfg.experiments.retain(|e| e.kind != ExperimentKind::RankChecks);
    cfg
}

fn scratch_dir(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    std::env::temp_dir().join(format!("horolab-{tag}-{}-{nanos}", std::process::id()))
}

/// Files of `dir` by name; the manifest loses its timing and thread fields.
pub fn comparable_outputs(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir)? {
        let e = e?;
        let name = e.file_name().to_string_lossy().into_owned();
        let mut bytes = std::fs::read(e.path())?;
        if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).map_err(std::io::Error::other)?;
            if let Some(m) = v.as_object_mut() {
                m.remove("wall_time_seconds");
                m.remove("threads");
            }
            bytes = to_json(&v).into_bytes();
        }
        out.insert(name, bytes);
    }
    Ok(out)
}

fn verdicts_and_scalars(outcomes: &[ExperimentOutcome]) -> Vec<(String, Verdict, Vec<(String, u64)>)> {
    outcomes
        .iter()
        .map(|o| (o.name.clone(), o.verdict, o.scalars.iter().map(|(k, v)| (k.clone(), v.to_bits())).collect()))
        .collect()
}

fn determinism_suite(cx: &mut Ctx, opts: &SuiteOptions) -> Result<()> {
    let cfg = determinism_config();
    let io = |e: std::io::Error| GeomError::Precondition(format!("output comparison: {e}"));
    let run_err = |e: crate::runner::RunError| GeomError::Precondition(e.to_string());
    let mut dirs = Vec::new();
    let mut results = Vec::new();
    for (k, threads) in [1usize, 1, 4].into_iter().enumerate() {
        let dir = scratch_dir(&format!("determinism{k}"));
        let ro = RunOptions { threads: Some(threads), seed: Some(opts.seed), out: Some(dir.clone()) };
        let (_, outcomes) = run(&cfg, &ro).map_err(run_err)?;
        dirs.push(dir);
        results.push(outcomes);
    }
    let a = comparable_outputs(&dirs[0]).map_err(io)?;
    let b = comparable_outputs(&dirs[1]).map_err(io)?;
    let differing = a.keys().chain(b.keys()).filter(|k| a.get(*k) != b.get(*k)).count();
    cx.push(Check::ge("output files", a.len() as f64, (cfg.experiments.len() + 1) as f64));
    cx.push(Check::eq("single-threaded reruns: differing files", differing as f64, 0.0));
    let same = verdicts_and_scalars(&results[0]) == verdicts_and_scalars(&results[2]);
    cx.push(Check::holds("multi-threaded run: identical verdicts and scalars", same));
    for d in dirs {
        let _ = std::fs::remove_dir_all(d);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn select_by_key_number_and_all() {
        assert_eq!(select("acceptance").unwrap().len(), 13);
        assert_eq!(select("convexity").unwrap(), vec![9]);
        assert_eq!(select("12").unwrap(), vec![12]);
        assert!(select("14").is_err());
    }

    #[test]
    fn check_relations() {
        assert!(Check::le("x", 1.0, 1.0).passed);
        assert!(!Check::lt("x", 1.0, 1.0).passed);
        assert!(Check::ge("x", 1.0, 1.0).passed);
        assert!(!Check::gt("x", f64::NAN, 0.0).passed);
        assert!(!Check::le("x", f64::NAN, 0.0).passed);
        assert!(Check::holds("x", true).passed);
    }

    #[test]
    fn criteria_ids_are_consecutive() {
        for (i, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.0, i + 1);
        }
    }
}
