//! Busemann functions from truncations `d(x, gamma_v(t)) - t`.

use crate::error::{GeomError, Result};
use crate::geodesic::{integrate_geodesic, log_map, stable_jacobi_tensor, IntegratorOptions, ShootingOptions, StableOptions};
use crate::linalg;
use crate::model::{ChartManifold, TangentVector};
use crate::ode::{Halt, Rk4, System};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct BusemannOptions {
    /// Truncation parameters `t_k`, increasing.
    pub schedule: Vec<f64>,
    /// Cauchy tolerance on successive value estimates.
    pub value_tol: f64,
    /// Cauchy tolerance (metric norm at `x`) on successive direction estimates.
    pub direction_tol: f64,
    /// Slack allowed in the monotonicity and boundedness checks.
    pub monotone_slack: f64,
    /// Integration step of the ray and of the shooting problems.
    pub step: f64,
    pub stable: StableOptions,
}

impl Default for BusemannOptions {
    fn default() -> Self {
        BusemannOptions {
            schedule: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            value_tol: 1e-5,
            direction_tol: 1e-6,
            monotone_slack: 1e-6,
            step: 5e-3,
            stable: StableOptions { step: 5e-3, ..StableOptions::default() },
        }
    }
}

/// Which estimator produced a converged quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `d(x, q) cos(theta) - t`, `theta` the angle at `q` with the ray.
    Projected,
    /// `d(x, q) - t`.
    Raw,
    /// Ray velocity at `q` transported back to `x`.
    Transported,
    /// Unit initial velocity of the geodesic from `x` to `q`.
    Chord,
}

/// Busemann data at a point.
#[derive(Debug, Clone)]
pub struct BusemannEvaluation {
    pub direction: TangentVector,
    pub point: DVector<f64>,
    pub value: f64,
    /// Gradient vector, when requested.
    pub gradient: Option<DVector<f64>>,
    /// Covariant Hessian in chart coordinates, when requested.
    pub hessian: Option<DMatrix<f64>>,
    /// Truncation parameter of the accepted estimate.
    pub truncation_t: f64,
    pub extrapolation_gap: f64,
    pub direction_gap: Option<f64>,
    pub value_estimator: Estimator,
    pub direction_estimator: Option<Estimator>,
    /// `d(x, gamma_v(t_k)) - t_k` for the anchors visited.
    pub raw: Vec<f64>,
    /// Schedule index of the accepted estimate.
    pub anchor: usize,
}

struct Anchor {
    t: f64,
    point: DVector<f64>,
    velocity: DVector<f64>,
}

/// The ray `gamma_v` integrated once, with its points at the schedule times.
pub struct BusemannRay<'a> {
    model: &'a ChartManifold,
    direction: TangentVector,
    anchors: Vec<Anchor>,
    opts: BusemannOptions,
}

struct Probe {
    raw: f64,
    projected: f64,
    chord: DVector<f64>,
    transported: Option<DVector<f64>>,
    velocity: DVector<f64>,
}

impl<'a> BusemannRay<'a> {
    pub fn new(model: &'a ChartManifold, v: &TangentVector, opts: &BusemannOptions) -> Result<Self> {
        let s = &opts.schedule;
        if s.len() < 2 || s.windows(2).any(|w| !(w[1] > w[0])) || !(s[0] > 0.0) {
            return Err(GeomError::Precondition("Busemann schedule needs two or more increasing positive values".into()));
        }
        let v = v.normalized(model)?;
        let t_max = *s.last().unwrap();
        let path = integrate_geodesic(model, &v, t_max, &IntegratorOptions::with_step(opts.step))?;
        if let Some(t) = path.truncated_at {
            return Err(GeomError::Domain(format!("ray leaves the chart at t = {t}")));
        }
        let anchors = s
            .iter()
            .map(|&t| {
                let node = &path.nodes[path.node_at(t)];
                Anchor { t: node.t, point: node.point.clone(), velocity: node.velocity.clone() }
            })
            .collect();
        Ok(BusemannRay { model, direction: v, anchors, opts: opts.clone() })
    }

    pub fn direction(&self) -> &TangentVector {
        &self.direction
    }

    pub fn options(&self) -> &BusemannOptions {
        &self.opts
    }

    fn shooting(&self, initial: Option<DVector<f64>>, transport: bool) -> ShootingOptions {
        ShootingOptions { step: self.opts.step, initial, transport, ..ShootingOptions::default() }
    }

    fn probe(&self, x: &DVector<f64>, k: usize, initial: Option<DVector<f64>>, transport: bool) -> Result<Probe> {
        let a = &self.anchors[k];
        let lm = log_map(self.model, x, &a.point, &self.shooting(initial, transport))?;
        let d = lm.length;
        if d == 0.0 {
            return Err(GeomError::Precondition("evaluation point lies on a ray anchor".into()));
        }
        let gq = self.model.metric(&a.point)?;
        let cos = linalg::inner(&gq, &lm.end_velocity, &a.velocity)
            / (linalg::norm(&gq, &lm.end_velocity) * linalg::norm(&gq, &a.velocity));
        let gx = self.model.metric(x)?;
        let chord = &lm.velocity / linalg::norm(&gx, &lm.velocity);
        let transported = if transport {
            let w = lm.transport_back(self.model, &a.point, &a.velocity)?;
            let nw = linalg::norm(&gx, &w);
            Some(w / nw)
        } else {
            None
        };
        Ok(Probe { raw: d - a.t, projected: d * cos - a.t, chord, transported, velocity: lm.velocity })
    }

    /// Value and, if `want_direction`, the unit asymptotic direction at `x`
    /// (pointing towards the end of the ray), iterating over the schedule
    /// until both are Cauchy-converged. `bound` is `d(o, x)` when known.
    pub fn evaluate(&self, x: &DVector<f64>, want_direction: bool, bound: Option<f64>) -> Result<BusemannEvaluation> {
        self.model.check_point(x)?;
        let o = &self.direction.base;
        let bound = match bound {
            Some(b) => b,
            None => log_map(self.model, o, x, &self.shooting(None, false))?.length,
        };
        let slack = self.opts.monotone_slack;
        let gx = self.model.metric(x)?;
        let mut probes: Vec<Probe> = Vec::new();
        let mut vgaps: Vec<f64> = Vec::new();
        let mut dgaps: Vec<f64> = Vec::new();
        for k in 0..self.anchors.len() {
            let initial = probes.last().map(|p| self.warm_start(&gx, p, k));
            let pr = self.probe(x, k, initial, want_direction)?;
            if pr.raw.abs() > bound + slack {
                return Err(GeomError::Hypothesis(format!(
                    "truncated Busemann value {} exceeds d(o, x) = {bound}",
                    pr.raw
                )));
            }
            if let Some(prev) = probes.last() {
                if pr.raw > prev.raw + slack {
                    return Err(GeomError::Hypothesis(format!(
                        "truncated Busemann values increase from {} to {} at t = {}",
                        prev.raw, pr.raw, self.anchors[k].t
                    )));
                }
            }
            probes.push(pr);
            if k == 0 {
                continue;
            }
            let (cur, prev) = (&probes[k], &probes[k - 1]);
            let gap_p = (cur.projected - prev.projected).abs();
            let gap_r = (cur.raw - prev.raw).abs();
            let value = if gap_p < self.opts.value_tol {
                Some((Estimator::Projected, cur.projected, gap_p))
            } else if gap_r < self.opts.value_tol {
                Some((Estimator::Raw, cur.raw, gap_r))
            } else {
                None
            };
            vgaps.push(gap_p.min(gap_r));
            let dir = if want_direction {
                let gap_t = linalg::norm(&gx, &(cur.transported.as_ref().unwrap() - prev.transported.as_ref().unwrap()));
                let gap_c = linalg::norm(&gx, &(&cur.chord - &prev.chord));
                dgaps.push(gap_t.min(gap_c));
                if gap_t < self.opts.direction_tol {
                    Some((Estimator::Transported, cur.transported.clone().unwrap(), gap_t))
                } else if gap_c < self.opts.direction_tol {
                    Some((Estimator::Chord, cur.chord.clone(), gap_c))
                } else {
                    None
                }
            } else {
                None
            };
            if let Some((ve, value, vgap)) = value {
                if !want_direction || dir.is_some() {
                    let (de, u, dgap) = match dir {
                        Some((e, u, g)) => (Some(e), Some(u), Some(g)),
                        None => (None, None, None),
                    };
                    return Ok(BusemannEvaluation {
                        direction: self.direction.clone(),
                        point: x.clone(),
                        value,
                        gradient: u.map(|u| -u),
                        hessian: None,
                        truncation_t: self.anchors[k].t,
                        extrapolation_gap: vgap,
                        direction_gap: dgap,
                        value_estimator: ve,
                        direction_estimator: de,
                        raw: probes.iter().map(|p| p.raw).collect(),
                        anchor: k,
                    });
                }
            }
        }
        let mut gaps = vgaps;
        if want_direction {
            gaps.extend(dgaps);
        }
        Err(GeomError::NonConvergence { gaps })
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<BusemannEvaluation> {
        self.evaluate(x, false, None)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<BusemannEvaluation> {
        self.evaluate(x, true, None)
    }

    /// Value, gradient and Hessian `-G F sym(D'(0)) F^T G`, with `D` the
    /// stable Jacobi tensor along the asymptotic direction at `x`.
    pub fn full(&self, x: &DVector<f64>, bound: Option<f64>) -> Result<BusemannEvaluation> {
        let mut ev = self.evaluate(x, true, bound)?;
        let u = -ev.gradient.clone().unwrap();
        let st = stable_jacobi_tensor(self.model, &TangentVector::new(x.clone(), u), &self.opts.stable)?;
        ev.hessian = Some(-st.coordinate_form(self.model)?);
        Ok(ev)
    }

    /// `d(x, q_k) cos(theta) - t_k` at a fixed anchor, a smooth function of `x`
    /// suitable for finite differences.
    pub fn truncated_value(&self, x: &DVector<f64>, anchor: usize) -> Result<f64> {
        if anchor >= self.anchors.len() {
            return Err(GeomError::Precondition("anchor index out of range".into()));
        }
        let gx = self.model.metric(x)?;
        let mut pr = self.probe(x, 0, None, false)?;
        for k in 1..=anchor {
            pr = self.probe(x, k, Some(self.warm_start(&gx, &pr, k)), false)?;
        }
        Ok(pr.projected)
    }

    /// Previous initial velocity lengthened by the anchor spacing.
    fn warm_start(&self, gx: &DMatrix<f64>, prev: &Probe, k: usize) -> DVector<f64> {
        let len = linalg::norm(gx, &prev.velocity);
        let dt = self.anchors[k].t - self.anchors[k - 1].t;
        &prev.velocity * ((len + dt) / len)
    }
}

pub fn busemann_value(model: &ChartManifold, v: &TangentVector, x: &DVector<f64>, opts: &BusemannOptions) -> Result<BusemannEvaluation> {
    BusemannRay::new(model, v, opts)?.value(x)
}

pub fn busemann_gradient(model: &ChartManifold, v: &TangentVector, p: &DVector<f64>, opts: &BusemannOptions) -> Result<TangentVector> {
    let ev = BusemannRay::new(model, v, opts)?.gradient(p)?;
    Ok(TangentVector::new(p.clone(), ev.gradient.unwrap()))
}

pub fn busemann_hessian(model: &ChartManifold, v: &TangentVector, p: &DVector<f64>, opts: &BusemannOptions) -> Result<DMatrix<f64>> {
    Ok(BusemannRay::new(model, v, opts)?.full(p, None)?.hessian.unwrap())
}

/// Largest coordinate deviation between the flow of `grad b_v` from `p` and
/// the geodesic with the same initial velocity, over `[0, t_end]`.
#[derive(Debug, Clone, Serialize)]
pub struct IntegralCurveReport {
    pub max_deviation: f64,
    pub t_end: f64,
    pub steps: usize,
}

struct GradientFlow<'r, 'a> {
    ray: &'r BusemannRay<'a>,
    error: Option<GeomError>,
}

impl System for GradientFlow<'_, '_> {
    fn dim(&self) -> usize {
        self.ray.model.dim()
    }

    fn rhs(&mut self, y: &[f64], dy: &mut [f64]) -> bool {
        let x = DVector::from_column_slice(y);
        if !self.ray.model.contains(y) {
            return false;
        }
        match self.ray.gradient(&x) {
            Ok(ev) => {
                dy.copy_from_slice(ev.gradient.unwrap().as_slice());
                true
            }
            Err(e) => {
                self.error = Some(e);
                false
            }
        }
    }
}

pub fn integral_curve_check(
    model: &ChartManifold,
    v: &TangentVector,
    p: &DVector<f64>,
    t_end: f64,
    flow_step: f64,
    opts: &BusemannOptions,
) -> Result<IntegralCurveReport> {
    if !(t_end > 0.0 && flow_step > 0.0) {
        return Err(GeomError::Precondition("flow length and step must be positive".into()));
    }
    let ray = BusemannRay::new(model, v, opts)?;
    let g0 = ray.gradient(p)?.gradient.unwrap();
    let steps = (t_end / flow_step - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let sub = (h / opts.step).ceil().max(1.0) as usize;
    let path = integrate_geodesic(
        model,
        &TangentVector::new(p.clone(), g0),
        t_end,
        &IntegratorOptions { step: h / sub as f64, record_every: sub },
    )?;
    if let Some(t) = path.truncated_at {
        return Err(GeomError::Domain(format!("comparison geodesic leaves the chart at t = {t}")));
    }
    let mut sys = GradientFlow { ray: &ray, error: None };
    let mut y = p.as_slice().to_vec();
    let mut rk = Rk4::new(y.len());
    let mut worst: f64 = 0.0;
    let halt = rk.run(&mut sys, &mut y, h, steps, |k, s| {
        let node = &path.nodes[k.min(path.nodes.len() - 1)];
        let dev = node.point.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        true
    });
    if let Some(e) = sys.error {
        return Err(e);
    }
    if halt != Halt::Completed {
        return Err(GeomError::Domain("gradient flow left the chart".into()));
    }
    Ok(IntegralCurveReport { max_deviation: worst, t_end, steps })
}
