//! Metric evaluation and the Levi-Civita connection in chart coordinates.
//!
//! Buffer layouts (row-major, `n` = dimension):
//! `g[i*n + j]`, `dg[k*n*n + i*n + j] = d_k g_ij`,
//! `ddg[(k*n + l)*n*n + i*n + j] = d_k d_l g_ij`,
//! `gamma[k*n*n + i*n + j] = Gamma^k_ij`,
//! `dgamma[m*n^3 + k*n*n + i*n + j] = d_m Gamma^k_ij`.

use super::{ChartManifold, Conformal, Kind};
use std::fmt;
use std::sync::Arc;

type MetricFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// User-supplied metric `x -> g(x)` (row-major), differentiated numerically.
#[derive(Clone)]
pub struct CustomMetric {
    pub(crate) metric: Arc<MetricFn>,
    pub(crate) domain: Arc<DomainFn>,
}

impl fmt::Debug for CustomMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomMetric")
    }
}

impl CustomMetric {
    pub fn new(
        metric: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        CustomMetric { metric: Arc::new(metric), domain: Arc::new(domain) }
    }

    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }
}

/// Returns `e^{2 sigma}` and fills `ds[i] = d_i sigma` and, when requested,
/// `dds[i*n + j] = d_i d_j sigma`.
fn conformal_sigma(c: Conformal, x: &[f64], ds: &mut [f64], dds: Option<&mut [f64]>) -> f64 {
    let n = x.len();
    match c {
        Conformal::PoincareBall => {
            let s: f64 = x.iter().map(|v| v * v).sum();
            let d = 1.0 - s;
            for i in 0..n {
                ds[i] = 2.0 * x[i] / d;
            }
            if let Some(dds) = dds {
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 2.0 / d } else { 0.0 };
                        dds[i * n + j] = delta + 4.0 * x[i] * x[j] / (d * d);
                    }
                }
            }
            4.0 / (d * d)
        }
        Conformal::HalfSpace => {
            let y = x[n - 1];
            ds.iter_mut().for_each(|v| *v = 0.0);
            ds[n - 1] = -1.0 / y;
            if let Some(dds) = dds {
                dds.iter_mut().for_each(|v| *v = 0.0);
                dds[n * n - 1] = 1.0 / (y * y);
            }
            1.0 / (y * y)
        }
        Conformal::Stereographic { .. } => {
            let s: f64 = x.iter().map(|v| v * v).sum();
            let d = 1.0 + s;
            for i in 0..n {
                ds[i] = -2.0 * x[i] / d;
            }
            if let Some(dds) = dds {
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { -2.0 / d } else { 0.0 };
                        dds[i * n + j] = delta + 4.0 * x[i] * x[j] / (d * d);
                    }
                }
            }
            4.0 / (d * d)
        }
    }
}

/// `(W, W', W'', E, E', E'')` for `g = W(s) delta + E(s) x x^T`, `s = |x|^2`.
fn warped_coefficients(p: &super::RadialProfile, s: f64) -> [f64; 6] {
    let jet = p.jet(s);
    let [p0, p1, p2] = jet.p;
    let [q0, q1, q2] = jet.q;
    [
        p0 * p0,
        2.0 * p0 * p1,
        2.0 * (p1 * p1 + p0 * p2),
        -q0 * (p0 + 1.0),
        -(q1 * (p0 + 1.0) + q0 * p1),
        -(q2 * (p0 + 1.0) + 2.0 * q1 * p1 + q0 * p2),
    ]
}

fn kd(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// In-place inverse of a small row-major matrix (Gauss-Jordan, partial pivoting).
pub(crate) fn invert_small(n: usize, a: &[f64], inv: &mut [f64]) -> bool {
    let mut m = a.to_vec();
    inv.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        let p = m[piv * n + col];
        if p == 0.0 || !p.is_finite() {
            return false;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        for c in 0..n {
            m[col * n + c] /= p;
            inv[col * n + c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r * n + c] -= f * m[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    true
}

impl ChartManifold {
    /// Metric at `x` without domain checks.
    pub fn metric_into(&self, x: &[f64], g: &mut [f64]) {
        let n = self.dim;
        match &self.kind {
            Kind::Euclidean => {
                g.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..n {
                    g[i * n + i] = 1.0;
                }
            }
            Kind::Conformal(c) => {
                let mut ds = [0.0; 16];
                let e = conformal_sigma(*c, x, &mut ds[..n], None);
                g.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..n {
                    g[i * n + i] = e;
                }
            }
            Kind::Warped(p) => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                let w = warped_coefficients(p, s);
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] = w[0] * kd(i, j) + w[3] * x[i] * x[j];
                    }
                }
            }
            Kind::Product(a, b) => {
                let (na, nb) = (a.dim, b.dim);
                let mut ga = vec![0.0; na * na];
                let mut gb = vec![0.0; nb * nb];
                a.metric_into(&x[..na], &mut ga);
                b.metric_into(&x[na..], &mut gb);
                g.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..na {
                    for j in 0..na {
                        g[i * n + j] = ga[i * na + j];
                    }
                }
                for i in 0..nb {
                    for j in 0..nb {
                        g[(na + i) * n + na + j] = gb[i * nb + j];
                    }
                }
            }
            Kind::Custom(c) => {
                let v = (c.metric)(x);
                g.copy_from_slice(&v[..n * n]);
            }
        }
    }

    /// Metric and its first (and optionally second) derivatives at `x`.
    pub fn metric_jet_into(&self, x: &[f64], g: &mut [f64], dg: &mut [f64], ddg: Option<&mut [f64]>) {
        let n = self.dim;
        let n2 = n * n;
        match &self.kind {
            Kind::Euclidean => {
                self.metric_into(x, g);
                dg.iter_mut().for_each(|v| *v = 0.0);
                if let Some(ddg) = ddg {
                    ddg.iter_mut().for_each(|v| *v = 0.0);
                }
            }
            Kind::Conformal(c) => {
                let mut ds = vec![0.0; n];
                let mut dds = vec![0.0; n2];
                let e = conformal_sigma(*c, x, &mut ds, Some(&mut dds));
                self.metric_into(x, g);
                dg.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..n {
                    for i in 0..n {
                        dg[k * n2 + i * n + i] = 2.0 * ds[k] * e;
                    }
                }
                if let Some(ddg) = ddg {
                    ddg.iter_mut().for_each(|v| *v = 0.0);
                    for k in 0..n {
                        for l in 0..n {
                            let f = (4.0 * ds[k] * ds[l] + 2.0 * dds[k * n + l]) * e;
                            for i in 0..n {
                                ddg[(k * n + l) * n2 + i * n + i] = f;
                            }
                        }
                    }
                }
            }
            Kind::Warped(p) => {
                let s: f64 = x.iter().map(|v| v * v).sum();
                let [w0, w1, w2, e0, e1, e2] = warped_coefficients(p, s);
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] = w0 * kd(i, j) + e0 * x[i] * x[j];
                    }
                }
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            dg[k * n2 + i * n + j] = 2.0 * x[k] * (w1 * kd(i, j) + e1 * x[i] * x[j])
                                + e0 * (kd(i, k) * x[j] + x[i] * kd(j, k));
                        }
                    }
                }
                if let Some(ddg) = ddg {
                    for k in 0..n {
                        for l in 0..n {
                            for i in 0..n {
                                for j in 0..n {
                                    let xx = x[i] * x[j];
                                    ddg[(k * n + l) * n2 + i * n + j] = 2.0 * kd(k, l) * (w1 * kd(i, j) + e1 * xx)
                                        + 4.0 * x[k] * x[l] * (w2 * kd(i, j) + e2 * xx)
                                        + 2.0 * x[k] * e1 * (kd(i, l) * x[j] + x[i] * kd(j, l))
                                        + 2.0 * x[l] * e1 * (kd(i, k) * x[j] + x[i] * kd(j, k))
                                        + e0 * (kd(i, k) * kd(j, l) + kd(i, l) * kd(j, k));
                                }
                            }
                        }
                    }
                }
            }
            Kind::Product(a, b) => {
                let (na, nb) = (a.dim, b.dim);
                let mut ga = vec![0.0; na * na];
                let mut dga = vec![0.0; na * na * na];
                let mut gb = vec![0.0; nb * nb];
                let mut dgb = vec![0.0; nb * nb * nb];
                let want2 = ddg.is_some();
                let mut ddga = vec![0.0; if want2 { na.pow(4) } else { 0 }];
                let mut ddgb = vec![0.0; if want2 { nb.pow(4) } else { 0 }];
                a.metric_jet_into(&x[..na], &mut ga, &mut dga, want2.then_some(&mut ddga[..]));
                b.metric_jet_into(&x[na..], &mut gb, &mut dgb, want2.then_some(&mut ddgb[..]));
                self.metric_into(x, g);
                dg.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..na {
                    for i in 0..na {
                        for j in 0..na {
                            dg[k * n2 + i * n + j] = dga[k * na * na + i * na + j];
                        }
                    }
                }
                for k in 0..nb {
                    for i in 0..nb {
                        for j in 0..nb {
                            dg[(na + k) * n2 + (na + i) * n + na + j] = dgb[k * nb * nb + i * nb + j];
                        }
                    }
                }
                if let Some(ddg) = ddg {
                    ddg.iter_mut().for_each(|v| *v = 0.0);
                    for k in 0..na {
                        for l in 0..na {
                            for i in 0..na {
                                for j in 0..na {
                                    ddg[(k * n + l) * n2 + i * n + j] = ddga[(k * na + l) * na * na + i * na + j];
                                }
                            }
                        }
                    }
                    for k in 0..nb {
                        for l in 0..nb {
                            for i in 0..nb {
                                for j in 0..nb {
                                    ddg[((na + k) * n + na + l) * n2 + (na + i) * n + na + j] =
                                        ddgb[(k * nb + l) * nb * nb + i * nb + j];
                                }
                            }
                        }
                    }
                }
            }
            Kind::Custom(c) => {
                let f = |y: &[f64]| (c.metric)(y);
                g.copy_from_slice(&f(x)[..n2]);
                let step = self.tolerances.fd_step;
                let mut y = x.to_vec();
                for k in 0..n {
                    let h = step * x[k].abs().max(1.0);
                    y[k] = x[k] + h;
                    let gp = f(&y);
                    y[k] = x[k] - h;
                    let gm = f(&y);
                    y[k] = x[k];
                    for e in 0..n2 {
                        dg[k * n2 + e] = (gp[e] - gm[e]) / (2.0 * h);
                    }
                }
                if let Some(ddg) = ddg {
                    let h2: Vec<f64> = (0..n).map(|k| step.sqrt() * 0.3 * x[k].abs().max(1.0)).collect();
                    for k in 0..n {
                        for l in k..n {
                            let vals: Vec<f64> = if k == l {
                                y[k] = x[k] + h2[k];
                                let gp = f(&y);
                                y[k] = x[k] - h2[k];
                                let gm = f(&y);
                                y[k] = x[k];
                                (0..n2).map(|e| (gp[e] - 2.0 * g[e] + gm[e]) / (h2[k] * h2[k])).collect()
                            } else {
                                let mut eval = |sk: f64, sl: f64| {
                                    y[k] = x[k] + sk * h2[k];
                                    y[l] = x[l] + sl * h2[l];
                                    let r = f(&y);
                                    y[k] = x[k];
                                    y[l] = x[l];
                                    r
                                };
                                let pp = eval(1.0, 1.0);
                                let pm = eval(1.0, -1.0);
                                let mp = eval(-1.0, 1.0);
                                let mm = eval(-1.0, -1.0);
                                (0..n2).map(|e| (pp[e] - pm[e] - mp[e] + mm[e]) / (4.0 * h2[k] * h2[l])).collect()
                            };
                            for e in 0..n2 {
                                ddg[(k * n + l) * n2 + e] = vals[e];
                                ddg[(l * n + k) * n2 + e] = vals[e];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Christoffel symbols (and optionally their derivatives) at `x`.
    pub fn connection_into(&self, x: &[f64], gamma: &mut [f64], dgamma: Option<&mut [f64]>) {
        let n = self.dim;
        let n2 = n * n;
        let n3 = n2 * n;
        match &self.kind {
            Kind::Euclidean => {
                gamma.iter_mut().for_each(|v| *v = 0.0);
                if let Some(d) = dgamma {
                    d.iter_mut().for_each(|v| *v = 0.0);
                }
            }
            Kind::Conformal(c) => {
                let mut ds = [0.0; 16];
                let mut dds = [0.0; 256];
                let want2 = dgamma.is_some();
                conformal_sigma(*c, x, &mut ds[..n], if want2 { Some(&mut dds[..n2]) } else { None });
                gamma.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..n {
                    for i in 0..n {
                        // delta_ik s_j + delta_jk s_i - delta_ij s_k
                        gamma[k * n2 + i * n + i] -= ds[k];
                        gamma[k * n2 + k * n + i] += ds[i];
                        gamma[k * n2 + i * n + k] += ds[i];
                    }
                }
                if let Some(d) = dgamma {
                    d.iter_mut().for_each(|v| *v = 0.0);
                    for m in 0..n {
                        for k in 0..n {
                            for i in 0..n {
                                d[m * n3 + k * n2 + i * n + i] -= dds[k * n + m];
                                d[m * n3 + k * n2 + k * n + i] += dds[i * n + m];
                                d[m * n3 + k * n2 + i * n + k] += dds[i * n + m];
                            }
                        }
                    }
                }
            }
            Kind::Product(a, b) => {
                let (na, nb) = (a.dim, b.dim);
                let want2 = dgamma.is_some();
                let mut ga = vec![0.0; na * na * na];
                let mut gb = vec![0.0; nb * nb * nb];
                let mut dga = vec![0.0; if want2 { na.pow(4) } else { 0 }];
                let mut dgb = vec![0.0; if want2 { nb.pow(4) } else { 0 }];
                a.connection_into(&x[..na], &mut ga, want2.then_some(&mut dga[..]));
                b.connection_into(&x[na..], &mut gb, want2.then_some(&mut dgb[..]));
                gamma.iter_mut().for_each(|v| *v = 0.0);
                let place = |off: usize, m: usize, src: &[f64], dst: &mut [f64]| {
                    for k in 0..m {
                        for i in 0..m {
                            for j in 0..m {
                                dst[(off + k) * n2 + (off + i) * n + off + j] = src[k * m * m + i * m + j];
                            }
                        }
                    }
                };
                place(0, na, &ga, gamma);
                place(na, nb, &gb, gamma);
                if let Some(d) = dgamma {
                    d.iter_mut().for_each(|v| *v = 0.0);
                    let place2 = |off: usize, m: usize, src: &[f64], dst: &mut [f64]| {
                        let m3 = m * m * m;
                        for q in 0..m {
                            for k in 0..m {
                                for i in 0..m {
                                    for j in 0..m {
                                        dst[(off + q) * n3 + (off + k) * n2 + (off + i) * n + off + j] =
                                            src[q * m3 + k * m * m + i * m + j];
                                    }
                                }
                            }
                        }
                    };
                    place2(0, na, &dga, d);
                    place2(na, nb, &dgb, d);
                }
            }
            Kind::Warped(_) | Kind::Custom(_) => {
                let want2 = dgamma.is_some();
                let mut g = vec![0.0; n2];
                let mut dg = vec![0.0; n3];
                let mut ddg = vec![0.0; if want2 { n2 * n2 } else { 0 }];
                self.metric_jet_into(x, &mut g, &mut dg, want2.then_some(&mut ddg[..]));
                connection_from_jet(n, &g, &dg, want2.then_some(&ddg[..]), gamma, dgamma);
            }
        }
    }
}

/// Koszul formula in coordinates, with its derivative.
pub(crate) fn connection_from_jet(
    n: usize,
    g: &[f64],
    dg: &[f64],
    ddg: Option<&[f64]>,
    gamma: &mut [f64],
    dgamma: Option<&mut [f64]>,
) {
    let n2 = n * n;
    let n3 = n2 * n;
    let mut ginv = vec![0.0; n2];
    if !invert_small(n, g, &mut ginv) {
        gamma.iter_mut().for_each(|v| *v = f64::NAN);
        if let Some(d) = dgamma {
            d.iter_mut().for_each(|v| *v = f64::NAN);
        }
        return;
    }
    // first kind: low[l*n2 + i*n + j] = (d_i g_jl + d_j g_il - d_l g_ij)/2
    let mut low = vec![0.0; n3];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                low[l * n2 + i * n + j] =
                    0.5 * (dg[i * n2 + j * n + l] + dg[j * n2 + i * n + l] - dg[l * n2 + i * n + j]);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[k * n + l] * low[l * n2 + i * n + j];
                }
                gamma[k * n2 + i * n + j] = s;
            }
        }
    }
    if let (Some(d), Some(ddg)) = (dgamma, ddg) {
        for m in 0..n {
            // d_m ginv = -ginv (d_m g) ginv
            let mut t = vec![0.0; n2];
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        s += dg[m * n2 + a * n + c] * ginv[c * n + b];
                    }
                    t[a * n + b] = s;
                }
            }
            let mut dginv = vec![0.0; n2];
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        s += ginv[a * n + c] * t[c * n + b];
                    }
                    dginv[a * n + b] = -s;
                }
            }
            let dd = |k: usize, i: usize, j: usize| ddg[(m * n + k) * n2 + i * n + j];
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            let dlow = 0.5 * (dd(i, j, l) + dd(j, i, l) - dd(l, i, j));
                            s += dginv[k * n + l] * low[l * n2 + i * n + j] + ginv[k * n + l] * dlow;
                        }
                        d[m * n3 + k * n2 + i * n + j] = s;
                    }
                }
            }
        }
    }
}
