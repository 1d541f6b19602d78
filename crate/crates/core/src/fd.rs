//! Finite-difference covariant Hessians and Laplacians of scalar functions.

use crate::error::{GeomError, Result};
use crate::linalg;
use crate::model::ChartManifold;
use nalgebra::{DMatrix, DVector};

/// Finite-difference covariant Hessian with a Richardson error estimate.
#[derive(Debug, Clone)]
pub struct FdHessian {
    /// `H_ij = d_i d_j f - Gamma^k_ij d_k f` in chart coordinates.
    pub hessian: DMatrix<f64>,
    /// Coordinate differential `d_i f`.
    pub differential: DVector<f64>,
    /// Largest entry of the difference between the two step sizes.
    pub error: f64,
}

impl FdHessian {
    pub fn laplacian(&self, model: &ChartManifold, x: &DVector<f64>) -> Result<f64> {
        linalg::metric_trace(&model.metric(x)?, &self.hessian)
    }

    /// Gradient vector `G^{-1} df`.
    pub fn gradient(&self, model: &ChartManifold, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = model.metric(x)?;
        g.lu()
            .solve(&self.differential)
            .ok_or_else(|| GeomError::Precondition("metric not invertible".into()))
    }
}

fn central<F>(x: &DVector<f64>, steps: &[f64], f: &mut F) -> Result<(DMatrix<f64>, DVector<f64>)>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let n = x.len();
    let f0 = f(x)?;
    let mut hess = DMatrix::zeros(n, n);
    let mut grad = DVector::zeros(n);
    let shifted = |pairs: &[(usize, f64)]| {
        let mut y = x.clone();
        for &(i, s) in pairs {
            y[i] += s;
        }
        y
    };
    for i in 0..n {
        let d = steps[i];
        let fp = f(&shifted(&[(i, d)]))?;
        let fm = f(&shifted(&[(i, -d)]))?;
        grad[i] = (fp - fm) / (2.0 * d);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (d * d);
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (steps[i], steps[j]);
            let fpp = f(&shifted(&[(i, a), (j, b)]))?;
            let fpm = f(&shifted(&[(i, a), (j, -b)]))?;
            let fmp = f(&shifted(&[(i, -a), (j, b)]))?;
            let fmm = f(&shifted(&[(i, -a), (j, -b)]))?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * a * b);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok((hess, grad))
}

/// Covariant Hessian of `f` at `x` by central differences with coordinate
/// steps `h / sqrt(g_ii)`, combined over `h` and `h/2` by Richardson
/// extrapolation.
pub fn covariant_hessian<F>(model: &ChartManifold, x: &DVector<f64>, h: f64, mut f: F) -> Result<FdHessian>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(GeomError::Precondition("difference step must be positive".into()));
    }
    let g = model.metric(x)?;
    let n = model.dim();
    let steps: Vec<f64> = (0..n).map(|i| h / g[(i, i)].sqrt()).collect();
    let half: Vec<f64> = steps.iter().map(|s| s / 2.0).collect();
    for (i, s) in steps.iter().enumerate() {
        for sign in [-1.0, 1.0] {
            let mut y = x.clone();
            y[i] += sign * s;
            if !model.contains(y.as_slice()) {
                return Err(GeomError::Domain("difference stencil leaves the chart".into()));
            }
        }
    }
    let (h1, g1) = central(x, &steps, &mut f)?;
    let (h2, g2) = central(x, &half, &mut f)?;
    let hess = (&h2 * 4.0 - &h1) / 3.0;
    let grad = (&g2 * 4.0 - &g1) / 3.0;
    let error = (&h2 - &h1).abs().max();
    let gamma = model.christoffel(x)?;
    let mut cov = hess;
    for i in 0..n {
        for j in 0..n {
            let mut c = 0.0;
            for k in 0..n {
                c += gamma.get(k, i, j) * grad[k];
            }
            cov[(i, j)] -= c;
        }
    }
    Ok(FdHessian { hessian: linalg::sym(&cov), differential: grad, error })
}

/// Laplace-Beltrami operator of `f` at `x`, the metric trace of the
/// covariant Hessian, with its error estimate.
pub fn laplacian<F>(model: &ChartManifold, x: &DVector<f64>, h: f64, f: F) -> Result<(f64, f64)>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let fd = covariant_hessian(model, x, h, f)?;
    let g = model.metric(x)?;
    let ginv = g.try_inverse().ok_or_else(|| GeomError::Precondition("metric not invertible".into()))?;
    let lap = (&ginv * &fd.hessian).trace();
    let err = fd.error * ginv.abs().sum();
    Ok((lap, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::registry;

    #[test]
    fn flat_quadratic_hessian() {
        let m = registry::euclidean(2).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let fd = covariant_hessian(&m, &x, 1e-2, |y| Ok(y[0] * y[0] + 3.0 * y[0] * y[1] - y[1] * y[1])).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 3.0, -2.0]);
        assert!((fd.hessian - want).abs().max() < 1e-9);
        assert!((fd.differential[0] - (0.6 - 2.1)).abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_distance_laplacian() {
        // Delta r = coth r on H^2
        let m = registry::hyperbolic_ball(2).unwrap();
        let o = DVector::zeros(2);
        let x = DVector::from_vec(vec![0.3, 0.2]);
        let r = m.distance_oracle(&o, &x).unwrap();
        let (lap, err) = laplacian(&m, &x, 1e-2, |y| Ok(m.distance_oracle(&o, y).unwrap())).unwrap();
        assert!((lap - 1.0 / r.tanh()).abs() < 1e-6, "{lap} {err}");
    }

    #[test]
    fn stencil_outside_chart_is_domain_error() {
        let m = registry::hyperbolic_halfspace(2).unwrap();
        let x = DVector::from_vec(vec![0.0, 0.5]);
        let r = covariant_hessian(&m, &x, 2.0, |_| Ok(0.0));
        assert!(matches!(r, Err(GeomError::Domain(_))));
    }
}
