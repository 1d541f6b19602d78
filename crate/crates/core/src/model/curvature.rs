//! Curvature from the connection: Riemann tensor, Jacobi operator, sectional
//! and Ricci curvature.

use super::ChartManifold;
use crate::error::{GeomError, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector};

/// `Gamma^k_ij` stored as `data[k*n*n + i*n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.data[k * n * n + i * n + j]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m = m.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        m
    }
}

/// `R^l_{kij}` with `R(d_i, d_j) d_k = R^l_{kij} d_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Riemann {
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.data[((l * n + k) * n + i) * n + j]
    }
}

/// Matrix `a[l*n + i]` of the map `X -> R(X, v) v` given connection data.
pub fn jacobi_operator_into(n: usize, gamma: &[f64], dgamma: &[f64], v: &[f64], a: &mut [f64]) {
    let n2 = n * n;
    let n3 = n2 * n;
    let mut gvv = [0.0f64; 16];
    let mut gv = [0.0f64; 256];
    for p in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += gamma[p * n2 + j * n + k] * v[j] * v[k];
            }
        }
        gvv[p] = s;
    }
    for l in 0..n {
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += gamma[l * n2 + i * n + j] * v[j];
            }
            gv[l * n + i] = s;
        }
    }
    for l in 0..n {
        for i in 0..n {
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for j in 0..n {
                for k in 0..n {
                    t1 += dgamma[i * n3 + l * n2 + j * n + k] * v[j] * v[k];
                    t2 += dgamma[j * n3 + l * n2 + i * n + k] * v[j] * v[k];
                }
            }
            let mut t3 = 0.0;
            let mut t4 = 0.0;
            for p in 0..n {
                t3 += gamma[l * n2 + i * n + p] * gvv[p];
                t4 += gv[l * n + p] * gv[p * n + i];
            }
            a[l * n + i] = t1 - t2 + t3 - t4;
        }
    }
}

impl ChartManifold {
    fn connection_jet(&self, x: &DVector<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(x)?;
        let n = self.dim;
        let mut gamma = vec![0.0; n * n * n];
        let mut dgamma = vec![0.0; n * n * n * n];
        self.connection_into(x.as_slice(), &mut gamma, Some(&mut dgamma));
        Ok((gamma, dgamma))
    }

    /// Full Riemann tensor at `x`.
    pub fn riemann(&self, x: &DVector<f64>) -> Result<Riemann> {
        let (gamma, dgamma) = self.connection_jet(x)?;
        let n = self.dim;
        let n2 = n * n;
        let n3 = n2 * n;
        let ga = |k: usize, i: usize, j: usize| gamma[k * n2 + i * n + j];
        let dga = |m: usize, k: usize, i: usize, j: usize| dgamma[m * n3 + k * n2 + i * n + j];
        let mut data = vec![0.0; n2 * n2];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut s = dga(i, l, j, k) - dga(j, l, i, k);
                        for p in 0..n {
                            s += ga(l, i, p) * ga(p, j, k) - ga(l, j, p) * ga(p, i, k);
                        }
                        data[((l * n + k) * n + i) * n + j] = s;
                    }
                }
            }
        }
        Ok(Riemann { dim: n, data })
    }

    /// Coordinate matrix of `X -> R(X, v) v` at `x`.
    pub fn jacobi_operator(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (gamma, dgamma) = self.connection_jet(x)?;
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        jacobi_operator_into(n, &gamma, &dgamma, v.as_slice(), &mut a);
        Ok(DMatrix::from_row_slice(n, n, &a))
    }

    /// Matrix `<R(e_a, u) u, e_b>` for the columns `e_a` of `frame`.
    pub fn curvature_operator(&self, x: &DVector<f64>, frame: &DMatrix<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.metric(x)?;
        let a = self.jacobi_operator(x, u)?;
        Ok(frame.transpose() * &g * a * frame)
    }

    /// Sectional curvature of the plane spanned by `u` and `w` at `x`.
    pub fn sectional_curvature(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        let g = self.metric(x)?;
        let uu = linalg::inner(&g, u, u);
        let ww = linalg::inner(&g, w, w);
        let uw = linalg::inner(&g, u, w);
        let area = uu * ww - uw * uw;
        if !(area > 1e-12 * uu * ww) {
            return Err(GeomError::DegeneratePlane);
        }
        let a = self.jacobi_operator(x, u)?;
        Ok(linalg::inner(&g, &(a * w), w) / area)
    }

    /// Ricci curvature `Ric(u, u)/|u|^2`.
    pub fn ricci(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        let g = self.metric(x)?;
        let uu = linalg::inner(&g, u, u);
        if !(uu > 0.0) {
            return Err(GeomError::TrivialInitialData);
        }
        Ok(self.jacobi_operator(x, u)?.trace() / uu)
    }
}
