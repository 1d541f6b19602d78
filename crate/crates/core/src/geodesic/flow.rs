//! Joint first-order system for a geodesic, parallel vectors, Jacobi
//! tensors in a parallel frame, and the coordinate variational equation.
//!
//! State layout: `x | v | frame (n x fc, column-major) | Y (m x jc) | Y' (m x jc)
//! | dX (n x n) | dV (n x n)` with `m = n - 1`. Jacobi tensors are expressed in
//! the first `m` frame columns, which must span the normal bundle of the
//! geodesic.

use crate::model::{jacobi_operator_into, ChartManifold};
use crate::ode::System;

pub(crate) struct Layout {
    pub n: usize,
    pub fc: usize,
    pub jc: usize,
    pub variational: bool,
}

impl Layout {
    pub fn m(&self) -> usize {
        self.n - 1
    }
    pub fn frame(&self) -> usize {
        2 * self.n
    }
    pub fn y(&self) -> usize {
        self.frame() + self.n * self.fc
    }
    pub fn yp(&self) -> usize {
        self.y() + self.m() * self.jc
    }
    pub fn dx(&self) -> usize {
        self.yp() + self.m() * self.jc
    }
    pub fn dv(&self) -> usize {
        self.dx() + if self.variational { self.n * self.n } else { 0 }
    }
    pub fn len(&self) -> usize {
        self.dv() + if self.variational { self.n * self.n } else { 0 }
    }
}

pub(crate) struct Flow<'a> {
    pub model: &'a ChartManifold,
    pub layout: Layout,
    gamma: Vec<f64>,
    dgamma: Vec<f64>,
    g: Vec<f64>,
    a: Vec<f64>,
    ga: Vec<f64>,
    rm: Vec<f64>,
}

impl<'a> Flow<'a> {
    pub fn new(model: &'a ChartManifold, layout: Layout) -> Self {
        let n = layout.n;
        let m = layout.m();
        Flow {
            model,
            layout,
            gamma: vec![0.0; n * n * n],
            dgamma: vec![0.0; n.pow(4)],
            g: vec![0.0; n * n],
            a: vec![0.0; n * n],
            ga: vec![0.0; n * n],
            rm: vec![0.0; m * m],
        }
    }

    /// Matrix `<R(e_a, v) v, e_b>` (row a, column b) over the first m frame
    /// columns of state `y`. Requires the connection jet at `x` to be loaded.
    fn load_curvature(&mut self, y: &[f64]) {
        let n = self.layout.n;
        let m = self.layout.m();
        let x = &y[0..n];
        let v = &y[n..2 * n];
        jacobi_operator_into(n, &self.gamma, &self.dgamma, v, &mut self.a);
        self.model.metric_into(x, &mut self.g);
        // ga = G A
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.g[i * n + k] * self.a[k * n + j];
                }
                self.ga[i * n + j] = s;
            }
        }
        let f0 = self.layout.frame();
        for a in 0..m {
            let ea = &y[f0 + a * n..f0 + (a + 1) * n];
            for b in 0..m {
                let eb = &y[f0 + b * n..f0 + (b + 1) * n];
                let mut s = 0.0;
                for i in 0..n {
                    let mut t = 0.0;
                    for j in 0..n {
                        t += self.ga[i * n + j] * ea[j];
                    }
                    s += eb[i] * t;
                }
                self.rm[a * m + b] = s;
            }
        }
    }
}

impl<'a> System for Flow<'a> {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn rhs(&mut self, y: &[f64], dy: &mut [f64]) -> bool {
        let lay = &self.layout;
        let n = lay.n;
        let n2 = n * n;
        let n3 = n2 * n;
        let x = &y[0..n];
        if !self.model.contains(x) {
            return false;
        }
        let need_jet = lay.jc > 0 || lay.variational;
        self.model.connection_into(x, &mut self.gamma, if need_jet { Some(&mut self.dgamma) } else { None });
        let v = &y[n..2 * n];
        let gamma = &self.gamma;
        // Gamma_v[k*n + j] = Gamma^k_ij v^i
        let mut gv = [0.0f64; 256];
        for k in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += gamma[k * n2 + i * n + j] * v[i];
                }
                gv[k * n + j] = s;
            }
        }
        for k in 0..n {
            dy[k] = v[k];
            let mut s = 0.0;
            for j in 0..n {
                s += gv[k * n + j] * v[j];
            }
            dy[n + k] = -s;
        }
        let f0 = lay.frame();
        for c in 0..lay.fc {
            let e = &y[f0 + c * n..f0 + (c + 1) * n];
            for k in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += gv[k * n + j] * e[j];
                }
                dy[f0 + c * n + k] = -s;
            }
        }
        if lay.jc > 0 {
            let m = lay.m();
            let (y0, yp0, jc) = (lay.y(), lay.yp(), lay.jc);
            self.load_curvature(y);
            let rm = &self.rm;
            for c in 0..jc {
                for b in 0..m {
                    dy[y0 + c * m + b] = y[yp0 + c * m + b];
                    let mut s = 0.0;
                    for a in 0..m {
                        s += rm[a * m + b] * y[y0 + c * m + a];
                    }
                    dy[yp0 + c * m + b] = -s;
                }
            }
        }
        let lay = &self.layout;
        if lay.variational {
            let (dx0, dv0) = (lay.dx(), lay.dv());
            let dgamma = &self.dgamma;
            // d/dv: -d_m Gamma^k_ij dX^m v^i v^j - 2 Gamma^k_ij v^i dV^j
            let mut dgvv = [0.0f64; 256]; // dgvv[m*n + k] = d_m Gamma^k_ij v^i v^j
            for mm in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for i in 0..n {
                        let mut t = 0.0;
                        for j in 0..n {
                            t += dgamma[mm * n3 + k * n2 + i * n + j] * v[j];
                        }
                        s += t * v[i];
                    }
                    dgvv[mm * n + k] = s;
                }
            }
            for c in 0..n {
                let dxc = &y[dx0 + c * n..dx0 + (c + 1) * n];
                let dvc = &y[dv0 + c * n..dv0 + (c + 1) * n];
                for k in 0..n {
                    dy[dx0 + c * n + k] = dvc[k];
                    let mut s = 0.0;
                    for mm in 0..n {
                        s += dgvv[mm * n + k] * dxc[mm] + 2.0 * gv[k * n + mm] * dvc[mm];
                    }
                    dy[dv0 + c * n + k] = -s;
                }
            }
        }
        dy.iter().all(|d| d.is_finite())
    }
}
