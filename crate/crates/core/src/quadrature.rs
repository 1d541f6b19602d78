//! Angular rules, one-dimensional quadrature and low-discrepancy sequences.

use nalgebra::DVector;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| w[i]).collect())
}

/// Quadrature on the unit sphere of R^n: Euclidean unit directions with
/// weights summing to the sphere's area.
#[derive(Debug, Clone)]
pub struct AngularRule {
    pub directions: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl AngularRule {
    /// Equispaced rule on the circle (spectrally accurate for periodic data).
    pub fn circle(points: usize) -> Self {
        let points = points.max(1);
        let w = 2.0 * PI / points as f64;
        let directions = (0..points)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / points as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect();
        AngularRule { directions, weights: vec![w; points] }
    }

    /// Rule on the sphere of R^dim: Gauss-Legendre in each polar angle and an
    /// equispaced circle of `azimuth` points at the innermost level.
    pub fn sphere(dim: usize, polar: usize, azimuth: usize) -> Self {
        match dim {
            0 => AngularRule { directions: vec![], weights: vec![] },
            1 => AngularRule {
                directions: vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])],
                weights: vec![1.0, 1.0],
            },
            2 => Self::circle(azimuth),
            3 => {
                let (z, wz) = gauss_legendre(polar);
                let circ = Self::circle(azimuth);
                let mut directions = Vec::new();
                let mut weights = Vec::new();
                for (zi, wi) in z.iter().zip(&wz) {
                    let s = (1.0 - zi * zi).sqrt();
                    for (d, wc) in circ.directions.iter().zip(&circ.weights) {
                        directions.push(DVector::from_vec(vec![s * d[0], s * d[1], *zi]));
                        weights.push(wi * wc);
                    }
                }
                AngularRule { directions, weights }
            }
            _ => {
                // polar coordinate z = cos(phi) with weight (1 - z^2)^((dim-3)/2)
                let inner = Self::sphere(dim - 1, polar, azimuth);
                let (z, wz): (Vec<f64>, Vec<f64>) = if dim == 4 {
                    // Gauss-Chebyshev of the second kind
                    (1..=polar)
                        .map(|i| {
                            let t = PI * i as f64 / (polar as f64 + 1.0);
                            (t.cos(), PI / (polar as f64 + 1.0) * t.sin().powi(2))
                        })
                        .unzip()
                } else {
                    let (x, w) = gauss_legendre(polar);
                    let w = x.iter().zip(&w).map(|(x, w)| w * (1.0 - x * x).powf((dim as f64 - 3.0) / 2.0)).collect();
                    (x, w)
                };
                let mut directions = Vec::new();
                let mut weights = Vec::new();
                for (zi, wi) in z.iter().zip(&wz) {
                    let s = (1.0 - zi * zi).sqrt();
                    for (d, wd) in inner.directions.iter().zip(&inner.weights) {
                        let mut v = DVector::zeros(dim);
                        for k in 0..dim - 1 {
                            v[k] = s * d[k];
                        }
                        v[dim - 1] = *zi;
                        directions.push(v);
                        weights.push(wi * wd);
                    }
                }
                AngularRule { directions, weights }
            }
        }
    }

    /// Rule on the unit sphere of `R^2 x R^2` in Hopf coordinates
    /// `(cos(phi) a, sin(phi) b)`, `a, b` on circles. The area element
    /// `cos(phi) sin(phi) dphi` is uniform in `z = cos(2 phi)`, integrated by
    /// Gauss-Legendre with `polar` nodes.
    pub fn hopf(polar: usize, azimuth: usize) -> Self {
        let (z, wz) = gauss_legendre(polar);
        let circ = Self::circle(azimuth);
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        for (zi, wi) in z.iter().zip(&wz) {
            let (c, s) = (((1.0 + zi) / 2.0).sqrt(), ((1.0 - zi) / 2.0).sqrt());
            for (a, wa) in circ.directions.iter().zip(&circ.weights) {
                for (b, wb) in circ.directions.iter().zip(&circ.weights) {
                    directions.push(DVector::from_vec(vec![c * a[0], c * a[1], s * b[0], s * b[1]]));
                    weights.push(0.25 * wi * wa * wb);
                }
            }
        }
        AngularRule { directions, weights }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// Composite Simpson rule on uniformly spaced samples; a final 3/8 panel is
/// used when the number of intervals is odd.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    if m == 2 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let intervals = m - 1;
    let (even_end, tail) = if intervals % 2 == 0 || intervals < 3 {
        (intervals, false)
    } else {
        (intervals - 3, true)
    };
    let mut s = 0.0;
    let mut k = 0;
    while k + 2 <= even_end {
        s += h / 3.0 * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
        k += 2;
    }
    if tail {
        let b = even_end;
        s += 3.0 * h / 8.0 * (values[b] + 3.0 * values[b + 1] + 3.0 * values[b + 2] + values[b + 3]);
    }
    s
}

/// Cumulative integrals of uniformly spaced samples (trapezoid with Simpson
/// correction on pairs), `out[k] = int_0^{kh}`.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for k in 1..values.len() {
        out[k] = if k >= 2 && k % 2 == 0 {
            out[k - 2] + h / 3.0 * (values[k - 2] + 4.0 * values[k - 1] + values[k])
        } else if k >= 2 {
            // odd index: step back from the even neighbour with a quadratic fit
            out[k - 1] + h / 12.0 * (-values[k - 2] + 8.0 * values[k - 1] + 5.0 * values[k])
        } else {
            h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values.get(2).copied().unwrap_or(values[1]))
        };
    }
    out
}

/// Radical inverse of `index` in base `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// `k`-th point of the Halton sequence in `[0,1)^dim` (index offset by one).
pub fn halton_point(k: usize, dim: usize) -> Vec<f64> {
    (0..dim).map(|d| halton(k as u64 + 1, PRIMES[d % PRIMES.len()])).collect()
}

/// Deterministic, well-spread unit directions in R^dim.
pub fn sphere_points(dim: usize, count: usize) -> Vec<DVector<f64>> {
    match dim {
        1 => (0..count)
            .map(|k| DVector::from_vec(vec![if k % 2 == 0 { 1.0 } else { -1.0 }]))
            .collect(),
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let s = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    DVector::from_vec(vec![s * a.cos(), s * a.sin(), z])
                })
                .collect()
        }
        _ => (0..count)
            .map(|k| {
                let h = halton_point(k, dim + dim % 2);
                let mut v = DVector::zeros(dim);
                for i in 0..dim {
                    let pair = i / 2;
                    let u1 = h[2 * pair].max(1e-300);
                    let u2 = h[2 * pair + 1];
                    let rad = (-2.0 * u1.ln()).sqrt();
                    let ang = 2.0 * PI * u2;
                    v[i] = if i % 2 == 0 { rad * ang.cos() } else { rad * ang.sin() };
                }
                let n = v.norm();
                v / n
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_rules_have_correct_area() {
        for dim in 2..=5 {
            let r = AngularRule::sphere(dim, 8, 12);
            assert!((r.total_weight() - sphere_area(dim)).abs() < 1e-10, "dim {dim}");
            for d in &r.directions {
                assert!((d.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_rule_second_moment() {
        // int x_1^2 over S^{n-1} = |S^{n-1}| / n
        for dim in 3..=4 {
            let r = AngularRule::sphere(dim, 8, 12);
            let m: f64 = r.directions.iter().zip(&r.weights).map(|(d, w)| w * d[0] * d[0]).sum();
            assert!((m - sphere_area(dim) / dim as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn hopf_rule_moments() {
        let r = AngularRule::hopf(12, 8);
        assert!((r.total_weight() - sphere_area(4)).abs() < 1e-12);
        let m: f64 = r.directions.iter().zip(&r.weights).map(|(d, w)| w * d[2] * d[2]).sum();
        assert!((m - sphere_area(4) / 4.0).abs() < 1e-12);
        assert!(r.directions.iter().all(|d| (d.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn simpson_odd_and_even() {
        for m in [5usize, 6, 9, 10] {
            let h = 1.0 / (m - 1) as f64;
            let v: Vec<f64> = (0..m).map(|k| (k as f64 * h).powi(3)).collect();
            assert!((simpson(&v, h) - 0.25).abs() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn cumulative_matches_quadratics() {
        let h = 0.1;
        let v: Vec<f64> = (0..11).map(|k| (k as f64 * h).powi(2)).collect();
        let c = cumulative(&v, h);
        for (k, ck) in c.iter().enumerate() {
            let x = k as f64 * h;
            assert!((ck - x.powi(3) / 3.0).abs() < 1e-14);
        }
    }
}
