//! Small dense linear-algebra helpers relative to a metric.

use crate::error::{GeomError, Result};
use nalgebra::{DMatrix, DVector};

pub fn inner(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += g[(i, j)] * a[i] * b[j];
        }
    }
    s
}

pub fn norm(g: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    inner(g, a, a).max(0.0).sqrt()
}

pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormalises `vecs` in order (modified Gram-Schmidt, two passes).
pub fn gram_schmidt(g: &DMatrix<f64>, vecs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vecs.len());
    for v in vecs {
        let scale = norm(g, v);
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &out {
                let c = inner(g, &w, e);
                w -= e * c;
            }
        }
        let nw = norm(g, &w);
        if !(nw > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
            return Err(GeomError::DegeneratePlane);
        }
        out.push(w / nw);
    }
    Ok(out)
}

/// Orthonormal frame (as columns) completing the unit direction of `u`,
/// returned without `u` itself: an n x (n-1) matrix.
pub fn complement_frame(g: &DMatrix<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = u.len();
    let nu = norm(g, u);
    if !(nu > 0.0) {
        return Err(GeomError::TrivialInitialData);
    }
    let mut basis = vec![u / nu];
    // Add coordinate axes ordered by how transverse they are to u.
    let mut axes: Vec<usize> = (0..n).collect();
    let gu = g * (u / nu);
    axes.sort_by(|&a, &b| {
        let ca = gu[a].abs() / g[(a, a)].sqrt();
        let cb = gu[b].abs() / g[(b, b)].sqrt();
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    for &k in &axes {
        if basis.len() == n {
            break;
        }
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        if let Ok(mut gs) = gram_schmidt(g, &[basis.clone(), vec![e]].concat()) {
            basis.push(gs.pop().unwrap());
        }
    }
    if basis.len() != n {
        return Err(GeomError::DegeneratePlane);
    }
    Ok(DMatrix::from_columns(&basis[1..]))
}

/// Orthonormal basis of the whole tangent space, as columns.
pub fn orthonormal_basis(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let axes: Vec<DVector<f64>> = (0..n)
        .map(|k| {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            e
        })
        .collect();
    Ok(DMatrix::from_columns(&gram_schmidt(g, &axes)?))
}

/// Eigenvalues (ascending) of the symmetric form `h` relative to the metric `g`.
pub fn metric_eigenvalues(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeomError::Precondition("metric not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Precondition("metric not invertible".into()))?;
    let m = sym(&(&linv * sym(h) * linv.transpose()));
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = sym(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Trace of `g^{-1} h`.
pub fn metric_trace(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Precondition("metric not invertible".into()))?;
    Ok((ginv * h).trace())
}

/// Smallest singular value.
pub fn smallest_singular(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

/// Smallest singular value divided by the largest.
pub fn condition_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_frame_is_orthonormal() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 3.0]);
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let f = complement_frame(&g, &u).unwrap();
        let gram = f.transpose() * &g * &f;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
        let cross = f.transpose() * &g * &u;
        assert!(cross.norm() < 1e-12);
    }

    #[test]
    fn metric_eigenvalues_of_metric_are_one() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let ev = metric_eigenvalues(&g, &g).unwrap();
        assert!(ev.iter().all(|e| (e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dependent_vectors_rejected() {
        let g = DMatrix::identity(2, 2);
        let a = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(gram_schmidt(&g, &[a.clone(), a * 2.0]), Err(GeomError::DegeneratePlane));
    }
}
