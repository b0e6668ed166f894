use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::matrix::symmetrize;

/// Eigenvalues in descending order with unit eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().cloned().collect()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let l = DMatrix::from_diagonal(&DVector::from_vec(self.values.clone()));
        &self.vectors * l * self.vectors.transpose()
    }
}

/// Eigendecomposition of a symmetric matrix through its SVD.
///
/// Singular values are signed by `uᵀv` so indefinite matrices keep negative
/// eigenvalues. Each eigenvector is flipped so its largest-magnitude component
/// is positive.
pub fn eigendecompose(s: &DMatrix<f64>) -> Result<Eigensystem> {
    if !s.is_square() {
        return Err(Error::Matrix(format!("{}x{} matrix is not square", s.nrows(), s.ncols())));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Matrix("matrix has non-finite entries".into()));
    }
    let n = s.nrows();
    let a = symmetrize(s);
    let svd = a.clone().try_svd(true, true, f64::EPSILON, 10_000).ok_or_else(|| Error::Matrix("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|k| {
            let v: DVector<f64> = vt.row(k).transpose();
            let sign = if u.column(k).dot(&v) < 0.0 { -1.0 } else { 1.0 };
            (sign * svd.singular_values[k], v)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, (lambda, mut v)) in pairs.into_iter().enumerate() {
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
        vectors.set_column(k, &v);
        values.push(lambda);
    }
    Ok(Eigensystem { values, vectors })
}
