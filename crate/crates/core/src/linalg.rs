//! Thin dense linear-algebra layer over `faer`.
//!
//! All products run sequentially so that results are bit-reproducible
//! regardless of the worker count used by the experiment harness.

use faer::linalg::matmul::matmul as faer_matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::{Error, Result};

/// Eigendecomposition `A = Q diag(values) Qᵀ` of a symmetric matrix, with
/// eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl SymmetricEigen {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::LinAlg(format!(
                "eigendecomposition of a non-square {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::LinAlg(format!("symmetric eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let values = (0..a.nrows()).map(|i| s[i]).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Ascending eigenvalues.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `Qᵀ b`.
    pub fn project(&self, b: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|k| dot(self.vectors.col_as_slice(k), b))
            .collect()
    }

    /// `Q c`.
    pub fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                axpy(c, self.vectors.col_as_slice(k), &mut out);
            }
        }
        out
    }

    /// `Q diag(f(values)) Qᵀ b`.
    pub fn apply(&self, b: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let proj: Vec<f64> = self
            .project(b)
            .into_iter()
            .zip(&self.values)
            .map(|(p, &e)| p * f(e))
            .collect();
        self.expand(&proj)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `a · b`.
pub fn matmul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    faer_matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// `aᵀ · b`.
pub fn matmul_tn(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    matmul(a.transpose(), b)
}

/// `a · x` for a column-major matrix.
pub fn mat_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len(), "mat_vec dimension mismatch");
    let mut out = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * xj;
        }
    }
    out
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky.
pub fn cholesky_solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("cholesky factorization failed: {e:?}")))?;
    Ok(llt.solve(b))
}

pub fn column(values: &[f64]) -> Mat<f64> {
    Mat::from_fn(values.len(), 1, |i, _| values[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => 4.0,
            (1, 1) => 3.0,
            (2, 2) => 2.0,
            (0, 1) | (1, 0) => 1.0,
            (1, 2) | (2, 1) => 0.5,
            _ => 0.0,
        });
        let eig = SymmetricEigen::new(a.as_ref()).unwrap();
        assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
        let b = [1.0, -2.0, 0.5];
        let ab = mat_vec(a.as_ref(), &b);
        let via_eig = eig.apply(&b, |e| e);
        for (x, y) in ab.iter().zip(&via_eig) {
            assert!((x - y).abs() < 1e-12);
        }
        let sol = cholesky_solve(a.as_ref(), column(&ab).as_ref()).unwrap();
        for i in 0..3 {
            assert!((sol[(i, 0)] - b[i]).abs() < 1e-12);
        }
    }
}
