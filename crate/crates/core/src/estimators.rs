//! Closed-form kernel ridge regression and minimum-norm interpolation.
//!
//! `f̂_λ(x) = 𝕂(x, X) (𝕂(X, X) + nλ I)^{-1} Y`, and at `λ = 0` the
//! interpolant `𝕂(x, X) 𝕂(X, X)^{-1} Y`. Systems are solved through the
//! symmetric eigendecomposition of `𝕂(X, X)`, which is cached on the Gram
//! matrix and reused across ridge levels. No jitter is ever added at `λ = 0`.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::geometry::{PointSet, QuadratureGrid};
use crate::kernels::{gram, GramMatrix, KernelSpec};
use crate::linalg::{dot, mat_vec};
use crate::truth::Truth;
use crate::{Error, Result};

/// At `λ = 0` the smallest eigenvalue of `𝕂(X, X)` must exceed `n` times this.
pub const INTERPOLATION_EIG_FLOOR: f64 = 1e-12;
const RIDGE_RESIDUAL_TOL: f64 = 1e-8;
const INTERP_RESIDUAL_TOL: f64 = 1e-6;
const PREDICT_CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    /// Largest over smallest eigenvalue of the shifted system.
    pub condition: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Negative round-off eigenvalues set to zero (ridge path only).
    pub clipped: usize,
    /// `‖(𝕂 + nλ) c - Y‖ / ‖Y‖` after the solve.
    pub relative_residual: f64,
    /// Whether an iterative-refinement step was taken.
    pub refined: bool,
}

/// A fitted estimator `f̂(x) = 𝕂(x, X) · dual`.
#[derive(Clone, Debug)]
pub struct FitResult {
    gram: Arc<GramMatrix>,
    targets: Vec<f64>,
    dual: Vec<f64>,
    lambda: f64,
    diagnostics: SolveDiagnostics,
}

#[derive(Serialize)]
struct FitExport<'a> {
    kernel: &'a KernelSpec,
    n: usize,
    lambda: f64,
    dual: &'a [f64],
    diagnostics: &'a SolveDiagnostics,
}

impl FitResult {
    pub fn spec(&self) -> &KernelSpec {
        self.gram.spec()
    }

    pub fn points(&self) -> &PointSet {
        self.gram.points()
    }

    pub fn gram(&self) -> &Arc<GramMatrix> {
        &self.gram
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn dual(&self) -> &[f64] {
        &self.dual
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn diagnostics(&self) -> &SolveDiagnostics {
        &self.diagnostics
    }

    /// `f̂` at the training inputs, `𝕂(X, X) · dual`.
    pub fn fitted_values(&self) -> Vec<f64> {
        mat_vec(self.gram.raw().as_ref(), &self.dual)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FitExport {
            kernel: self.spec(),
            n: self.dual.len(),
            lambda: self.lambda,
            dual: &self.dual,
            diagnostics: &self.diagnostics,
        })?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Fits KRR (`lambda > 0`) or the minimum-norm interpolant (`lambda = 0`).
pub fn fit(spec: &KernelSpec, x: &PointSet, y: &[f64], lambda: f64) -> Result<FitResult> {
    fit_gram(Arc::new(gram(spec, x)?), y, lambda)
}

/// Same as [`fit`] on an already assembled (and possibly factorized) Gram
/// matrix.
pub fn fit_gram(gram: Arc<GramMatrix>, y: &[f64], lambda: f64) -> Result<FitResult> {
    let n = gram.n();
    if y.len() != n {
        return Err(Error::config(format!("{} targets for {n} inputs", y.len())));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config(format!("ridge level must be finite and >= 0, got {lambda}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("targets must be finite"));
    }
    let eig = gram.eigen()?;
    let shift = n as f64 * lambda;
    let values = eig.values();
    let min = eig.min();
    let max = eig.max();
    let mut clipped = 0;
    let shifted: Vec<f64> = if lambda == 0.0 {
        let threshold = n as f64 * INTERPOLATION_EIG_FLOOR;
        if !(min > threshold) {
            return Err(Error::InterpolationInfeasible {
                eigenvalue: min,
                threshold,
            });
        }
        values.to_vec()
    } else {
        values
            .iter()
            .map(|&e| {
                if e < 0.0 {
                    clipped += 1;
                    shift
                } else {
                    e + shift
                }
            })
            .collect()
    };
    let inv = |c: Vec<f64>| -> Vec<f64> {
        c.into_iter().zip(&shifted).map(|(v, s)| v / s).collect()
    };
    let mut dual = eig.expand(&inv(eig.project(y)));

    let ynorm = dot(y, y).sqrt();
    let residual = |dual: &[f64]| -> Vec<f64> {
        let kc = mat_vec(gram.raw().as_ref(), dual);
        y.iter()
            .zip(kc)
            .zip(dual)
            .map(|((yi, kci), ci)| yi - kci - shift * ci)
            .collect()
    };
    let rel = |r: &[f64]| if ynorm > 0.0 { dot(r, r).sqrt() / ynorm } else { 0.0 };
    let tol = if lambda == 0.0 {
        INTERP_RESIDUAL_TOL
    } else {
        RIDGE_RESIDUAL_TOL
    };

    let mut r = residual(&dual);
    let mut relative_residual = rel(&r);
    let mut refined = false;
    if relative_residual > 1e-3 * tol {
        // one step of iterative refinement with the same factorization
        let correction = eig.expand(&inv(eig.project(&r)));
        let candidate: Vec<f64> = dual.iter().zip(&correction).map(|(a, b)| a + b).collect();
        let r2 = residual(&candidate);
        if rel(&r2) < relative_residual {
            dual = candidate;
            r = r2;
            relative_residual = rel(&r);
            refined = true;
        }
    }
    if relative_residual > tol {
        return Err(Error::Fit(format!(
            "relative residual {relative_residual:e} exceeds {tol:e} (λ = {lambda:e}, min eigenvalue {min:e})"
        )));
    }
    let smallest = shifted.iter().copied().fold(f64::INFINITY, f64::min);
    let diagnostics = SolveDiagnostics {
        condition: shifted.iter().copied().fold(0.0, f64::max) / smallest,
        min_eigenvalue: min,
        max_eigenvalue: max,
        clipped,
        relative_residual,
        refined,
    };
    Ok(FitResult {
        gram,
        targets: y.to_vec(),
        dual,
        lambda,
        diagnostics,
    })
}

/// Evaluates `f̂` at `points`.
pub fn predict(fit: &FitResult, points: &PointSet) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len());
    let mut chunk = PointSet::empty(points.dim());
    for start in (0..points.len()).step_by(PREDICT_CHUNK) {
        chunk.clear();
        for i in start..(start + PREDICT_CHUNK).min(points.len()) {
            chunk.push(points.point(i));
        }
        let cross = fit.spec().cross_matrix(&chunk, fit.points())?;
        out.extend(mat_vec(cross.as_ref(), &fit.dual));
    }
    Ok(out)
}

/// `Σ_j w_j (a_j - b_j)²`: squared `L²(μ)` distance of two functions given
/// by their values on the grid nodes.
pub fn l2_distance_sq(a: &[f64], b: &[f64], grid: &QuadratureGrid) -> f64 {
    grid.weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .sum()
}

/// `‖f̂ - f*‖²_{L²(μ)}` by quadrature on `grid`.
pub fn excess_risk(fit: &FitResult, truth: &Truth, grid: &QuadratureGrid) -> Result<f64> {
    let pred = predict(fit, grid.nodes())?;
    Ok(l2_distance_sq(&pred, &truth.eval_grid(grid), grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_iid, Domain};

    #[test]
    fn single_point_ridge() {
        let x = PointSet::from_rows(&[vec![0.3]]).unwrap();
        let f = fit(&KernelSpec::constant(1.0), &x, &[1.0], 1.0).unwrap();
        assert!((predict(&f, &x).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_kernel_two_points() {
        let x = PointSet::from_rows(&[vec![0.1], vec![0.7]]).unwrap();
        let k = KernelSpec::constant(1.0);
        assert!(matches!(
            fit(&k, &x, &[1.0, 1.0], 0.0),
            Err(Error::InterpolationInfeasible { .. })
        ));
        let f = fit(&k, &x, &[1.0, 1.0], 0.5).unwrap();
        for c in f.dual() {
            assert!((c - 1.0 / 3.0).abs() < 1e-14);
        }
        let p = predict(&f, &PointSet::from_rows(&[vec![-2.0]]).unwrap()).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn interpolates_and_exports() {
        let dom = Domain::Torus { d: 1 };
        let x = sample_iid(&dom, 40, 9).unwrap();
        let y: Vec<f64> = x.iter().map(|p| p[0].sin() + 0.2).collect();
        let f = fit(&KernelSpec::laplace(1.0), &x, &y, 0.0).unwrap();
        let back = predict(&f, &x).unwrap();
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
        let json: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(json["n"], 40);
        assert_eq!(json["dual"].as_array().unwrap().len(), 40);
    }
}
