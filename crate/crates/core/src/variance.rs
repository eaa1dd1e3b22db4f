//! The variance term
//! `V(λ) = σ²/n² ∫ 𝕂(x, X) (K + λ)^{-2} 𝕂(X, x) dμ(x)`, `K = 𝕂(X, X)/n`,
//! integrated over an independent grid (never the training inputs).
//!
//! With `K = Q diag(e) Qᵀ` and `z(x) = Qᵀ 𝕂(X, x)/n`, the integrand is
//! `Σ_k z_k(x)² / (e_k + λ)²`. Integrating `z_k²` once gives weights `S_k`
//! and every further ridge level costs `O(n)`:
//! `V(λ) = σ² Σ_k S_k / (e_k + λ)²`.

use std::path::Path;

use faer::Mat;
use serde::Serialize;

use crate::estimators::INTERPOLATION_EIG_FLOOR;
use crate::geometry::{GridKind, PointSet, QuadratureGrid};
use crate::kernels::GramMatrix;
use crate::linalg::{cholesky_solve, matmul_tn};
use crate::spectral::{effective_dimension, SpectrumModel};
use crate::stats::{loglog_fit, LinearFit};
use crate::{Error, Result};

/// Relative Monte Carlo standard error above which a value is flagged.
pub const MC_STDERR_WARNING: f64 = 0.02;
/// Relative slack of the post-hoc monotonicity check.
pub const MONOTONICITY_TOL: f64 = 1e-10;
const GRID_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceValue {
    pub lambda: f64,
    pub variance: f64,
    /// Monte Carlo standard error (Monte Carlo grids only).
    pub stderr: Option<f64>,
    /// Relative standard error above 2%.
    pub warning: bool,
}

/// Precomputed projections for fast ridge sweeps on one Gram matrix.
#[derive(Clone, Debug)]
pub struct VarianceSweep {
    n: usize,
    /// Eigenvalues of `K = 𝕂/n`, ascending.
    eig: Vec<f64>,
    /// `S_k = Σ_j w_j z_k(x_j)²`.
    s: Vec<f64>,
    /// `z_k(x_j)²` per node, kept for Monte Carlo error bars.
    z_sq: Option<Vec<Vec<f64>>>,
    kind: GridKind,
    nodes: usize,
}

impl VarianceSweep {
    pub fn new(gram: &GramMatrix, grid: &QuadratureGrid) -> Result<Self> {
        let n = gram.n();
        let eigen = gram.eigen()?;
        let q = eigen.vectors();
        let nf = n as f64;
        let keep_nodes = grid.kind() == GridKind::MonteCarlo;
        let mut s = vec![0.0; n];
        let mut z_sq = keep_nodes.then(|| Vec::with_capacity(grid.len()));
        let nodes = grid.nodes();
        let weights = grid.weights();
        let mut chunk = PointSet::empty(nodes.dim());
        for start in (0..grid.len()).step_by(GRID_CHUNK) {
            let end = (start + GRID_CHUNK).min(grid.len());
            chunk.clear();
            for j in start..end {
                chunk.push(nodes.point(j));
            }
            let cross = gram.spec().cross_matrix(gram.points(), &chunk)?;
            let z: Mat<f64> = matmul_tn(q, cross.as_ref());
            for (c, j) in (start..end).enumerate() {
                let col = z.col_as_slice(c);
                let w = weights[j];
                let sq: Vec<f64> = col.iter().map(|v| (v / nf) * (v / nf)).collect();
                for (sk, v) in s.iter_mut().zip(&sq) {
                    *sk += w * v;
                }
                if let Some(zs) = z_sq.as_mut() {
                    zs.push(sq);
                }
            }
        }
        Ok(Self {
            n,
            eig: eigen.values().iter().map(|v| v / nf).collect(),
            s,
            z_sq,
            kind: grid.kind(),
            nodes: grid.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn shifted(&self, lambda: f64) -> Result<Vec<f64>> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::config(format!("ridge level must be finite and >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            // same feasibility rule as the interpolation fit, stated for K = 𝕂/n
            let min = self.eig.first().copied().unwrap_or(0.0);
            let threshold = INTERPOLATION_EIG_FLOOR;
            if !(min > threshold) {
                return Err(Error::InterpolationInfeasible {
                    eigenvalue: min * self.n as f64,
                    threshold: threshold * self.n as f64,
                });
            }
        }
        Ok(self.eig.iter().map(|&e| e.max(0.0) + lambda).collect())
    }

    pub fn value(&self, sigma2: f64, lambda: f64) -> Result<VarianceValue> {
        if !(sigma2 >= 0.0) {
            return Err(Error::config(format!("noise variance must be >= 0, got {sigma2}")));
        }
        let shifted = self.shifted(lambda)?;
        let inv_sq: Vec<f64> = shifted.iter().map(|d| 1.0 / (d * d)).collect();
        let variance = sigma2 * self.s.iter().zip(&inv_sq).map(|(s, i)| s * i).sum::<f64>();
        let stderr = self.z_sq.as_ref().map(|zs| {
            let vals: Vec<f64> = zs
                .iter()
                .map(|row| sigma2 * row.iter().zip(&inv_sq).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let m = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / m;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
            (var / m).sqrt()
        });
        let warning = stderr.is_some_and(|se| variance > 0.0 && se > MC_STDERR_WARNING * variance);
        if warning {
            log::warn!(
                "variance at λ = {lambda:e}: Monte Carlo relative standard error {:.3} exceeds 2%",
                stderr.unwrap_or(0.0) / variance
            );
        }
        Ok(VarianceValue {
            lambda,
            variance,
            stderr,
            warning,
        })
    }
}

/// `V(λ)` for one ridge level.
pub fn variance_term(
    gram: &GramMatrix,
    sigma2: f64,
    lambda: f64,
    grid: &QuadratureGrid,
) -> Result<VarianceValue> {
    VarianceSweep::new(gram, grid)?.value(sigma2, lambda)
}

/// `V(λ)` through the empirical semi-norm:
/// `σ²/n Σ_j w_j ‖u_j‖²_{L²,n}` with `u_j = (K + λ)^{-1} 𝕂(X, x_j)` solved
/// by Cholesky, independently of the eigendecomposition route.
pub fn variance_term_seminorm(
    gram: &GramMatrix,
    sigma2: f64,
    lambda: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let n = gram.n();
    let nf = n as f64;
    let mut system = gram.normalized();
    for i in 0..n {
        system[(i, i)] += lambda;
    }
    let nodes = grid.nodes();
    let mut chunk = PointSet::empty(nodes.dim());
    let mut total = 0.0;
    for start in (0..grid.len()).step_by(GRID_CHUNK) {
        let end = (start + GRID_CHUNK).min(grid.len());
        chunk.clear();
        for j in start..end {
            chunk.push(nodes.point(j));
        }
        let rhs = gram.spec().cross_matrix(gram.points(), &chunk)?;
        let u = cholesky_solve(system.as_ref(), rhs.as_ref())?;
        for (c, j) in (start..end).enumerate() {
            let seminorm_sq = u.col_as_slice(c).iter().map(|v| v * v).sum::<f64>() / nf;
            total += grid.weights()[j] * seminorm_sq;
        }
    }
    Ok(sigma2 / nf * total)
}

/// How the `μ`-integral was approximated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Integration {
    pub kind: GridKind,
    pub nodes: usize,
}

/// `V` over an ascending ridge grid (optionally preceded by `λ = 0`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceCurve {
    pub n: usize,
    pub sigma2: f64,
    pub entries: Vec<VarianceValue>,
    pub integration: Integration,
}

/// Sweeps `lambdas` (strictly positive, ascending) reusing one
/// eigendecomposition; `include_zero` prepends the interpolation level.
/// Fails with a consistency error if the result is not non-increasing.
pub fn variance_curve(
    gram: &GramMatrix,
    sigma2: f64,
    lambdas: &[f64],
    include_zero: bool,
    grid: &QuadratureGrid,
) -> Result<VarianceCurve> {
    let sweep = VarianceSweep::new(gram, grid)?;
    sweep_curve(&sweep, sigma2, lambdas, include_zero)
}

pub fn sweep_curve(
    sweep: &VarianceSweep,
    sigma2: f64,
    lambdas: &[f64],
    include_zero: bool,
) -> Result<VarianceCurve> {
    if lambdas.is_empty() && !include_zero {
        return Err(Error::config("empty λ-grid"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::config("λ-grid values must be strictly positive"));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("λ-grid must be sorted strictly ascending"));
    }
    let mut entries = Vec::with_capacity(lambdas.len() + 1);
    if include_zero {
        entries.push(sweep.value(sigma2, 0.0)?);
    }
    for &l in lambdas {
        entries.push(sweep.value(sigma2, l)?);
    }
    for w in entries.windows(2) {
        if w[1].variance > w[0].variance * (1.0 + MONOTONICITY_TOL) {
            return Err(Error::Consistency(format!(
                "V({:e}) = {:e} exceeds V({:e}) = {:e}",
                w[1].lambda, w[1].variance, w[0].lambda, w[0].variance
            )));
        }
    }
    Ok(VarianceCurve {
        n: sweep.n,
        sigma2,
        entries,
        integration: Integration {
            kind: sweep.kind,
            nodes: sweep.nodes,
        },
    })
}

impl VarianceCurve {
    /// Log-log slope of `V` against `λ` over the positive ridge levels.
    pub fn slope(&self) -> Result<LinearFit> {
        let (l, v): (Vec<f64>, Vec<f64>) = self
            .entries
            .iter()
            .filter(|e| e.lambda > 0.0)
            .map(|e| (e.lambda, e.variance))
            .unzip();
        loglog_fit(&l, &v)
    }

    /// `V(λ) n λ^{1/β} / σ²` for each positive ridge level.
    pub fn rate_ratios(&self, beta: f64) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.lambda > 0.0)
            .map(|e| e.variance * self.n as f64 * e.lambda.powf(1.0 / beta) / self.sigma2)
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        w.write_record(["lambda", "V", "stderr"])?;
        for e in &self.entries {
            w.write_record([
                format!("{:e}", e.lambda),
                format!("{:e}", e.variance),
                e.stderr.map(|s| format!("{s:e}")).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Summary with the fitted slope and, given `β`, the band of rate ratios.
    pub fn summary(&self, beta: Option<f64>) -> serde_json::Value {
        let slope = self.slope().ok();
        let band = beta.map(|b| {
            let r = self.rate_ratios(b);
            let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = r.iter().copied().fold(0.0, f64::max);
            serde_json::json!({ "beta": b, "ratio_min": lo, "ratio_max": hi, "spread": hi / lo })
        });
        serde_json::json!({
            "n": self.n,
            "sigma2": self.sigma2,
            "integration": self.integration,
            "points": self.entries.len(),
            "slope": slope.map(|s| s.slope),
            "r2": slope.map(|s| s.r2),
            "band": band,
        })
    }
}

/// Population proxy `σ² N₂(λ) / n`.
pub fn theoretical_variance(spectrum: &SpectrumModel, sigma2: f64, n: usize, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("sample size must be positive"));
    }
    Ok(sigma2 * effective_dimension(spectrum, lambda, 2.0)?.value / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{quadrature, Domain};
    use crate::kernels::{gram, KernelSpec};

    #[test]
    fn constant_kernel_single_point() {
        let x = PointSet::from_rows(&[vec![0.4]]).unwrap();
        let g = gram(&KernelSpec::constant(1.0), &x).unwrap();
        let grid = quadrature(&Domain::Torus { d: 1 }, 16).unwrap();
        assert!((variance_term(&g, 1.0, 0.0, &grid).unwrap().variance - 1.0).abs() < 1e-14);
        assert!((variance_term(&g, 1.0, 1.0, &grid).unwrap().variance - 0.25).abs() < 1e-14);
        assert!((variance_term_seminorm(&g, 1.0, 1.0, &grid).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        let x = PointSet::from_rows(&[vec![0.4], vec![1.0]]).unwrap();
        let g = gram(&KernelSpec::laplace(1.0), &x).unwrap();
        let grid = quadrature(&Domain::Torus { d: 1 }, 16).unwrap();
        assert!(variance_curve(&g, 1.0, &[], false, &grid).is_err());
        assert!(variance_curve(&g, 1.0, &[0.1, 0.01], false, &grid).is_err());
        assert!(variance_curve(&g, 1.0, &[-0.1], false, &grid).is_err());
        let one = variance_curve(&g, 1.0, &[0.1], false, &grid).unwrap();
        assert_eq!(one.entries.len(), 1);
    }

    #[test]
    fn single_term_theory() {
        let s = SpectrumModel::explicit(vec![1.0]).unwrap();
        assert!((theoretical_variance(&s, 1.0, 10, 1.0).unwrap() - 0.025).abs() < 1e-15);
    }
}
