//! Kernel families, pointwise evaluation and Gram-matrix assembly.

mod fourier;
mod holder;
mod matern;

use std::path::Path;
use std::sync::OnceLock;

use faer::Mat;
use serde::{Deserialize, Serialize};

pub use fourier::{
    FourierBasisFn, FourierCoefficients, FourierKernel, FourierMode, FourierPart,
};
pub use holder::{estimate_holder, estimate_profile_holder, HolderEstimate};
pub use matern::matern;

use crate::geometry::{Domain, PointSet};
use crate::linalg::SymmetricEigen;
use crate::{Error, Result};

/// Slack allowed on `⟨x, y⟩` before dot-product kernels refuse the input.
pub const DOT_SLACK: f64 = 1e-9;
/// Two training points closer than this are treated as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;
/// Relative tolerance of the numerical PSD check.
pub const PSD_TOL: f64 = 1e-10;

fn one() -> f64 {
    1.0
}

/// Scalar profile `f` of a dot-product kernel `k(x, y) = f(⟨x, y⟩)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DotProfile {
    /// `f(t) = Σ_k c_k t^k` with `c_k ≥ 0`.
    Polynomial { coefficients: Vec<f64> },
    /// `f(t) = exp((t - 1) / scale)`.
    Exponential { scale: f64 },
}

impl DotProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DotProfile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            }
            DotProfile::Exponential { scale } => ((t - 1.0) / scale).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DotProfile::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::config("polynomial profile needs coefficients"));
                }
                if coefficients.iter().any(|c| !c.is_finite() || *c < 0.0) {
                    return Err(Error::NotPsd(
                        "polynomial profile coefficients must be nonnegative".into(),
                    ));
                }
            }
            DotProfile::Exponential { scale } => {
                if !(*scale > 0.0) {
                    return Err(Error::config("exponential profile scale must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// The two-layer ReLU neural tangent kernel profile
/// `k(t) = (2/π)(π - arccos t) t + (1/π) √(1 - t²)`.
pub fn ntk_profile(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let pi = std::f64::consts::PI;
    2.0 / pi * (pi - t.acos()) * t + (1.0 - t * t).max(0.0).sqrt() / pi
}

/// Kernel family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// `k ≡ value`; rank one, useful as a sanity case.
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `exp(-‖x - y‖ / bandwidth)`.
    Laplace {
        #[serde(default = "one")]
        bandwidth: f64,
    },
    /// `exp(-‖x - y‖² / (2 bandwidth²))`.
    Gaussian {
        #[serde(default = "one")]
        bandwidth: f64,
    },
    /// Matérn correlation of smoothness `nu` in `‖x - y‖ / lengthscale`.
    Matern {
        nu: f64,
        #[serde(default = "one")]
        lengthscale: f64,
    },
    PeriodicFourier(FourierKernel),
    DotProduct { profile: DotProfile },
    Ntk2,
}

/// A Hölder pair `(s, L)`: `|k(x₁,x₂) - k(y₁,y₂)| ≤ L ‖(x₁,x₂) - (y₁,y₂)‖^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderPair {
    pub exponent: f64,
    pub constant: f64,
}

/// A kernel: family, parameters and optional Hölder metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderPair>,
}

impl From<KernelFamily> for KernelSpec {
    fn from(family: KernelFamily) -> Self {
        Self {
            family,
            holder: None,
        }
    }
}

impl KernelSpec {
    pub fn constant(value: f64) -> Self {
        KernelFamily::Constant { value }.into()
    }

    pub fn laplace(bandwidth: f64) -> Self {
        KernelFamily::Laplace { bandwidth }.into()
    }

    pub fn gaussian(bandwidth: f64) -> Self {
        KernelFamily::Gaussian { bandwidth }.into()
    }

    pub fn matern(nu: f64, lengthscale: f64) -> Self {
        KernelFamily::Matern { nu, lengthscale }.into()
    }

    pub fn periodic(kernel: FourierKernel) -> Self {
        KernelFamily::PeriodicFourier(kernel).into()
    }

    pub fn dot_product(profile: DotProfile) -> Self {
        KernelFamily::DotProduct { profile }.into()
    }

    pub fn ntk2() -> Self {
        KernelFamily::Ntk2.into()
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            KernelFamily::Constant { .. } => "constant",
            KernelFamily::Laplace { .. } => "laplace",
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Matern { .. } => "matern",
            KernelFamily::PeriodicFourier(_) => "periodic_fourier",
            KernelFamily::DotProduct { .. } => "dot_product",
            KernelFamily::Ntk2 => "ntk2",
        }
    }

    pub fn is_dot_product(&self) -> bool {
        matches!(
            self.family,
            KernelFamily::DotProduct { .. } | KernelFamily::Ntk2
        )
    }

    /// Parameter checks independent of the domain.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{what} must be positive, got {v}")))
            }
        };
        match &self.family {
            KernelFamily::Constant { value } => {
                if !(*value >= 0.0) {
                    return Err(Error::NotPsd(format!("constant kernel value {value} < 0")));
                }
            }
            KernelFamily::Laplace { bandwidth } | KernelFamily::Gaussian { bandwidth } => {
                positive(*bandwidth, "bandwidth")?
            }
            KernelFamily::Matern { nu, lengthscale } => {
                positive(*nu, "matern nu")?;
                positive(*lengthscale, "matern lengthscale")?;
            }
            KernelFamily::PeriodicFourier(_) | KernelFamily::Ntk2 => {}
            KernelFamily::DotProduct { profile } => profile.validate()?,
        }
        if let Some(h) = self.holder {
            if !(h.exponent > 0.0 && h.exponent <= 1.0) || !(h.constant >= 0.0) {
                return Err(Error::config(
                    "holder exponent must lie in (0, 1] and constant be nonnegative",
                ));
            }
        }
        Ok(())
    }

    /// Checks that the kernel is defined on `domain`.
    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        self.validate()?;
        match (&self.family, domain) {
            (KernelFamily::DotProduct { .. } | KernelFamily::Ntk2, Domain::Sphere { .. }) => Ok(()),
            (KernelFamily::DotProduct { .. } | KernelFamily::Ntk2, _) => Err(Error::config(
                format!("{} kernel needs a sphere domain", self.name()),
            )),
            (KernelFamily::PeriodicFourier(k), Domain::Torus { d }) if k.dim() == *d => Ok(()),
            (KernelFamily::PeriodicFourier(k), _) => Err(Error::config(format!(
                "periodic_fourier kernel of dimension {} needs a torus domain of the same dimension",
                k.dim()
            ))),
            _ => Ok(()),
        }
    }

    /// `κ² = sup_x k(x, x)`.
    pub fn kappa_sq(&self) -> f64 {
        match &self.family {
            KernelFamily::Constant { value } => *value,
            KernelFamily::Laplace { .. }
            | KernelFamily::Gaussian { .. }
            | KernelFamily::Matern { .. } => 1.0,
            KernelFamily::PeriodicFourier(k) => k.kappa_sq(),
            // nonnegative Taylor coefficients put the sup of |f| at t = 1
            KernelFamily::DotProduct { profile } => profile.eval(1.0),
            KernelFamily::Ntk2 => 2.0,
        }
    }

    /// The recorded Hölder pair, or a known one for families where it is
    /// available in closed form.
    pub fn holder_pair(&self) -> Option<HolderPair> {
        if self.holder.is_some() {
            return self.holder;
        }
        // |k(x₁,x₂) - k(y₁,y₂)| ≤ sup|g'| (‖Δ₁‖ + ‖Δ₂‖) ≤ √2 sup|g'| ‖Δ‖
        // for radial k = g(‖x - y‖)
        let lipschitz = |slope: f64| HolderPair {
            exponent: 1.0,
            constant: std::f64::consts::SQRT_2 * slope,
        };
        match &self.family {
            KernelFamily::Constant { .. } => Some(HolderPair {
                exponent: 1.0,
                constant: 0.0,
            }),
            KernelFamily::Laplace { bandwidth } => Some(lipschitz(1.0 / bandwidth)),
            KernelFamily::Gaussian { bandwidth } => {
                Some(lipschitz((-0.5f64).exp() / bandwidth))
            }
            _ => None,
        }
    }

    fn dot_arg(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let t: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        if !(t.abs() <= 1.0 + DOT_SLACK) {
            return Err(Error::Domain(format!(
                "inner product {t} outside [-1, 1]; are the points on the unit sphere?"
            )));
        }
        Ok(t.clamp(-1.0, 1.0))
    }

    /// `k(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Domain(format!(
                "points of dimension {} and {}",
                x.len(),
                y.len()
            )));
        }
        let dist2 = || x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        Ok(match &self.family {
            KernelFamily::Constant { value } => *value,
            KernelFamily::Laplace { bandwidth } => (-dist2().sqrt() / bandwidth).exp(),
            KernelFamily::Gaussian { bandwidth } => {
                (-dist2() / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelFamily::Matern { nu, lengthscale } => {
                matern(dist2().sqrt() / lengthscale, *nu)
            }
            KernelFamily::PeriodicFourier(k) => k.eval(x, y),
            KernelFamily::DotProduct { profile } => profile.eval(self.dot_arg(x, y)?),
            KernelFamily::Ntk2 => ntk_profile(self.dot_arg(x, y)?),
        })
    }

    /// Scalar profile `f` with `k(x, y) = f(⟨x, y⟩)`, for dot-product kernels.
    pub fn profile(&self) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync + '_>> {
        match &self.family {
            KernelFamily::DotProduct { profile } => Some(Box::new(move |t| profile.eval(t))),
            KernelFamily::Ntk2 => Some(Box::new(ntk_profile)),
            KernelFamily::Constant { value } => Some(Box::new(move |_| *value)),
            _ => None,
        }
    }

    /// `𝕂(A, B)`, rows indexed by `a`, columns by `b`.
    pub fn cross_matrix(&self, a: &PointSet, b: &PointSet) -> Result<Mat<f64>> {
        if a.dim() != b.dim() {
            return Err(Error::Domain(format!(
                "point sets of dimension {} and {}",
                a.dim(),
                b.dim()
            )));
        }
        if let KernelFamily::PeriodicFourier(k) = &self.family {
            check_dim(k.dim(), a)?;
            return Ok(k.cross_matrix(a, b));
        }
        let mut out = Mat::zeros(a.len(), b.len());
        for j in 0..b.len() {
            let y = b.point(j);
            for i in 0..a.len() {
                out[(i, j)] = self.eval(a.point(i), y)?;
            }
        }
        Ok(out)
    }

    /// `(k(p, x₁), …, k(p, x_n))`.
    pub fn row(&self, p: &[f64], points: &PointSet) -> Result<Vec<f64>> {
        points.iter().map(|x| self.eval(p, x)).collect()
    }
}

fn check_dim(d: usize, points: &PointSet) -> Result<()> {
    if points.dim() != d {
        return Err(Error::Domain(format!(
            "kernel of dimension {d} applied to points of dimension {}",
            points.dim()
        )));
    }
    Ok(())
}

/// Kernel matrix `𝕂(X, X)` on distinct points, with a lazily computed
/// symmetric eigendecomposition.
#[derive(Debug)]
pub struct GramMatrix {
    spec: KernelSpec,
    points: PointSet,
    raw: Mat<f64>,
    eigen: OnceLock<SymmetricEigen>,
}

impl Clone for GramMatrix {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            spec: self.spec.clone(),
            points: self.points.clone(),
            raw: self.raw.clone(),
            eigen,
        }
    }
}

/// Assembles `𝕂(X, X)`. Points must be pairwise distinct.
pub fn gram(spec: &KernelSpec, points: &PointSet) -> Result<GramMatrix> {
    spec.validate()?;
    if points.is_empty() {
        return Err(Error::config("gram matrix needs at least one point"));
    }
    if let Some((i, j)) = points.find_duplicate(DUPLICATE_TOL) {
        return Err(Error::DuplicatePoints { i, j });
    }
    let n = points.len();
    let mut raw = match &spec.family {
        KernelFamily::PeriodicFourier(k) => {
            check_dim(k.dim(), points)?;
            k.cross_matrix(points, points)
        }
        _ => {
            let mut m = Mat::zeros(n, n);
            for j in 0..n {
                let xj = points.point(j);
                for i in j..n {
                    m[(i, j)] = spec.eval(points.point(i), xj)?;
                }
            }
            m
        }
    };
    // mirror the lower triangle so the matrix is exactly symmetric
    for j in 0..n {
        for i in j + 1..n {
            raw[(j, i)] = raw[(i, j)];
        }
    }
    Ok(GramMatrix {
        spec: spec.clone(),
        points: points.clone(),
        raw,
        eigen: OnceLock::new(),
    })
}

impl GramMatrix {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// `𝕂(X, X)`.
    pub fn raw(&self) -> &Mat<f64> {
        &self.raw
    }

    /// `K = 𝕂(X, X) / n`.
    pub fn normalized(&self) -> Mat<f64> {
        let n = self.n() as f64;
        Mat::from_fn(self.n(), self.n(), |i, j| self.raw[(i, j)] / n)
    }

    /// Eigendecomposition of the raw matrix (ascending eigenvalues), cached.
    pub fn eigen(&self) -> Result<&SymmetricEigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = SymmetricEigen::new(self.raw.as_ref())?;
        let _ = self.eigen.set(e);
        Ok(self.eigen.get().expect("eigendecomposition just stored"))
    }

    /// Eigenvalues of `K = 𝕂/n`, descending.
    pub fn normalized_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.n() as f64;
        Ok(self.eigen()?.values().iter().rev().map(|v| v / n).collect())
    }

    /// `max |𝕂 - 𝕂ᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j + 1..n {
                worst = worst.max((self.raw[(i, j)] - self.raw[(j, i)]).abs());
            }
        }
        worst
    }

    /// Numerical PSD check: `min eig ≥ -1e-10 · max eig`.
    pub fn check_psd(&self) -> Result<()> {
        let e = self.eigen()?;
        if e.min() < -PSD_TOL * e.max().abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd(format!(
                "gram matrix has eigenvalue {:e} against max {:e}",
                e.min(),
                e.max()
            )));
        }
        Ok(())
    }

    /// Writes the raw matrix as headerless CSV.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n())
                .map(|j| format!("{:e}", self.raw[(i, j)]))
                .collect();
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ntk_profile_landmarks() {
        assert!((ntk_profile(1.0) - 2.0).abs() < 1e-15);
        assert!((ntk_profile(0.0) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(ntk_profile(-1.0).abs() < 1e-15);
    }

    #[test]
    fn dot_product_rejects_off_sphere_points() {
        let k = KernelSpec::ntk2();
        assert!(k.eval(&[1.0, 0.0, 0.0], &[1.0 + 1e-10, 0.0, 0.0]).is_ok());
        assert!(matches!(
            k.eval(&[2.0, 0.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spec_json_shapes() {
        let k: KernelSpec = serde_json::from_str(r#"{"family":"laplace"}"#).unwrap();
        assert_eq!(k, KernelSpec::laplace(1.0));
        let k: KernelSpec =
            serde_json::from_str(r#"{"family":"matern","nu":1.5,"holder":{"exponent":1.0,"constant":2.0}}"#)
                .unwrap();
        assert_eq!(k.holder.unwrap().constant, 2.0);
        let k: KernelSpec = serde_json::from_str(
            r#"{"family":"periodic_fourier","d":1,"coefficients":{"sobolev":{"max_freq":8,"order":2}}}"#,
        )
        .unwrap();
        assert_eq!(k.name(), "periodic_fourier");
        let back: KernelSpec = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);
        let k: KernelSpec = serde_json::from_str(
            r#"{"family":"dot_product","profile":{"kind":"polynomial","coefficients":[0,1]}}"#,
        )
        .unwrap();
        assert_eq!(k.kappa_sq(), 1.0);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family":"cosine"}"#).is_err());
    }

    #[test]
    fn domain_compatibility() {
        assert!(KernelSpec::ntk2().check_domain(&Domain::Torus { d: 1 }).is_err());
        assert!(KernelSpec::ntk2().check_domain(&Domain::Sphere { d: 3 }).is_ok());
        let p = KernelSpec::periodic(FourierKernel::sobolev_1d(4, 2.0).unwrap());
        assert!(p.check_domain(&Domain::Torus { d: 2 }).is_err());
        assert!(KernelSpec::laplace(-1.0).validate().is_err());
    }
}
