//! Mercer spectra: exact (torus), block (sphere), closed-form and empirical,
//! with decay fits, effective dimensions, embedding norms and
//! interpolation-space norms.

pub mod dot_product;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use dot_product::{gegenbauer_normalized, harmonic_dimension, Block};

use crate::geometry::QuadratureGrid;
use crate::kernels::{FourierBasisFn, FourierKernel, GramMatrix, KernelFamily, KernelSpec};
use crate::stats::loglog_fit;
use crate::{Error, Result};

/// Default validity window of empirical eigenvalues: `[5, n/10]`.
pub const EMPIRICAL_WINDOW_START: usize = 5;
pub const EMPIRICAL_WINDOW_FRACTION: usize = 10;
/// Effective dimensions warn when the estimated tail exceeds this share of
/// the head sum.
pub const TAIL_WARNING_SHARE: f64 = 0.01;

/// How the eigenvalues are represented.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Eigenvalues {
    /// Non-increasing list.
    Explicit { values: Vec<f64> },
    /// `λ_i = c · i^{-β}` for `i = 1, 2, …` (up to `len` if given).
    PowerLaw {
        c: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        len: Option<usize>,
    },
    /// Dot-product blocks `(μ_n, a_n)` on `S^{d-1}`, sorted by `μ_n`
    /// descending; zero blocks are dropped.
    Blocks { d: usize, blocks: Vec<Block> },
}

/// Eigenfunction access.
#[derive(Clone, Debug, PartialEq)]
pub enum Eigenfunctions {
    /// Real Fourier basis aligned with an explicit eigenvalue list.
    Fourier(Vec<FourierBasisFn>),
    /// Spherical harmonics, accessed block-wise through the addition
    /// theorem `Σ_l Y_{n,l}(x) Y_{n,l}(y) = a_n P_n(⟨x, y⟩)`.
    SphericalHarmonics,
}

/// Where a spectrum came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Exact,
    ClosedForm,
    Quadrature { n_max: usize, quad_res: usize },
    /// Eigenvalues of `K = 𝕂/n`; trustworthy only on `[valid_from, valid_to]`.
    Empirical {
        n: usize,
        clipped: usize,
        valid_from: usize,
        valid_to: usize,
    },
}

/// Least-squares power-law fit `λ_i ≈ c i^{-β}` over `[i_min, i_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub beta: f64,
    pub c: f64,
    pub r2: f64,
    pub i_min: usize,
    pub i_max: usize,
    pub points: usize,
    /// `min_i λ_i i^β` and `max_i λ_i i^β` over the fitted range.
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumModel {
    eigenvalues: Eigenvalues,
    eigenfunctions: Option<Eigenfunctions>,
    origin: Origin,
    decay: Option<DecayFit>,
}

impl SpectrumModel {
    /// Explicit eigenvalues (sorted descending here); they must be finite
    /// and nonnegative.
    pub fn explicit(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NotPsd("eigenvalues must be finite and nonnegative".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            eigenvalues: Eigenvalues::Explicit { values },
            eigenfunctions: None,
            origin: Origin::Exact,
            decay: None,
        })
    }

    /// `λ_i = c i^{-β}`, infinite sequence.
    pub fn power_law(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && beta > 0.0) {
            return Err(Error::config("power law needs c > 0 and beta > 0"));
        }
        Ok(Self {
            eigenvalues: Eigenvalues::PowerLaw { c, beta, len: None },
            eigenfunctions: None,
            origin: Origin::ClosedForm,
            decay: None,
        })
    }

    pub fn eigenvalues(&self) -> &Eigenvalues {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> Option<&Eigenfunctions> {
        self.eigenfunctions.as_ref()
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn decay(&self) -> Option<&DecayFit> {
        self.decay.as_ref()
    }

    pub fn with_decay(mut self, fit: DecayFit) -> Self {
        self.decay = Some(fit);
        self
    }

    /// Number of eigenvalues, `None` for infinite closed-form rules.
    pub fn len(&self) -> Option<usize> {
        match &self.eigenvalues {
            Eigenvalues::Explicit { values } => Some(values.len()),
            Eigenvalues::PowerLaw { len, .. } => *len,
            Eigenvalues::Blocks { blocks, .. } => Some(
                blocks
                    .iter()
                    .map(|b| b.multiplicity.min(usize::MAX as f64 / 4.0) as usize)
                    .sum(),
            ),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// First `limit` eigenvalues (fewer if the sequence is shorter),
    /// non-increasing, with block multiplicities expanded.
    pub fn values(&self, limit: usize) -> Vec<f64> {
        match &self.eigenvalues {
            Eigenvalues::Explicit { values } => values.iter().take(limit).copied().collect(),
            Eigenvalues::PowerLaw { c, beta, len } => {
                let end = len.map_or(limit, |l| l.min(limit));
                (1..=end).map(|i| c * (i as f64).powf(-beta)).collect()
            }
            Eigenvalues::Blocks { blocks, .. } => {
                let mut out = Vec::new();
                for b in blocks {
                    let room = limit - out.len();
                    let take = (b.multiplicity as usize).min(room);
                    out.extend(std::iter::repeat(b.mu).take(take));
                    if out.len() == limit {
                        break;
                    }
                }
                out
            }
        }
    }

    /// `Σ λ_i` (infinite rules: `None` when the series diverges).
    pub fn trace(&self) -> Option<f64> {
        match &self.eigenvalues {
            Eigenvalues::Explicit { values } => Some(values.iter().sum()),
            Eigenvalues::Blocks { blocks, .. } => {
                Some(blocks.iter().map(|b| b.mu * b.multiplicity).sum())
            }
            Eigenvalues::PowerLaw { len: Some(l), .. } => Some(self.values(*l).iter().sum()),
            Eigenvalues::PowerLaw { .. } => {
                effective_dimension_tail(self, 0.0, 1.0).ok().map(|e| e.value)
            }
        }
    }

    /// Truncated Mercer-type sum `Σ_{i ≤ truncation} λ_i^α e_i(x) e_i(y)`.
    ///
    /// For spherical-harmonic blocks, the truncation is rounded up to whole
    /// blocks.
    pub fn mercer_sum(&self, x: &[f64], y: &[f64], alpha: f64, truncation: usize) -> Result<f64> {
        match (&self.eigenvalues, &self.eigenfunctions) {
            (Eigenvalues::Explicit { values }, Some(Eigenfunctions::Fourier(basis))) => Ok(values
                .iter()
                .zip(basis)
                .take(truncation)
                .map(|(l, e)| l.powf(alpha) * e.eval(x) * e.eval(y))
                .sum()),
            (Eigenvalues::Blocks { d, blocks }, Some(Eigenfunctions::SphericalHarmonics)) => {
                if x.len() != *d || y.len() != *d {
                    return Err(Error::Domain(format!("points are not on S^{}", d - 1)));
                }
                let t = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
                let n_max = blocks.iter().map(|b| b.degree).max().unwrap_or(0);
                let p = gegenbauer_normalized(t, *d, n_max);
                let mut count = 0usize;
                let mut sum = 0.0;
                for b in blocks {
                    if count >= truncation {
                        break;
                    }
                    sum += b.mu.powf(alpha) * b.multiplicity * p[b.degree];
                    count += b.multiplicity as usize;
                }
                Ok(sum)
            }
            _ => Err(Error::Unsupported(
                "spectrum has no eigenfunction evaluator".into(),
            )),
        }
    }

    /// `Σ_{i ≤ truncation} λ_i e_i(x) e_i(y)`, which tends to `k(x, y)`.
    pub fn reconstruct(&self, x: &[f64], y: &[f64], truncation: usize) -> Result<f64> {
        self.mercer_sum(x, y, 1.0, truncation)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let basis = match &self.eigenfunctions {
            None => serde_json::Value::Null,
            Some(Eigenfunctions::Fourier(_)) => json!("fourier"),
            Some(Eigenfunctions::SphericalHarmonics) => json!("spherical_harmonics"),
        };
        json!({
            "eigenvalues": self.eigenvalues,
            "eigenfunctions": basis,
            "origin": self.origin,
            "decay": self.decay,
            "trace": self.trace(),
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json_value())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Exact spectrum of a periodic kernel: the Fourier coefficients sorted
/// descending, each nonzero frequency contributing a cosine and a sine.
pub fn exact_spectrum_torus(kernel: &FourierKernel) -> SpectrumModel {
    let (values, basis): (Vec<f64>, Vec<FourierBasisFn>) = kernel.eigenpairs().into_iter().unzip();
    SpectrumModel {
        eigenvalues: Eigenvalues::Explicit { values },
        eigenfunctions: Some(Eigenfunctions::Fourier(basis)),
        origin: Origin::Exact,
        decay: None,
    }
}

/// Block spectrum of a dot-product kernel on `S^{d-1}` for degrees
/// `0..=n_max`, by projection onto Gegenbauer polynomials.
pub fn dot_product_spectrum(
    spec: &KernelSpec,
    d: usize,
    n_max: usize,
    quad_res: usize,
) -> Result<SpectrumModel> {
    if !spec.is_dot_product() {
        return Err(Error::Unsupported(format!(
            "{} is not a dot-product kernel",
            spec.name()
        )));
    }
    if d < 3 {
        return Err(Error::config("dot-product spectra need a sphere of ambient dimension >= 3"));
    }
    if n_max < 8 {
        return Err(Error::config("n_max must be at least 8"));
    }
    if d > crate::geometry::MAX_SPHERE_QUADRATURE_DIM {
        return Err(Error::Unsupported(format!("spherical harmonics for d = {d} > 8")));
    }
    spec.validate()?;
    let f = spec.profile().expect("dot-product kernels have a profile");
    let mut blocks: Vec<Block> = dot_product::blocks(&*f, d, n_max, quad_res)?
        .into_iter()
        .filter(|b| b.mu > 0.0)
        .collect();
    blocks.sort_by(|a, b| b.mu.total_cmp(&a.mu).then(a.degree.cmp(&b.degree)));
    Ok(SpectrumModel {
        eigenvalues: Eigenvalues::Blocks { d, blocks },
        eigenfunctions: Some(Eigenfunctions::SphericalHarmonics),
        origin: Origin::Quadrature { n_max, quad_res },
        decay: None,
    })
}

/// Exact spectrum when the family has one (periodic and dot-product
/// kernels); `None` otherwise.
pub fn known_spectrum(spec: &KernelSpec, domain: &crate::Domain) -> Option<Result<SpectrumModel>> {
    match (&spec.family, domain) {
        (KernelFamily::PeriodicFourier(k), _) => Some(Ok(exact_spectrum_torus(k))),
        (KernelFamily::DotProduct { .. } | KernelFamily::Ntk2, crate::Domain::Sphere { d })
            if *d >= 3 =>
        {
            Some(dot_product_spectrum(spec, *d, 64, 256))
        }
        _ => None,
    }
}

/// Eigenvalues of `K = 𝕂(X, X)/n`, descending, round-off negatives clipped.
pub fn empirical_spectrum(gram: &GramMatrix) -> Result<SpectrumModel> {
    let n = gram.n();
    if n < 32 {
        return Err(Error::config(format!(
            "empirical spectra need at least 32 points, got {n}"
        )));
    }
    let mut clipped = 0;
    let values: Vec<f64> = gram
        .normalized_eigenvalues()?
        .into_iter()
        .map(|v| {
            if v < 0.0 {
                clipped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(SpectrumModel {
        eigenvalues: Eigenvalues::Explicit { values },
        eigenfunctions: None,
        origin: Origin::Empirical {
            n,
            clipped,
            valid_from: EMPIRICAL_WINDOW_START,
            valid_to: (n / EMPIRICAL_WINDOW_FRACTION).max(EMPIRICAL_WINDOW_START + 4),
        },
        decay: None,
    })
}

/// Fits `log λ_i` against `log i` for `i ∈ [i_min, i_max]` (1-based).
/// Nonpositive eigenvalues are skipped; at least five points must remain.
pub fn fit_decay(spectrum: &SpectrumModel, i_min: usize, i_max: usize) -> Result<DecayFit> {
    if i_min < 1 || i_max <= i_min {
        return Err(Error::config(format!("bad decay-fit range [{i_min}, {i_max}]")));
    }
    let values = spectrum.values(i_max);
    let (idx, vals): (Vec<f64>, Vec<f64>) = values
        .iter()
        .enumerate()
        .skip(i_min - 1)
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, &v)| ((k + 1) as f64, v))
        .unzip();
    if idx.len() < 5 {
        return Err(Error::Fit(format!(
            "only {} usable eigenvalues in [{i_min}, {i_max}]",
            idx.len()
        )));
    }
    let fit = loglog_fit(&idx, &vals)?;
    let beta = -fit.slope;
    let scaled = idx.iter().zip(&vals).map(|(i, v)| v * i.powf(beta));
    let (c1, c2) = scaled.fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s), hi.max(s)));
    Ok(DecayFit {
        beta,
        c: fit.intercept.exp(),
        r2: fit.r2,
        i_min,
        i_max: i_max.min(values.len()),
        points: idx.len(),
        c1,
        c2,
    })
}

/// Writes `i, lambda, residual` rows for a decay fit (residual of
/// `log λ_i` against the fitted line; empty when `λ_i = 0`).
pub fn write_decay_csv(spectrum: &SpectrumModel, fit: &DecayFit, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_record(["i", "lambda", "residual"])?;
    for (k, v) in spectrum.values(fit.i_max).iter().enumerate().skip(fit.i_min - 1) {
        let i = (k + 1) as f64;
        let res = if *v > 0.0 {
            format!("{:e}", v.ln() - (fit.c.ln() - fit.beta * i.ln()))
        } else {
            String::new()
        };
        w.write_record([(k + 1).to_string(), format!("{v:e}"), res])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveDimension {
    pub value: f64,
    /// Contribution of the analytic tail (closed-form rules only).
    pub tail: Option<f64>,
    /// Set when the tail exceeds 1% of the summed head.
    pub tail_warning: bool,
    pub head_terms: usize,
}

const HEAD_MIN: usize = 100_000;
const HEAD_MAX: usize = 10_000_000;

// N_p for the closed-form power law: explicit head, integral tail
// ∫_{H+1/2}^∞ g(x) dx (midpoint rule correction) in the variable u = ln x.
fn effective_dimension_tail(spectrum: &SpectrumModel, lambda: f64, p: f64) -> Result<EffectiveDimension> {
    let Eigenvalues::PowerLaw { c, beta, len: None } = spectrum.eigenvalues else {
        unreachable!("tail estimate only for infinite power laws");
    };
    if beta * p <= 1.0 {
        return Err(Error::Overflow(format!(
            "Σ (λ_i/(λ_i+λ))^p diverges for β·p = {} ≤ 1",
            beta * p
        )));
    }
    let term = |x: f64| {
        let l = c * x.powf(-beta);
        (l / (l + lambda)).powf(p)
    };
    // stop the head once λ_i < 1e-3 λ, where the tail is a clean power law
    let mut head = HEAD_MIN;
    if lambda > 0.0 {
        let cross = (c / (1e-3 * lambda)).powf(1.0 / beta);
        if cross.is_finite() {
            head = head.max(cross.ceil() as usize).min(HEAD_MAX);
        } else {
            head = HEAD_MAX;
        }
    }
    // sum small terms first
    let head_sum: f64 = (1..=head).rev().map(|i| term(i as f64)).sum();
    let u0 = (head as f64 + 0.5).ln();
    let decay_rate = beta * p - 1.0;
    let span = 50.0 / decay_rate;
    let steps = 4000;
    let h = span / steps as f64;
    let g = |u: f64| term(u.exp()) * u.exp();
    let mut tail = g(u0) + g(u0 + span);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        tail += w * g(u0 + k as f64 * h);
    }
    tail *= h / 3.0;
    Ok(EffectiveDimension {
        value: head_sum + tail,
        tail: Some(tail),
        tail_warning: tail > TAIL_WARNING_SHARE * head_sum,
        head_terms: head,
    })
}

/// `N_p(λ) = Σ_i (λ_i / (λ_i + λ))^p`.
pub fn effective_dimension(spectrum: &SpectrumModel, lambda: f64, p: f64) -> Result<EffectiveDimension> {
    if !(lambda > 0.0) {
        return Err(Error::config(format!("effective dimension needs λ > 0, got {lambda}")));
    }
    if !(p >= 1.0) {
        return Err(Error::config(format!("effective dimension needs p >= 1, got {p}")));
    }
    let ratio = |l: f64| (l / (l + lambda)).powf(p);
    match &spectrum.eigenvalues {
        Eigenvalues::PowerLaw { len: None, .. } => effective_dimension_tail(spectrum, lambda, p),
        Eigenvalues::Blocks { blocks, .. } => Ok(EffectiveDimension {
            value: blocks.iter().rev().map(|b| b.multiplicity * ratio(b.mu)).sum(),
            tail: None,
            tail_warning: false,
            head_terms: spectrum.len().unwrap_or(0),
        }),
        _ => {
            let len = spectrum.len().unwrap_or(0);
            let values = spectrum.values(len);
            Ok(EffectiveDimension {
                value: values.iter().rev().map(|&l| ratio(l)).sum(),
                tail: None,
                tail_warning: false,
                head_terms: len,
            })
        }
    }
}

/// Truncated embedding norm `M_α` estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub alpha: f64,
    /// `max_x Σ_{i ≤ truncation} λ_i^α e_i(x)²` over the grid.
    pub m_alpha_trunc: f64,
    /// `max - min` of the truncated sum over the grid.
    pub spread: f64,
    pub truncation: usize,
    pub grid_nodes: usize,
}

pub fn embedding_norm(
    spectrum: &SpectrumModel,
    alpha: f64,
    grid: &QuadratureGrid,
    truncation: usize,
) -> Result<EmbeddingReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if truncation < 100 {
        return Err(Error::config("embedding norms need a truncation of at least 100"));
    }
    if spectrum.eigenfunctions.is_none() {
        return Err(Error::Unsupported(
            "embedding norm needs eigenfunctions; empirical and closed-form spectra have none".into(),
        ));
    }
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for x in grid.nodes().iter() {
        let v = spectrum.mercer_sum(x, x, alpha, truncation)?;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok(EmbeddingReport {
        alpha,
        m_alpha_trunc: hi,
        spread: hi - lo,
        truncation: truncation.min(spectrum.len().unwrap_or(truncation)),
        grid_nodes: grid.len(),
    })
}

/// Divergence evidence for one `α` in a scan of the embedding index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaProbe {
    pub alpha: f64,
    pub truncations: Vec<usize>,
    pub values: Vec<f64>,
    /// Log-log growth rate of the truncated sum over the last two
    /// truncations; zero for a converged series.
    pub growth: f64,
    pub diverging: bool,
}

/// Growth above which a truncated embedding sum is reported as diverging.
pub const DIVERGENCE_GROWTH: f64 = 0.02;

/// Scans `alphas`, reporting how the truncated embedding sum grows with the
/// truncation. This is one-sided evidence about `α₀`, never a certificate.
pub fn probe_embedding_index(
    spectrum: &SpectrumModel,
    alphas: &[f64],
    grid: &QuadratureGrid,
    truncations: &[usize],
) -> Result<Vec<AlphaProbe>> {
    if truncations.len() < 2 || truncations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("need at least two increasing truncations"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let values = truncations
                .iter()
                .map(|&t| embedding_norm(spectrum, alpha, grid, t).map(|r| r.m_alpha_trunc))
                .collect::<Result<Vec<f64>>>()?;
            let k = values.len();
            let growth = (values[k - 1] / values[k - 2]).ln()
                / (truncations[k - 1] as f64 / truncations[k - 2] as f64).ln();
            Ok(AlphaProbe {
                alpha,
                truncations: truncations.to_vec(),
                values,
                growth,
                diverging: growth > DIVERGENCE_GROWTH,
            })
        })
        .collect()
}

/// `‖f‖_{[H]^s} = (Σ b_i² λ_i^{-s})^{1/2}` for `f = Σ b_i e_i`.
pub fn interp_space_norm(spectrum: &SpectrumModel, coeffs: &[f64], s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::config(format!("interpolation-space order must be >= 0, got {s}")));
    }
    let values = spectrum.values(coeffs.len());
    if values.len() < coeffs.len() {
        return Err(Error::config(format!(
            "{} coefficients for a spectrum of length {}",
            coeffs.len(),
            values.len()
        )));
    }
    let mut sum = 0.0;
    for (i, (&b, &l)) in coeffs.iter().zip(&values).enumerate() {
        if b == 0.0 {
            continue;
        }
        let weight = if s == 0.0 { 1.0 } else { l.powf(-s) };
        if !weight.is_finite() {
            return Err(Error::Overflow(format!(
                "λ_{}^(-{s}) overflows (λ = {l:e})",
                i + 1
            )));
        }
        sum += b * b * weight;
    }
    if !sum.is_finite() {
        return Err(Error::Overflow("interpolation-space norm overflows".into()));
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient_only() {
        let k = FourierKernel::new(
            1,
            crate::kernels::FourierCoefficients::Explicit(vec![crate::kernels::FourierMode {
                freq: vec![0],
                value: 1.0,
            }]),
        )
        .unwrap();
        let s = exact_spectrum_torus(&k);
        assert_eq!(s.values(10), vec![1.0]);
        assert_eq!(s.reconstruct(&[0.3], &[-1.0], 10).unwrap(), 1.0);
    }

    #[test]
    fn single_eigenvalue_effective_dimension() {
        let s = SpectrumModel::explicit(vec![1.0]).unwrap();
        assert_eq!(effective_dimension(&s, 1.0, 1.0).unwrap().value, 0.5);
    }

    #[test]
    fn interp_norm_edge_cases() {
        let s = SpectrumModel::explicit(vec![0.5, 0.25]).unwrap();
        assert_eq!(interp_space_norm(&s, &[3.0, 4.0], 0.0).unwrap(), 5.0);
        assert!((interp_space_norm(&s, &[1.0, 0.0], 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let tiny = SpectrumModel::explicit(vec![1e-300]).unwrap();
        assert!(matches!(interp_space_norm(&tiny, &[1.0], 2.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn json_mentions_basis() {
        let k = FourierKernel::sobolev_1d(3, 2.0).unwrap();
        let v = exact_spectrum_torus(&k).to_json_value();
        assert_eq!(v["eigenfunctions"], "fourier");
        assert_eq!(v["eigenvalues"]["values"].as_array().unwrap().len(), 7);
    }
}
