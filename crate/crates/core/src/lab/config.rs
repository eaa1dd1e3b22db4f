//! Experiment configuration: parsing, defaults and range checks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::Domain;
use crate::kernels::{FourierCoefficients, KernelFamily, KernelSpec};
use crate::truth::{FourierTerm, Monomial, Truth};
use crate::{Error, Result};

/// What a config is about to be used for; some checks depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Spectrum,
    Variance,
    Scaling,
    Ntk,
    Concentration,
    KernelInfo,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Spectrum => "spectrum",
            Verb::Variance => "variance",
            Verb::Scaling => "scaling",
            Verb::Ntk => "ntk",
            Verb::Concentration => "concentration",
            Verb::KernelInfo => "kernel-info",
        }
    }

    fn needs_noise(self) -> bool {
        matches!(self, Verb::Variance | Verb::Scaling | Verb::Ntk)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    Gaussian,
    Rademacher,
}

fn default_sigma() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub model: NoiseModel,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            model: NoiseModel::Gaussian,
            sigma: default_sigma(),
        }
    }
}

/// Ridge levels for variance sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaGrid {
    Explicit(Vec<f64>),
    LogRange { min: f64, max: f64, points: usize },
    /// `points` log-spaced levels in `[n^{-β+p}, n^{-upper_exponent}]`.
    Auto {
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_upper")]
        upper_exponent: f64,
        #[serde(default = "default_lambda_points")]
        points: usize,
    },
}

fn default_p() -> f64 {
    0.5
}
fn default_upper() -> f64 {
    0.25
}
fn default_lambda_points() -> usize {
    30
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto {
            p: default_p(),
            upper_exponent: default_upper(),
            points: default_lambda_points(),
        }
    }
}

/// `points` log-spaced values from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

impl LambdaGrid {
    /// Ridge levels for sample size `n`; `beta` is needed by the automatic
    /// grid.
    pub fn levels(&self, n: usize, beta: Option<f64>) -> Result<Vec<f64>> {
        Ok(match self {
            LambdaGrid::Explicit(v) => v.clone(),
            LambdaGrid::LogRange { min, max, points } => geomspace(*min, *max, *points),
            LambdaGrid::Auto {
                p,
                upper_exponent,
                points,
            } => {
                let beta = beta.ok_or_else(|| {
                    Error::config("lambda_grid.auto needs a known decay exponent (set `beta`)")
                })?;
                let nf = n as f64;
                geomspace(nf.powf(-beta + p), nf.powf(-upper_exponent), *points)
            }
        })
    }
}

/// How integrals against `μ` are evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrationConfig {
    #[default]
    Auto,
    Quadrature { resolution: usize },
    MonteCarlo { nodes: usize },
}

fn default_widths() -> Vec<usize> {
    vec![1024]
}
fn default_eta() -> f64 {
    1.0
}
fn default_steps() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NtkConfig {
    #[serde(default = "default_widths")]
    pub widths: Vec<usize>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl Default for NtkConfig {
    fn default() -> Self {
        Self {
            widths: default_widths(),
            eta: default_eta(),
            steps: default_steps(),
        }
    }
}

fn default_trials() -> usize {
    1000
}
fn default_delta() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            delta: default_delta(),
        }
    }
}

fn default_n_max() -> usize {
    64
}
fn default_quad_res() -> usize {
    256
}
fn default_probes() -> usize {
    600
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Degree cutoff of dot-product block spectra.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_quad_res")]
    pub quad_res: usize,
    /// Probes of the Hölder estimate.
    #[serde(default = "default_probes")]
    pub holder_probes: usize,
    /// Fit window of empirical spectra; defaults to `[5, n/10]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(usize, usize)>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            quad_res: default_quad_res(),
            holder_probes: default_probes(),
            window: None,
        }
    }
}

fn default_reps() -> usize {
    1000
}
fn default_level() -> f64 {
    0.95
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            reps: default_reps(),
            level: default_level(),
        }
    }
}

fn default_seeds() -> usize {
    1
}
fn default_floor() -> f64 {
    -0.2
}
fn default_risk_floor() -> f64 {
    0.05
}
fn default_attempts() -> usize {
    3
}
fn default_v0_max_n() -> usize {
    1024
}

/// One experiment. Only `kernel`, `domain` and `n_grid` are required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub domain: Domain,
    /// Regression function; defaults to a single low eigenfunction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    /// Number of independent repetitions per cell.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Base seed from which every stream is derived.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integration: IntegrationConfig,
    /// Allows `sigma = 0` for noiseless contrast runs.
    #[serde(default)]
    pub contrast: bool,
    /// Risk-vs-n exponent a noise floor must stay above.
    #[serde(default = "default_floor")]
    pub exponent_floor: f64,
    /// Median risk at the largest n must exceed this times `σ²`.
    #[serde(default = "default_risk_floor")]
    pub risk_floor: f64,
    #[serde(default = "default_attempts")]
    pub resample_attempts: usize,
    /// `V(0)` is computed alongside the risk only up to this n.
    #[serde(default = "default_v0_max_n")]
    pub variance_max_n: usize,
    /// Known eigenvalue decay exponent of the kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub ntk: NtkConfig,
    #[serde(default)]
    pub concentration: ConcentrationConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    /// Fill the `wallclock_ms` column (makes records.csv run-dependent).
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Default regression function: one low-frequency eigenfunction.
pub fn default_truth(domain: &Domain) -> Truth {
    let d = domain.dim();
    match domain {
        Domain::Torus { .. } => {
            let mut freq = vec![0; d];
            freq[0] = 1;
            Truth::Fourier {
                terms: vec![FourierTerm {
                    freq,
                    cos: 1.0,
                    sin: 0.0,
                }],
            }
        }
        Domain::Sphere { .. } | Domain::Cube { .. } => {
            let mut powers = vec![0; d];
            powers[0] = 1;
            Truth::Polynomial {
                terms: vec![Monomial { coef: 1.0, powers }],
            }
        }
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::config(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(format!("field `{path}`: {}", e.inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.noise.sigma * self.noise.sigma
    }

    pub fn truth(&self) -> Truth {
        self.truth.clone().unwrap_or_else(|| default_truth(&self.domain))
    }

    /// Known decay exponent: the configured one, `2·order/d` for Sobolev-type
    /// periodic kernels, or `None`.
    pub fn known_beta(&self) -> Option<f64> {
        if self.beta.is_some() {
            return self.beta;
        }
        match &self.kernel.family {
            KernelFamily::PeriodicFourier(k) => match k.coefficients() {
                FourierCoefficients::Sobolev { order, .. } => {
                    Some(2.0 * order / k.dim() as f64)
                }
                _ => None,
            },
            KernelFamily::Ntk2 => match self.domain {
                Domain::Sphere { d } => Some(d as f64 / (d as f64 - 1.0)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Fills defaults and range-checks for `verb`, returning warnings.
    pub fn resolve(&mut self, verb: Verb) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        self.domain.validate().map_err(|e| field("domain", e))?;
        self.kernel
            .check_domain(&self.domain)
            .map_err(|e| field("kernel", e))?;

        if self.n_grid.is_empty() {
            return Err(field("n_grid", "must list at least one sample size"));
        }
        if self.n_grid.contains(&0) {
            return Err(field("n_grid", "sample sizes must be >= 1"));
        }
        let mut sorted = self.n_grid.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != self.n_grid {
            let msg = format!("n_grid {:?} normalized to {:?}", self.n_grid, sorted);
            log::warn!("{msg}");
            warnings.push(msg);
            self.n_grid = sorted;
        }

        if !self.noise.sigma.is_finite() || self.noise.sigma < 0.0 {
            return Err(field("noise.sigma", format!("must be >= 0, got {}", self.noise.sigma)));
        }
        if verb.needs_noise() && self.noise.sigma == 0.0 && !self.contrast {
            return Err(field(
                "noise.sigma",
                format!(
                    "must be > 0 for `{}` (a noise floor is the regime under study); \
                     set \"contrast\": true for a noiseless contrast run",
                    verb.name()
                ),
            ));
        }

        match &mut self.lambda_grid {
            LambdaGrid::Explicit(v) => {
                if let Some(bad) = v.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
                    return Err(field("lambda_grid", format!("contains negative or invalid value {bad}")));
                }
                if verb == Verb::Variance && v.iter().any(|l| *l == 0.0) {
                    return Err(field("lambda_grid", "variance sweeps need strictly positive levels"));
                }
                if v.is_empty() && verb == Verb::Variance {
                    return Err(field("lambda_grid", "is empty"));
                }
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                s.dedup();
                if s != *v {
                    warnings.push("lambda_grid normalized to ascending order".into());
                    *v = s;
                }
            }
            LambdaGrid::LogRange { min, max, points } => {
                if !(*min > 0.0 && *max >= *min) || *points == 0 {
                    return Err(field("lambda_grid.log_range", "needs 0 < min <= max and points >= 1"));
                }
            }
            LambdaGrid::Auto { points, upper_exponent, p } => {
                if *points == 0 || !(*p > 0.0) || !upper_exponent.is_finite() {
                    return Err(field("lambda_grid.auto", "needs points >= 1 and p > 0"));
                }
            }
        }

        if self.seeds == 0 {
            return Err(field("seeds", "must be >= 1"));
        }
        match self.integration {
            IntegrationConfig::Quadrature { resolution } if resolution < 2 => {
                return Err(field("integration.resolution", "must be >= 2"));
            }
            IntegrationConfig::MonteCarlo { nodes } if nodes < 2 => {
                return Err(field("integration.nodes", "must be >= 2"));
            }
            _ => {}
        }
        if let Some(&w) = self.ntk.widths.iter().find(|w| **w < 2 || **w % 2 == 1) {
            return Err(field("ntk.widths", format!("width {w} must be even and >= 2")));
        }
        if self.ntk.widths.is_empty() {
            return Err(field("ntk.widths", "must list at least one width"));
        }
        if !(self.ntk.eta > 0.0) {
            return Err(field("ntk.eta", "must be positive"));
        }
        if verb == Verb::Ntk {
            match self.domain {
                Domain::Sphere { .. } => {}
                _ => return Err(field("domain", "the ntk pipeline needs a sphere")),
            }
            if !matches!(self.kernel.family, KernelFamily::Ntk2) {
                warnings.push("ntk pipeline always uses the ntk2 kernel for interpolation".into());
            }
        }
        if !(self.concentration.delta > 0.0 && self.concentration.delta < 1.0) {
            return Err(field("concentration.delta", "must lie in (0, 1)"));
        }
        if self.concentration.trials == 0 {
            return Err(field("concentration.trials", "must be >= 1"));
        }
        if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
            return Err(field("bootstrap.level", "must lie in (0, 1)"));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(field("beta", "must be positive"));
            }
        }
        let truth = self.truth();
        truth.validate(&self.domain).map_err(|e| field("truth", e))?;
        self.truth = Some(truth);
        Ok(warnings)
    }

    /// Writes the resolved config as `resolved_config.json` into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("resolved_config.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Reads, resolves and echoes a config. The echo goes to the config's
/// `output_dir` when set.
pub fn validate_config(path: &Path, verb: Verb) -> Result<(ExperimentConfig, Vec<String>)> {
    let mut cfg = ExperimentConfig::load(path)?;
    let warnings = cfg.resolve(verb)?;
    if let Some(dir) = &cfg.output_dir {
        cfg.write_resolved(dir)?;
    }
    Ok((cfg, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"kernel":{"family":"laplace"},"domain":{"kind":"torus","d":1},"n_grid":[256,64,128]}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let w = c.resolve(Verb::Scaling).unwrap();
        assert_eq!(c.n_grid, vec![64, 128, 256]);
        assert_eq!(w.len(), 1);
        assert_eq!(c.noise.sigma, 0.5);
        assert!(c.truth.is_some());
        assert_eq!(c.ntk.widths, vec![1024]);
    }

    #[test]
    fn errors_name_fields() {
        let bad = MINIMAL.replace("\"n_grid\"", "\"n_gird\"");
        let e = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("n_gird"), "{e}");
        let bad = MINIMAL.replace("[256,64,128]", "[256,\"x\"]");
        let e = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("n_grid"), "{e}");
    }

    #[test]
    fn zero_noise_needs_contrast() {
        let text = MINIMAL.replace("\"n_grid\"", "\"noise\":{\"sigma\":0},\"n_grid\"");
        let mut c = ExperimentConfig::from_json(&text).unwrap();
        let e = c.clone().resolve(Verb::Scaling).unwrap_err().to_string();
        assert!(e.contains("noise.sigma"), "{e}");
        c.contrast = true;
        assert!(c.resolve(Verb::Scaling).is_ok());
    }

    #[test]
    fn odd_width_and_negative_lambda() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.ntk.widths = vec![255];
        assert!(c.resolve(Verb::Scaling).unwrap_err().to_string().contains("ntk.widths"));
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.lambda_grid = LambdaGrid::Explicit(vec![0.1, -1.0]);
        assert!(c.resolve(Verb::Variance).unwrap_err().to_string().contains("lambda_grid"));
    }

    #[test]
    fn sobolev_beta() {
        let c = ExperimentConfig::from_json(
            r#"{"kernel":{"family":"periodic_fourier","d":1,"coefficients":{"sobolev":{"max_freq":64,"order":2}}},
                "domain":{"kind":"torus","d":1},"n_grid":[64]}"#,
        )
        .unwrap();
        assert_eq!(c.known_beta(), Some(4.0));
    }
}
