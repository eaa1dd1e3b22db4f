//! Translation-invariant kernels on the torus given by their Fourier
//! coefficients: `k(x, y) = Σ_{m ∈ Z^d} λ_m cos⟨m, x - y⟩` with `λ_{-m} = λ_m`.
//!
//! Frequencies are stored once per `±m` pair, in canonical form (first
//! nonzero component positive).

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::geometry::PointSet;
use crate::linalg::matmul;
use crate::{Error, Result};

/// A single Fourier coefficient `λ_m` (shared with `-m`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub freq: Vec<i64>,
    pub value: f64,
}

/// How the coefficients are given in a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierCoefficients {
    /// `λ_m = (1 + |m|²)^{-order}` for `max_k |m_k| ≤ max_freq`.
    Sobolev { max_freq: usize, order: f64 },
    /// Explicit list; each frequency stands for the pair `±m`.
    Explicit(Vec<FourierMode>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FourierKernelConfig {
    d: usize,
    coefficients: FourierCoefficients,
}

/// Which real basis function an eigenpair belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierPart {
    Constant,
    Cos,
    Sin,
}

/// One element of the real orthonormal Fourier basis of `L²(μ)`:
/// `1`, `√2 cos⟨m,x⟩` or `√2 sin⟨m,x⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierBasisFn {
    pub freq: Vec<i64>,
    pub part: FourierPart,
}

impl FourierBasisFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let phase = phase(&self.freq, x);
        match self.part {
            FourierPart::Constant => 1.0,
            FourierPart::Cos => std::f64::consts::SQRT_2 * phase.cos(),
            FourierPart::Sin => std::f64::consts::SQRT_2 * phase.sin(),
        }
    }
}

/// A periodic kernel with finitely many nonzero Fourier coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FourierKernelConfig", into = "FourierKernelConfig")]
pub struct FourierKernel {
    d: usize,
    source: FourierCoefficients,
    modes: Vec<FourierMode>,
}

impl TryFrom<FourierKernelConfig> for FourierKernel {
    type Error = Error;

    fn try_from(cfg: FourierKernelConfig) -> Result<Self> {
        FourierKernel::new(cfg.d, cfg.coefficients)
    }
}

impl From<FourierKernel> for FourierKernelConfig {
    fn from(k: FourierKernel) -> Self {
        FourierKernelConfig {
            d: k.d,
            coefficients: k.source,
        }
    }
}

fn is_zero(m: &[i64]) -> bool {
    m.iter().all(|&c| c == 0)
}

fn canonical(m: &[i64]) -> Vec<i64> {
    match m.iter().find(|&&c| c != 0) {
        Some(&c) if c < 0 => m.iter().map(|c| -c).collect(),
        _ => m.to_vec(),
    }
}

fn phase(m: &[i64], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(&mk, &xk)| mk as f64 * xk).sum()
}

impl FourierKernel {
    pub fn new(d: usize, coefficients: FourierCoefficients) -> Result<Self> {
        if d == 0 {
            return Err(Error::config("periodic kernel needs dimension d >= 1"));
        }
        let mut modes = match &coefficients {
            FourierCoefficients::Sobolev { max_freq, order } => {
                if !(*order > 0.0) {
                    return Err(Error::config("sobolev coefficient order must be positive"));
                }
                sobolev_modes(d, *max_freq as i64, *order)?
            }
            FourierCoefficients::Explicit(list) => {
                let mut out: Vec<FourierMode> = Vec::with_capacity(list.len());
                for mode in list {
                    if mode.freq.len() != d {
                        return Err(Error::config(format!(
                            "frequency {:?} does not have dimension {d}",
                            mode.freq
                        )));
                    }
                    if !mode.value.is_finite() {
                        return Err(Error::config("fourier coefficients must be finite"));
                    }
                    if mode.value < 0.0 {
                        return Err(Error::NotPsd(format!(
                            "negative fourier coefficient {} at frequency {:?}",
                            mode.value, mode.freq
                        )));
                    }
                    let freq = canonical(&mode.freq);
                    if out.iter().any(|m| m.freq == freq) {
                        return Err(Error::config(format!(
                            "frequency {:?} listed twice (±m share one coefficient)",
                            mode.freq
                        )));
                    }
                    out.push(FourierMode {
                        freq,
                        value: mode.value,
                    });
                }
                out
            }
        };
        modes.sort_by(|a, b| {
            let na: i64 = a.freq.iter().map(|c| c * c).sum();
            let nb: i64 = b.freq.iter().map(|c| c * c).sum();
            na.cmp(&nb).then_with(|| b.freq.cmp(&a.freq))
        });
        if modes.iter().all(|m| m.value == 0.0) {
            return Err(Error::config("periodic kernel has no nonzero coefficient"));
        }
        Ok(Self {
            d,
            source: coefficients,
            modes,
        })
    }

    /// Sobolev-type coefficients `(1 + m²)^{-order}` in one dimension.
    pub fn sobolev_1d(max_freq: usize, order: f64) -> Result<Self> {
        Self::new(1, FourierCoefficients::Sobolev { max_freq, order })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// The coefficients as configured.
    pub fn coefficients(&self) -> &FourierCoefficients {
        &self.source
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    /// `k(x, x) = λ_0 + 2 Σ_{m≠0} λ_m`.
    pub fn kappa_sq(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| if is_zero(&m.freq) { m.value } else { 2.0 * m.value })
            .sum()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.modes
            .iter()
            .filter(|m| m.value != 0.0)
            .map(|m| {
                if is_zero(&m.freq) {
                    m.value
                } else {
                    2.0 * m.value * phase(&m.freq, &diff).cos()
                }
            })
            .sum()
    }

    /// Eigenpairs of the integral operator, eigenvalues non-increasing.
    /// Nonzero frequencies contribute a cosine and a sine with the same
    /// eigenvalue; zero coefficients are dropped.
    pub fn eigenpairs(&self) -> Vec<(f64, FourierBasisFn)> {
        let mut pairs = Vec::with_capacity(2 * self.modes.len());
        for m in self.modes.iter().filter(|m| m.value > 0.0) {
            if is_zero(&m.freq) {
                pairs.push((
                    m.value,
                    FourierBasisFn {
                        freq: m.freq.clone(),
                        part: FourierPart::Constant,
                    },
                ));
            } else {
                for part in [FourierPart::Cos, FourierPart::Sin] {
                    pairs.push((
                        m.value,
                        FourierBasisFn {
                            freq: m.freq.clone(),
                            part,
                        },
                    ));
                }
            }
        }
        // stable: ties keep frequency order
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs
    }

    /// Feature matrix `Φ` (points × features) with `k(x, y) = Φ(x)·Φ(y)`.
    pub fn features(&self, points: &PointSet) -> Mat<f64> {
        let active: Vec<&FourierMode> = self.modes.iter().filter(|m| m.value > 0.0).collect();
        let width: usize = active
            .iter()
            .map(|m| if is_zero(&m.freq) { 1 } else { 2 })
            .sum();
        let mut phi = Mat::zeros(points.len(), width);
        for (i, x) in points.iter().enumerate() {
            let mut col = 0;
            for m in &active {
                if is_zero(&m.freq) {
                    phi[(i, col)] = m.value.sqrt();
                    col += 1;
                } else {
                    let amp = (2.0 * m.value).sqrt();
                    let (s, c) = phase(&m.freq, x).sin_cos();
                    phi[(i, col)] = amp * c;
                    phi[(i, col + 1)] = amp * s;
                    col += 2;
                }
            }
        }
        phi
    }

    /// Cross kernel matrix through the feature map.
    pub fn cross_matrix(&self, a: &PointSet, b: &PointSet) -> Mat<f64> {
        let fa = self.features(a);
        let fb = self.features(b);
        matmul(fa.as_ref(), fb.as_ref().transpose())
    }
}

fn sobolev_modes(d: usize, max_freq: i64, order: f64) -> Result<Vec<FourierMode>> {
    let side = (2 * max_freq + 1) as usize;
    let total = side
        .checked_pow(d as u32)
        .filter(|&t| t <= 20_000_000)
        .ok_or_else(|| Error::config("too many fourier modes"))?;
    let mut modes = Vec::with_capacity(total / 2 + 1);
    let mut m = vec![-max_freq; d];
    for _ in 0..total {
        if is_zero(&m) || canonical(&m) == m {
            let norm2: i64 = m.iter().map(|c| c * c).sum();
            modes.push(FourierMode {
                freq: m.clone(),
                value: (1.0 + norm2 as f64).powf(-order),
            });
        }
        for slot in m.iter_mut().rev() {
            *slot += 1;
            if *slot <= max_freq {
                break;
            }
            *slot = -max_freq;
        }
    }
    Ok(modes)
}
