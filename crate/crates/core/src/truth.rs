//! Regression functions `f*` used as ground truth.

use serde::{Deserialize, Serialize};

use crate::geometry::{quadrature, Domain, QuadratureGrid};
use crate::{Error, Result};

/// One real Fourier term `cos_amp · √2 cos⟨m,x⟩ + sin_amp · √2 sin⟨m,x⟩`
/// (or the constant `cos_amp` when `m = 0`), i.e. coefficients in the
/// orthonormal Fourier basis of the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Monomial `coef · Π_k x_k^{powers[k]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A target function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Truth {
    Zero,
    Constant { value: f64 },
    Fourier { terms: Vec<FourierTerm> },
    Polynomial { terms: Vec<Monomial> },
}

impl Default for Truth {
    fn default() -> Self {
        Truth::Zero
    }
}

impl Truth {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Truth::Zero => 0.0,
            Truth::Constant { value } => *value,
            Truth::Fourier { terms } => terms
                .iter()
                .map(|t| {
                    let phase: f64 = t.freq.iter().zip(x).map(|(&m, &v)| m as f64 * v).sum();
                    if t.freq.iter().all(|&m| m == 0) {
                        t.cos
                    } else {
                        std::f64::consts::SQRT_2 * (t.cos * phase.cos() + t.sin * phase.sin())
                    }
                })
                .sum(),
            Truth::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    t.coef
                        * t.powers
                            .iter()
                            .zip(x)
                            .map(|(&p, &v)| v.powi(p as i32))
                            .product::<f64>()
                })
                .sum(),
        }
    }

    pub fn eval_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        grid.nodes().iter().map(|x| self.eval(x)).collect()
    }

    /// Checks dimensions against the domain.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let d = domain.dim();
        match self {
            Truth::Fourier { terms } => {
                if !matches!(domain, Domain::Torus { .. }) {
                    return Err(Error::config("fourier truth needs a torus domain"));
                }
                if terms.iter().any(|t| t.freq.len() != d) {
                    return Err(Error::config(format!("fourier truth frequency not of dimension {d}")));
                }
            }
            Truth::Polynomial { terms } => {
                if terms.iter().any(|t| t.powers.len() != d) {
                    return Err(Error::config(format!("polynomial truth powers not of dimension {d}")));
                }
            }
            Truth::Zero | Truth::Constant { .. } => {}
        }
        Ok(())
    }

    /// `‖f‖_{L²(μ)}`: exact for Fourier and constant truths, by quadrature
    /// otherwise.
    pub fn l2_norm(&self, domain: &Domain) -> Result<f64> {
        Ok(match self {
            Truth::Zero => 0.0,
            Truth::Constant { value } => value.abs(),
            Truth::Fourier { terms } => {
                let mut seen: Vec<Vec<i64>> = Vec::new();
                for t in terms {
                    let c = canonical(&t.freq);
                    if seen.contains(&c) {
                        return Err(Error::config("fourier truth repeats a frequency"));
                    }
                    seen.push(c);
                }
                terms
                    .iter()
                    .map(|t| {
                        if t.freq.iter().all(|&m| m == 0) {
                            t.cos * t.cos
                        } else {
                            t.cos * t.cos + t.sin * t.sin
                        }
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            Truth::Polynomial { .. } => {
                let res = match domain {
                    Domain::Sphere { d } if *d > 3 => 12,
                    Domain::Sphere { .. } => 48,
                    Domain::Cube { d } | Domain::Torus { d } if *d > 2 => 16,
                    _ => 256,
                };
                let grid = quadrature(domain, res)?;
                grid.integrate(|x| self.eval(x).powi(2)).sqrt()
            }
        })
    }

    /// An upper bound on `sup_x |f(x)|` over the domain.
    pub fn sup_bound(&self, domain: &Domain) -> f64 {
        match self {
            Truth::Zero => 0.0,
            Truth::Constant { value } => value.abs(),
            Truth::Fourier { terms } => terms
                .iter()
                .map(|t| {
                    if t.freq.iter().all(|&m| m == 0) {
                        t.cos.abs()
                    } else {
                        std::f64::consts::SQRT_2 * t.cos.hypot(t.sin)
                    }
                })
                .sum(),
            // every coordinate of the sphere, cube and torus is bounded by
            // 1, 1 and π respectively
            Truth::Polynomial { terms } => {
                let r = match domain {
                    Domain::Torus { .. } => std::f64::consts::PI,
                    _ => 1.0,
                };
                terms
                    .iter()
                    .map(|t| t.coef.abs() * r.powi(t.powers.iter().sum::<u32>() as i32))
                    .sum()
            }
        }
    }
}

fn canonical(m: &[i64]) -> Vec<i64> {
    match m.iter().find(|&&c| c != 0) {
        Some(&c) if c < 0 => m.iter().map(|c| -c).collect(),
        _ => m.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_norm_matches_quadrature() {
        let f = Truth::Fourier {
            terms: vec![
                FourierTerm { freq: vec![0], cos: 0.3, sin: 0.0 },
                FourierTerm { freq: vec![2], cos: 0.5, sin: -0.2 },
            ],
        };
        let dom = Domain::Torus { d: 1 };
        let grid = quadrature(&dom, 64).unwrap();
        let quad = grid.integrate(|x| f.eval(x).powi(2)).sqrt();
        assert!((f.l2_norm(&dom).unwrap() - quad).abs() < 1e-12);
    }

    #[test]
    fn polynomial_on_sphere() {
        // E[x₀²] = 1/3 on the 2-sphere
        let f = Truth::Polynomial {
            terms: vec![Monomial { coef: 1.0, powers: vec![1, 0, 0] }],
        };
        let n = f.l2_norm(&Domain::Sphere { d: 3 }).unwrap();
        assert!((n * n - 1.0 / 3.0).abs() < 1e-10);
    }
}
