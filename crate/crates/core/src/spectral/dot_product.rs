//! Block spectra of dot-product kernels on the sphere `S^{d-1}`.
//!
//! With `ν` the law of `⟨x, e⟩` for `x ~ μ` (density `∝ (1 - t²)^{(d-3)/2}`)
//! and `P_n` the Gegenbauer polynomials normalized by `P_n(1) = 1`,
//! `f(t) = Σ_n μ_n a_n P_n(t)` where `μ_n = ∫ f P_n dν` is an eigenvalue of
//! multiplicity `a_n = dim` of degree-`n` spherical harmonics.
//!
//! The projection integral is taken in the polar angle `θ = arccos t` with
//! Gauss–Legendre nodes: profiles such as the ReLU NTK have `√(1 - t²)`
//! endpoint singularities in `t` but are analytic in `θ`.

use serde::{Deserialize, Serialize};

use crate::geometry::gauss::gauss_legendre;
use crate::{Error, Result};

/// Relative agreement required between resolutions `Q` and `2Q`.
pub const QUAD_REL_TOL: f64 = 1e-6;
/// Blocks smaller than this fraction of the largest are exact zeros.
pub const ZERO_BLOCK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub degree: usize,
    pub mu: f64,
    pub multiplicity: f64,
}

/// `a_n = (2n + d - 2)/(n + d - 2) · C(n + d - 2, n)`.
pub fn harmonic_dimension(n: usize, d: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let df = d as f64;
    let mut binom = 1.0;
    for k in 1..=n {
        binom *= (k + d - 2) as f64 / k as f64;
    }
    // an integer; rounding removes the product's round-off
    ((2.0 * nf + df - 2.0) / (nf + df - 2.0) * binom).round()
}

/// `P_0(t), …, P_{n_max}(t)` normalized so that `P_n(1) = 1`.
pub fn gegenbauer_normalized(t: f64, d: usize, n_max: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(1.0);
    if n_max >= 1 {
        p.push(t);
    }
    let df = d as f64;
    for n in 1..n_max {
        let nf = n as f64;
        let next = ((2.0 * nf + df - 2.0) * t * p[n] - nf * p[n - 1]) / (nf + df - 2.0);
        p.push(next);
    }
    p
}

fn project(f: &dyn Fn(f64) -> f64, d: usize, n_max: usize, q: usize) -> Result<Vec<f64>> {
    let (nodes, weights) = gauss_legendre(q)?;
    let pi = std::f64::consts::PI;
    let mut mu = vec![0.0; n_max + 1];
    let mut total = 0.0;
    for (&s, &w) in nodes.iter().zip(&weights) {
        let theta = 0.5 * pi * (s + 1.0);
        let w = w * theta.sin().powi(d as i32 - 2);
        let t = theta.cos();
        let ft = f(t);
        total += w;
        for (m, p) in mu.iter_mut().zip(gegenbauer_normalized(t, d, n_max)) {
            *m += w * ft * p;
        }
    }
    Ok(mu.into_iter().map(|m| m / total).collect())
}

/// `μ_0, …, μ_{n_max}`, converged between `quad_res` and `2 quad_res` nodes.
pub fn gegenbauer_coefficients(
    f: &dyn Fn(f64) -> f64,
    d: usize,
    n_max: usize,
    quad_res: usize,
) -> Result<Vec<f64>> {
    let coarse = project(f, d, n_max, quad_res)?;
    let fine = project(f, d, n_max, 2 * quad_res)?;
    let scale = fine.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for (n, (a, b)) in coarse.iter().zip(&fine).enumerate() {
        // changes below the zero-block floor are round-off
        let allowed = (QUAD_REL_TOL * b.abs()).max(ZERO_BLOCK_TOL * scale);
        if (a - b).abs() > allowed {
            return Err(Error::Quadrature(format!(
                "degree {n} coefficient changed from {a:e} to {b:e} when doubling the \
                 resolution from {quad_res}; increase quad_res"
            )));
        }
    }
    Ok(fine)
}

/// Block spectrum of the profile `f` on `S^{d-1}`. Negligible blocks are set
/// to exactly zero; clearly negative ones mean `f` is not positive definite.
pub fn blocks(
    f: &dyn Fn(f64) -> f64,
    d: usize,
    n_max: usize,
    quad_res: usize,
) -> Result<Vec<Block>> {
    let mu = gegenbauer_coefficients(f, d, n_max, quad_res)?;
    let scale = mu.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut out = Vec::with_capacity(mu.len());
    for (n, &m) in mu.iter().enumerate() {
        let m = if m.abs() <= ZERO_BLOCK_TOL * scale { 0.0 } else { m };
        if m < 0.0 {
            return Err(Error::NotPsd(format!(
                "degree {n} block has negative eigenvalue {m:e}"
            )));
        }
        out.push(Block {
            degree: n,
            mu: m,
            multiplicity: harmonic_dimension(n, d),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_dimensions() {
        // d = 3: 2n + 1
        for n in 0..10 {
            assert_eq!(harmonic_dimension(n, 3), (2 * n + 1) as f64);
        }
        // d = 4: (n + 1)²
        for n in 0..10 {
            assert!((harmonic_dimension(n, 4) - ((n + 1) * (n + 1)) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn legendre_recurrence() {
        let p = gegenbauer_normalized(0.3, 3, 3);
        assert!((p[2] - 0.5 * (3.0 * 0.09 - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * 0.027 - 3.0 * 0.3)).abs() < 1e-15);
        for n in 0..20 {
            assert!((gegenbauer_normalized(1.0, 5, 20)[n] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn addition_theorem_reconstructs_profile() {
        let f = |t: f64| (2.0 * t).exp();
        let b = blocks(&f, 4, 30, 64).unwrap();
        for &t in &[-0.9, -0.1, 0.5, 1.0] {
            let p = gegenbauer_normalized(t, 4, 30);
            let s: f64 = b.iter().map(|bl| bl.mu * bl.multiplicity * p[bl.degree]).sum();
            assert!((s - f(t)).abs() < 1e-9 * f(t), "t={t} {s} {}", f(t));
        }
    }

    #[test]
    fn coarse_grid_is_reported() {
        let f = |t: f64| (8.0 * t).exp();
        assert!(matches!(blocks(&f, 3, 40, 10), Err(Error::Quadrature(_))));
    }
}
