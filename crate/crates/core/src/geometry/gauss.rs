//! Gauss rules for the one-dimensional factors of product quadratures.

use faer::Mat;

use crate::linalg::SymmetricEigen;
use crate::{Error, Result};

/// Gauss rule on `[-1, 1]` for the weight `(1 - t²)^a`, `a ≥ 0`, with weights
/// normalized to sum to one (a probability measure on `t`).
///
/// Nodes come from the Golub–Welsch eigenproblem of the Jacobi matrix of the
/// Gegenbauer recurrence; the rule is exact for polynomials of degree
/// `2q - 1`.
pub fn gauss_gegenbauer(q: usize, a: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if q == 0 {
        return Err(Error::config("gauss rule needs at least one node"));
    }
    if !(a >= 0.0) {
        return Err(Error::config(format!(
            "gauss-gegenbauer exponent must be >= 0, got {a}"
        )));
    }
    let off = |k: usize| {
        let k = k as f64;
        (k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0))).sqrt()
    };
    let jacobi = Mat::from_fn(q, q, |i, j| {
        if i + 1 == j {
            off(j)
        } else if j + 1 == i {
            off(i)
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi.as_ref())?;
    let vectors = eig.vectors();
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for k in 0..q {
        nodes.push(eig.values()[k]);
        let v0 = vectors[(0, k)];
        weights.push(v0 * v0);
    }
    symmetrize(&mut nodes, &mut weights);
    normalize(&mut weights);
    Ok((nodes, weights))
}

/// Gauss–Legendre rule on `[-1, 1]` with weights summing to one.
pub fn gauss_legendre(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_gegenbauer(q, 0.0)
}

// The weight is even, so the exact rule is symmetric about zero; averaging
// mirrored pairs removes the eigensolver's O(eps) asymmetry.
fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let q = nodes.len();
    for k in 0..q / 2 {
        let j = q - 1 - k;
        let t = 0.5 * (nodes[j] - nodes[k]);
        nodes[k] = -t;
        nodes[j] = t;
        let w = 0.5 * (weights[k] + weights[j]);
        weights[k] = w;
        weights[j] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
}

pub(crate) fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_moments_are_exact() {
        let (t, w) = gauss_legendre(8).unwrap();
        // E[t^k] under uniform(-1,1): 1/(k+1) for even k
        for k in 0..16 {
            let m: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(k)).sum();
            let exact = if k % 2 == 0 { 1.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((m - exact).abs() < 1e-14, "k={k}: {m} vs {exact}");
        }
    }

    #[test]
    fn gegenbauer_second_moment() {
        // weight (1-t²)^a normalized: E[t²] = 1 / (2a + 3)
        for &a in &[0.5, 1.0, 2.5] {
            let (t, w) = gauss_gegenbauer(10, a).unwrap();
            let m: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
            assert!((m - 1.0 / (2.0 * a + 3.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_negative_exponent() {
        assert!(gauss_gegenbauer(4, -0.5).is_err());
    }
}
