//! Input domains, i.i.d. samplers for their uniform measures, and quadrature
//! grids for integrating against those measures.

pub mod gauss;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Largest sphere dimension for which a product quadrature is offered.
pub const MAX_SPHERE_QUADRATURE_DIM: usize = 8;

/// Upper limit on the number of nodes of a tensor-product grid.
pub const MAX_GRID_NODES: usize = 50_000_000;

/// A compact input domain equipped with its uniform probability measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    /// Unit sphere `S^{d-1}` in `R^d`.
    Sphere { d: usize },
    /// `[-π, π)^d` with periodic identification.
    Torus { d: usize },
    /// `[0, 1]^d`.
    Cube { d: usize },
}

impl Domain {
    /// Ambient dimension of the points.
    pub fn dim(&self) -> usize {
        match *self {
            Domain::Sphere { d } | Domain::Torus { d } | Domain::Cube { d } => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Sphere { d } if d < 2 => Err(Error::config(format!(
                "sphere needs ambient dimension d >= 2, got {d}"
            ))),
            Domain::Torus { d } | Domain::Cube { d } if d < 1 => Err(Error::config(format!(
                "{} needs dimension d >= 1",
                self.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::Sphere { .. } => "sphere",
            Domain::Torus { .. } => "torus",
            Domain::Cube { .. } => "cube",
        }
    }

    /// Whether `p` lies on the domain (spheres to 1e-12 in norm).
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Sphere { .. } => (norm(p) - 1.0).abs() <= 1e-12,
            Domain::Torus { .. } => p.iter().all(|&x| (-PI..PI).contains(&x)),
            Domain::Cube { .. } => p.iter().all(|&x| (0.0..=1.0).contains(&x)),
        }
    }
}

/// `a mod [-π, π)`, i.e. `((a + π) mod 2π) - π`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if r >= PI {
        -PI
    } else {
        r
    }
}

pub fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A list of points of fixed dimension, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::config(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config("empty point list"))?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::config("points have inconsistent dimensions"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    pub fn clear(&mut self) {
        self.coords.clear();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// First pair of points closer than `tol` in Euclidean norm.
    pub fn find_duplicate(&self, tol: f64) -> Option<(usize, usize)> {
        let tol2 = tol * tol;
        for i in 0..self.len() {
            let pi = self.point(i);
            for j in (i + 1)..self.len() {
                let d2: f64 = pi
                    .iter()
                    .zip(self.point(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 < tol2 {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// How a grid approximates integration against `μ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Deterministic product rule.
    Quadrature,
    /// Equal-weight i.i.d. nodes; integrals carry a Monte Carlo standard error.
    MonteCarlo,
}

/// Nodes and probability weights realizing `∫ · dμ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    nodes: PointSet,
    weights: Vec<f64>,
    kind: GridKind,
}

impl QuadratureGrid {
    pub fn new(nodes: PointSet, mut weights: Vec<f64>, kind: GridKind) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::config(format!(
                "grid has {} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("quadrature weights must be nonnegative"));
        }
        gauss::normalize(&mut weights);
        Ok(Self {
            nodes,
            weights,
            kind,
        })
    }

    /// Equal-weight grid of `count` i.i.d. samples from `μ`.
    pub fn monte_carlo(domain: &Domain, count: usize, seed: u64) -> Result<Self> {
        let nodes = sample_iid(domain, count, seed)?;
        let weights = vec![1.0 / count as f64; count];
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::MonteCarlo,
        })
    }

    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// Weighted sum of precomputed node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len(), "one value per node expected");
        values.iter().zip(&self.weights).map(|(v, w)| w * v).sum()
    }

    /// Standard error of a Monte Carlo integral from node values; zero for
    /// deterministic rules.
    pub fn standard_error(&self, values: &[f64]) -> f64 {
        match self.kind {
            GridKind::Quadrature => 0.0,
            GridKind::MonteCarlo => {
                let n = values.len() as f64;
                if values.len() < 2 {
                    return f64::INFINITY;
                }
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            }
        }
    }
}

/// Draws `n` i.i.d. points from the uniform measure on `domain`.
///
/// Spheres are sampled by normalizing standard Gaussian vectors.
pub fn sample_iid(domain: &Domain, n: usize, seed: u64) -> Result<PointSet> {
    domain.validate()?;
    if n == 0 {
        return Err(Error::config("sample size must be at least 1"));
    }
    let d = domain.dim();
    let mut rng = rng_from_seed(seed);
    let mut coords = Vec::with_capacity(n * d);
    match domain {
        Domain::Sphere { .. } => {
            let mut buf = vec![0.0; d];
            for _ in 0..n {
                loop {
                    for b in buf.iter_mut() {
                        *b = rng.sample(StandardNormal);
                    }
                    let r = norm(&buf);
                    if r > 1e-150 {
                        coords.extend(buf.iter().map(|b| b / r));
                        break;
                    }
                }
            }
        }
        Domain::Torus { .. } => {
            for _ in 0..n * d {
                coords.push(reduce_angle(rng.gen_range(-PI..PI)));
            }
        }
        Domain::Cube { .. } => {
            for _ in 0..n * d {
                coords.push(rng.gen::<f64>());
            }
        }
    }
    PointSet::new(d, coords)
}

/// Deterministic product quadrature for `μ`.
///
/// * torus: uniform tensor grid `-π + 2πk/R`, exact for trigonometric
///   polynomials of degree `< R` per axis;
/// * cube: tensor midpoint rule;
/// * sphere `S^{d-1}`, `d ≤ 8`: recursive product rule, Gauss–Gegenbauer in
///   each polar coordinate (`R` nodes) and `2R` equispaced azimuth nodes,
///   exact for polynomials of degree `2R - 1`.
pub fn quadrature(domain: &Domain, resolution: usize) -> Result<QuadratureGrid> {
    domain.validate()?;
    if resolution < 2 {
        return Err(Error::config(format!(
            "quadrature resolution must be >= 2, got {resolution}"
        )));
    }
    let d = domain.dim();
    match domain {
        Domain::Torus { .. } | Domain::Cube { .. } => {
            let count = checked_pow(resolution, d)?;
            let axis: Vec<f64> = (0..resolution)
                .map(|k| match domain {
                    Domain::Torus { .. } => -PI + 2.0 * PI * k as f64 / resolution as f64,
                    _ => (k as f64 + 0.5) / resolution as f64,
                })
                .collect();
            let mut coords = Vec::with_capacity(count * d);
            let mut idx = vec![0usize; d];
            for _ in 0..count {
                coords.extend(idx.iter().map(|&i| axis[i]));
                for slot in idx.iter_mut().rev() {
                    *slot += 1;
                    if *slot < resolution {
                        break;
                    }
                    *slot = 0;
                }
            }
            QuadratureGrid::new(
                PointSet::new(d, coords)?,
                vec![1.0; count],
                GridKind::Quadrature,
            )
        }
        Domain::Sphere { .. } => {
            if d > MAX_SPHERE_QUADRATURE_DIM {
                return Err(Error::Unsupported(format!(
                    "no product quadrature for spheres in dimension {d} > {MAX_SPHERE_QUADRATURE_DIM}; \
                     use a Monte Carlo grid instead"
                )));
            }
            let count = checked_pow(resolution, d - 2)?
                .checked_mul(2 * resolution)
                .filter(|&c| c <= MAX_GRID_NODES)
                .ok_or_else(|| Error::config("sphere quadrature grid too large"))?;
            let (points, weights) = sphere_rule(d, resolution)?;
            debug_assert_eq!(weights.len(), count);
            QuadratureGrid::new(PointSet::new(d, points)?, weights, GridKind::Quadrature)
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .filter(|&c| c <= MAX_GRID_NODES)
        .ok_or_else(|| Error::config(format!("grid with {base}^{exp} nodes is too large")))
}

// Points on S^{d-1} written as (t, sqrt(1-t²)·y) with y on S^{d-2}; under the
// uniform measure t has density ∝ (1-t²)^{(d-3)/2}.
fn sphere_rule(d: usize, resolution: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if d == 2 {
        let m = 2 * resolution;
        let mut pts = Vec::with_capacity(2 * m);
        for k in 0..m {
            let phi = 2.0 * PI * k as f64 / m as f64;
            pts.push(phi.cos());
            pts.push(phi.sin());
        }
        return Ok((pts, vec![1.0 / m as f64; m]));
    }
    let (ts, tw) = gauss::gauss_gegenbauer(resolution, (d as f64 - 3.0) / 2.0)?;
    let (sub, sub_w) = sphere_rule(d - 1, resolution)?;
    let mut pts = Vec::with_capacity(ts.len() * sub_w.len() * d);
    let mut weights = Vec::with_capacity(ts.len() * sub_w.len());
    for (&t, &wt) in ts.iter().zip(&tw) {
        let r = (1.0 - t * t).max(0.0).sqrt();
        for (y, &wy) in sub.chunks_exact(d - 1).zip(&sub_w) {
            pts.push(t);
            pts.extend(y.iter().map(|c| r * c));
            weights.push(wt * wy);
        }
    }
    Ok((pts, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_samples_are_unit_norm() {
        let pts = sample_iid(&Domain::Sphere { d: 3 }, 1000, 11).unwrap();
        assert_eq!(pts.len(), 1000);
        for p in pts.iter() {
            assert!((norm(p) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn torus_samples_have_zero_cosine_mean() {
        let n = 100_000;
        let pts = sample_iid(&Domain::Torus { d: 1 }, n, 3).unwrap();
        assert!(pts.iter().all(|p| (-PI..PI).contains(&p[0])));
        let vals: Vec<f64> = pts.iter().map(|p| p[0].cos()).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        // Var[cos X] = 1/2 under the uniform law
        let band = 3.0 * (0.5 / n as f64).sqrt();
        assert!(mean.abs() < band, "mean {mean} outside ±{band}");
    }

    #[test]
    fn cube_samples_have_centered_mean() {
        let n = 100_000;
        let pts = sample_iid(&Domain::Cube { d: 2 }, n, 5).unwrap();
        let band = 3.0 * (1.0 / 12.0 / n as f64).sqrt();
        for axis in 0..2 {
            let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            assert!((mean - 0.5).abs() < band);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let dom = Domain::Sphere { d: 4 };
        assert_eq!(
            sample_iid(&dom, 50, 9).unwrap(),
            sample_iid(&dom, 50, 9).unwrap()
        );
        assert_ne!(
            sample_iid(&dom, 50, 9).unwrap(),
            sample_iid(&dom, 50, 10).unwrap()
        );
    }

    #[test]
    fn invalid_domains_are_config_errors() {
        assert!(matches!(
            sample_iid(&Domain::Sphere { d: 1 }, 3, 0),
            Err(Error::Config(_))
        ));
        assert!(sample_iid(&Domain::Torus { d: 0 }, 3, 0).is_err());
        assert!(sample_iid(&Domain::Cube { d: 1 }, 0, 0).is_err());
    }

    #[test]
    fn torus_quadrature_kills_cosine() {
        let g = quadrature(&Domain::Torus { d: 1 }, 256).unwrap();
        assert!(g.integrate(|x| x[0].cos()).abs() < 1e-12);
        assert!((g.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_quadrature_mean() {
        let g = quadrature(&Domain::Cube { d: 1 }, 100).unwrap();
        assert!((g.integrate(|x| x[0]) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn sphere_quadrature_second_moment() {
        let g = quadrature(&Domain::Sphere { d: 3 }, 32).unwrap();
        let weight_sum: f64 = g.weights().iter().sum();
        assert!((weight_sum - 1.0).abs() < 1e-12);
        let m2 = g.integrate(|x| x[0] * x[0]);
        assert!((m2 - 1.0 / 3.0).abs() < 1e-8);
        // second moment along a non-polar axis as well
        let m2y = g.integrate(|x| x[1] * x[1]);
        assert!((m2y - 1.0 / 3.0).abs() < 1e-8);
        for p in g.nodes().iter() {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn high_dimensional_sphere_quadrature() {
        // E[x_i^2] = 1/d and E[x_1^4] = 3/(d(d+2)) on S^{d-1}
        for d in [2usize, 4, 5] {
            let g = quadrature(&Domain::Sphere { d }, 6).unwrap();
            let m2 = g.integrate(|x| x[d - 1] * x[d - 1]);
            let m4 = g.integrate(|x| x[0].powi(4));
            assert!((m2 - 1.0 / d as f64).abs() < 1e-12, "d={d}");
            assert!((m4 - 3.0 / (d * (d + 2)) as f64).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn sphere_quadrature_dimension_limit() {
        assert!(matches!(
            quadrature(&Domain::Sphere { d: 9 }, 4),
            Err(Error::Unsupported(_))
        ));
        assert!(quadrature(&Domain::Torus { d: 1 }, 1).is_err());
    }

    #[test]
    fn angle_reduction() {
        assert_eq!(reduce_angle(PI), -PI);
        assert!((reduce_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert_eq!(reduce_angle(0.25), 0.25);
    }

    #[test]
    fn domain_json_shape() {
        let d: Domain = serde_json::from_str(r#"{"kind":"sphere","d":3}"#).unwrap();
        assert_eq!(d, Domain::Sphere { d: 3 });
        assert_eq!(
            serde_json::to_string(&Domain::Torus { d: 1 }).unwrap(),
            r#"{"kind":"torus","d":1}"#
        );
    }

    #[test]
    fn duplicate_detection() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(p.find_duplicate(1e-12), Some((0, 2)));
    }
}
