//! Numerical Hölder diagnostics for kernels.
//!
//! `estimate_holder` probes `|k(x₁,x₂) - k(y₁,y₂)|` against the pair
//! displacement `‖(x₁,x₂) - (y₁,y₂)‖` at log-spaced scales and regresses the
//! log of the worst increment per scale on the log scale.
//! `estimate_profile_holder` does the same in the scalar argument `t` of a
//! dot-product profile near `t = ±1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::KernelSpec;
use crate::geometry::{norm, reduce_angle, sample_iid, Domain};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::stats::linear_fit;
use crate::{Error, Result};

const MIN_DISTANCE: f64 = 1e-10;
const SCALES: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderEstimate {
    /// Fitted exponent, clipped to `(0, 1.5]`.
    pub exponent: f64,
    /// Smallest `L` with `|Δk| ≤ L ‖Δ‖^s` over all probes.
    pub constant: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// Scales that entered the fit.
    pub scales: usize,
}

fn perturb(domain: &Domain, x: &[f64], dir: &[f64], delta: f64) -> (Vec<f64>, f64) {
    let moved: Vec<f64> = x.iter().zip(dir).map(|(a, u)| a + delta * u).collect();
    match domain {
        Domain::Sphere { .. } => {
            let r = norm(&moved);
            let y: Vec<f64> = moved.iter().map(|v| v / r).collect();
            let dist = norm(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
            (y, dist)
        }
        // the kernel is periodic, so the unreduced step is the displacement
        Domain::Torus { .. } => (moved.iter().map(|&v| reduce_angle(v)).collect(), delta),
        Domain::Cube { .. } => {
            let y: Vec<f64> = moved.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let dist = norm(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
            (y, dist)
        }
    }
}

fn unit_direction(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 1e-8 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

fn fit_increments(rows: &[(f64, Vec<(f64, f64)>)]) -> Result<HolderEstimate> {
    let usable: Vec<&(f64, Vec<(f64, f64)>)> = rows
        .iter()
        .filter(|(_, probes)| probes.iter().any(|&(dist, _)| dist >= MIN_DISTANCE))
        .collect();
    if usable.is_empty() {
        return Err(Error::Fit(
            "degenerate probe set: every displacement is below 1e-10".into(),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, probes) in &usable {
        let valid: Vec<&(f64, f64)> = probes.iter().filter(|p| p.0 >= MIN_DISTANCE).collect();
        let worst = valid.iter().map(|p| p.1).fold(0.0, f64::max);
        if worst <= 0.0 {
            continue;
        }
        let mean_log_dist = valid.iter().map(|p| p.0.ln()).sum::<f64>() / valid.len() as f64;
        xs.push(mean_log_dist);
        ys.push(worst.ln());
    }
    if xs.is_empty() {
        // the kernel does not move at all: any exponent works, report the cap
        return Ok(HolderEstimate {
            exponent: 1.0,
            constant: 0.0,
            residual: 0.0,
            scales: 0,
        });
    }
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two probe scales with nonzero increments".into()));
    }
    let fit = linear_fit(&xs, &ys)?;
    let exponent = fit.slope.clamp(f64::EPSILON, 1.5);
    let constant = usable
        .iter()
        .flat_map(|(_, probes)| probes.iter())
        .filter(|p| p.0 >= MIN_DISTANCE)
        .map(|&(dist, inc)| inc / dist.powf(exponent))
        .fold(0.0, f64::max);
    Ok(HolderEstimate {
        exponent,
        constant,
        residual: fit.rms_residual,
        scales: xs.len(),
    })
}

/// Pair-space Hölder estimate from `probes` random perturbations spread
/// over log-spaced scales in `[1e-5, 1e-2]`. Half of the base pairs are
/// diagonal (`x₁ = x₂`), where kernels are least regular.
pub fn estimate_holder(
    spec: &KernelSpec,
    domain: &Domain,
    probes: usize,
    seed: u64,
) -> Result<HolderEstimate> {
    if probes < 100 {
        return Err(Error::config(format!("need at least 100 probes, got {probes}")));
    }
    spec.check_domain(domain)?;
    let d = domain.dim();
    let per_scale = probes.div_ceil(SCALES);
    let bases = sample_iid(domain, 2 * per_scale, derive_seed(seed, &[stream::PROBES, 0]))?;
    let mut rng = rng_from_seed(derive_seed(seed, &[stream::PROBES, 1]));
    let mut rows = Vec::with_capacity(SCALES);
    for s in 0..SCALES {
        let delta = 10f64.powf(-5.0 + 3.0 * s as f64 / (SCALES - 1) as f64);
        let mut incs = Vec::with_capacity(per_scale);
        for p in 0..per_scale {
            let x1 = bases.point(2 * p);
            let x2 = if p % 2 == 0 { x1 } else { bases.point(2 * p + 1) };
            // split the pair displacement evenly between the two points
            let step = delta / std::f64::consts::SQRT_2;
            let (y1, d1) = perturb(domain, x1, &unit_direction(&mut rng, d), step);
            let (y2, d2) = perturb(domain, x2, &unit_direction(&mut rng, d), step);
            let dist = (d1 * d1 + d2 * d2).sqrt();
            let inc = (spec.eval(x1, x2)? - spec.eval(&y1, &y2)?).abs();
            incs.push((dist, inc));
        }
        rows.push((delta, incs));
    }
    fit_increments(&rows)
}

/// Hölder exponent of a dot-product profile in `t` near the endpoints:
/// fits `max(|f(1-u) - f(1)|, |f(-1+u) - f(-1)|)` against `u`.
pub fn estimate_profile_holder(spec: &KernelSpec, probes: usize) -> Result<HolderEstimate> {
    let f = spec
        .profile()
        .ok_or_else(|| Error::Unsupported(format!("{} has no dot-product profile", spec.name())))?;
    if probes < 5 {
        return Err(Error::config("need at least 5 profile probes"));
    }
    let rows: Vec<(f64, Vec<(f64, f64)>)> = (0..probes)
        .map(|k| {
            let u = 10f64.powf(-10.0 + 8.0 * k as f64 / (probes - 1) as f64);
            let inc = (f(1.0 - u) - f(1.0)).abs().max((f(-1.0 + u) - f(-1.0)).abs());
            (u, vec![(u, inc)])
        })
        .collect();
    fit_increments(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_probe_sets() {
        let r = estimate_holder(&KernelSpec::gaussian(1.0), &Domain::Cube { d: 2 }, 50, 1);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn constant_kernel_reports_cap() {
        let h = estimate_holder(&KernelSpec::constant(1.0), &Domain::Torus { d: 1 }, 120, 3).unwrap();
        assert_eq!(h.exponent, 1.0);
        assert_eq!(h.constant, 0.0);
    }
}
