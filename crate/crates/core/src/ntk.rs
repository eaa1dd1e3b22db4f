//! Two-layer ReLU network `f(x; θ) = √(2/m) Σ_r a_r relu(⟨w_r, x⟩)` trained
//! by full-batch gradient descent on `L(θ) = 1/(2n) Σ_i (y_i - f(x_i; θ))²`,
//! and its comparison with minimum-norm interpolation in the NTK
//! `k(x, y) = (2/π)(π - arccos⟨x,y⟩)⟨x,y⟩ + (1/π)√(1 - ⟨x,y⟩²)`.
//!
//! Both layers are trained. The ReLU derivative at exactly 0 is taken as 0.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::estimators::{fit, predict, FitResult};
use crate::geometry::PointSet;
use crate::kernels::KernelSpec;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Loss below which training stops.
pub const LOSS_TOL: f64 = 1e-8;
/// Loss growth factor (over the initial loss) treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
const MONOTONE_SLACK: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;
/// Accepted steps after which a halved step size is doubled again (never
/// beyond the initial one). Without this, rejections at ReLU kinks compound
/// and training stalls.
const REGROW_AFTER: usize = 50;

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Network parameters. Neurons `r` and `m/2 + r` start as mirrored pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkState {
    m: usize,
    d: usize,
    /// Inner weights, `m × d` row-major.
    w: Vec<f64>,
    a: Vec<f64>,
}

/// Symmetric initialization: `a_r, w_r ~ N(0, 1)` i.i.d. for `r < m/2`,
/// then `a_{m/2+r} = -a_r`, `w_{m/2+r} = w_r`, so `f(·; θ(0)) ≡ 0`.
pub fn init_symmetric(m: usize, d: usize, seed: u64) -> Result<NetworkState> {
    if m < 2 || m % 2 == 1 {
        return Err(Error::config(format!("network width must be even and >= 2, got {m}")));
    }
    if d == 0 {
        return Err(Error::config("input dimension must be positive"));
    }
    let l = m / 2;
    let mut rng = rng_from_seed(seed);
    let mut w = vec![0.0; m * d];
    let mut a = vec![0.0; m];
    for r in 0..l {
        for k in 0..d {
            let v: f64 = rng.sample(StandardNormal);
            w[r * d + k] = v;
            w[(l + r) * d + k] = v;
        }
        let v: f64 = rng.sample(StandardNormal);
        a[r] = v;
        a[l + r] = -v;
    }
    Ok(NetworkState { m, d, w, a })
}

impl NetworkState {
    pub fn width(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn outer(&self) -> &[f64] {
        &self.a
    }

    pub fn inner(&self, r: usize) -> &[f64] {
        &self.w[r * self.d..(r + 1) * self.d]
    }

    fn scale(&self) -> f64 {
        (2.0 / self.m as f64).sqrt()
    }

    fn pre(&self, r: usize, x: &[f64]) -> f64 {
        self.inner(r).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `f(x; θ)`. Mirrored neurons are summed pairwise so the symmetric
    /// initialization cancels exactly.
    pub fn forward(&self, x: &[f64]) -> f64 {
        let l = self.m / 2;
        let mut s = 0.0;
        for r in 0..l {
            s += self.a[r] * relu(self.pre(r, x)) + self.a[l + r] * relu(self.pre(l + r, x));
        }
        self.scale() * s
    }

    pub fn predict(&self, points: &PointSet) -> Vec<f64> {
        points.iter().map(|x| self.forward(x)).collect()
    }

    /// Flattened parameter vector `(a, w)`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.a.clone();
        p.extend_from_slice(&self.w);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.m * (self.d + 1), "parameter length mismatch");
        self.a.copy_from_slice(&p[..self.m]);
        self.w.copy_from_slice(&p[self.m..]);
    }
}

fn check_data(state: &NetworkState, x: &PointSet, y: &[f64]) -> Result<()> {
    if x.dim() != state.d {
        return Err(Error::config(format!(
            "inputs of dimension {} for a network of input dimension {}",
            x.dim(),
            state.d
        )));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::config(format!("{} inputs and {} targets", x.len(), y.len())));
    }
    Ok(())
}

/// `L(θ) = 1/(2n) Σ (y_i - f(x_i))²`.
pub fn loss(state: &NetworkState, x: &PointSet, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    x.iter()
        .zip(y)
        .map(|(p, t)| (t - state.forward(p)).powi(2))
        .sum::<f64>()
        / (2.0 * n)
}

/// `∂L/∂θ` in the layout of [`NetworkState::params`], together with the
/// loss at `θ`.
pub fn gradient(state: &NetworkState, x: &PointSet, y: &[f64]) -> (Vec<f64>, f64) {
    let (m, d) = (state.m, state.d);
    let n = y.len();
    let scale = state.scale();
    // pre-activations, neuron-major
    let mut pre = vec![0.0; m * n];
    for r in 0..m {
        for (i, p) in x.iter().enumerate() {
            pre[r * n + i] = state.pre(r, p);
        }
    }
    let l = m / 2;
    let mut resid = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for r in 0..l {
            s += state.a[r] * relu(pre[r * n + i]) + state.a[l + r] * relu(pre[(l + r) * n + i]);
        }
        resid[i] = y[i] - scale * s;
    }
    let loss = resid.iter().map(|e| e * e).sum::<f64>() / (2.0 * n as f64);
    let c = -scale / n as f64;
    let mut grad = vec![0.0; m * (d + 1)];
    for r in 0..m {
        let mut ga = 0.0;
        let gw = &mut grad[m + r * d..m + (r + 1) * d];
        for (i, p) in x.iter().enumerate() {
            let z = pre[r * n + i];
            if z > 0.0 {
                ga += resid[i] * z;
                let coef = resid[i] * state.a[r];
                for (g, xk) in gw.iter_mut().zip(p) {
                    *g += coef * xk;
                }
            }
        }
        for g in gw.iter_mut() {
            *g *= c;
        }
        grad[r] = c * ga;
    }
    (grad, loss)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint {
    pub step: usize,
    pub loss: f64,
    pub predictions: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Halving {
    pub step: usize,
    pub eta: f64,
}

/// Training record: losses per accepted step, step-size halvings (a halved
/// step size is doubled back after a run of accepted steps) and
/// predictions at logarithmic checkpoints (steps 0, 1, 2, 4, … and the last).
#[derive(Clone, Debug, Serialize)]
pub struct TrainTrace {
    pub eta: f64,
    pub final_eta: f64,
    pub steps: usize,
    pub losses: Vec<f64>,
    pub halvings: Vec<Halving>,
    pub checkpoints: Vec<Checkpoint>,
    pub converged: bool,
    #[serde(skip)]
    pub state: NetworkState,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Stop once the loss falls below this (default 1e-8).
    pub tol: Option<f64>,
    /// Points at which checkpoint predictions are recorded.
    pub eval_grid: Option<PointSet>,
}

/// Full-batch gradient descent with the default options.
pub fn train_gd(state: NetworkState, x: &PointSet, y: &[f64], eta: f64, steps: usize) -> Result<TrainTrace> {
    train_gd_with(state, x, y, eta, steps, &TrainOptions::default())
}

/// Full-batch gradient descent. A step that increases the loss is rejected
/// and retried with half the step size; a loss beyond `10⁶ ×` the initial
/// loss is reported as divergence.
pub fn train_gd_with(
    mut state: NetworkState,
    x: &PointSet,
    y: &[f64],
    eta: f64,
    steps: usize,
    opts: &TrainOptions,
) -> Result<TrainTrace> {
    check_data(&state, x, y)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::config(format!("step size must be positive, got {eta}")));
    }
    let tol = opts.tol.unwrap_or(LOSS_TOL);
    let (mut grad, mut current) = gradient(&state, x, y);
    let initial = current;
    let mut losses = vec![current];
    let mut halvings = Vec::new();
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = 0usize;
    let record = |step: usize, loss: f64, state: &NetworkState, cps: &mut Vec<Checkpoint>| {
        if let Some(g) = &opts.eval_grid {
            cps.push(Checkpoint {
                step,
                loss,
                predictions: state.predict(g),
            });
        }
    };
    let mut h = eta;
    let mut streak = 0usize;
    let mut step = 0;
    while step < steps && current >= tol {
        if step == next_checkpoint {
            record(step, current, &state, &mut checkpoints);
            next_checkpoint = (2 * next_checkpoint).max(1);
        }
        let params = state.params();
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - h * g).collect();
            state.set_params(&trial);
            let (g_new, l_new) = gradient(&state, x, y);
            if !l_new.is_finite() || (initial > 0.0 && l_new > DIVERGENCE_FACTOR * initial) {
                return Err(Error::Divergence {
                    step: step + 1,
                    loss: l_new,
                    last_stable: step,
                });
            }
            if l_new <= current + MONOTONE_SLACK {
                grad = g_new;
                current = l_new;
                accepted = true;
                break;
            }
            h *= 0.5;
            streak = 0;
            halvings.push(Halving { step: step + 1, eta: h });
            log::debug!("step {}: loss rose, halving step size to {h:e}", step + 1);
        }
        if !accepted {
            return Err(Error::Divergence {
                step: step + 1,
                loss: current,
                last_stable: step,
            });
        }
        step += 1;
        streak += 1;
        if streak >= REGROW_AFTER && h < eta {
            h = (2.0 * h).min(eta);
            streak = 0;
        }
        losses.push(current);
    }
    if checkpoints.last().is_none_or(|c| c.step != step) {
        record(step, current, &state, &mut checkpoints);
    }
    Ok(TrainTrace {
        eta,
        final_eta: h,
        steps: step,
        losses,
        halvings,
        checkpoints,
        converged: current < tol,
        state,
    })
}

impl TrainTrace {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("trace holds the initial loss")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        w.write_record(["step", "loss"])?;
        for (k, l) in self.losses.iter().enumerate() {
            w.write_record([k.to_string(), format!("{l:e}")])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Minimum-norm interpolation with the NTK.
pub fn ntk_interpolator(x: &PointSet, y: &[f64]) -> Result<FitResult> {
    fit(&KernelSpec::ntk2(), x, y, 0.0)
}

/// `max_x |f_NN(x) - f_NTK(x)|` over `grid`.
pub fn sup_gap(state: &NetworkState, ntk_fit: &FitResult, grid: &PointSet) -> Result<f64> {
    let nn = state.predict(grid);
    let kr = predict(ntk_fit, grid)?;
    Ok(nn.iter().zip(&kr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Tangent kernel `⟨∂_θ f(x), ∂_θ f(y)⟩` of the current network, with the
/// standard error of its neuron average. Mirrored neurons contribute
/// identical terms, so only the first half enters the error estimate.
pub fn empirical_ntk(state: &NetworkState, x: &[f64], y: &[f64]) -> (f64, f64) {
    let t: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let term = |r: usize| {
        let (px, py) = (state.pre(r, x), state.pre(r, y));
        let ind = if px > 0.0 && py > 0.0 { 1.0 } else { 0.0 };
        2.0 * (relu(px) * relu(py) + state.a[r] * state.a[r] * ind * t)
    };
    let full: f64 = (0..state.m).map(term).sum::<f64>() / state.m as f64;
    let half: Vec<f64> = (0..state.m / 2).map(term).collect();
    let (_, se) = crate::stats::mean_stderr(&half);
    (full, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pairs_and_odd_width() {
        let s = init_symmetric(2, 1, 5).unwrap();
        assert_eq!(s.outer()[1], -s.outer()[0]);
        assert_eq!(s.inner(1), s.inner(0));
        assert!(init_symmetric(3, 2, 0).is_err());
        assert_eq!(init_symmetric(8, 3, 9).unwrap(), init_symmetric(8, 3, 9).unwrap());
    }

    #[test]
    fn zero_targets_stay_put() {
        let s = init_symmetric(16, 3, 1).unwrap();
        let x = PointSet::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let trace = train_gd(s.clone(), &x, &[0.0, 0.0], 0.5, 100).unwrap();
        assert_eq!(trace.state, s);
        assert_eq!(trace.final_loss(), 0.0);
    }

    #[test]
    fn huge_step_diverges() {
        let s = init_symmetric(64, 3, 2).unwrap();
        let x = PointSet::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]]).unwrap();
        let r = train_gd(s, &x, &[1.0, -1.0], 1e9, 10);
        assert!(matches!(r, Err(Error::Divergence { last_stable: 0, .. })));
    }
}
