//! The experiment verbs.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Verb};
use super::plot::{Plot, SeriesKind};
use super::report::{fit_median_exponent, Check, Failure, Record, ScalingReport, Table};
use super::{cell_seed, draw_noise, integration_grid};
use crate::estimators::{fit_gram, l2_distance_sq, predict, INTERPOLATION_EIG_FLOOR};
use crate::geometry::{sample_iid, Domain, PointSet};
use crate::kernels::{estimate_holder, estimate_profile_holder, gram, GramMatrix, HolderEstimate, KernelSpec};
use crate::ntk::{init_symmetric, train_gd};
use crate::rng::{derive_seed, stream};
use crate::spectral::{
    dot_product_spectrum, empirical_spectrum, exact_spectrum_torus, fit_decay, DecayFit,
    Eigenvalues, SpectrumModel, EMPIRICAL_WINDOW_FRACTION, EMPIRICAL_WINDOW_START,
};
use crate::stats::{mean_stderr, median};
use crate::truth::Truth;
use crate::variance::{sweep_curve, theoretical_variance, VarianceSweep};
use crate::{Error, KernelFamily, Result};

fn elapsed_ms(t0: Option<Instant>) -> Option<f64> {
    t0.map(|t| t.elapsed().as_secs_f64() * 1e3)
}

fn bootstrap_args(cfg: &ExperimentConfig, tag: u64) -> Option<(usize, f64, u64)> {
    (cfg.bootstrap.reps > 0).then(|| {
        (
            cfg.bootstrap.reps,
            cfg.bootstrap.level,
            derive_seed(cfg.seed, &[stream::BOOTSTRAP, tag]),
        )
    })
}

/// Inputs whose Gram matrix admits interpolation, after at most
/// `resample_attempts` redraws.
struct Design {
    gram: Arc<GramMatrix>,
    attempt: usize,
}

fn draw_design(
    spec: &KernelSpec,
    domain: &Domain,
    n: usize,
    cell: u64,
    attempts: usize,
    need_interpolation: bool,
) -> Result<Design> {
    let mut last = None;
    for attempt in 0..=attempts {
        let x = sample_iid(domain, n, derive_seed(cell, &[stream::INPUTS, attempt as u64]))?;
        let g = match gram(spec, &x) {
            Ok(g) => g,
            Err(e @ Error::DuplicatePoints { .. }) => {
                last = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if need_interpolation {
            let min = g.eigen()?.min();
            let threshold = n as f64 * INTERPOLATION_EIG_FLOOR;
            if !(min > threshold) {
                log::debug!("n={n} attempt {attempt}: smallest eigenvalue {min:e}, resampling");
                last = Some(Error::InterpolationInfeasible {
                    eigenvalue: min,
                    threshold,
                });
                continue;
            }
        }
        return Ok(Design {
            gram: Arc::new(g),
            attempt,
        });
    }
    Err(last.expect("at least one attempt"))
}

fn targets(truth: &Truth, x: &PointSet, noise: &[f64]) -> Vec<f64> {
    x.iter().zip(noise).map(|(p, e)| truth.eval(p) + e).collect()
}

fn noise_seed(cell: u64, attempt: usize, redraw: usize) -> u64 {
    derive_seed(cell, &[stream::NOISE, attempt as u64, redraw as u64])
}

fn cells(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    cfg.n_grid
        .iter()
        .flat_map(|&n| (0..cfg.seeds).map(move |s| (n, s)))
        .collect()
}

fn mode_label(cfg: &ExperimentConfig) -> &'static str {
    if cfg.noise.sigma == 0.0 {
        "noiseless contrast"
    } else {
        "noisy"
    }
}

fn per_n_groups(records: &[Record], n_grid: &[usize], value: impl Fn(&Record) -> Option<f64>) -> Vec<(usize, Vec<f64>)> {
    n_grid
        .iter()
        .map(|&n| {
            let v: Vec<f64> = records.iter().filter(|r| r.n == n).filter_map(&value).collect();
            (n, v)
        })
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

// Shared tail of the two risk-vs-n studies: exponent fit, floor checks,
// verdict and plot.
fn finish_risk_study(cfg: &ExperimentConfig, report: &mut ScalingReport, label: &str) {
    let sigma2 = cfg.sigma2();
    let groups = per_n_groups(&report.records, &cfg.n_grid, |r| r.risk);
    let v0_groups = per_n_groups(&report.records, &cfg.n_grid, |r| r.variance);
    let fit = fit_median_exponent(label, &groups, bootstrap_args(cfg, 0));
    let noiseless = sigma2 == 0.0;

    if let Some(f) = &fit {
        if noiseless {
            report.checks.push(Check::below("noiseless_risk_decays", f.exponent, -0.5));
        } else {
            report
                .checks
                .push(Check::above("risk_exponent_above_floor", f.exponent, cfg.exponent_floor));
        }
    }
    let last = groups.last().map(|(n, v)| (*n, median(v).unwrap()));
    if let (Some((n, m)), false) = (last, noiseless) {
        let mut c = Check::above("median_risk_at_max_n_above_floor", m, cfg.risk_floor * sigma2);
        c.name = format!("median_risk_at_n{n}_above_floor");
        report.checks.push(c);
    }

    report.verdict = match (&fit, noiseless) {
        (None, _) => "too few sample sizes with nonzero risk for an exponent fit".into(),
        (Some(f), true) => format!(
            "noiseless contrast: median risk scales like n^{:.3} over n in [{}, {}]{}",
            f.exponent,
            f.ns[0],
            f.ns[f.ns.len() - 1],
            if report.passed() { ", consistent with decay" } else { ", no clear decay" }
        ),
        (Some(f), false) => {
            let lead = if report.passed() { "consistent with" } else { "not consistent with" };
            format!(
                "{lead} a noise floor: median risk exponent {:.3} (floor {}) over n in [{}, {}]",
                f.exponent,
                cfg.exponent_floor,
                f.ns[0],
                f.ns[f.ns.len() - 1]
            )
        }
    };

    let per_n: Vec<serde_json::Value> = groups
        .iter()
        .map(|(n, v)| {
            let v0 = v0_groups.iter().find(|g| g.0 == *n).and_then(|g| median(&g.1));
            serde_json::json!({
                "n": n,
                "completed": v.len(),
                "median_risk": median(v),
                "median_variance_at_zero": v0,
            })
        })
        .collect();
    report.details = serde_json::json!({
        "mode": mode_label(cfg),
        "sigma2": sigma2,
        "per_n": per_n,
    });

    let scatter: Vec<(f64, f64)> = report
        .records
        .iter()
        .filter_map(|r| r.risk.map(|v| (r.n as f64, v)))
        .collect();
    let mut plot = Plot::new("risk_vs_n", &format!("{} ({})", report.experiment, mode_label(cfg)), "n", "excess risk")
        .with("risk per seed", SeriesKind::Markers, scatter);
    if let Some(f) = &fit {
        let med: Vec<(f64, f64)> = f.ns.iter().zip(&f.medians).map(|(n, m)| (*n as f64, *m)).collect();
        let line: Vec<(f64, f64)> = f
            .ns
            .iter()
            .map(|&n| (n as f64, f.intercept.exp() * (n as f64).powf(f.exponent)))
            .collect();
        plot = plot
            .with("median", SeriesKind::Line, med)
            .with(&format!("fit n^{:.3}", f.exponent), SeriesKind::Dashed, line);
    }
    let v0: Vec<(f64, f64)> = v0_groups
        .iter()
        .filter_map(|(n, v)| median(v).map(|m| (*n as f64, m)))
        .collect();
    if !v0.is_empty() {
        plot = plot.with("median V(0)", SeriesKind::Line, v0);
    }
    report.plots.push(plot);
    report.fits.extend(fit);
}

enum CellOutcome {
    Done(Record),
    Failed(Failure),
}

fn collect(report: &mut ScalingReport, outcomes: Vec<Result<CellOutcome>>) -> Result<()> {
    for o in outcomes {
        match o? {
            CellOutcome::Done(r) => report.records.push(r),
            CellOutcome::Failed(f) => report.failures.push(f),
        }
    }
    Ok(())
}

/// Minimum-norm interpolation on noisy data across the `n`-grid: one record
/// per `(n, seed)` with the excess risk and, for `n ≤ variance_max_n`, the
/// variance term `V(0)` of the same inputs.
pub fn run_interpolation_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let grid = integration_grid(cfg)?;
    let truth = cfg.truth();
    let truth_grid = truth.eval_grid(&grid);
    let sigma2 = cfg.sigma2();
    let outcomes: Vec<Result<CellOutcome>> = cells(cfg)
        .par_iter()
        .map(|&(n, s)| {
            let t0 = cfg.record_timing.then(Instant::now);
            let cell = cell_seed(cfg.seed, n, s);
            let design =
                match draw_design(&cfg.kernel, &cfg.domain, n, cell, cfg.resample_attempts, true) {
                    Ok(d) => d,
                    Err(e) if !e.is_numerical() && !matches!(e, Error::DuplicatePoints { .. }) => {
                        return Err(e)
                    }
                    Err(e) => {
                        return Ok(CellOutcome::Failed(Failure {
                            n,
                            seed: cell,
                            reason: e.to_string(),
                        }))
                    }
                };
            let noise = draw_noise(&cfg.noise, n, noise_seed(cell, design.attempt, 0));
            let y = targets(&truth, design.gram.points(), &noise);
            let fit = match fit_gram(design.gram.clone(), &y, 0.0) {
                Ok(f) => f,
                Err(e) if e.is_numerical() => {
                    return Ok(CellOutcome::Failed(Failure {
                        n,
                        seed: cell,
                        reason: e.to_string(),
                    }))
                }
                Err(e) => return Err(e),
            };
            let risk = l2_distance_sq(&predict(&fit, grid.nodes())?, &truth_grid, &grid);
            let variance = if n <= cfg.variance_max_n {
                Some(VarianceSweep::new(&design.gram, &grid)?.value(sigma2, 0.0)?.variance)
            } else {
                None
            };
            Ok(CellOutcome::Done(Record {
                n,
                lambda: Some(0.0),
                seed: cell,
                risk: Some(risk),
                variance,
                wallclock_ms: elapsed_ms(t0),
            }))
        })
        .collect();
    let mut report = ScalingReport::new("interpolation_scaling");
    collect(&mut report, outcomes)?;
    finish_risk_study(cfg, &mut report, "median_risk_vs_n");
    Ok(report)
}

/// Decay exponent for rate comparisons: the known one, else a full-range
/// fit of the known spectrum.
fn decay_exponent(cfg: &ExperimentConfig) -> Result<f64> {
    if let Some(b) = cfg.known_beta() {
        return Ok(b);
    }
    let spectrum = known_spectrum_for(cfg)?.ok_or_else(|| {
        Error::Unsupported(format!(
            "{} on {} has no known spectrum; set `beta` in the config",
            cfg.kernel.name(),
            cfg.domain.name()
        ))
    })?;
    let len = spectrum.len().unwrap_or(1000);
    Ok(fit_decay(&spectrum, 1, len)?.beta)
}

fn known_spectrum_for(cfg: &ExperimentConfig) -> Result<Option<SpectrumModel>> {
    Ok(match (&cfg.kernel.family, cfg.domain) {
        (KernelFamily::PeriodicFourier(k), _) => Some(exact_spectrum_torus(k)),
        (KernelFamily::DotProduct { .. } | KernelFamily::Ntk2, Domain::Sphere { d }) if d >= 3 => {
            Some(dot_product_spectrum(&cfg.kernel, d, cfg.spectrum.n_max, cfg.spectrum.quad_res)?)
        }
        _ => None,
    })
}

/// Ridge sweeps of the variance term per `(n, seed)`: one record per ridge
/// level with the KRR excess risk and `V(λ)`. Checks the log-log slope
/// against `-1/β` and the spread of `V n λ^{1/β} / σ²`.
pub fn run_variance_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let beta = decay_exponent(cfg)?;
    let grid = integration_grid(cfg)?;
    let truth = cfg.truth();
    let truth_grid = truth.eval_grid(&grid);
    let sigma2 = cfg.sigma2();
    for &n in &cfg.n_grid {
        let levels = cfg.lambda_grid.levels(n, Some(beta))?;
        if levels.is_empty() {
            return Err(Error::config("lambda_grid: empty ridge grid"));
        }
        if levels.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::config("lambda_grid: variance sweeps need strictly positive levels"));
        }
    }
    let spectrum = known_spectrum_for(cfg)?;

    let outcomes: Vec<Result<(Vec<Record>, f64)>> = cells(cfg)
        .par_iter()
        .map(|&(n, s)| {
            let t0 = cfg.record_timing.then(Instant::now);
            let cell = cell_seed(cfg.seed, n, s);
            let levels = cfg.lambda_grid.levels(n, Some(beta))?;
            let design = draw_design(&cfg.kernel, &cfg.domain, n, cell, cfg.resample_attempts, false)?;
            let sweep = VarianceSweep::new(&design.gram, &grid)?;
            let curve = sweep_curve(&sweep, sigma2, &levels, false)?;
            let slope = curve.slope()?.slope;
            let noise = draw_noise(&cfg.noise, n, noise_seed(cell, design.attempt, 0));
            let y = targets(&truth, design.gram.points(), &noise);
            let cross = cfg.kernel.cross_matrix(grid.nodes(), design.gram.points())?;
            let mut out = Vec::with_capacity(levels.len());
            for e in &curve.entries {
                // the risk is a by-product here; at the smallest ridge levels
                // the solve can miss its residual target, which leaves it empty
                let risk = match fit_gram(design.gram.clone(), &y, e.lambda) {
                    Ok(fit) => {
                        let pred = crate::linalg::mat_vec(cross.as_ref(), fit.dual());
                        Some(l2_distance_sq(&pred, &truth_grid, &grid))
                    }
                    Err(err @ Error::Fit(_)) => {
                        log::warn!("n={n}, lambda={:e}: no risk ({err})", e.lambda);
                        None
                    }
                    Err(err) => return Err(err),
                };
                out.push(Record {
                    n,
                    lambda: Some(e.lambda),
                    seed: cell,
                    risk,
                    variance: Some(e.variance),
                    wallclock_ms: None,
                });
            }
            if let (Some(ms), Some(last)) = (elapsed_ms(t0), out.last_mut()) {
                last.wallclock_ms = Some(ms);
            }
            Ok((out, slope))
        })
        .collect();

    let mut report = ScalingReport::new("variance_scaling");
    let mut slopes: Vec<(usize, f64)> = Vec::new();
    for (o, &(n, _)) in outcomes.into_iter().zip(&cells(cfg)) {
        let (recs, slope) = o?;
        report.records.extend(recs);
        slopes.push((n, slope));
    }

    let target = -1.0 / beta;
    let mut per_n = Vec::new();
    let mut all_ratios = Vec::new();
    let mut plot = Plot::new("variance_vs_lambda", "variance term", "lambda", "V(lambda)");
    for &n in &cfg.n_grid {
        let s: Vec<f64> = slopes.iter().filter(|x| x.0 == n).map(|x| x.1).collect();
        let med_slope = median(&s).unwrap_or(f64::NAN);
        report
            .checks
            .push(Check::within(&format!("slope_n{n}"), med_slope, target, 0.05));
        let levels = cfg.lambda_grid.levels(n, Some(beta))?;
        let mut curve = Vec::with_capacity(levels.len());
        let mut theory = Vec::new();
        let mut ratios = Vec::with_capacity(levels.len());
        for &l in &levels {
            let v: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.n == n && r.lambda == Some(l))
                .filter_map(|r| r.variance)
                .collect();
            let m = median(&v).unwrap_or(f64::NAN);
            curve.push((l, m));
            ratios.push(m * n as f64 * l.powf(1.0 / beta) / sigma2);
            if let Some(sp) = &spectrum {
                theory.push((l, theoretical_variance(sp, sigma2, n, l)?));
            }
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        all_ratios.extend(ratios.iter().copied());
        let theory_ratio: Vec<f64> = theory.iter().zip(&curve).map(|(t, c)| c.1 / t.1).collect();
        per_n.push(serde_json::json!({
            "n": n,
            "median_slope": med_slope,
            "slopes": s,
            "ratio_min": lo,
            "ratio_max": hi,
            "ratio_spread": hi / lo,
            "variance_over_theory": theory_ratio,
        }));
        plot = plot.with(&format!("n = {n}"), SeriesKind::Line, curve);
        if !theory.is_empty() {
            plot = plot.with(&format!("theory n = {n}"), SeriesKind::Dashed, theory);
        }
    }
    let lo = all_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all_ratios.iter().copied().fold(0.0, f64::max);
    report.checks.push(Check::below("ratio_spread", hi / lo, 5.0));
    report.verdict = format!(
        "{} V(lambda) ~ lambda^(-1/beta)/n with beta = {beta}: target slope {target:.4}, ratio spread {:.3}",
        if report.passed() { "consistent with" } else { "not consistent with" },
        hi / lo
    );
    report.details = serde_json::json!({ "beta": beta, "sigma2": sigma2, "per_n": per_n });
    report.plots.push(plot);
    Ok(report)
}

/// `(1/n) Σ f(x_i) g(x_i)`, evaluated pointwise.
pub fn sample_inner_product(f: impl Fn(&[f64]) -> f64, g: impl Fn(&[f64]) -> f64, x: &PointSet) -> f64 {
    let mut acc = 0.0;
    for p in x.iter() {
        acc += f(p) * g(p);
    }
    acc / x.len() as f64
}

/// Frequency with which the two-sided empirical-norm bound
/// `½‖f‖² - t ≤ ‖f‖²_n ≤ 3/2‖f‖² + t`, `t = 5M²/(3n) ln(2/δ)`, holds over
/// independent draws, for the configured truth `f` with sup bound `M`.
/// Also checks that the sampled inner product equals `f[X]ᵀg[X]/n` bit for
/// bit, with `g` a kernel section.
pub fn run_seminorm_concentration(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let f = cfg.truth();
    let norm_sq = f.l2_norm(&cfg.domain)?.powi(2);
    let m = f.sup_bound(&cfg.domain);
    let delta = cfg.concentration.delta;
    let trials = cfg.concentration.trials;
    let mut report = ScalingReport::new("seminorm_concentration");
    let mut per_n = Vec::new();
    let mut identity_ok = true;
    for &n in &cfg.n_grid {
        let slack = 5.0 * m * m / (3.0 * n as f64) * (2.0 / delta).ln();
        let (lo, hi) = (0.5 * norm_sq - slack, 1.5 * norm_sq + slack);
        let out: Vec<Result<(Record, bool, bool)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let cell = cell_seed(cfg.seed, n, t);
                let x = sample_iid(&cfg.domain, n, derive_seed(cell, &[stream::INPUTS, 0]))?;
                let fv: Vec<f64> = x.iter().map(|p| f.eval(p)).collect();
                let emp = crate::linalg::dot(&fv, &fv) / n as f64;
                let anchor = x.point(0).to_vec();
                let g = |p: &[f64]| cfg.kernel.eval(p, &anchor).unwrap_or(f64::NAN);
                let gv: Vec<f64> = x.iter().map(g).collect();
                let direct = sample_inner_product(|p| f.eval(p), g, &x);
                let vector = crate::linalg::dot(&fv, &gv) / n as f64;
                let rec = Record {
                    n,
                    lambda: None,
                    seed: cell,
                    risk: Some(emp),
                    variance: None,
                    wallclock_ms: None,
                };
                Ok((rec, emp >= lo && emp <= hi, direct.to_bits() == vector.to_bits()))
            })
            .collect();
        let mut holds = 0usize;
        for o in out {
            let (rec, ok, ident) = o?;
            holds += ok as usize;
            identity_ok &= ident;
            report.records.push(rec);
        }
        let freq = holds as f64 / trials as f64;
        report.checks.push(Check {
            name: format!("bound_frequency_n{n}"),
            value: freq,
            comparison: ">=".into(),
            threshold: 1.0 - delta,
            passed: freq >= 1.0 - delta,
        });
        per_n.push(serde_json::json!({
            "n": n, "lower": lo, "upper": hi, "frequency": freq, "trials": trials,
        }));
    }
    report.checks.push(Check {
        name: "inner_product_identity_bit_exact".into(),
        value: identity_ok as u8 as f64,
        comparison: "==".into(),
        threshold: 1.0,
        passed: identity_ok,
    });
    report.verdict = format!(
        "{} the empirical-norm bound at delta = {delta} (risk column holds the empirical squared semi-norm)",
        if report.passed() { "consistent with" } else { "not consistent with" }
    );
    report.details = serde_json::json!({
        "norm_sq": norm_sq,
        "sup_bound": m,
        "delta": delta,
        "per_n": per_n,
    });
    Ok(report)
}

/// Monte Carlo check of `E[risk | X] ≥ V(0)`: for each `(n, seed)` the
/// inputs stay fixed while the noise is redrawn `redraws` times. The record
/// holds the mean risk and `V(0)`; the check allows three standard errors.
pub fn run_conditional_bound(cfg: &ExperimentConfig, redraws: usize) -> Result<ScalingReport> {
    if redraws < 2 {
        return Err(Error::config("need at least two noise redraws"));
    }
    let grid = integration_grid(cfg)?;
    let truth = cfg.truth();
    let truth_grid = truth.eval_grid(&grid);
    let sigma2 = cfg.sigma2();
    let out: Vec<Result<(Record, f64)>> = cells(cfg)
        .par_iter()
        .map(|&(n, s)| {
            let t0 = cfg.record_timing.then(Instant::now);
            let cell = cell_seed(cfg.seed, n, s);
            let design = draw_design(&cfg.kernel, &cfg.domain, n, cell, cfg.resample_attempts, true)?;
            let v0 = VarianceSweep::new(&design.gram, &grid)?.value(sigma2, 0.0)?.variance;
            let cross = cfg.kernel.cross_matrix(grid.nodes(), design.gram.points())?;
            let mut risks = Vec::with_capacity(redraws);
            for r in 0..redraws {
                let noise = draw_noise(&cfg.noise, n, noise_seed(cell, design.attempt, r));
                let y = targets(&truth, design.gram.points(), &noise);
                let fit = fit_gram(design.gram.clone(), &y, 0.0)?;
                let pred = crate::linalg::mat_vec(cross.as_ref(), fit.dual());
                risks.push(l2_distance_sq(&pred, &truth_grid, &grid));
            }
            let (mean, se) = mean_stderr(&risks);
            Ok((
                Record {
                    n,
                    lambda: Some(0.0),
                    seed: cell,
                    risk: Some(mean),
                    variance: Some(v0),
                    wallclock_ms: elapsed_ms(t0),
                },
                se,
            ))
        })
        .collect();
    let mut report = ScalingReport::new("conditional_bound");
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    for o in out {
        let (rec, se) = o?;
        let (mean, v0) = (rec.risk.unwrap(), rec.variance.unwrap());
        // margin in standard errors; the check needs it above -3
        let z = if se > 0.0 { (mean - v0) / se } else if mean >= v0 { f64::INFINITY } else { f64::NEG_INFINITY };
        worst = worst.min(z);
        rows.push(vec![
            rec.n.to_string(),
            rec.seed.to_string(),
            mean.to_string(),
            se.to_string(),
            v0.to_string(),
        ]);
        report.records.push(rec);
    }
    report.checks.push(Check {
        name: "mean_risk_above_variance_minus_3se".into(),
        value: worst,
        comparison: ">=".into(),
        threshold: -3.0,
        passed: worst >= -3.0,
    });
    report.verdict = format!(
        "{} E[risk | X] >= V(0) in every cell (worst margin {worst:.2} standard errors)",
        if report.passed() { "consistent with" } else { "not consistent with" }
    );
    report.details = serde_json::json!({ "redraws": redraws, "sigma2": sigma2 });
    report.tables.push(Table {
        name: "conditional".into(),
        header: ["n", "seed", "mean_risk", "stderr", "variance_at_zero"].map(String::from).to_vec(),
        rows,
    });
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct NetRow {
    n: usize,
    width: usize,
    seed: u64,
    nn_risk: f64,
    ntk_risk: f64,
    sup_gap: f64,
    max_abs_y: f64,
    final_loss: f64,
    steps: usize,
    final_eta: f64,
    converged: bool,
}

/// Two-layer ReLU networks trained by gradient descent against the NTK
/// interpolant of the same data, over `(n, seed, width)`. Records hold the
/// NTK interpolation risk; the network rows go to `ntk.csv`.
pub fn run_ntk_pipeline(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let d = match cfg.domain {
        Domain::Sphere { d } => d,
        _ => return Err(Error::config("domain: the ntk pipeline needs a sphere")),
    };
    let grid = integration_grid(cfg)?;
    let truth = cfg.truth();
    let truth_grid = truth.eval_grid(&grid);
    let sigma2 = cfg.sigma2();
    let spec = KernelSpec::ntk2();
    let widths = cfg.ntk.widths.clone();

    let out: Vec<Result<(CellOutcome, Vec<NetRow>)>> = cells(cfg)
        .par_iter()
        .map(|&(n, s)| {
            let t0 = cfg.record_timing.then(Instant::now);
            let cell = cell_seed(cfg.seed, n, s);
            let design = match draw_design(&spec, &cfg.domain, n, cell, cfg.resample_attempts, true) {
                Ok(d) => d,
                Err(e) if e.is_numerical() || matches!(e, Error::DuplicatePoints { .. }) => {
                    return Ok((
                        CellOutcome::Failed(Failure { n, seed: cell, reason: e.to_string() }),
                        Vec::new(),
                    ))
                }
                Err(e) => return Err(e),
            };
            let x = design.gram.points().clone();
            let noise = draw_noise(&cfg.noise, n, noise_seed(cell, design.attempt, 0));
            let y = targets(&truth, &x, &noise);
            let max_abs_y = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let ntk_fit = fit_gram(design.gram.clone(), &y, 0.0)?;
            let ntk_pred = predict(&ntk_fit, grid.nodes())?;
            let ntk_risk = l2_distance_sq(&ntk_pred, &truth_grid, &grid);
            let variance = if n <= cfg.variance_max_n {
                Some(VarianceSweep::new(&design.gram, &grid)?.value(sigma2, 0.0)?.variance)
            } else {
                None
            };
            let rows: Vec<NetRow> = widths
                .par_iter()
                .map(|&m| {
                    let init = init_symmetric(m, d, derive_seed(cell, &[stream::INIT, m as u64]))?;
                    let trace = train_gd(init, &x, &y, cfg.ntk.eta, cfg.ntk.steps)?;
                    let nn_pred = trace.state.predict(grid.nodes());
                    let gap = nn_pred
                        .iter()
                        .zip(&ntk_pred)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    Ok(NetRow {
                        n,
                        width: m,
                        seed: cell,
                        nn_risk: l2_distance_sq(&nn_pred, &truth_grid, &grid),
                        ntk_risk,
                        sup_gap: gap,
                        max_abs_y,
                        final_loss: trace.final_loss(),
                        steps: trace.steps,
                        final_eta: trace.final_eta,
                        converged: trace.converged,
                    })
                })
                .collect::<Result<_>>()?;
            let rec = Record {
                n,
                lambda: Some(0.0),
                seed: cell,
                risk: Some(ntk_risk),
                variance,
                wallclock_ms: elapsed_ms(t0),
            };
            Ok((CellOutcome::Done(rec), rows))
        })
        .collect();

    let mut report = ScalingReport::new("ntk_pipeline");
    let mut rows = Vec::new();
    for o in out {
        let (c, r) = o?;
        match c {
            CellOutcome::Done(rec) => report.records.push(rec),
            CellOutcome::Failed(f) => report.failures.push(f),
        }
        rows.extend(r);
    }

    // |√a - √b| ≤ gap, so a ≤ b + gap² + 2 gap √b
    let triangle = rows.iter().all(|r| {
        r.nn_risk <= r.ntk_risk + r.sup_gap * r.sup_gap + 2.0 * r.sup_gap * r.ntk_risk.sqrt() + 1e-12
    });
    report.checks.push(Check {
        name: "nn_risk_within_triangle_bound".into(),
        value: triangle as u8 as f64,
        comparison: "==".into(),
        threshold: 1.0,
        passed: triangle,
    });
    let mut gap_summary = Vec::new();
    for &n in &cfg.n_grid {
        let meds: Vec<(usize, f64, f64)> = widths
            .iter()
            .map(|&m| {
                let sel: Vec<&NetRow> = rows.iter().filter(|r| r.n == n && r.width == m).collect();
                let g: Vec<f64> = sel.iter().map(|r| r.sup_gap).collect();
                let y: Vec<f64> = sel.iter().map(|r| r.max_abs_y).collect();
                (m, median(&g).unwrap_or(f64::NAN), median(&y).unwrap_or(f64::NAN))
            })
            .collect();
        if widths.len() > 1 {
            let decreasing = meds.windows(2).all(|w| w[1].1 < w[0].1);
            report.checks.push(Check {
                name: format!("median_sup_gap_decreasing_in_width_n{n}"),
                value: decreasing as u8 as f64,
                comparison: "==".into(),
                threshold: 1.0,
                passed: decreasing,
            });
        }
        gap_summary.push(serde_json::json!({
            "n": n,
            "widths": meds.iter().map(|m| m.0).collect::<Vec<_>>(),
            "median_sup_gap": meds.iter().map(|m| m.1).collect::<Vec<_>>(),
            "median_max_abs_y": meds.iter().map(|m| m.2).collect::<Vec<_>>(),
        }));
    }

    finish_risk_study(cfg, &mut report, "median_ntk_risk_vs_n");
    let widest = widths.iter().copied().max().unwrap_or(0);
    let nn_groups: Vec<(usize, Vec<f64>)> = cfg
        .n_grid
        .iter()
        .map(|&n| (n, rows.iter().filter(|r| r.n == n && r.width == widest).map(|r| r.nn_risk).collect::<Vec<_>>()))
        .filter(|g| !g.1.is_empty())
        .collect();
    if let Some(f) = fit_median_exponent("median_nn_risk_vs_n", &nn_groups, bootstrap_args(cfg, 1)) {
        if let Some(p) = report.plots.first_mut() {
            p.series.push(super::plot::Series {
                label: format!("NN median, m = {widest}"),
                kind: SeriesKind::Line,
                points: f.ns.iter().zip(&f.medians).map(|(n, m)| (*n as f64, *m)).collect(),
            });
        }
        report.fits.push(f);
    }
    if let serde_json::Value::Object(map) = &mut report.details {
        map.insert("sup_gap".into(), serde_json::Value::Array(gap_summary));
        map.insert("networks".into(), serde_json::to_value(&rows)?);
    }
    report.tables.push(Table {
        name: "ntk".into(),
        header: [
            "n", "width", "seed", "nn_risk", "ntk_risk", "sup_gap", "max_abs_y", "final_loss", "steps",
            "final_eta", "converged",
        ]
        .map(String::from)
        .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.width.to_string(),
                    r.seed.to_string(),
                    r.nn_risk.to_string(),
                    r.ntk_risk.to_string(),
                    r.sup_gap.to_string(),
                    r.max_abs_y.to_string(),
                    r.final_loss.to_string(),
                    r.steps.to_string(),
                    r.final_eta.to_string(),
                    r.converged.to_string(),
                ]
            })
            .collect(),
    });
    Ok(report)
}

fn empirical_for(cfg: &ExperimentConfig, n: usize) -> Result<(SpectrumModel, DecayFit)> {
    let design = draw_design(&cfg.kernel, &cfg.domain, n, cell_seed(cfg.seed, n, 0), cfg.resample_attempts, false)?;
    let sp = empirical_spectrum(&design.gram)?;
    let (lo, hi) = cfg
        .spectrum
        .window
        .unwrap_or((EMPIRICAL_WINDOW_START, (n / EMPIRICAL_WINDOW_FRACTION).max(EMPIRICAL_WINDOW_START + 4)));
    let fit = fit_decay(&sp, lo, hi)?;
    Ok((sp, fit))
}

/// Known spectrum (full-range decay fit) and the empirical spectrum at the
/// largest `n` (fit on its reliable window), with the known spectrum refit
/// on that same window for comparison.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let mut report = ScalingReport::new("spectrum");
    let known = known_spectrum_for(cfg)?;
    let mut known_full = None;
    if let Some(sp) = &known {
        let len = sp.len().unwrap_or(1000);
        let f = fit_decay(sp, 1, len)?;
        if let Some(b) = cfg.known_beta() {
            report.checks.push(Check::within("known_decay_matches_beta", f.beta, b, 0.2));
        }
        report.fits.push(super::report::ExponentFit {
            label: "known_full_range".into(),
            exponent: -f.beta,
            intercept: f.c.ln(),
            r2: f.r2,
            band: None,
            ns: Vec::new(),
            medians: Vec::new(),
        });
        known_full = Some(f);
    }
    let n = *cfg.n_grid.last().expect("resolved config has an n-grid");
    let empirical = if n >= 32 { Some(empirical_for(cfg, n)?) } else { None };
    let mut known_window = None;
    if let (Some(sp), Some((_, ef))) = (&known, &empirical) {
        let f = fit_decay(sp, ef.i_min, ef.i_max)?;
        report
            .checks
            .push(Check::within("empirical_matches_known_on_window", ef.beta, f.beta, 0.2));
        known_window = Some(f);
    }

    let limit = 400;
    let mut plot = Plot::new("spectrum", "eigenvalue decay", "index i", "eigenvalue");
    let mut rows = Vec::new();
    let kv = known.as_ref().map(|s| s.values(limit)).unwrap_or_default();
    let ev = empirical.as_ref().map(|s| s.0.values(limit)).unwrap_or_default();
    for i in 0..kv.len().max(ev.len()) {
        rows.push(vec![
            (i + 1).to_string(),
            kv.get(i).map(|v| v.to_string()).unwrap_or_default(),
            ev.get(i).map(|v| v.to_string()).unwrap_or_default(),
        ]);
    }
    let idx = |v: &[f64]| -> Vec<(f64, f64)> { v.iter().enumerate().map(|(i, x)| ((i + 1) as f64, *x)).collect() };
    if !kv.is_empty() {
        plot = plot.with("known", SeriesKind::Markers, idx(&kv));
    }
    if !ev.is_empty() {
        plot = plot.with(&format!("empirical n = {n}"), SeriesKind::Markers, idx(&ev));
    }
    if let Some((_, f)) = &empirical {
        let line = (f.i_min..=f.i_max).map(|i| (i as f64, f.c * (i as f64).powf(-f.beta))).collect();
        plot = plot.with(&format!("fit i^-{:.3}", f.beta), SeriesKind::Dashed, line);
    }
    report.plots.push(plot);
    report.tables.push(Table {
        name: "spectrum".into(),
        header: ["i", "known", "empirical"].map(String::from).to_vec(),
        rows,
    });
    report.verdict = match (&known_full, &empirical) {
        (Some(k), Some((_, e))) => format!(
            "known decay exponent {:.3}; empirical {:.3} on [{}, {}] at n = {n}",
            k.beta, e.beta, e.i_min, e.i_max
        ),
        (Some(k), None) => format!("known decay exponent {:.3}", k.beta),
        (None, Some((_, e))) => format!("empirical decay exponent {:.3} on [{}, {}] at n = {n}", e.beta, e.i_min, e.i_max),
        (None, None) => "no spectrum available".into(),
    };
    report.details = serde_json::json!({
        "known": known.as_ref().map(|s| s.to_json_value()),
        "known_fit": known_full,
        "known_fit_on_empirical_window": known_window,
        "empirical_fit": empirical.as_ref().map(|e| &e.1),
        "empirical_n": n,
    });
    Ok(report)
}

/// Diagnostics printed by `kernel-info`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelInfo {
    pub kernel: String,
    pub domain: String,
    pub kappa_sq: f64,
    pub holder: HolderEstimate,
    /// Endpoint regularity of a dot-product profile in `t`.
    pub profile_holder: Option<HolderEstimate>,
    /// Top rows `(degree or index, eigenvalue, multiplicity)`.
    pub top: Vec<(usize, f64, f64)>,
    pub blocks: bool,
    pub beta_hat: Option<f64>,
    pub beta_source: String,
}

impl KernelInfo {
    pub fn render(&self) -> String {
        let mut s = format!("kernel      {} on {}\n", self.kernel, self.domain);
        s += &format!("kappa^2     {}\n", self.kappa_sq);
        s += &format!(
            "holder      exponent {:.3}, constant {:.4e} (pairs, {} scales)\n",
            self.holder.exponent, self.holder.constant, self.holder.scales
        );
        if let Some(p) = &self.profile_holder {
            s += &format!("profile     exponent {:.3} in t near +-1\n", p.exponent);
        }
        match self.beta_hat {
            Some(b) => s += &format!("beta_hat    {b:.4} ({})\n", self.beta_source),
            None => s += "beta_hat    n/a\n",
        }
        let head = if self.blocks { "degree" } else { "index" };
        s += &format!("\n{head:>6}  {:>14}  {:>12}\n", "eigenvalue", "multiplicity");
        for (k, v, m) in &self.top {
            s += &format!("{k:>6}  {v:>14.6e}  {m:>12}\n", m = m.round());
        }
        s
    }

    pub fn to_report(&self) -> Result<ScalingReport> {
        let mut r = ScalingReport::new("kernel_info");
        r.verdict = format!("{} on {}", self.kernel, self.domain);
        r.details = serde_json::to_value(self)?;
        let pts = self.top.iter().map(|(k, v, _)| ((*k).max(1) as f64, *v)).collect();
        let axis = if self.blocks { "degree (0 drawn at 1)" } else { "index" };
        r.plots.push(Plot::new("eigenvalues", &format!("{} on {}", self.kernel, self.domain), axis, "eigenvalue").with(
            "top eigenvalues",
            SeriesKind::Markers,
            pts,
        ));
        r.tables.push(Table {
            name: "eigenvalues".into(),
            header: [if self.blocks { "degree" } else { "index" }, "eigenvalue", "multiplicity"]
                .map(String::from)
                .to_vec(),
            rows: self
                .top
                .iter()
                .map(|(k, v, m)| vec![k.to_string(), v.to_string(), m.to_string()])
                .collect(),
        });
        Ok(r)
    }
}

const TOP_ROWS: usize = 20;

pub fn kernel_info(cfg: &ExperimentConfig) -> Result<KernelInfo> {
    let spec = &cfg.kernel;
    let holder = estimate_holder(
        spec,
        &cfg.domain,
        cfg.spectrum.holder_probes,
        derive_seed(cfg.seed, &[stream::PROBES]),
    )?;
    let profile_holder = if spec.is_dot_product() {
        Some(estimate_profile_holder(spec, 40)?)
    } else {
        None
    };
    let known = known_spectrum_for(cfg)?;
    let (top, blocks, beta_hat, beta_source) = match &known {
        Some(sp) => {
            let len = sp.len().unwrap_or(1000);
            let beta = fit_decay(sp, 1, len)?.beta;
            let (top, blocks) = match sp.eigenvalues() {
                Eigenvalues::Blocks { blocks, .. } => (
                    blocks.iter().take(TOP_ROWS).map(|b| (b.degree, b.mu, b.multiplicity)).collect(),
                    true,
                ),
                _ => (
                    sp.values(TOP_ROWS).into_iter().enumerate().map(|(i, v)| (i + 1, v, 1.0)).collect(),
                    false,
                ),
            };
            (top, blocks, Some(beta), "full-range fit of the known spectrum".to_string())
        }
        None => {
            let n = (*cfg.n_grid.last().unwrap()).min(1024);
            if n < 32 {
                (Vec::new(), false, None, "n/a".to_string())
            } else {
                let (sp, f) = empirical_for(cfg, n)?;
                let top = sp.values(TOP_ROWS).into_iter().enumerate().map(|(i, v)| (i + 1, v, 1.0)).collect();
                (top, false, Some(f.beta), format!("empirical spectrum, n = {n}, window [{}, {}]", f.i_min, f.i_max))
            }
        }
    };
    Ok(KernelInfo {
        kernel: spec.name().to_string(),
        domain: cfg.domain.name().to_string(),
        kappa_sq: spec.kappa_sq(),
        holder,
        profile_holder,
        top,
        blocks,
        beta_hat,
        beta_source,
    })
}

/// Dispatches a verb (other than the conditional-bound study).
pub fn run_verb(cfg: &ExperimentConfig, verb: Verb) -> Result<ScalingReport> {
    match verb {
        Verb::Spectrum => run_spectrum(cfg),
        Verb::Variance => run_variance_scaling(cfg),
        Verb::Scaling => run_interpolation_scaling(cfg),
        Verb::Ntk => run_ntk_pipeline(cfg),
        Verb::Concentration => run_seminorm_concentration(cfg),
        Verb::KernelInfo => kernel_info(cfg)?.to_report(),
    }
}
