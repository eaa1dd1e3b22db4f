//! Experiment harness: configs, the scaling studies, concentration checks
//! and report emission.
//!
//! Every cell `(n, seed index)` of an experiment derives its own seed from
//! the config seed, and every random stream of the cell (inputs, noise,
//! network initialization) is derived from that. Cells run in parallel on a
//! rayon pool and are collected in grid order, so results do not depend on
//! the number of workers.

mod config;
mod plot;
mod report;
mod runs;

pub use config::{
    default_truth, geomspace, validate_config, BootstrapConfig, ConcentrationConfig,
    ExperimentConfig, IntegrationConfig, LambdaGrid, NoiseConfig, NoiseModel, NtkConfig,
    SpectrumConfig, Verb,
};
pub use plot::{render_svg, Plot, Series, SeriesKind};
pub use report::{
    emit_report, fit_median_exponent, write_records_csv, Check, EmittedFiles, ExponentFit,
    Failure, Record, ScalingReport, Table, RECORD_COLUMNS,
};
pub use runs::{
    kernel_info, run_conditional_bound, run_interpolation_scaling, run_ntk_pipeline,
    run_seminorm_concentration, run_spectrum, run_variance_scaling, run_verb, sample_inner_product,
    KernelInfo,
};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{quadrature, Domain, QuadratureGrid};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::{Error, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "KERNEL_LAB_WORKERS";

/// Worker count from an explicit override, else from [`WORKERS_ENV`];
/// `None` leaves the choice to rayon.
pub fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(w) = flag {
        if w == 0 {
            return Err(Error::config("workers must be >= 1"));
        }
        return Ok(Some(w));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) if !s.trim().is_empty() => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(Error::config(format!("{WORKERS_ENV}={s:?} is not a positive integer"))),
        },
        _ => Ok(None),
    }
}

/// Runs `f` on a pool of `workers` threads (rayon's default pool for `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::config(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Seed of cell `(n, s)`.
pub fn cell_seed(base: u64, n: usize, s: usize) -> u64 {
    derive_seed(base, &[n as u64, s as u64])
}

/// `n` i.i.d. noise draws with standard deviation `sigma`.
pub fn draw_noise(noise: &NoiseConfig, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    match noise.model {
        NoiseModel::Gaussian => (0..n)
            .map(|_| noise.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        NoiseModel::Rademacher => (0..n)
            .map(|_| if rng.gen::<bool>() { noise.sigma } else { -noise.sigma })
            .collect(),
    }
}

const AUTO_NODES: usize = 4096;
const AUTO_SPHERE_RES: usize = 48;

/// Grid for `μ`-integrals. `auto` uses a product rule with about 4096
/// nodes where one exists (low-dimensional tori and cubes, the 2-sphere)
/// and 4096 Monte Carlo nodes otherwise.
pub fn integration_grid(cfg: &ExperimentConfig) -> Result<QuadratureGrid> {
    let mc = |nodes| {
        QuadratureGrid::monte_carlo(&cfg.domain, nodes, derive_seed(cfg.seed, &[stream::GRID]))
    };
    match cfg.integration {
        IntegrationConfig::Quadrature { resolution } => quadrature(&cfg.domain, resolution),
        IntegrationConfig::MonteCarlo { nodes } => mc(nodes),
        IntegrationConfig::Auto => match cfg.domain {
            Domain::Torus { d } | Domain::Cube { d } => {
                let res = (AUTO_NODES as f64).powf(1.0 / d as f64).floor() as usize;
                if res >= 8 {
                    quadrature(&cfg.domain, res)
                } else {
                    mc(AUTO_NODES)
                }
            }
            Domain::Sphere { d: 3 } => quadrature(&cfg.domain, AUTO_SPHERE_RES),
            Domain::Sphere { .. } => mc(AUTO_NODES),
        },
    }
}
