//! # kernel-lab
//!
//! Numerical laboratory for kernel ridge regression and minimum-norm kernel
//! interpolation on compact domains.
//!
//! The crate is organized bottom-up:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`geometry`] | domains (sphere, torus, cube), i.i.d. samplers, quadrature grids |
//! | [`kernels`] | kernel families, Gram matrices, Hölder diagnostics |
//! | [`spectral`] | Mercer spectra (exact, block, empirical), decay fits, effective dimension |
//! | [`estimators`] | closed-form KRR and interpolation, prediction, excess risk |
//! | [`variance`] | the noise-driven variance term `V(λ)` and its λ-sweeps |
//! | [`ntk`] | two-layer ReLU networks trained by gradient descent vs. NTK interpolation |
//! | [`lab`] | experiment configs, scaling studies and report emission |
//!
//! Everything random is driven by explicit `u64` seeds (see [`rng`]), so a
//! `(config, seed)` pair always reproduces the same numbers.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod kernels;
pub mod lab;
pub mod linalg;
pub mod ntk;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod truth;
pub mod variance;

pub use error::{Error, Result};
pub use estimators::{excess_risk, fit, predict, FitResult};
pub use geometry::{quadrature, sample_iid, Domain, PointSet, QuadratureGrid};
pub use kernels::{gram, GramMatrix, KernelFamily, KernelSpec};
pub use spectral::SpectrumModel;
pub use truth::Truth;
