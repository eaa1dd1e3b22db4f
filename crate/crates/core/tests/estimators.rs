use std::sync::Arc;

use kernel_lab::estimators::{fit_gram, l2_distance_sq};
use kernel_lab::kernels::FourierKernel;
use kernel_lab::truth::FourierTerm;
use kernel_lab::*;
use proptest::prelude::*;

fn pts(rows: &[&[f64]]) -> PointSet {
    PointSet::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn one_point_ridge_halves_the_target() {
    let x = pts(&[&[0.2]]);
    let f = fit(&KernelSpec::laplace(1.0), &x, &[1.0], 1.0).unwrap();
    assert!((predict(&f, &x).unwrap()[0] - 0.5).abs() < 1e-15);
}

#[test]
fn constant_kernel_two_points() {
    let x = pts(&[&[0.0], &[1.0]]);
    let k = KernelSpec::constant(1.0);
    assert!(matches!(
        fit(&k, &x, &[1.0, 1.0], 0.0),
        Err(Error::InterpolationInfeasible { .. })
    ));
    let f = fit(&k, &x, &[1.0, 1.0], 0.5).unwrap();
    for p in predict(&f, &pts(&[&[0.3], &[-2.0], &[5.0]])).unwrap() {
        assert!((p - 2.0 / 3.0).abs() < 1e-14);
    }
}

#[test]
fn zero_targets_give_zero_dual() {
    let x = sample_iid(&Domain::Torus { d: 1 }, 20, 4).unwrap();
    for lam in [0.0, 1e-3] {
        let f = fit(&KernelSpec::laplace(1.0), &x, &[0.0; 20], lam).unwrap();
        assert!(f.dual().iter().all(|&c| c == 0.0));
        let grid = sample_iid(&Domain::Torus { d: 1 }, 50, 5).unwrap();
        assert!(predict(&f, &grid).unwrap().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn one_point_shrinks_monotonically() {
    let x = pts(&[&[0.0, 0.0, 1.0]]);
    let probe = pts(&[&[0.0, 0.6, 0.8]]);
    let mut last = f64::INFINITY;
    for lam in [0.0, 0.1, 1.0, 10.0, 1e3] {
        let f = fit(&KernelSpec::ntk2(), &x, &[1.0], lam).unwrap();
        let v = predict(&f, &probe).unwrap()[0];
        assert!(v >= 0.0 && v < last);
        last = v;
    }
}

#[test]
fn excess_risk_identities() {
    let dom = Domain::Torus { d: 1 };
    let grid = quadrature(&dom, 128).unwrap();
    let truth = Truth::Fourier { terms: vec![FourierTerm { freq: vec![1], cos: 1.0, sin: 0.0 }] };
    let t = truth.eval_grid(&grid);
    assert_eq!(l2_distance_sq(&t, &t, &grid), 0.0);
    let shifted: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
    assert!((l2_distance_sq(&shifted, &t, &grid) - 1.0).abs() < 1e-12);
}

#[test]
fn noiseless_interpolation_of_a_smooth_truth() {
    let dom = Domain::Torus { d: 1 };
    let spec = KernelSpec::periodic(FourierKernel::sobolev_1d(64, 1.5).unwrap());
    let truth = Truth::Fourier { terms: vec![FourierTerm { freq: vec![1], cos: 1.0, sin: 0.5 }] };
    let x = sample_iid(&dom, 64, 17).unwrap();
    let y: Vec<f64> = x.iter().map(|p| truth.eval(p)).collect();
    let f = fit(&spec, &x, &y, 0.0).unwrap();
    let risk = excess_risk(&f, &truth, &quadrature(&dom, 1024).unwrap()).unwrap();
    assert!(risk < 1e-4, "{risk}");
}

fn instance(n: usize, seed: u64) -> (Arc<GramMatrix>, Vec<f64>) {
    let dom = Domain::Cube { d: 2 };
    let x = sample_iid(&dom, n, seed).unwrap();
    let g = gram(&KernelSpec::matern(1.5, 0.5), &x).unwrap();
    let y = sample_iid(&Domain::Cube { d: n }, 1, seed ^ 1).unwrap().coords().to_vec();
    (Arc::new(g), y.iter().map(|v| 2.0 * v - 1.0).collect())
}

#[test]
fn dual_and_spectral_forms_agree() {
    let (g, y) = instance(60, 3);
    let lam = 1e-3;
    let f = fit_gram(g.clone(), &y, lam).unwrap();
    let grid = sample_iid(&Domain::Cube { d: 2 }, 40, 9).unwrap();
    let dual_form = predict(&f, &grid).unwrap();
    // f̂ = 𝕂(·, X) U (Λ + λ)^{-1} Uᵀ Y / n with (U, Λ) the eigenpairs of K = 𝕂/n
    let eig = g.eigen().unwrap();
    let nf = y.len() as f64;
    let coeffs = eig.apply(&y, |raw| 1.0 / (nf * (raw / nf + lam)));
    let cross = g.spec().cross_matrix(&grid, g.points()).unwrap();
    for (i, v) in dual_form.iter().enumerate() {
        let s: f64 = (0..y.len()).map(|j| cross[(i, j)] * coeffs[j]).sum();
        assert!((s - v).abs() < 1e-8 * (1.0 + v.abs()), "{s} vs {v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn interpolation_hits_the_data(n in 2usize..60, seed in any::<u64>()) {
        let (g, y) = instance(n, seed);
        let f = fit_gram(g, &y, 0.0).unwrap();
        let ymax = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (fi, yi) in f.fitted_values().iter().zip(&y) {
            prop_assert!((fi - yi).abs() < 1e-6 * (1.0 + ymax));
        }
    }

    #[test]
    fn duals_are_linear(n in 2usize..40, seed in any::<u64>(), lam in 1e-6f64..1.0) {
        let (g, y1) = instance(n, seed);
        let (_, y2) = instance(n, seed.wrapping_add(7));
        let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let a = fit_gram(g.clone(), &y1, lam).unwrap();
        let b = fit_gram(g.clone(), &y2, lam).unwrap();
        let c = fit_gram(g, &sum, lam).unwrap();
        for i in 0..n {
            let lin = a.dual()[i] + b.dual()[i];
            prop_assert!((c.dual()[i] - lin).abs() <= 1e-10 * (1.0 + lin.abs()));
        }
    }

    #[test]
    fn training_residual_grows_with_ridge(n in 2usize..40, seed in any::<u64>()) {
        let (g, y) = instance(n, seed);
        let mut last = 0.0;
        for lam in [1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0] {
            let f = fit_gram(g.clone(), &y, lam).unwrap();
            let r: f64 = f.fitted_values().iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(r >= last - 1e-12 * (1.0 + last));
            last = r;
        }
    }
}
