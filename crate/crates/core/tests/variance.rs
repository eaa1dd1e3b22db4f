use kernel_lab::kernels::FourierKernel;
use kernel_lab::lab::geomspace;
use kernel_lab::spectral::{exact_spectrum_torus, SpectrumModel};
use kernel_lab::variance::*;
use kernel_lab::*;
use proptest::prelude::*;

fn one_point() -> GramMatrix {
    gram(&KernelSpec::constant(1.0), &PointSet::from_rows(&[vec![0.3]]).unwrap()).unwrap()
}

fn sobolev4(max_freq: usize) -> FourierKernel {
    FourierKernel::sobolev_1d(max_freq, 2.0).unwrap()
}

#[test]
fn constant_kernel_single_point() {
    let grid = quadrature(&Domain::Torus { d: 1 }, 16).unwrap();
    let g = one_point();
    assert!((variance_term(&g, 1.0, 0.0, &grid).unwrap().variance - 1.0).abs() < 1e-14);
    assert!((variance_term(&g, 1.0, 1.0, &grid).unwrap().variance - 0.25).abs() < 1e-14);
}

#[test]
fn huge_ridge_is_below_interpolation() {
    let dom = Domain::Torus { d: 1 };
    let x = sample_iid(&dom, 50, 2).unwrap();
    let g = gram(&KernelSpec::laplace(1.0), &x).unwrap();
    let grid = quadrature(&dom, 256).unwrap();
    let v0 = variance_term(&g, 1.0, 0.0, &grid).unwrap().variance;
    let vbig = variance_term(&g, 1.0, 1e6, &grid).unwrap().variance;
    assert!(vbig < v0);
}

#[test]
fn linear_in_sigma_squared() {
    let dom = Domain::Cube { d: 2 };
    let x = sample_iid(&dom, 40, 6).unwrap();
    let g = gram(&KernelSpec::matern(1.5, 0.5), &x).unwrap();
    let grid = quadrature(&dom, 20).unwrap();
    let lams = geomspace(1e-6, 1.0, 12);
    let a = variance_curve(&g, 0.7, &lams, true, &grid).unwrap();
    let b = variance_curve(&g, 1.4, &lams, true, &grid).unwrap();
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert_eq!(2.0 * x.variance, y.variance);
    }
}

#[test]
fn single_level_curve() {
    let dom = Domain::Torus { d: 1 };
    let x = sample_iid(&dom, 30, 1).unwrap();
    let g = gram(&KernelSpec::laplace(0.5), &x).unwrap();
    let grid = quadrature(&dom, 128).unwrap();
    let c = variance_curve(&g, 0.25, &[1e-3], false, &grid).unwrap();
    assert_eq!(c.entries.len(), 1);
    assert_eq!(c.entries[0], variance_term(&g, 0.25, 1e-3, &grid).unwrap());
}

#[test]
fn seminorm_route_agrees() {
    let dom = Domain::Sphere { d: 3 };
    let x = sample_iid(&dom, 64, 12).unwrap();
    let g = gram(&KernelSpec::ntk2(), &x).unwrap();
    let grid = quadrature(&dom, 12).unwrap();
    for lam in [1e-4, 1e-2, 1.0] {
        let direct = variance_term(&g, 0.3, lam, &grid).unwrap().variance;
        let semi = variance_term_seminorm(&g, 0.3, lam, &grid).unwrap();
        assert!((direct - semi).abs() <= 1e-9 * direct.max(1e-12), "λ={lam}: {direct} {semi}");
    }
}

#[test]
fn theoretical_single_term() {
    let sp = SpectrumModel::explicit(vec![1.0]).unwrap();
    assert!((theoretical_variance(&sp, 1.0, 10, 1.0).unwrap() - 0.025).abs() < 1e-16);
}

#[test]
fn theoretical_rate_band() {
    let sp = SpectrumModel::power_law(1.0, 2.0).unwrap();
    let ratios: Vec<f64> = geomspace(1e-6, 1e-2, 9)
        .into_iter()
        .map(|lam| theoretical_variance(&sp, 1.0, 100, lam).unwrap() / (lam.powf(-0.5) / 100.0))
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    // N₂(λ) λ^{1/2} → ∫₀^∞ (1 + u²)^{-2} du = π/4
    assert!(lo > 0.5 && hi < 1.0, "{ratios:?}");
    assert!((ratios[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-2);
}

#[test]
fn theory_tracks_the_sample_variance() {
    let n = 1024;
    let k = sobolev4(1024);
    let spec = KernelSpec::periodic(k.clone());
    let dom = Domain::Torus { d: 1 };
    let grid = quadrature(&dom, 4096).unwrap();
    let lam = (n as f64).powf(-0.5);
    let draws: Vec<f64> = (0..20)
        .map(|s| {
            let x = sample_iid(&dom, n, 100 + s).unwrap();
            let g = gram(&spec, &x).unwrap();
            variance_term(&g, 1.0, lam, &grid).unwrap().variance
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let theory = theoretical_variance(&exact_spectrum_torus(&k), 1.0, n, lam).unwrap();
    assert!((mean - theory).abs() <= 0.35 * theory, "{mean} vs {theory}");
}

fn window_slope(n: usize, upper: f64, seed: u64) -> f64 {
    let dom = Domain::Torus { d: 1 };
    let x = sample_iid(&dom, n, seed).unwrap();
    let g = gram(&KernelSpec::periodic(sobolev4(1024)), &x).unwrap();
    let grid = quadrature(&dom, 4096).unwrap();
    let lams = geomspace((n as f64).powf(-3.5), upper, 30);
    variance_curve(&g, 1.0, &lams, false, &grid).unwrap().slope().unwrap().slope
}

#[test]
fn rate_window_at_n512() {
    let n = 512;
    let slope = window_slope(n, (n as f64).powf(-0.25), 77);
    assert!((slope + 0.25).abs() <= 0.04, "{slope}");
    // Stretching the window up to λ = 1 = λ_1 takes in the bend where every
    // eigenvalue is shrunk; the excess shrinks as n doubles.
    let wide = window_slope(n, 1.0, 77);
    let wide_doubled = window_slope(2 * n, 1.0, 77);
    assert!((wide_doubled + 0.25).abs() < (wide + 0.25).abs(), "{wide} {wide_doubled}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn non_increasing_in_lambda(n in 2usize..60, seed in any::<u64>(), lo in -10.0f64..-2.0, span in 1.0f64..8.0) {
        let dom = Domain::Cube { d: 2 };
        let x = sample_iid(&dom, n, seed).unwrap();
        let g = gram(&KernelSpec::laplace(0.7), &x).unwrap();
        let grid = QuadratureGrid::monte_carlo(&dom, 256, seed ^ 5).unwrap();
        let lams = geomspace(10f64.powf(lo), 10f64.powf(lo + span), 30);
        let c = variance_curve(&g, 1.0, &lams, true, &grid).unwrap();
        for w in c.entries.windows(2) {
            prop_assert!(w[1].variance <= w[0].variance * (1.0 + 1e-12));
        }
    }
}
