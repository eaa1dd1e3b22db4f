use std::f64::consts::PI;

use kernel_lab::kernels::{estimate_holder, estimate_profile_holder};
use kernel_lab::kernels::{FourierCoefficients, FourierKernel, FourierMode};
use kernel_lab::*;
use proptest::prelude::*;

fn sobolev() -> KernelSpec {
    KernelSpec::periodic(FourierKernel::sobolev_1d(64, 2.0).unwrap())
}

fn pts(rows: &[&[f64]]) -> PointSet {
    PointSet::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn ntk_landmarks() {
    let k = KernelSpec::ntk2();
    let e = [1.0, 0.0, 0.0];
    assert!((k.eval(&e, &e).unwrap() - 2.0).abs() < 1e-15);
    assert!((k.eval(&e, &[0.0, 1.0, 0.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
    assert!(k.eval(&e, &[-1.0, 0.0, 0.0]).unwrap().abs() < 1e-15);
}

#[test]
fn constant_gram_is_all_ones() {
    let x = pts(&[&[0.1], &[0.5], &[-2.0]]);
    let g = gram(&KernelSpec::constant(1.0), &x).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(g.raw()[(i, j)], 1.0);
        }
    }
}

#[test]
fn laplace_gram_on_two_points() {
    let x = pts(&[&[0.0], &[1.0]]);
    let g = gram(&KernelSpec::laplace(1.0), &x).unwrap();
    let e = (-1.0f64).exp();
    assert!((g.raw()[(0, 0)] - 1.0).abs() < 1e-15);
    assert!((g.raw()[(0, 1)] - e).abs() < 1e-15);
    assert!((g.raw()[(1, 0)] - e).abs() < 1e-15);
    assert!((g.raw()[(1, 1)] - 1.0).abs() < 1e-15);
}

#[test]
fn single_point_gram_is_the_diagonal() {
    let specs = [
        KernelSpec::laplace(0.7),
        KernelSpec::gaussian(1.3),
        KernelSpec::matern(1.5, 0.5),
        sobolev(),
    ];
    for spec in &specs {
        let x = pts(&[&[0.3]]);
        let g = gram(spec, &x).unwrap();
        assert_eq!(g.n(), 1);
        let k = spec.eval(&[0.3], &[0.3]).unwrap();
        assert!((g.raw()[(0, 0)] - k).abs() <= 1e-12 * k);
    }
    let x = pts(&[&[0.0, 0.6, 0.8]]);
    let g = gram(&KernelSpec::ntk2(), &x).unwrap();
    assert!((g.raw()[(0, 0)] - 2.0).abs() < 1e-12);
}

#[test]
fn duplicate_points_are_named() {
    let x = pts(&[&[0.1], &[0.4], &[0.1]]);
    match gram(&KernelSpec::laplace(1.0), &x) {
        Err(Error::DuplicatePoints { i, j }) => assert_eq!((i, j), (0, 2)),
        other => panic!("expected duplicate points, got {other:?}"),
    }
}

#[test]
fn sampled_grams_are_symmetric_and_psd() {
    let dom = Domain::Cube { d: 2 };
    let x = sample_iid(&dom, 200, 3).unwrap();
    let g = gram(&KernelSpec::matern(2.5, 0.3), &x).unwrap();
    assert_eq!(g.symmetry_defect(), 0.0);
    g.check_psd().unwrap();
}

#[test]
fn gaussian_holder_saturates() {
    let h = estimate_holder(&KernelSpec::gaussian(1.0), &Domain::Cube { d: 2 }, 600, 11).unwrap();
    assert!((h.exponent - 1.0).abs() <= 0.1, "{h:?}");
}

#[test]
fn laplace_holder_is_lipschitz() {
    let h = estimate_holder(&KernelSpec::laplace(1.0), &Domain::Torus { d: 1 }, 600, 12).unwrap();
    assert!((h.exponent - 1.0).abs() <= 0.15, "{h:?}");
}

#[test]
fn ntk_profile_has_square_root_endpoints() {
    let h = estimate_profile_holder(&KernelSpec::ntk2(), 600).unwrap();
    assert!((h.exponent - 0.5).abs() <= 0.1, "{h:?}");
}

#[test]
fn ntk_is_lipschitz_in_pair_space() {
    // The square root in t = ⟨x, y⟩ meets 1 - t ~ ‖x - y‖²/2 on the
    // sphere, so the kernel is Lipschitz in the points themselves.
    let h = estimate_holder(&KernelSpec::ntk2(), &Domain::Sphere { d: 3 }, 600, 13).unwrap();
    assert!((h.exponent - 1.0).abs() <= 0.15, "{h:?}");
}

#[test]
fn holder_needs_enough_probes() {
    assert!(matches!(
        estimate_holder(&KernelSpec::laplace(1.0), &Domain::Torus { d: 1 }, 99, 0),
        Err(Error::Config(_))
    ));
}

fn specs_for(domain: &Domain) -> Vec<KernelSpec> {
    let mut v = vec![
        KernelSpec::laplace(0.8),
        KernelSpec::gaussian(0.5),
        KernelSpec::matern(0.5, 1.0),
        KernelSpec::matern(1.5, 0.4),
        KernelSpec::matern(2.5, 0.7),
        KernelSpec::constant(2.0),
    ];
    match domain {
        Domain::Sphere { .. } => v.push(KernelSpec::ntk2()),
        Domain::Torus { d: 1 } => v.push(sobolev()),
        _ => {}
    }
    v
}

fn arb_domain() -> impl Strategy<Value = Domain> {
    prop_oneof![
        (1usize..=3).prop_map(|d| Domain::Torus { d }),
        (1usize..=3).prop_map(|d| Domain::Cube { d }),
        (3usize..=5).prop_map(|d| Domain::Sphere { d }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz(domain in arb_domain(), seed in any::<u64>()) {
        let x = sample_iid(&domain, 2, seed).unwrap();
        let (a, b) = (x.point(0), x.point(1));
        for spec in specs_for(&domain) {
            let kab = spec.eval(a, b).unwrap();
            let bound = (spec.eval(a, a).unwrap() * spec.eval(b, b).unwrap()).sqrt();
            prop_assert!(kab.abs() <= bound + 1e-10, "{}: {kab} > {bound}", spec.name());
        }
    }

    #[test]
    fn periodic_kernels_are_shift_invariant(
        x in -PI..PI, y in -PI..PI, c in -10.0f64..10.0,
        coefs in prop::collection::vec(0.0f64..1.0, 1..6),
    ) {
        let modes = coefs
            .iter()
            .enumerate()
            .map(|(m, &value)| FourierMode { freq: vec![m as i64], value })
            .collect();
        let k = KernelSpec::periodic(FourierKernel::new(1, FourierCoefficients::Explicit(modes)).unwrap());
        let base = k.eval(&[x], &[y]).unwrap();
        let shifted = k.eval(&[x + c], &[y + c]).unwrap();
        prop_assert!((base - shifted).abs() < 1e-10);
    }

    #[test]
    fn gram_is_deterministic(seed in any::<u64>(), n in 1usize..40) {
        let x = sample_iid(&Domain::Sphere { d: 3 }, n, seed).unwrap();
        let a = gram(&KernelSpec::ntk2(), &x).unwrap();
        let b = gram(&KernelSpec::ntk2(), &x.clone()).unwrap();
        prop_assert_eq!(a.raw(), b.raw());
    }

    #[test]
    fn sampler_is_deterministic(domain in arb_domain(), seed in any::<u64>(), n in 1usize..100) {
        let a = sample_iid(&domain, n, seed).unwrap();
        let b = sample_iid(&domain, n, seed).unwrap();
        prop_assert_eq!(a.coords(), b.coords());
        prop_assert!(a.iter().all(|p| domain.contains(p)));
    }
}
