mod common;

use dsfc::basis::BasisSpec;
use dsfc::demo::paper_basis;
use dsfc::lmi::expr::{smat, svec};
use dsfc::matfun::{self, Matrix, Vector};
use dsfc::model::ControllerGains;
use dsfc::solver::ReferenceIpm;
use dsfc::verify::{simulate, spectral_abscissa, ClosedLoop, InitialSegment, Signal};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn matrix_strategy(rows: usize, cols: usize, bound: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-bound..bound, rows * cols).prop_map(move |v| Matrix::from_row_slice(rows, cols, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expm_semigroup(raw in matrix_strategy(4, 4, 1.0), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let m = &raw * (2.0 / raw.norm().max(2.0));
        let lhs = matfun::expm(&m, s).unwrap() * matfun::expm(&m, t).unwrap();
        let rhs = matfun::expm(&m, s + t).unwrap();
        prop_assert!((lhs - &rhs).abs().max() <= 1e-9 * (1.0 + rhs.abs().max()));
    }

    #[test]
    fn expm_kernel_derivative(a in matrix_strategy(3, 3, 1.0), b in matrix_strategy(3, 2, 1.0), tau in 0.0..1.0f64) {
        let h = 1e-5;
        let g = |x: f64| matfun::expm(&a, -x).unwrap() * &b;
        let fd = (g(tau + h) - g(tau - h)) / (2.0 * h);
        prop_assert!((fd + &a * g(tau)).abs().max() <= 1e-6);
    }

    #[test]
    fn gram_is_symmetric_positive_definite(rates in prop::collection::btree_set(-6i32..6, 1..5), r in 0.5..2.0f64) {
        let rates: Vec<f64> = rates.into_iter().map(|k| k as f64 / 2.0).collect();
        let spec = BasisSpec::exponentials(&rates, r).unwrap();
        let g = matfun::vanloan_gram(&spec.pi, &spec.f0, r).unwrap();
        let m = g.as_matrix();
        prop_assert!((m - m.transpose()).abs().max() <= 1e-12 * (1.0 + m.abs().max()));
        prop_assert!(matfun::lambda_min_sym(m) > 0.0);
    }

    #[test]
    fn stabilizing_gain_stabilizes(a in matrix_strategy(3, 3, 2.0), b in matrix_strategy(3, 2, 1.0)) {
        if let Ok(k) = matfun::stabilizing_gain(&a, &b, 0.05) {
            let alpha = matfun::spectral_abscissa_of(&(&a + &b * &k)).unwrap();
            prop_assert!(alpha < 0.0);
            prop_assert!(matfun::check_stabilizing(&a, &b, &k, 0.0).is_ok());
        }
    }

    #[test]
    fn svec_smat_round_trip(raw in matrix_strategy(5, 5, 10.0)) {
        let m = matfun::symmetrize(&raw);
        let v = svec(&m);
        prop_assert_eq!(v.len(), 15);
        prop_assert!((smat(5, &v) - &m).abs().max() <= 1e-14 * (1.0 + m.abs().max()));
        let frob: f64 = v.iter().map(|x| x * x).sum();
        prop_assert!((frob - m.norm_squared()).abs() <= 1e-12 * (1.0 + frob));
    }

    #[test]
    fn spectrum_and_simulation_agree_on_stability(k1 in -2.0..0.5f64, k2 in -1.5..0.5f64) {
        let prep = scalar_toy(-0.2, 1.0, -0.5, 0.5);
        let gains = ControllerGains {
            k1: Matrix::from_row_slice(1, 2, &[k1, k2]),
            k2: Matrix::zeros(1, 2),
            k3: Matrix::zeros(1, 2),
        };
        let cl = ClosedLoop::from_gains(&prep.aug, &prep.spec, &prep.gram, &gains).unwrap();
        let spec = spectral_abscissa(&cl, &[20, 40]).unwrap();
        prop_assume!(spec.converged && spec.estimate.abs() > 0.05);
        let psi = InitialSegment::Constant(Vector::from_element(2, 1.0));
        let tr = simulate(&cl, &psi, &Signal::Zero, 60.0, 0.02).unwrap();
        let late = tr.max_norm_after(50.0);
        if spec.estimate < 0.0 {
            prop_assert!(late < 1.0, "abscissa {} but late norm {}", spec.estimate, late);
        } else {
            prop_assert!(tr.diverged || late > 1.0, "abscissa {} but late norm {}", spec.estimate, late);
        }
    }
}

#[test]
fn bessel_inequality_on_random_segments() {
    let sampler = BesselSampler::new(paper_basis(1.0).unwrap(), 3, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let gap = sampler.relative_gap(&mut rng);
        assert!(gap >= -1e-6, "Bessel gap {gap}");
    }
}

#[test]
fn bessel_holds_for_scalar_segments() {
    let spec = BasisSpec::exponentials(&[0.0, 1.0], 1.0).unwrap();
    let sampler = BesselSampler::new(spec, 1, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gaps: Vec<f64> = (0..20).map(|_| sampler.relative_gap(&mut rng)).collect();
    assert!(gaps.iter().all(|&g| (-1e-6..=1.0).contains(&g)));
}

#[test]
fn overestimate_is_sound_on_a_scalar_grid() {
    let toy = oracle_toy();
    let center = interior_point(&toy, &ReferenceIpm);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let scan = overestimate_scan(&toy, &center, &mut rng, 100);
    assert_eq!(scan.points, 10_000);
    assert!(scan.feasible > 0 && scan.feasible < scan.points, "{scan:?}");
    assert_eq!(scan.violations, 0, "{scan:?}");
}

#[test]
fn gram_matches_adaptive_quadrature() {
    let gap = gram_quadrature_gap(&paper_basis(1.0).unwrap());
    assert!(gap <= 1e-10, "gap {gap}");
    let gap = gram_quadrature_gap(&BasisSpec::exponentials(&[-2.0, 0.5, 1.5], 0.7).unwrap());
    assert!(gap <= 1e-10, "gap {gap}");
}
