use gckz_core::gckz::{divisor_distance, y_xi, PfaffianSystem, YForm};
use gckz_core::isomono::{deformation_generator, transport, DeformationPath};
use gckz_core::mat::{c, charpoly_distance, det, inverse, max_abs, solve_sylvester, CMat, C64};
use gckz_core::model::Model;
use gckz_core::odeflow::Dop853;
use gckz_core::reps::RepSpec;
use gckz_core::stokes::{oracle_agreement, Ledger, StokesSettings, Target};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn model(w: Option<&str>, v: &str) -> Model {
    Model::new(w.map(|s| s.parse().unwrap()), v.parse().unwrap(), vec![1.0, -1.0], c(0.0, 1.0)).unwrap()
}

fn cplx() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

fn cmat(n: usize, r: f64) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-r..r, -r..r), n * n).prop_map(move |v| CMat::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
}

fn spec() -> impl Strategy<Value = RepSpec> {
    let leaf = prop_oneof![
        (1..4usize).prop_map(RepSpec::Defining),
        (1..4usize).prop_map(RepSpec::Adjoint),
        (1..4usize).prop_map(RepSpec::Trivial),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| RepSpec::Dual(Box::new(a))),
            inner.clone().prop_map(|a| RepSpec::TauDouble(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RepSpec::Tensor(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| RepSpec::Sum(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, rng_seed: RngSeed::Fixed(0x6b7a), ..ProptestConfig::default() })]

    #[test]
    fn module_specs_round_trip(s in spec()) {
        let text = s.to_string();
        match text.parse::<RepSpec>() {
            Ok(back) => prop_assert_eq!(back, s),
            // mixed ranks inside tensor/sum are rejected on parse
            Err(_) => prop_assert!(text.contains("tensor") || text.contains("sum")),
        }
    }

    #[test]
    fn two_point_system_is_flat_and_equivariant(z1 in cplx(), z2 in cplx()) {
        let z = [z1, z2];
        prop_assume!(divisor_distance(&z) > 0.1);
        let sys = PfaffianSystem::new(&model(Some("defining(2)"), "adjoint(2)"), 2).unwrap();
        prop_assert!(sys.flatness_residual(&z).unwrap() < 1e-10);
        prop_assert!(sys.equivariance_residual(&z).unwrap() < 1e-10);
    }

    #[test]
    fn y_xi_identity_in_the_positive_chamber(a in 0.1..2.0f64, d in 0.1..2.0f64) {
        let sys = PfaffianSystem::new(&model(Some("defining(2)"), "adjoint(2)"), 2).unwrap();
        let (_, r) = y_xi(&sys, &[a, a + d], YForm::Corrected).unwrap();
        prop_assert!(r < 1e-12);
    }

    #[test]
    fn generator_is_linear_in_the_direction(d1 in -2.0..2.0f64, d2 in -2.0..2.0f64, s in -3.0..3.0f64) {
        let m = model(Some("defining(2)"), "adjoint(2)");
        for t in [Target::S, Target::K] {
            let g = deformation_generator(&m, &m.u, &[d1, d2], t, 0.5).unwrap();
            let gs = deformation_generator(&m, &m.u, &[s * d1, s * d2], t, 0.5).unwrap();
            prop_assert!(max_abs(&(g * c(s, 0.0) - gs)) < 1e-12);
        }
    }

    #[test]
    fn sylvester_solutions(a in cmat(3, 1.0), b in cmat(2, 1.0), x in cmat(1, 1.0)) {
        let shift = CMat::identity(3, 3) * c(3.0, 0.0);
        let a = a + shift;
        let rhs = CMat::from_fn(3, 2, |i, j| x[(0, 0)] * c((i + j) as f64, 1.0));
        let y = solve_sylvester(&a, &b, &rhs).unwrap();
        prop_assert!(max_abs(&(&a * &y + &y * &b - &rhs)) < 1e-12 * (1.0 + max_abs(&rhs)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, rng_seed: RngSeed::Fixed(0x6b7b), ..ProptestConfig::default() })]

    #[test]
    fn transport_is_a_conjugation(m0 in cmat(4, 1.0), du in 0.2..1.0f64, dv in -0.5..0.5f64) {
        let m = model(Some("defining(2)"), "defining(2)");
        let m0 = m0 + CMat::identity(4, 4) * c(2.0, 0.0);
        let path = DeformationPath { waypoints: vec![vec![1.0, -1.0], vec![1.0 + du, -1.0 + dv]] };
        let moved = transport(&m0, &path, &m, Target::K, 0.5, &Dop853::with_rtol(1e-13)).unwrap();
        prop_assert!((det(&moved) - det(&m0)).norm() < 1e-10 * det(&m0).norm());
        prop_assert!(charpoly_distance(&moved, &m0).unwrap() < 1e-9);
    }

    #[test]
    fn stokes_pipeline_matches_the_oracle(a in 0.5..1.5f64, b in 0.0..1.0f64, a0 in cmat(2, 0.4), k in 0usize..4) {
        let st = StokesSettings { ledger: Ledger::all()[k], ..StokesSettings::default() };
        let gap = oracle_agreement([c(0.0, a), c(0.0, -b)], &a0, &st).unwrap();
        prop_assert!(gap < 1e-8, "gap {gap:e}");
    }

    #[test]
    fn conjugation_keeps_the_charpoly(a in cmat(4, 1.0), p in cmat(4, 0.3)) {
        let p = p + CMat::identity(4, 4);
        let b = &p * &a * inverse(&p, "P").unwrap();
        prop_assert!(charpoly_distance(&a, &b).unwrap() < 1e-10);
    }
}
