use kfp_core::constants::DomainSpec;
use kfp_core::hypo_compare::mode_spectral_gap;
use kfp_core::solver::{Discretization, InitialDatum, Scheme, Solver, VelocityBasis};
use proptest::prelude::*;

fn hermite_solver(n: usize, xi_max: i64, dt: f64, length: f64) -> Solver {
    let dom = DomainSpec::new(length, 1.0, 1, 0.0).unwrap();
    let disc = Discretization {
        xi_max,
        basis: VelocityBasis::Hermite { n },
        dt,
        scheme: Scheme::EigenExponential,
    };
    Solver::new(2.0, dom, disc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_decays_and_matches_dissipation(seed in 0u64..1000, length in 1.0f64..10.0) {
        let solver = hermite_solver(24, 3, 0.02, length);
        let datum = InitialDatum::RandomSmooth { seed, xi_max: 3, k_max: 8 };
        let trace = solver.simulate(&datum, 2.0, 1, false).unwrap();
        prop_assert!(trace.check_integrity(1e-12).is_ok());
        let field = solver.initial_field(&datum).unwrap();
        let rate = solver.energy_rate(&field);
        let dissipation = 2.0 * solver.norms(&field).gradv_sq;
        prop_assert!((rate + dissipation).abs() <= 1e-10 * dissipation.max(1e-300));
    }

    #[test]
    fn real_data_stay_real_and_mass_free(seed in 0u64..1000) {
        let solver = hermite_solver(20, 4, 0.05, 2.0 * std::f64::consts::PI);
        let datum = InitialDatum::RandomSmooth { seed, xi_max: 4, k_max: 6 };
        let field = solver.evolve(&datum, 1.0).unwrap();
        prop_assert!(field.conjugate_symmetry_defect() < 1e-12);
        prop_assert!(solver.mass(&field).norm() < 1e-12);
    }

    #[test]
    fn gaps_are_even_in_xi(xi in 1i64..6, length in 1.0f64..10.0) {
        let dom = DomainSpec::new(length, 1.0, 1, 0.0).unwrap();
        let basis = VelocityBasis::Hermite { n: 24 };
        let a = mode_spectral_gap(2.0, &dom, &basis, xi).unwrap();
        let b = mode_spectral_gap(2.0, &dom, &basis, -xi).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        prop_assert!(a > 0.0);
    }

    #[test]
    fn lemma26_duality_holds(seed in 0u64..1000) {
        let solver = hermite_solver(24, 3, 0.05, 2.0 * std::f64::consts::PI);
        let field = solver.initial_field(&InitialDatum::RandomSmooth { seed, xi_max: 3, k_max: 8 }).unwrap();
        let n = solver.norms(&field);
        prop_assert!(n.hminus1_sq <= n.gradv_sq * (1.0 + 1e-8));
    }
}

#[test]
fn hermite_and_grid_agree_at_alpha_two() {
    let dom = DomainSpec::benchmark();
    let datum = InitialDatum::Separable {
        xi: 1,
        profile: kfp_core::solver::VelocityProfile::Hermite { k: 1 },
    };
    let build = |basis| {
        Solver::new(
            2.0,
            dom,
            Discretization {
                xi_max: 2,
                basis,
                dt: 0.05,
                scheme: Scheme::EigenExponential,
            },
        )
        .unwrap()
    };
    let h = build(VelocityBasis::Hermite { n: 32 })
        .simulate(&datum, 5.0, 10, false)
        .unwrap();
    let g = build(VelocityBasis::WeightedGrid {
        cells: 200,
        radius: None,
    })
    .simulate(&datum, 5.0, 10, false)
    .unwrap();
    for (a, b) in h.samples.iter().zip(&g.samples) {
        assert!((a.l2_sq - b.l2_sq).abs() <= 2e-3 * a.l2_sq, "t = {}", a.t);
    }
}

#[test]
fn implicit_midpoint_converges_at_second_order() {
    let dom = DomainSpec::benchmark();
    let datum = InitialDatum::RandomSmooth {
        seed: 3,
        xi_max: 2,
        k_max: 5,
    };
    let run = |scheme, dt: f64| {
        Solver::new(
            2.0,
            dom,
            Discretization {
                xi_max: 2,
                basis: VelocityBasis::Hermite { n: 24 },
                dt,
                scheme,
            },
        )
        .unwrap()
        .simulate(&datum, 1.0, (0.1 / dt).round() as usize, false)
        .unwrap()
    };
    let exact = run(Scheme::EigenExponential, 0.01);
    let error = |dt| {
        let t = run(Scheme::ImplicitMidpoint, dt);
        exact
            .samples
            .iter()
            .zip(&t.samples)
            .map(|(x, y)| (x.l2_sq - y.l2_sq).abs() / x.l2_sq)
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (error(0.01), error(0.005));
    let order = (coarse / fine).log2();
    assert!(
        (1.8..=2.2).contains(&order),
        "order {order} ({coarse:e}, {fine:e})"
    );
}

#[test]
fn trace_json_round_trips() {
    let solver = hermite_solver(16, 2, 0.1, 2.0 * std::f64::consts::PI);
    let trace = solver
        .simulate(&InitialDatum::HermiteMode { xi: 1, k: 2 }, 2.0, 1, true)
        .unwrap();
    let back = kfp_core::solver::DecayTrace::from_json(&trace.to_json().unwrap()).unwrap();
    assert_eq!(back.to_csv(), trace.to_csv());
}
