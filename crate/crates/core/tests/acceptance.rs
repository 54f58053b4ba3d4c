//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use kfp_core::analysis::{
    alpha_limit_sweep, fit_power_law, observed_orders, verify_averaging_lemma, verify_corollary1,
    verify_gen_poincare, verify_lemma26, verify_theorem1, verify_theorem2, BihariEnvelope,
    BoundCheck, Phi, SweepConfig,
};
use kfp_core::constants::{
    d_alpha, dms_rate, lambda_rates, poincare_constant, reference, subexp_constants,
    weighted_poincare_constant, DomainSpec, SubexpInputs,
};
use kfp_core::equilibria::{EquilibriumSpec, MomentKind};
use kfp_core::hypo_compare::{
    benchmark_table, global_mu, mode_spectral_gap, TableOptions, METHOD_TIME_AVERAGE,
    METHOD_TIME_AVERAGE_DISPLAYED, METHOD_TIME_AVERAGE_LITERAL,
};
use kfp_core::solver::{
    DecayTrace, Discretization, InitialDatum, Scheme, Solver, VelocityBasis, VelocityProfile,
};

const EXACT: f64 = 1e-6;
const DISCRETE: f64 = 1e-2;

type Outcome = (bool, String);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn benchmark_trace() -> DecayTrace {
    let disc = Discretization {
        xi_max: 6,
        basis: VelocityBasis::Hermite { n: 48 },
        dt: 0.05,
        scheme: Scheme::EigenExponential,
    };
    let solver = Solver::new(2.0, DomainSpec::benchmark(), disc).unwrap();
    let datum = InitialDatum::RandomSmooth {
        seed: 7,
        xi_max: 3,
        k_max: 6,
    };
    solver.simulate(&datum, 200.0, 2, true).unwrap()
}

fn criterion1() -> Outcome {
    let (lm, lbig, cm) = reference::dms_inputs();
    let r = dms_rate(lm, lbig, cm).unwrap();
    let lambda = 1.0 / (12.0 + 6.0 * 3f64.sqrt());
    let delta = (2.0 - 3f64.sqrt()) / 2.0;
    let c = (1.0 + delta) / (1.0 - delta);
    let ok = (r.lambda - lambda).abs() < 1e-9
        && (r.c - c).abs() < 1e-9
        && (r.lambda - 0.0446582).abs() < 1e-7;
    (
        ok,
        format!("DMS lambda = {:.10}, C = {:.10}", r.lambda, r.c),
    )
}

fn criterion2() -> Outcome {
    let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
    let m2 = spec.moment(MomentKind::SpeedSq).unwrap();
    let m4 = spec.moment(MomentKind::SpeedFourth).unwrap();
    let m6 = spec.moment(MomentKind::V1SqSpeedFourth).unwrap();
    let da = d_alpha(&spec, &DomainSpec::benchmark()).unwrap();
    let ok = (m2 - 0.5).abs() < 1e-10
        && (m4 - 0.75).abs() < 1e-10
        && (m6 - 1.875).abs() < 1e-10
        && (da - 7.75).abs() < 1e-9;
    (
        ok,
        format!("moments ({m2:.12}, {m4:.12}, {m6:.12}), d_alpha = {da:.12}"),
    )
}

fn criterion3() -> Outcome {
    let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
    let dom = DomainSpec::benchmark();
    let mut worst: f64 = 0.0;
    for n in 2..=64 {
        let gap = mode_spectral_gap(2.0, &dom, &VelocityBasis::Hermite { n }, 0).unwrap();
        worst = worst.max((1.0 / gap - 1.0).abs());
    }
    let p = poincare_constant(&spec, 256).unwrap();
    worst = worst.max((p - 1.0).abs());
    (
        worst < 1e-6,
        format!("max |P_2 - 1| over N = 2..64 = {worst:.3e}"),
    )
}

fn criterion4() -> Outcome {
    let dom = DomainSpec::benchmark();
    match global_mu(2.0, &dom, &VelocityBasis::Hermite { n: 64 }, 8) {
        Ok(mu) => {
            let in_band = (0.35..=0.45).contains(&mu.mu);
            (
                in_band && mu.relative_change <= 0.01,
                format!(
                    "global_mu = {:.6} at |xi| = {} (doubled: {:.6}, change {:.2e}); required [0.35, 0.45]",
                    mu.mu, mu.argmin_xi, mu.mu_refined, mu.relative_change
                ),
            )
        }
        Err(e) => (false, format!("global_mu failed: {e}")),
    }
}

fn criterion5() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=4usize {
        let disc = Discretization {
            xi_max: 1,
            basis: VelocityBasis::Hermite { n: 16 },
            dt: 0.01,
            scheme: Scheme::EigenExponential,
        };
        let solver = Solver::new(2.0, DomainSpec::benchmark(), disc).unwrap();
        let trace = solver
            .simulate(&InitialDatum::HermiteMode { xi: 0, k }, 10.0, 10, false)
            .unwrap();
        let x0 = trace.samples[0].l2_sq;
        for s in &trace.samples {
            // |h|^2 of a single mode decays at twice its rate
            let exact = x0 * (-2.0 * k as f64 * s.t).exp();
            worst = worst.max(rel(s.l2_sq, exact));
        }
    }
    (
        worst < 1e-10,
        format!("max relative error of exp(-k t) decay = {worst:.3e}"),
    )
}

fn criterion6() -> Outcome {
    let traces: Vec<DecayTrace> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let disc = Discretization {
                xi_max: 6,
                basis: VelocityBasis::Hermite { n: 48 },
                dt,
                scheme: Scheme::EigenExponential,
            };
            let solver = Solver::new(2.0, DomainSpec::benchmark(), disc).unwrap();
            let datum = InitialDatum::RandomSmooth {
                seed: 7,
                xi_max: 3,
                k_max: 6,
            };
            solver.simulate(&datum, 6.0, 1, false).unwrap()
        })
        .collect();
    let orders = observed_orders(&traces, 1.0, 5.0);
    let ok = orders.iter().all(|q| (1.8..=2.2).contains(q));
    (
        ok,
        format!("observed orders under dt halving = {orders:.3?}"),
    )
}

fn criterion7(trace: &DecayTrace) -> Outcome {
    let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
    let dom = DomainSpec::benchmark();
    let p = poincare_constant(&spec, 256).unwrap();
    let rates = lambda_rates(&spec, &dom, p).unwrap();
    let da = d_alpha(&spec, &dom).unwrap();
    let checks: Vec<BoundCheck> = vec![
        verify_theorem1(trace, rates.proof, dom.tau).unwrap(),
        verify_corollary1(trace, rates.proof, dom.tau).unwrap(),
        verify_gen_poincare(trace, rates.kappa, dom.tau).unwrap(),
        verify_lemma26(trace).unwrap(),
        verify_averaging_lemma(trace, &dom, da).unwrap(),
    ];
    let tols = [EXACT, EXACT, DISCRETE, 1e-8, DISCRETE];
    let ok = checks
        .iter()
        .zip(tols)
        .all(|(c, tol)| c.passed() && c.margin >= -tol);
    let detail = checks
        .iter()
        .map(|c| format!("{} {:.3e}", c.name, c.margin))
        .collect::<Vec<_>>()
        .join(", ");
    (ok, format!("margins: {detail}"))
}

fn criterion8() -> Outcome {
    let alpha = 0.5;
    let (p, sigma) = (2.0, 1.0);
    let dom = DomainSpec::new(2.0 * PI, 1.0, 1, 0.0).unwrap();
    let disc = Discretization {
        xi_max: 2,
        basis: VelocityBasis::WeightedGrid {
            cells: 128,
            radius: None,
        },
        dt: 0.1,
        scheme: Scheme::EigenExponential,
    };
    let solver = Solver::new(alpha, dom, disc).unwrap().with_weight(sigma);
    let datum = InitialDatum::Separable {
        xi: 1,
        profile: VelocityProfile::BoundedOdd,
    };
    let trace = solver.simulate(&datum, 500.0, 10, false).unwrap();
    let spec = EquilibriumSpec::with_defaults(alpha, 1).unwrap();
    let x0 = trace.samples[0].l2_sq;
    let weighted0 = trace.samples[0].weighted_sq.unwrap();
    let w =
        kfp_core::analysis::empirical_w(&trace, spec.moment(MomentKind::Japanese(sigma)).unwrap())
            .unwrap();
    let wp = weighted_poincare_constant(&spec, 256).unwrap();
    let sc = subexp_constants(
        &spec,
        &dom,
        wp.value,
        &SubexpInputs {
            p,
            weighted_h0_sq: weighted0,
            x0,
            w,
        },
    )
    .unwrap();
    let mut env = BihariEnvelope::new(Phi::new(sc.a, sc.c, p).unwrap(), x0).unwrap();
    let (envelope, explicit) =
        verify_theorem2(&trace, dom.tau, &mut env, sc.k, sc.exponent).unwrap();
    let fit = fit_power_law(&trace, dom.tau, 0.5).unwrap();
    let target = -sc.exponent * 0.9;
    let ok = envelope.passed() && explicit.passed() && fit.exponent <= target;
    (
        ok,
        format!(
            "envelope margin {:.3e}, explicit margin {:.3e}, tail exponent {:.3} (needs <= {:.3})",
            envelope.margin, explicit.margin, fit.exponent, target
        ),
    )
}

fn criterion9() -> Outcome {
    let (a, p, x0) = (1.3, 2.0, 0.8);
    let mut worst: f64 = 0.0;
    let mut power = BihariEnvelope::new(Phi::new(a, 0.0, p).unwrap(), x0).unwrap();
    let mut expo = BihariEnvelope::new(Phi::new(0.0, 4.0, p).unwrap(), x0).unwrap();
    for i in 0..=100 {
        let t = i as f64;
        let exact = (x0.powf(1.0 - p) + 2.0 * (p - 1.0) * a.powf(-p) * t).powf(-1.0 / (p - 1.0));
        worst = worst.max(rel(power.psi_inv(t).unwrap(), exact));
        let exact = x0 * (-2.0 * t / 4.0).exp();
        worst = worst.max(rel(expo.psi_inv(t).unwrap(), exact));
    }
    (
        worst < 1e-8,
        format!("max relative error of psi^-1 = {worst:.3e}"),
    )
}

fn criterion10(trace: &DecayTrace) -> Outcome {
    let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
    let dom = DomainSpec::benchmark();
    let table = benchmark_table(&spec, &dom, &TableOptions::default()).unwrap();
    let proof = table.row(METHOD_TIME_AVERAGE).map(|r| r.rate);
    let displayed = table.row(METHOD_TIME_AVERAGE_DISPLAYED).map(|r| r.rate);
    let literal = table.row(METHOD_TIME_AVERAGE_LITERAL).map(|r| r.rate);
    let flagged = table
        .flags
        .iter()
        .any(|f| f.starts_with("lambda-discrepancy"))
        && table
            .flags
            .iter()
            .any(|f| f.starts_with("lambda-literal-inconsistent"));
    let Some(lp) = proof else {
        return (false, "no time-average row".into());
    };
    let t1 = verify_theorem1(trace, lp, dom.tau).unwrap();
    let ok = displayed.is_some() && literal.is_some() && flagged && t1.passed();
    (
        ok,
        format!(
            "proof {lp:.7}, displayed {:.7}, literal {:.7}, flagged {flagged}, theorem1 margin {:.3e}",
            displayed.unwrap_or(f64::NAN),
            literal.unwrap_or(f64::NAN),
            t1.margin
        ),
    )
}

fn criterion11() -> Outcome {
    let cfg = SweepConfig {
        alphas: vec![0.6, 0.8, 0.9, 0.95],
        reference_alpha: 1.0,
        domain: DomainSpec::new(2.0 * PI, 1.0, 1, 0.0).unwrap(),
        datum: InitialDatum::Separable {
            xi: 1,
            profile: VelocityProfile::BoundedOdd,
        },
        cells: 128,
        xi_max: 2,
        dt: 0.1,
        t_final: 40.0,
        stride: 2,
        w: None,
        tail_fraction: 0.5,
        poincare_cells: 256,
    };
    let report = alpha_limit_sweep(&cfg).unwrap();
    let rates: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{:.4}", r.fitted_rate))
        .collect();
    let ok = report.exponents_increasing && report.rates_increasing && report.rates_below_reference;
    (
        ok,
        format!(
            "fitted rates [{}] -> reference {:.4}; exponents increasing {}",
            rates.join(", "),
            report.reference.fitted_rate,
            report.exponents_increasing
        ),
    )
}

fn run(n: usize, f: &dyn Fn() -> Outcome) -> bool {
    let start = Instant::now();
    let (ok, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        (false, format!("panicked: {msg}"))
    });
    println!(
        "criterion {n:>2}: {} ({:.2?}) {detail}",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed()
    );
    ok
}

fn main() {
    let trace = benchmark_trace();
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(criterion1)),
        (2, Box::new(criterion2)),
        (3, Box::new(criterion3)),
        (4, Box::new(criterion4)),
        (5, Box::new(criterion5)),
        (6, Box::new(criterion6)),
        (7, Box::new(|| criterion7(&trace))),
        (8, Box::new(criterion8)),
        (9, Box::new(criterion9)),
        (10, Box::new(|| criterion10(&trace))),
        (11, Box::new(criterion11)),
    ];
    let failed: Vec<usize> = criteria
        .iter()
        .filter_map(|(n, f)| (!run(*n, f.as_ref())).then_some(*n))
        .collect();
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
