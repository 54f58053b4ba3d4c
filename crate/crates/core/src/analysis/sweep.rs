//! Sweep `alpha -> 1^-` with a shared initial datum.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{empirical_w, fit_decay_rate, fit_power_law, verify_theorem2, BihariEnvelope, Phi};
use crate::constants::{
    subexp_constants, subexp_sigma, weighted_poincare_constant, DomainSpec, SubexpInputs,
};
use crate::equilibria::{EquilibriumSpec, MomentKind};
use crate::error::{Error, Result};
use crate::solver::{Discretization, InitialDatum, Scheme, Solver, VelocityBasis};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    /// Exponent of the exponential-regime reference run.
    pub reference_alpha: f64,
    pub domain: DomainSpec,
    pub datum: InitialDatum,
    pub cells: usize,
    pub xi_max: i64,
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    /// Fixed `W`; estimated from each run when absent.
    pub w: Option<f64>,
    pub tail_fraction: f64,
    pub poincare_cells: usize,
}

impl SweepConfig {
    /// Hölder exponent `p = 2 - alpha`, so that `p -> 1` as `alpha -> 1`.
    pub fn p_of(alpha: f64) -> f64 {
        2.0 - alpha
    }

    fn disc(&self) -> Discretization {
        Discretization {
            xi_max: self.xi_max,
            basis: VelocityBasis::WeightedGrid {
                cells: self.cells,
                radius: None,
            },
            dt: self.dt,
            scheme: Scheme::EigenExponential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub p: f64,
    pub sigma: f64,
    /// `sigma / (2 (1 - alpha))`; absent for the reference run.
    pub envelope_exponent: Option<f64>,
    pub fitted_rate: f64,
    pub fitted_rate_r2: f64,
    pub power_exponent: f64,
    pub power_r2: f64,
    pub ell: Option<f64>,
    pub a0: Option<f64>,
    pub k: Option<f64>,
    pub w: Option<f64>,
    pub envelope_margin: Option<f64>,
    pub explicit_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub reference: SweepRow,
    pub exponents_increasing: bool,
    pub rates_increasing: bool,
    pub rates_below_reference: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "alpha,p,sigma,envelope_exponent,fitted_rate,fitted_rate_r2,power_exponent,power_r2,ell,envelope_margin,explicit_margin\n",
        );
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.17e}")).unwrap_or_default();
        for r in self.rows.iter().chain(std::iter::once(&self.reference)) {
            let _ = writeln!(
                out,
                "{},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{}",
                r.alpha,
                r.p,
                r.sigma,
                opt(r.envelope_exponent),
                r.fitted_rate,
                r.fitted_rate_r2,
                r.power_exponent,
                r.power_r2,
                opt(r.ell),
                opt(r.envelope_margin),
                opt(r.explicit_margin)
            );
        }
        out
    }
}

fn sublinear_row(cfg: &SweepConfig, alpha: f64) -> Result<SweepRow> {
    let p = SweepConfig::p_of(alpha);
    let sigma = subexp_sigma(alpha, p)?;
    let spec = EquilibriumSpec::with_defaults(alpha, 1)?;
    let solver = Solver::new(alpha, cfg.domain, cfg.disc())?.with_weight(sigma);
    let trace = solver.simulate(&cfg.datum, cfg.t_final, cfg.stride, false)?;
    let x0 = trace.samples[0].l2_sq;
    let weighted0 = trace.samples[0]
        .weighted_sq
        .ok_or_else(|| Error::Internal("weighted norm missing".into()))?;
    let w = match cfg.w {
        Some(w) => w,
        None => empirical_w(&trace, spec.moment(MomentKind::Japanese(sigma))?)?,
    };
    let wp = weighted_poincare_constant(&spec, cfg.poincare_cells)?;
    let sc = subexp_constants(
        &spec,
        &cfg.domain,
        wp.value,
        &SubexpInputs {
            p,
            weighted_h0_sq: weighted0,
            x0,
            w,
        },
    )?;
    let mut env = BihariEnvelope::new(Phi::new(sc.a, sc.c, p)?, x0)?;
    let (env_check, explicit) =
        verify_theorem2(&trace, cfg.domain.tau, &mut env, sc.k, sc.exponent)?;
    let rate = fit_decay_rate(&trace, cfg.domain.tau, cfg.tail_fraction)?;
    let power = fit_power_law(&trace, cfg.domain.tau, cfg.tail_fraction)?;
    Ok(SweepRow {
        alpha,
        p,
        sigma,
        envelope_exponent: Some(sc.exponent),
        fitted_rate: rate.rate,
        fitted_rate_r2: rate.r2,
        power_exponent: power.exponent,
        power_r2: power.r2,
        ell: Some(2.0 * x0.powf(p - 1.0) * sc.a0.powf(-p)),
        a0: Some(sc.a0),
        k: Some(sc.k),
        w: Some(w),
        envelope_margin: Some(env_check.margin),
        explicit_margin: Some(explicit.margin),
    })
}

fn reference_row(cfg: &SweepConfig) -> Result<SweepRow> {
    let alpha = cfg.reference_alpha;
    let solver = Solver::new(alpha, cfg.domain, cfg.disc())?;
    let trace = solver.simulate(&cfg.datum, cfg.t_final, cfg.stride, false)?;
    let rate = fit_decay_rate(&trace, cfg.domain.tau, cfg.tail_fraction)?;
    let power = fit_power_law(&trace, cfg.domain.tau, cfg.tail_fraction)?;
    Ok(SweepRow {
        alpha,
        p: 1.0,
        sigma: 0.0,
        envelope_exponent: None,
        fitted_rate: rate.rate,
        fitted_rate_r2: rate.r2,
        power_exponent: power.exponent,
        power_r2: power.r2,
        ell: None,
        a0: None,
        k: None,
        w: None,
        envelope_margin: None,
        explicit_margin: None,
    })
}

/// Runs the sublinear exponents of `cfg.alphas` and the reference run, and
/// reports whether envelope exponents and fitted rates increase with `alpha`.
pub fn alpha_limit_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::Regime {
            operation: "alpha_limit_sweep",
            needs: "every alpha in (0, 1)",
            alpha: cfg
                .alphas
                .iter()
                .copied()
                .find(|a| !(*a > 0.0 && *a < 1.0))
                .unwrap_or(f64::NAN),
        });
    }
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    #[cfg(feature = "parallel")]
    let rows: Vec<Result<SweepRow>> = alphas.par_iter().map(|&a| sublinear_row(cfg, a)).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Result<SweepRow>> = alphas.iter().map(|&a| sublinear_row(cfg, a)).collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = reference_row(cfg)?;
    let exponents_increasing = rows
        .windows(2)
        .all(|w| w[1].envelope_exponent > w[0].envelope_exponent);
    let rates_increasing = rows.windows(2).all(|w| w[1].fitted_rate > w[0].fitted_rate);
    let rates_below_reference = rows.iter().all(|r| r.fitted_rate < reference.fitted_rate);
    Ok(SweepReport {
        config: cfg.clone(),
        rows,
        reference,
        exponents_increasing,
        rates_increasing,
        rates_below_reference,
    })
}
