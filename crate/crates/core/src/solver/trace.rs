//! Decay traces and their CSV/JSON layouts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Discretization, InitialDatum, Solver};
use crate::constants::DomainSpec;
use crate::error::{Error, Result};
use crate::velocity::C64;

/// Columns of the trace CSV, in order.
pub const CSV_COLUMNS: [&str; 5] = ["t", "l2_sq", "gradv_sq", "hminus1_sq", "weighted_sq"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub l2_sq: f64,
    pub gradv_sq: f64,
    pub hminus1_sq: f64,
    pub hminus1_displayed_sq: f64,
    pub weighted_sq: Option<f64>,
    pub l2_fluct_sq: f64,
}

/// `rho_hat(xi, t)` and `d_t rho_hat(xi, t)` at every recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistory {
    pub xis: Vec<i64>,
    pub t: Vec<f64>,
    /// `rho[n][j]` as `(re, im)` for `xis[j]` at `t[n]`.
    pub rho: Vec<Vec<(f64, f64)>>,
    pub drho: Vec<Vec<(f64, f64)>>,
}

impl DensityHistory {
    pub fn new(xis: Vec<i64>) -> Self {
        Self {
            xis,
            t: Vec::new(),
            rho: Vec::new(),
            drho: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, rho: &[C64], drho: &[C64]) {
        self.t.push(t);
        self.rho.push(rho.iter().map(|z| (z.re, z.im)).collect());
        self.drho.push(drho.iter().map(|z| (z.re, z.im)).collect());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub alpha: f64,
    pub domain: DomainSpec,
    pub discretization: Discretization,
    pub initial: InitialDatum,
    pub t_final: f64,
    pub record_stride: usize,
    pub sigma: Option<f64>,
    pub scheme_fallback: bool,
    pub velocity_radius: Option<f64>,
}

impl TraceMeta {
    pub(super) fn new(solver: &Solver, datum: &InitialDatum, t_final: f64, stride: usize) -> Self {
        Self {
            alpha: solver.alpha,
            domain: solver.dom,
            discretization: solver.disc,
            initial: *datum,
            t_final,
            record_stride: stride,
            sigma: solver.weight_sigma(),
            scheme_fallback: solver.scheme_fallback,
            velocity_radius: match &solver.space {
                crate::velocity::VelocitySpace::Grid(g) => Some(g.radius),
                crate::velocity::VelocitySpace::Hermite(_) => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub meta: TraceMeta,
    pub samples: Vec<NormSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityHistory>,
}

impl DecayTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            samples: Vec::new(),
            density: None,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column<F: Fn(&NormSample) -> f64>(&self, f: F) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    pub fn l2(&self) -> Vec<f64> {
        self.column(|s| s.l2_sq)
    }

    pub fn gradv(&self) -> Vec<f64> {
        self.column(|s| s.gradv_sq)
    }

    /// Checks the structural invariants: strictly increasing times, finite
    /// non-negative entries, and non-increasing `l2_sq` up to `rel_tol`.
    pub fn check_integrity(&self, rel_tol: f64) -> Result<()> {
        for w in self.samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::DataIntegrity(format!(
                    "times not strictly increasing at t = {}",
                    w[1].t
                )));
            }
            if w[1].l2_sq > w[0].l2_sq * (1.0 + rel_tol) {
                return Err(Error::DataIntegrity(format!(
                    "l2_sq increases from {} to {} at t = {}",
                    w[0].l2_sq, w[1].l2_sq, w[1].t
                )));
            }
        }
        for s in &self.samples {
            let vals = [
                s.t,
                s.l2_sq,
                s.gradv_sq,
                s.hminus1_sq,
                s.weighted_sq.unwrap_or(0.0),
            ];
            if vals.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::DataIntegrity(format!(
                    "invalid norm sample at t = {}",
                    s.t
                )));
            }
        }
        Ok(())
    }

    /// CSV with header `t,l2_sq,gradv_sq,hminus1_sq,weighted_sq`; values in
    /// `{:.17e}`, an empty `weighted_sq` field when no weight is configured.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for s in &self.samples {
            let weighted = s
                .weighted_sq
                .map(|w| format!("{w:.17e}"))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{}",
                s.t, s.l2_sq, s.gradv_sq, s.hminus1_sq, weighted
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Two-column `t value` data for one norm.
    pub fn plot_data<F: Fn(&NormSample) -> Option<f64>>(&self, f: F) -> String {
        let mut out = String::new();
        for s in &self.samples {
            if let Some(v) = f(s) {
                let _ = writeln!(out, "{:.17e} {:.17e}", s.t, v);
            }
        }
        out
    }
}
