//! Time averages, bound checks on decay traces, decay-rate fits and the
//! Bihari-Lasalle envelope machinery.

pub mod averaging;
pub mod bihari;
pub mod sweep;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{DecayTrace, NormSample};

pub use averaging::{hminus1_omega, verify_averaging_lemma, OmegaNorm};
pub use bihari::{BihariEnvelope, Phi};
pub use sweep::{alpha_limit_sweep, SweepConfig, SweepRow};

/// Relative tolerance for bounds that follow from exact arithmetic on the trace.
pub const TOL_EXACT: f64 = 1e-6;
/// Relative tolerance for bounds mediated by discretized norms.
pub const TOL_DISCRETE: f64 = 1e-2;
/// Tolerance of the duality bound `|Delta h|_{H^-1} <= |grad_v h|`.
pub const TOL_DUALITY: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Column {
    L2,
    Gradv,
    Hminus1,
    HminusDisplayed,
    Weighted,
    L2Fluct,
}

impl Column {
    pub fn get(&self, s: &NormSample) -> f64 {
        match self {
            Column::L2 => s.l2_sq,
            Column::Gradv => s.gradv_sq,
            Column::Hminus1 => s.hminus1_sq,
            Column::HminusDisplayed => s.hminus1_displayed_sq,
            Column::Weighted => s.weighted_sq.unwrap_or(f64::NAN),
            Column::L2Fluct => s.l2_fluct_sq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub anchor: String,
    pub window: (f64, f64),
    pub t: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `min (rhs - lhs) / rhs` over the samples.
    pub margin: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub flags: Vec<String>,
}

impl BoundCheck {
    pub fn new(
        name: &str,
        anchor: &str,
        t: Vec<f64>,
        lhs: Vec<f64>,
        rhs: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if t.is_empty() || t.len() != lhs.len() || t.len() != rhs.len() {
            return Err(Error::Internal(format!(
                "{name}: mismatched or empty check arrays"
            )));
        }
        if lhs.iter().chain(&rhs).any(|x| !x.is_finite()) {
            return Err(Error::DataIntegrity(format!(
                "{name}: non-finite bound values"
            )));
        }
        let margin = lhs
            .iter()
            .zip(&rhs)
            .map(|(l, r)| {
                if *r > 0.0 {
                    (r - l) / r
                } else if *l <= *r {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        let verdict = if margin >= -tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(Self {
            name: name.into(),
            anchor: anchor.into(),
            window: (t[0], *t.last().expect("non-empty")),
            t,
            lhs,
            rhs,
            margin,
            tol,
            verdict,
            flags: Vec::new(),
        })
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Human-readable table of check results.
pub fn checks_table(checks: &[BoundCheck]) -> String {
    let w = checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w$}  {:>7}  {:>14}  {:>8}  {:>21}  flags",
        "name", "verdict", "margin", "tol", "window"
    );
    for c in checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{:<w$}  {:>7}  {:>14.6e}  {:>8.0e}  [{:>8.3}, {:>9.3}]  {}",
            c.name,
            verdict,
            c.margin,
            c.tol,
            c.window.0,
            c.window.1,
            c.flags.join("; ")
        );
    }
    out
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let j = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[j - 1], times[j]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    values[j - 1] + w * (values[j] - values[j - 1])
}

/// Trapezoidal `int_a^b` of the piecewise-linear interpolant of `(times, values)`.
pub fn window_integral(times: &[f64], values: &[f64], a: f64, b: f64) -> Result<f64> {
    let (first, last) = match (times.first(), times.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::DegenerateWindow("empty trace".into())),
    };
    let slack = 1e-9 * (last - first).abs().max(1.0);
    if a < first - slack || b > last + slack || b < a {
        return Err(Error::WindowOutOfRange {
            lo: a,
            hi: b,
            first,
            last,
        });
    }
    if times.len() == 1 {
        return Ok(0.0);
    }
    let (a, b) = (a.max(first), b.min(last));
    let mut total = 0.0;
    let mut prev_t = a;
    let mut prev_v = interpolate(times, values, a);
    let start = times.partition_point(|&s| s <= a);
    for j in start..times.len() {
        if times[j] >= b {
            break;
        }
        total += 0.5 * (prev_v + values[j]) * (times[j] - prev_t);
        prev_t = times[j];
        prev_v = values[j];
    }
    let end_v = interpolate(times, values, b);
    total += 0.5 * (prev_v + end_v) * (b - prev_t);
    Ok(total)
}

/// `(1/tau) int_t^{t+tau}` of a trace column.
pub fn time_average(trace: &DecayTrace, column: Column, t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be > 0, got {tau}"
        )));
    }
    let times = trace.times();
    let values = trace.column(|s| column.get(s));
    Ok(window_integral(&times, &values, t, t + tau)? / tau)
}

/// Window starts on the trace grid with `t + tau` inside the trace.
pub fn window_starts(trace: &DecayTrace, tau: f64) -> Vec<f64> {
    let last = trace.samples.last().map(|s| s.t).unwrap_or(0.0);
    trace
        .samples
        .iter()
        .map(|s| s.t)
        .filter(|t| t + tau <= last + 1e-9 * last.max(1.0))
        .collect()
}

fn require_windows(trace: &DecayTrace, tau: f64) -> Result<Vec<f64>> {
    let starts = window_starts(trace, tau);
    if starts.is_empty() {
        let (first, last) = (
            trace.samples.first().map(|s| s.t).unwrap_or(0.0),
            trace.samples.last().map(|s| s.t).unwrap_or(0.0),
        );
        return Err(Error::WindowOutOfRange {
            lo: first,
            hi: first + tau,
            first,
            last,
        });
    }
    Ok(starts)
}

fn sliding_averages(
    trace: &DecayTrace,
    column: Column,
    tau: f64,
    starts: &[f64],
) -> Result<Vec<f64>> {
    let times = trace.times();
    let values = trace.column(|s| column.get(s));
    starts
        .iter()
        .map(|&t| Ok(window_integral(&times, &values, t, t + tau)? / tau))
        .collect()
}

fn require_exponential_regime(alpha: f64, operation: &'static str) -> Result<()> {
    if alpha < 1.0 {
        return Err(Error::Regime {
            operation,
            needs: "alpha >= 1",
            alpha,
        });
    }
    Ok(())
}

/// Time-averaged decay `(1/tau) int_t^{t+tau} |h|^2 <= |h0|^2 exp(-lambda t)` at every window start.
pub fn verify_theorem1(trace: &DecayTrace, lambda: f64, tau: f64) -> Result<BoundCheck> {
    require_exponential_regime(trace.meta.alpha, "verify_theorem1")?;
    let starts = require_windows(trace, tau)?;
    let x0 = trace.samples[0].l2_sq;
    let lhs = sliding_averages(trace, Column::L2, tau, &starts)?;
    let rhs: Vec<f64> = starts.iter().map(|t| x0 * (-lambda * t).exp()).collect();
    let mut check = BoundCheck::new(
        "theorem1",
        "time-averaged exponential decay",
        starts,
        lhs,
        rhs,
        TOL_EXACT,
    )?;
    let horizon = trace.samples.last().map(|s| s.t).unwrap_or(0.0);
    if lambda > 0.0 && horizon < 3.0 / lambda {
        check.flags.push(format!(
            "insufficient-horizon: T = {horizon} < 3/lambda = {:.1}",
            3.0 / lambda
        ));
    }
    Ok(check)
}

/// Pointwise decay `|h(t)|^2 <= exp(lambda tau) |h0|^2 exp(-lambda t)`.
///
/// For `t < tau` the bound follows from monotonicity alone; the trace must be
/// non-increasing.
pub fn verify_corollary1(trace: &DecayTrace, lambda: f64, tau: f64) -> Result<BoundCheck> {
    require_exponential_regime(trace.meta.alpha, "verify_corollary1")?;
    trace.check_integrity(1e-12)?;
    let x0 = trace.samples[0].l2_sq;
    let c = (lambda * tau).exp();
    let t = trace.times();
    let lhs = trace.l2();
    let rhs: Vec<f64> = t.iter().map(|s| c * x0 * (-lambda * s).exp()).collect();
    let mut check = BoundCheck::new(
        "corollary1",
        "pointwise decay with C = exp(lambda tau)",
        t,
        lhs,
        rhs,
        TOL_EXACT,
    )?;
    let horizon = trace.samples.last().map(|s| s.t).unwrap_or(0.0);
    if lambda > 0.0 && horizon < 3.0 / lambda {
        check.flags.push(format!(
            "insufficient-horizon: T = {horizon} < 3/lambda = {:.1}",
            3.0 / lambda
        ));
    }
    Ok(check)
}

/// Slab Poincaré `int |h|^2 <= kappa_alpha int |grad_v h|^2` over every window.
pub fn verify_gen_poincare(trace: &DecayTrace, kappa: f64, tau: f64) -> Result<BoundCheck> {
    require_exponential_regime(trace.meta.alpha, "verify_gen_poincare")?;
    let starts = require_windows(trace, tau)?;
    let lhs = sliding_averages(trace, Column::L2, tau, &starts)?;
    let rhs: Vec<f64> = sliding_averages(trace, Column::Gradv, tau, &starts)?
        .into_iter()
        .map(|g| kappa * g)
        .collect();
    BoundCheck::new(
        "gen_poincare",
        "slab Poincaré inequality with kappa_alpha",
        starts,
        lhs,
        rhs,
        TOL_DISCRETE,
    )
}

/// Duality bound `|Delta_alpha h|^2_{H^-1_alpha} <= |grad_v h|^2` at every sample.
pub fn verify_lemma26(trace: &DecayTrace) -> Result<BoundCheck> {
    BoundCheck::new(
        "lemma26",
        "H^-1_alpha duality bound on the transport residual",
        trace.times(),
        trace.column(|s| s.hminus1_sq),
        trace.gradv(),
        TOL_DUALITY,
    )
}

/// Central-difference residual `d/dt |h|^2 + 2 |grad_v h|^2` at interior samples.
pub fn dissipation_residual(trace: &DecayTrace) -> Vec<(f64, f64)> {
    trace
        .samples
        .windows(3)
        .map(|w| {
            let rate = (w[2].l2_sq - w[0].l2_sq) / (w[2].t - w[0].t);
            (w[1].t, rate + 2.0 * w[1].gradv_sq)
        })
        .collect()
}

/// Max `|residual|` over samples with `t` in `[lo, hi]`.
pub fn max_residual(trace: &DecayTrace, lo: f64, hi: f64) -> f64 {
    dissipation_residual(trace)
        .into_iter()
        .filter(|(t, _)| *t >= lo - 1e-12 && *t <= hi + 1e-12)
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max)
}

/// Observed orders `log2(r_k / r_{k+1})` of the dissipation residual for traces
/// with successively halved sample spacing, compared on `[lo, hi]`.
pub fn observed_orders(traces: &[DecayTrace], lo: f64, hi: f64) -> Vec<f64> {
    let res: Vec<f64> = traces.iter().map(|t| max_residual(t, lo, hi)).collect();
    res.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Max over windows of `|l2(t+tau) - l2(t) + 2 int_t^{t+tau} gradv| / l2(t)`.
pub fn gronwall_consistency(trace: &DecayTrace, tau: f64) -> Result<f64> {
    let starts = require_windows(trace, tau)?;
    let times = trace.times();
    let l2 = trace.l2();
    let grad = trace.gradv();
    let mut worst: f64 = 0.0;
    for &t in &starts {
        let lhs = interpolate(&times, &l2, t + tau) - interpolate(&times, &l2, t);
        let g = window_integral(&times, &grad, t, t + tau)?;
        let scale = interpolate(&times, &l2, t).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs + 2.0 * g).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return Err(Error::DegenerateWindow(format!("{n} points")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("zero spread in abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        n,
    })
}

/// Minimum number of tail points for a rate fit.
pub const MIN_FIT_POINTS: usize = 20;

fn tail_averages(trace: &DecayTrace, tau: f64, tail_fraction: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail fraction must be in (0, 1], got {tail_fraction}"
        )));
    }
    let starts = window_starts(trace, tau);
    let last = starts.last().copied().unwrap_or(0.0);
    let first = starts.first().copied().unwrap_or(0.0);
    let cut = last - tail_fraction * (last - first);
    let tail: Vec<f64> = starts.into_iter().filter(|t| *t >= cut).collect();
    if tail.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateWindow(format!(
            "{} window starts in the tail, need {MIN_FIT_POINTS}",
            tail.len()
        )));
    }
    let avg = sliding_averages(trace, Column::L2, tau, &tail)?;
    if avg.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateWindow(
            "non-positive averages in the tail".into(),
        ));
    }
    Ok((tail, avg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `-slope` of `log x(t)` against `t`.
    pub rate: f64,
    pub r2: f64,
    pub n: usize,
}

/// Exponential rate of the time-averaged `L^2` norm over the last `tail_fraction` of the windows.
pub fn fit_decay_rate(trace: &DecayTrace, tau: f64, tail_fraction: f64) -> Result<RateFit> {
    let (t, x) = tail_averages(trace, tau, tail_fraction)?;
    let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let fit = least_squares(&t, &logs)?;
    Ok(RateFit {
        rate: -fit.slope,
        r2: fit.r2,
        n: fit.n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Slope of `log x(t)` against `log t`.
    pub exponent: f64,
    pub r2: f64,
    pub n: usize,
}

/// Algebraic exponent of the time-averaged `L^2` norm over the tail (`t > 0`).
pub fn fit_power_law(trace: &DecayTrace, tau: f64, tail_fraction: f64) -> Result<PowerFit> {
    let (t, x) = tail_averages(trace, tau, tail_fraction)?;
    let (lt, lx): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(&x)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, x)| (t.ln(), x.ln()))
        .unzip();
    let fit = least_squares(&lt, &lx)?;
    Ok(PowerFit {
        exponent: fit.slope,
        r2: fit.r2,
        n: fit.n,
    })
}

/// `W = 2 (1 + int <v>^sigma d gamma) sup_t |<v>^{sigma/2} h(t)|^2 / |<v>^{sigma/2} h0|^2`
/// estimated from the trace itself.
pub fn empirical_w(trace: &DecayTrace, moment_sigma: f64) -> Result<f64> {
    let w0 = trace
        .samples
        .first()
        .and_then(|s| s.weighted_sq)
        .ok_or_else(|| Error::Missing("trace has no weighted norm".into()))?;
    if !(w0 > 0.0) {
        return Err(Error::Missing("weighted initial norm is zero".into()));
    }
    let sup = trace
        .samples
        .iter()
        .filter_map(|s| s.weighted_sq)
        .fold(0.0, f64::max);
    Ok(2.0 * (1.0 + moment_sigma) * (sup / w0).max(1.0))
}

/// Checks of the algebraic decay: the `psi^{-1}` envelope and the explicit
/// `K (1 + t)^{-exponent}` bound times the weighted initial norm.
pub fn verify_theorem2(
    trace: &DecayTrace,
    tau: f64,
    envelope: &mut BihariEnvelope,
    k: f64,
    exponent: f64,
) -> Result<(BoundCheck, BoundCheck)> {
    if !(trace.meta.alpha > 0.0 && trace.meta.alpha < 1.0) {
        return Err(Error::Regime {
            operation: "verify_theorem2",
            needs: "alpha in (0, 1)",
            alpha: trace.meta.alpha,
        });
    }
    let weighted0 = trace
        .samples
        .first()
        .and_then(|s| s.weighted_sq)
        .ok_or_else(|| Error::Missing("trace has no weighted initial norm".into()))?;
    let starts = require_windows(trace, tau)?;
    let lhs = sliding_averages(trace, Column::L2, tau, &starts)?;
    let env_rhs = starts
        .iter()
        .map(|&t| envelope.psi_inv(t))
        .collect::<Result<Vec<f64>>>()?;
    let explicit_rhs: Vec<f64> = starts
        .iter()
        .map(|t| k * (1.0 + t).powf(-exponent) * weighted0)
        .collect();
    let env = BoundCheck::new(
        "theorem2_envelope",
        "Bihari-Lasalle envelope psi^-1(t)",
        starts.clone(),
        lhs.clone(),
        env_rhs,
        TOL_EXACT,
    )?;
    let explicit = BoundCheck::new(
        "theorem2_explicit",
        "algebraic decay K (1+t)^(-sigma/(2(1-alpha)))",
        starts,
        lhs,
        explicit_rhs,
        TOL_EXACT,
    )?;
    Ok((env, explicit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::DomainSpec;
    use crate::solver::{Discretization, InitialDatum, Scheme, TraceMeta, VelocityBasis};

    pub(crate) fn synthetic(alpha: f64, times: &[f64], f: impl Fn(f64) -> f64) -> DecayTrace {
        let meta = TraceMeta {
            alpha,
            domain: DomainSpec::benchmark(),
            discretization: Discretization {
                xi_max: 1,
                basis: VelocityBasis::Hermite { n: 4 },
                dt: 0.1,
                scheme: Scheme::EigenExponential,
            },
            initial: InitialDatum::SpatialCosine { xi: 1 },
            t_final: *times.last().unwrap(),
            record_stride: 1,
            sigma: None,
            scheme_fallback: false,
            velocity_radius: None,
        };
        let mut trace = DecayTrace::new(meta);
        for &t in times {
            trace.samples.push(NormSample {
                t,
                l2_sq: f(t),
                gradv_sq: f(t),
                hminus1_sq: 0.0,
                hminus1_displayed_sq: 0.0,
                weighted_sq: None,
                l2_fluct_sq: f(t),
            });
        }
        trace
    }

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn average_of_constant_and_exponential() {
        let c = synthetic(2.0, &grid(50, 5.0), |_| 3.5);
        assert!((time_average(&c, Column::L2, 0.3, 1.7).unwrap() - 3.5).abs() < 1e-14);
        let e = synthetic(2.0, &grid(4000, 2.0), |t| (-t).exp());
        let avg = time_average(&e, Column::L2, 0.0, 1.0).unwrap();
        assert!((avg - (1.0 - (-1f64).exp())).abs() < 1e-7);
        assert!(matches!(
            time_average(&e, Column::L2, 1.5, 1.0),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn exact_exponential_fit() {
        let e = synthetic(2.0, &grid(400, 20.0), |t| (-2.0 * t).exp());
        let fit = fit_decay_rate(&e, 1.0, 0.5).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-6);
        assert!(fit.r2 > 1.0 - 1e-10);
        let short = synthetic(2.0, &grid(10, 20.0), |t| (-2.0 * t).exp());
        assert!(matches!(
            fit_decay_rate(&short, 1.0, 0.5),
            Err(Error::DegenerateWindow(_))
        ));
    }

    #[test]
    fn theorem1_trivial_and_failing() {
        let e = synthetic(2.0, &grid(400, 20.0), |t| (-0.5 * t).exp());
        assert!(verify_theorem1(&e, 0.0, 1.0).unwrap().passed());
        assert!(!verify_theorem1(&e, 1.0, 1.0).unwrap().passed());
        let sub = synthetic(0.5, &grid(10, 1.0), |_| 1.0);
        assert!(matches!(
            verify_theorem1(&sub, 0.0, 0.5),
            Err(Error::Regime { .. })
        ));
    }

    #[test]
    fn corollary_rejects_increasing_trace() {
        let bad = synthetic(2.0, &grid(20, 2.0), |t| 1.0 + 0.1 * (5.0 * t).sin());
        assert!(matches!(
            verify_corollary1(&bad, 0.1, 1.0),
            Err(Error::DataIntegrity(_))
        ));
    }
}
