//! Browser bindings: decay curves against the time-average bound, per-mode
//! spectral gaps and Bihari-Lasalle envelopes. Results are JSON strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use kfp_core::analysis::{BihariEnvelope, Phi};
use kfp_core::constants::{lambda_rates, poincare_constant, DomainSpec};
use kfp_core::equilibria::EquilibriumSpec;
use kfp_core::hypo_compare::mode_spectral_gap;
use kfp_core::solver::{Discretization, InitialDatum, Scheme, Solver, VelocityBasis};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(js_err)
}

#[derive(Serialize)]
struct DecayCurve {
    t: Vec<f64>,
    l2: Vec<f64>,
    gradv: Vec<f64>,
    bound: Option<Vec<f64>>,
    lambda: Option<f64>,
    prefactor: Option<f64>,
}

/// `|h(t)|^2` of a random datum on the torus of side `length`, with the
/// pointwise bound `exp(lambda tau) |h0|^2 exp(-lambda t)` when `alpha >= 1`.
/// The Hermite basis is used at `alpha = 2`, a weighted grid otherwise.
#[wasm_bindgen]
pub fn decay_curve(alpha: f64, length: f64, seed: u32, t_final: f64) -> Result<String, JsValue> {
    let dom = DomainSpec::new(length, length, 1, 0.0).map_err(js_err)?;
    let basis = if alpha == 2.0 {
        VelocityBasis::Hermite { n: 32 }
    } else {
        VelocityBasis::WeightedGrid {
            cells: 96,
            radius: None,
        }
    };
    let disc = Discretization {
        xi_max: 3,
        basis,
        dt: 0.05,
        scheme: Scheme::EigenExponential,
    };
    let solver = Solver::new(alpha, dom, disc).map_err(js_err)?;
    let datum = InitialDatum::RandomSmooth {
        seed: u64::from(seed),
        xi_max: 3,
        k_max: 6,
    };
    let stride = ((t_final / 0.05) / 400.0).ceil().max(1.0) as usize;
    let trace = solver
        .simulate(&datum, t_final, stride, false)
        .map_err(js_err)?;
    let t = trace.times();
    let l2 = trace.l2();
    let (mut bound, mut lambda, mut prefactor) = (None, None, None);
    if alpha >= 1.0 {
        let spec = EquilibriumSpec::with_defaults(alpha, 1).map_err(js_err)?;
        let p = poincare_constant(&spec, 128).map_err(js_err)?;
        let rates = lambda_rates(&spec, &dom, p).map_err(js_err)?;
        let c = (rates.proof * dom.tau).exp();
        bound = Some(
            t.iter()
                .map(|s| c * l2[0] * (-rates.proof * s).exp())
                .collect(),
        );
        lambda = Some(rates.proof);
        prefactor = Some(c);
    }
    to_json(&DecayCurve {
        gradv: trace.gradv(),
        t,
        l2,
        bound,
        lambda,
        prefactor,
    })
}

#[derive(Serialize)]
struct Gaps {
    xi: Vec<i64>,
    gap: Vec<f64>,
}

/// Spectral gaps of the Fourier modes `0..=xi_max` at `alpha = 2` with `n` Hermite functions.
#[wasm_bindgen]
pub fn mode_gaps(length: f64, n: usize, xi_max: u32) -> Result<String, JsValue> {
    let dom = DomainSpec::new(length, length, 1, 0.0).map_err(js_err)?;
    let basis = VelocityBasis::Hermite { n };
    let xi: Vec<i64> = (0..=i64::from(xi_max)).collect();
    let gap = xi
        .iter()
        .map(|&x| mode_spectral_gap(2.0, &dom, &basis, x))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js_err)?;
    to_json(&Gaps { xi, gap })
}

#[derive(Serialize)]
struct Envelope {
    t: Vec<f64>,
    envelope: Vec<f64>,
    power_law: Vec<f64>,
}

/// Envelope `psi^{-1}(t)` of `x' <= -2 phi^{-1}(x)` with `phi(y) = a y^{1/p} + c y`,
/// next to the explicit power law with `A0 = a + c y0^{1 - 1/p}`.
#[wasm_bindgen]
pub fn bihari_envelope(
    a: f64,
    c: f64,
    p: f64,
    x0: f64,
    t_final: f64,
    points: usize,
) -> Result<String, JsValue> {
    let mut env = BihariEnvelope::new(Phi::new(a, c, p).map_err(js_err)?, x0).map_err(js_err)?;
    let a0 = env.a0().map_err(js_err)?;
    let points = points.max(2);
    let t: Vec<f64> = (0..points)
        .map(|i| t_final * i as f64 / (points - 1) as f64)
        .collect();
    let envelope = t
        .iter()
        .map(|&s| env.psi_inv(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js_err)?;
    let power_law = t.iter().map(|&s| env.power_law(a0, s)).collect();
    to_json(&Envelope {
        t,
        envelope,
        power_law,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_start_at_one() {
        let json = mode_gaps(2.0 * std::f64::consts::PI, 16, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!((v["gap"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_stays_below_power_law() {
        let json = bihari_envelope(1.0, 2.0, 1.5, 1.0, 20.0, 21).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let env = v["envelope"].as_array().unwrap();
        let pow = v["power_law"].as_array().unwrap();
        for (e, p) in env.iter().zip(pow) {
            assert!(e.as_f64().unwrap() <= p.as_f64().unwrap() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn decay_curve_respects_bound() {
        let json = decay_curve(2.0, 2.0 * std::f64::consts::PI, 1, 20.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let l2 = v["l2"].as_array().unwrap();
        let bound = v["bound"].as_array().unwrap();
        for (x, b) in l2.iter().zip(bound) {
            assert!(x.as_f64().unwrap() <= b.as_f64().unwrap());
        }
    }
}
