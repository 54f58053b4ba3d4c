//! Bihari-Lasalle envelopes for `x' <= -2 phi^{-1}(x)` with
//! `phi(y) = A y^{1/p} + C y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss;

/// `phi(y) = A y^{1/p} + C y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    pub a: f64,
    pub c: f64,
    pub p: f64,
}

impl Phi {
    pub fn new(a: f64, c: f64, p: f64) -> Result<Self> {
        if !(a >= 0.0 && c >= 0.0 && a.is_finite() && c.is_finite()) || a + c == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "phi needs A, C >= 0 not both zero, got A = {a}, C = {c}"
            )));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("phi needs p > 1, got {p}")));
        }
        Ok(Self { a, c, p })
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.a * y.powf(1.0 / self.p) + self.c * y
    }

    /// Inverse of `phi` on `[0, inf)` by bisection to `1e-15` relative.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::OutOfRange(format!("phi^-1 needs x >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if self.a == 0.0 {
            return Ok(x / self.c);
        }
        if self.c == 0.0 {
            return Ok((x / self.a).powf(self.p));
        }
        let by_power = |s: f64| (x / (s * self.a)).powf(self.p);
        let by_linear = |s: f64| x / (s * self.c);
        let mut lo = by_power(2.0).min(by_linear(2.0));
        let mut hi = by_power(1.0).min(by_linear(1.0));
        for _ in 0..400 {
            if hi - lo <= 1e-15 * hi {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::Internal(format!(
            "phi^-1 bisection stalled at x = {x}"
        )))
    }
}

/// Tabulated `psi(z) = int_z^{x0} dz / (2 phi^{-1}(z))` and its inverse.
///
/// `psi` is integrated in `u = ln z` on panels of width `PANEL` below `ln x0`;
/// the table grows on demand towards `z -> 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BihariEnvelope {
    pub phi: Phi,
    pub x0: f64,
    pub tol: f64,
    /// `(ln z_j, psi(z_j))`, `ln z_j = ln x0 - j * PANEL`.
    table: Vec<(f64, f64)>,
}

const PANEL: f64 = 0.25;
const MAX_PANELS: usize = 40_000;

impl BihariEnvelope {
    pub fn new(phi: Phi, x0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::InvalidParameter(format!("x0 must be > 0, got {x0}")));
        }
        Ok(Self {
            phi,
            x0,
            tol: 1e-13,
            table: vec![(x0.ln(), 0.0)],
        })
    }

    fn integrand(&self, u: f64) -> f64 {
        let z = u.exp();
        let y = self.phi.inverse(z).unwrap_or(f64::NAN);
        z / (2.0 * y)
    }

    fn segment(&self, lo: f64, hi: f64) -> f64 {
        adaptive_gauss(&|u| self.integrand(u), lo, hi, self.tol)
    }

    fn extend(&mut self) -> Result<()> {
        if self.table.len() > MAX_PANELS {
            return Err(Error::OutOfRange(format!(
                "psi table exceeded {MAX_PANELS} panels (z below {:e})",
                self.table.last().map(|r| r.0.exp()).unwrap_or(0.0)
            )));
        }
        let (u, psi) = *self.table.last().expect("table is never empty");
        let next = u - PANEL;
        let value = psi + self.segment(next, u);
        if !value.is_finite() {
            return Err(Error::Internal(format!(
                "psi is not finite at z = {:e}",
                next.exp()
            )));
        }
        self.table.push((next, value));
        Ok(())
    }

    /// `psi(z)` for `z` in `(0, x0]`.
    pub fn psi(&mut self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z <= self.x0 * (1.0 + 1e-15)) {
            return Err(Error::OutOfRange(format!(
                "psi needs z in (0, {}], got {z}",
                self.x0
            )));
        }
        let u = z.ln().min(self.x0.ln());
        while self.table.last().expect("table is never empty").0 > u {
            self.extend()?;
        }
        let j = (((self.x0.ln() - u) / PANEL).floor() as usize).min(self.table.len() - 1);
        let (uj, psij) = self.table[j];
        Ok(psij + self.segment(u, uj))
    }

    /// `psi^{-1}(t)` for `t >= 0`: the envelope `x(t) <= psi^{-1}(t)`.
    pub fn psi_inv(&mut self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::OutOfRange(format!("psi^-1 needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(self.x0);
        }
        while self.table.last().expect("table is never empty").1 < t {
            self.extend()?;
        }
        let j = self.table.partition_point(|row| row.1 < t);
        // psi(table[j-1]) < t <= psi(table[j]), bisect in u on that panel
        let (u_hi, psi_hi) = self.table[j - 1];
        let (mut lo, mut hi) = (self.table[j].0, u_hi);
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                return Ok((0.5 * (lo + hi)).exp());
            }
            let mid = 0.5 * (lo + hi);
            let value = psi_hi + self.segment(mid, u_hi);
            if value < t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// Explicit power-law envelope `(x0^{1-p} + 2 (p-1) A0^{-p} t)^{-1/(p-1)}`.
    pub fn power_law(&self, a0: f64, t: f64) -> f64 {
        let p = self.phi.p;
        (self.x0.powf(1.0 - p) + 2.0 * (p - 1.0) * a0.powf(-p) * t).powf(-1.0 / (p - 1.0))
    }

    /// `A0 = A + C y0^{1 - 1/p}` with `y0 = phi^{-1}(x0)`.
    pub fn a0(&self) -> Result<f64> {
        let y0 = self.phi.inverse(self.x0)?;
        Ok(self.phi.a + self.phi.c * y0.powf(1.0 - 1.0 / self.phi.p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_round_trip() {
        let phi = Phi::new(2.5, 0.7, 1.6).unwrap();
        for e in -12..12 {
            let y = 10f64.powi(e);
            let back = phi.inverse(phi.eval(y)).unwrap();
            assert!((back - y).abs() <= 1e-10 * y, "{y} {back}");
        }
    }

    #[test]
    fn pure_power_envelope_matches_closed_form() {
        let (a, p, x0) = (1.3, 2.0, 0.8);
        let mut env = BihariEnvelope::new(Phi::new(a, 0.0, p).unwrap(), x0).unwrap();
        for &t in &[0.0, 0.5, 3.0, 40.0, 100.0] {
            let exact = env.power_law(a, t);
            let got = env.psi_inv(t).unwrap();
            assert!((got - exact).abs() <= 1e-8 * exact, "t={t} {got} {exact}");
        }
    }

    #[test]
    fn linear_envelope_is_exponential() {
        let (c, x0) = (4.0, 2.0);
        let mut env = BihariEnvelope::new(Phi::new(0.0, c, 1.5).unwrap(), x0).unwrap();
        for &t in &[0.1, 1.0, 10.0, 100.0] {
            let exact = x0 * (-2.0 * t / c).exp();
            let got = env.psi_inv(t).unwrap();
            assert!((got - exact).abs() <= 1e-8 * exact, "t={t} {got} {exact}");
        }
    }

    #[test]
    fn psi_is_decreasing_and_inverts() {
        let mut env = BihariEnvelope::new(Phi::new(1.0, 2.0, 1.5).unwrap(), 1.0).unwrap();
        assert_eq!(env.psi(1.0).unwrap(), 0.0);
        let mut last = -1.0;
        for k in 0..30 {
            let z = 0.7f64.powi(k);
            let t = env.psi(z).unwrap();
            assert!(t > last || k == 0);
            last = t;
            let back = env.psi_inv(t).unwrap();
            assert!((back - z).abs() <= 1e-8 * z);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Phi::new(0.0, 0.0, 2.0).is_err());
        assert!(matches!(Phi::new(1.0, 1.0, 1.0), Err(Error::Domain(_))));
        let mut env = BihariEnvelope::new(Phi::new(1.0, 1.0, 2.0).unwrap(), 1.0).unwrap();
        assert!(env.psi(2.0).is_err());
        assert!(env.psi_inv(-1.0).is_err());
    }
}
