//! The local equilibrium `gamma_alpha(v) = exp(-<v>^alpha) / Z_alpha` on R^d,
//! its moments, and the `f <-> h` change of variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::PanelRule;

/// `<v> = sqrt(1 + |v|^2)`.
#[inline]
pub fn japanese(speed: f64) -> f64 {
    (1.0 + speed * speed).sqrt()
}

/// Surface measure of the unit sphere `S^n` embedded in R^{n+1}
/// (`|S^0| = 2`, `|S^1| = 2 pi`, `|S^2| = 4 pi`).
pub fn sphere_measure(n: usize) -> f64 {
    let half = (n + 1) as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(n + 1)
}

// Gamma(k / 2) for positive integer k.
fn gamma_half_integer(k: usize) -> f64 {
    assert!(k >= 1);
    let (mut value, mut arg) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    let target = k as f64 / 2.0;
    while arg < target - 1e-12 {
        value *= arg;
        arg += 1.0;
    }
    value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Sublinear,
    Linear,
    Superlinear,
}

impl Regime {
    pub fn of(alpha: f64) -> Self {
        if alpha < 1.0 {
            Regime::Sublinear
        } else if alpha == 1.0 {
            Regime::Linear
        } else {
            Regime::Superlinear
        }
    }
}

/// Quadrature settings for velocity integrals against `gamma_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct QuadConfig {
    pub rule: PanelRule,
    /// Truncation radius; chosen automatically when `None`.
    pub radius: Option<f64>,
}

/// Moments exposed for the averaging-lemma constant and the weighted norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentKind {
    /// `|v|^2`
    SpeedSq,
    /// `|v|^4`
    SpeedFourth,
    /// `v_1^2 |v|^4`
    V1SqSpeedFourth,
    /// `<v>^sigma`
    Japanese(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumSpec {
    pub alpha: f64,
    pub dim: usize,
    pub z_alpha: f64,
    pub quad: QuadConfig,
    /// Resolved truncation radius of the radial quadrature.
    pub radius: f64,
}

// Slack exponent in the truncation rule exp(-<V>^alpha) (1+V)^(d+7) < e^-40.
const TAIL_LOG_BUDGET: f64 = 40.0;
const TAIL_POLY_DEGREE: f64 = 7.0;

impl EquilibriumSpec {
    pub fn new(alpha: f64, dim: usize, quad: QuadConfig) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        let radius = match quad.radius {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(r) => {
                return Err(Error::InvalidParameter(format!(
                    "truncation radius {r} must be > 0"
                )))
            }
            None => truncation_radius(alpha, dim),
        };
        let mut spec = Self {
            alpha,
            dim,
            z_alpha: 1.0,
            quad,
            radius,
        };
        spec.z_alpha = spec.radial_integral(|_| 1.0)?;
        if !(spec.z_alpha.is_finite() && spec.z_alpha > 0.0) {
            return Err(Error::QuadratureFailure(format!(
                "normalization evaluated to {}",
                spec.z_alpha
            )));
        }
        Ok(spec)
    }

    /// Shorthand with default quadrature.
    pub fn with_defaults(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, dim, QuadConfig::default())
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.alpha)
    }

    fn panels(&self) -> Vec<f64> {
        let mut breaks = vec![0.0];
        let mut edge = 1.0;
        while edge < self.radius {
            breaks.push(edge);
            edge *= 2.0;
        }
        breaks.push(self.radius);
        breaks
    }

    /// `int_{R^d} g(|v|) exp(-<v>^alpha) dv` (unnormalized).
    fn radial_integral<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let d = self.dim as f64;
        let alpha = self.alpha;
        let shell = sphere_measure(self.dim - 1);
        let integral = self.quad.rule.integrate(&self.panels(), |r| {
            g(r) * r.powf(d - 1.0) * (-japanese(r).powf(alpha)).exp()
        })?;
        Ok(shell * integral)
    }

    /// Normalized density at the velocity `v` (length `dim`).
    pub fn density(&self, v: &[f64]) -> f64 {
        let speed = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.density_at_speed(speed)
    }

    pub fn density_at_speed(&self, speed: f64) -> f64 {
        (-japanese(speed).powf(self.alpha)).exp() / self.z_alpha
    }

    /// `int kind(v) d gamma_alpha`, by radial reduction.
    pub fn moment(&self, kind: MomentKind) -> Result<f64> {
        let d = self.dim as f64;
        let raw = match kind {
            MomentKind::SpeedSq => self.radial_integral(|r| r * r)?,
            MomentKind::SpeedFourth => self.radial_integral(|r| r.powi(4))?,
            // E[v_1^2 |v|^4] = E[|v|^6] / d by rotational symmetry
            MomentKind::V1SqSpeedFourth => self.radial_integral(|r| r.powi(6))? / d,
            MomentKind::Japanese(sigma) => self.radial_integral(|r| japanese(r).powf(sigma))?,
        };
        Ok(raw / self.z_alpha)
    }

    /// `int g(v) d gamma_alpha` over the line, for `dim == 1` only.
    pub fn integrate_line<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::InvalidParameter(
                "line integrals are only defined for dim = 1".into(),
            ));
        }
        let half = self.panels();
        let mut breaks: Vec<f64> = half.iter().rev().map(|x| -x).collect();
        breaks.extend(half.iter().skip(1));
        let alpha = self.alpha;
        let z = self.z_alpha;
        self.quad
            .rule
            .integrate(&breaks, |v| g(v) * (-japanese(v).powf(alpha)).exp() / z)
    }

    /// Self-test: the first moment vanishes for the even equilibrium.
    pub fn first_moment(&self) -> Result<f64> {
        self.integrate_line(|v| v)
    }

    /// `h = f / gamma_alpha` at velocities given as `dim`-strided chunks.
    pub fn f_to_h(&self, velocities: &[f64], f: &[f64]) -> Vec<f64> {
        velocities
            .chunks(self.dim)
            .zip(f)
            .map(|(v, fv)| fv / self.density(v))
            .collect()
    }

    pub fn h_to_f(&self, velocities: &[f64], h: &[f64]) -> Vec<f64> {
        velocities
            .chunks(self.dim)
            .zip(h)
            .map(|(v, hv)| hv * self.density(v))
            .collect()
    }
}

fn truncation_radius(alpha: f64, dim: usize) -> f64 {
    let excess = |r: f64| {
        japanese(r).powf(alpha) - (dim as f64 + TAIL_POLY_DEGREE) * (1.0 + r).ln() - TAIL_LOG_BUDGET
    };
    let mut hi = 8.0;
    while excess(hi) < 0.0 {
        hi *= 2.0;
    }
    // the excess is increasing beyond its minimum; bisect down from `hi`
    let mut lo = hi / 2.0;
    if excess(lo) >= 0.0 {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_normalization_matches_closed_form() {
        let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
        let exact = (-1f64).exp() * PI.sqrt();
        assert!((spec.z_alpha - exact).abs() < 1e-12, "{}", spec.z_alpha);
        assert!((spec.moment(MomentKind::Japanese(0.0)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_for_many_alphas() {
        for &alpha in &[0.3, 0.5, 1.0, 1.5, 2.0, 4.0] {
            for dim in 1..=3 {
                let spec = EquilibriumSpec::with_defaults(alpha, dim).unwrap();
                let mass = spec.moment(MomentKind::Japanese(0.0)).unwrap();
                assert!(
                    (mass - 1.0).abs() <= 1e-10,
                    "alpha {alpha} dim {dim}: {mass}"
                );
            }
        }
    }

    #[test]
    fn fat_tail_normalization_is_finite() {
        let spec = EquilibriumSpec::with_defaults(0.5, 1).unwrap();
        assert!(spec.z_alpha.is_finite() && spec.z_alpha > 0.0);
        // same value on the symmetric line rule
        let mass = spec.integrate_line(|_| 1.0).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_values() {
        let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
        assert!((spec.density(&[0.0]) - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert_eq!(spec.density(&[1.7]), spec.density(&[-1.7]));
        assert!(spec.density(&[10.0]) < 1e-40);
    }

    #[test]
    fn gaussian_moments() {
        let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
        let m2 = spec.moment(MomentKind::SpeedSq).unwrap();
        let m4 = spec.moment(MomentKind::SpeedFourth).unwrap();
        let m6 = spec.moment(MomentKind::V1SqSpeedFourth).unwrap();
        assert!((m2 - 0.5).abs() < 1e-10);
        assert!((m4 - 0.75).abs() < 1e-10);
        assert!((m6 - 15.0 / 8.0).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_gaussian_moments() {
        // gamma_2 in d = 2 is a product of two variance-1/2 normals
        let spec = EquilibriumSpec::with_defaults(2.0, 2).unwrap();
        assert!((spec.moment(MomentKind::SpeedSq).unwrap() - 1.0).abs() < 1e-10);
        // E|v|^4 = 2 E v^4 + 2 (E v^2)^2 = 1.5 + 0.5
        assert!((spec.moment(MomentKind::SpeedFourth).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn first_moment_vanishes() {
        for &alpha in &[0.5, 1.0, 2.0] {
            let spec = EquilibriumSpec::with_defaults(alpha, 1).unwrap();
            assert!(spec.first_moment().unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn reflection_symmetry_of_moments() {
        let spec = EquilibriumSpec::with_defaults(1.3, 1).unwrap();
        for p in [2, 4, 6] {
            let plus = spec.integrate_line(|v| v.powi(p)).unwrap();
            let minus = spec.integrate_line(|v| (-v).powi(p)).unwrap();
            assert!((plus - minus).abs() <= 1e-14 * plus);
        }
        let asym = spec.integrate_line(|v| v.powi(3) + v).unwrap();
        assert!(asym.abs() < 1e-10);
    }

    #[test]
    fn second_moment_decreases_with_alpha() {
        let values: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&a| {
                EquilibriumSpec::with_defaults(a, 1)
                    .unwrap()
                    .moment(MomentKind::SpeedSq)
                    .unwrap()
            })
            .collect();
        for w in values.windows(2) {
            assert!(w[0] > w[1], "{values:?}");
        }
    }

    #[test]
    fn change_of_variables_round_trip() {
        let spec = EquilibriumSpec::with_defaults(0.7, 1).unwrap();
        let v: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.9).collect();
        let f: Vec<f64> = v
            .iter()
            .map(|x| (1.0 + x.sin()) * spec.density(&[*x]))
            .collect();
        let h = spec.f_to_h(&v, &f);
        let back = spec.h_to_f(&v, &h);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        let eq: Vec<f64> = v.iter().map(|x| spec.density(&[*x])).collect();
        assert!(spec.f_to_h(&v, &eq).iter().all(|h| (h - 1.0).abs() < 1e-14));
        // stationary state M L^{-d} gamma maps to the constant M L^{-d}
        let (mass, length) = (3.0, 2.0 * std::f64::consts::PI);
        let stationary: Vec<f64> = eq.iter().map(|g| mass / length * g).collect();
        assert!(spec
            .f_to_h(&v, &stationary)
            .iter()
            .all(|h| (h - mass / length).abs() < 1e-13));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            EquilibriumSpec::with_defaults(0.0, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            EquilibriumSpec::with_defaults(2.0, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn regime_classification() {
        assert_eq!(Regime::of(0.5), Regime::Sublinear);
        assert_eq!(Regime::of(1.0), Regime::Linear);
        assert_eq!(Regime::of(2.0), Regime::Superlinear);
    }

    #[test]
    fn sphere_measures() {
        assert!((sphere_measure(0) - 2.0).abs() < 1e-15);
        assert!((sphere_measure(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_measure(3) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
