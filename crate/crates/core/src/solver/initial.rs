//! Named, reproducible initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Field, Solver};
use crate::equilibria::japanese;
use crate::error::{Error, Result};
use crate::quadrature::hermite_functions;
use crate::velocity::{VelocitySpace, C64};

/// Velocity factor of a separable datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VelocityProfile {
    /// Orthonormal Hermite polynomial `He_k / sqrt(k!)`.
    Hermite { k: usize },
    /// `v`
    Linear,
    /// `v / <v>`
    BoundedOdd,
    /// `1`
    Constant,
}

impl VelocityProfile {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            VelocityProfile::Hermite { k } => hermite_functions(k + 1, v)[k],
            VelocityProfile::Linear => v,
            VelocityProfile::BoundedOdd => v / japanese(v),
            VelocityProfile::Constant => 1.0,
        }
    }
}

/// Real initial data `h0(x, v)` with zero average on `Q x R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialDatum {
    /// `He_k(v)/sqrt(k!) cos(2 pi xi x / L)`.
    HermiteMode { xi: i64, k: usize },
    /// `cos(2 pi xi x / L)`.
    SpatialCosine { xi: i64 },
    /// `g(v) cos(2 pi xi x / L)`.
    Separable { xi: i64, profile: VelocityProfile },
    /// Random smooth field with modes `|xi| <= xi_max` and `k_max` velocity
    /// functions (Hermite functions, or `cos(k atan v)`, `sin(k atan v)` on grids).
    RandomSmooth {
        seed: u64,
        xi_max: i64,
        k_max: usize,
    },
}

fn represent(space: &VelocitySpace, profile: &VelocityProfile) -> Vec<C64> {
    match (space, profile) {
        (VelocitySpace::Hermite(b), VelocityProfile::Hermite { k }) => {
            let mut a = vec![C64::new(0.0, 0.0); b.size];
            if *k < b.size {
                a[*k] = C64::new(1.0, 0.0);
            }
            a
        }
        _ => space
            .represent(|v| profile.eval(v))
            .into_iter()
            .map(|x| C64::new(x, 0.0))
            .collect(),
    }
}

fn grid_function(k: usize, v: f64) -> f64 {
    let theta = v.atan();
    if k.is_multiple_of(2) {
        ((k / 2) as f64 * 2.0 * theta).cos()
    } else {
        (k.div_ceil(2) as f64 * 2.0 * theta).sin()
    }
}

impl InitialDatum {
    fn cosine(solver: &Solver, xi: i64, profile: VelocityProfile) -> Result<Field> {
        if xi.abs() > solver.disc.xi_max {
            return Err(Error::InvalidParameter(format!(
                "initial mode {xi} exceeds xi_max = {}",
                solver.disc.xi_max
            )));
        }
        let dim = solver.space.dim();
        let mut field = Field::zeros(solver.disc.xi_max, dim);
        let g = represent(&solver.space, &profile);
        if xi == 0 {
            *field.mode_mut(0) = g;
        } else {
            let half: Vec<C64> = g.iter().map(|z| z * 0.5).collect();
            *field.mode_mut(xi.abs()) = half.clone();
            *field.mode_mut(-xi.abs()) = half;
        }
        Ok(field)
    }

    pub fn build(&self, solver: &Solver) -> Result<Field> {
        let field = match *self {
            InitialDatum::HermiteMode { xi, k } => {
                Self::cosine(solver, xi, VelocityProfile::Hermite { k })?
            }
            InitialDatum::SpatialCosine { xi } => {
                Self::cosine(solver, xi, VelocityProfile::Constant)?
            }
            InitialDatum::Separable { xi, profile } => Self::cosine(solver, xi, profile)?,
            InitialDatum::RandomSmooth {
                seed,
                xi_max,
                k_max,
            } => {
                if xi_max > solver.disc.xi_max || xi_max < 0 {
                    return Err(Error::InvalidParameter(format!(
                        "random datum xi_max {xi_max} outside 0..={}",
                        solver.disc.xi_max
                    )));
                }
                if k_max == 0 {
                    return Err(Error::InvalidParameter(
                        "random datum needs k_max >= 1".into(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let dim = solver.space.dim();
                let mut field = Field::zeros(solver.disc.xi_max, dim);
                let functions: Vec<Vec<f64>> = (0..k_max)
                    .map(|k| match &solver.space {
                        VelocitySpace::Hermite(b) => {
                            let mut e = vec![0.0; b.size];
                            if k < b.size {
                                e[k] = 1.0;
                            }
                            e
                        }
                        VelocitySpace::Grid(_) => solver.space.represent(|v| grid_function(k, v)),
                    })
                    .collect();
                for xi in 0..=xi_max {
                    let mut a = vec![C64::new(0.0, 0.0); dim];
                    for (k, f) in functions.iter().enumerate() {
                        let scale = 1.0 / ((1.0 + (xi * xi) as f64) * (1.0 + k as f64));
                        let c = if xi == 0 {
                            C64::new(rng.random_range(-1.0..1.0), 0.0)
                        } else {
                            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                        } * scale;
                        for (ai, fi) in a.iter_mut().zip(f) {
                            *ai += c * *fi;
                        }
                    }
                    if xi == 0 {
                        let mean = solver.space.mean(&a);
                        a.iter_mut().for_each(|x| *x -= mean);
                        *field.mode_mut(0) = a;
                    } else {
                        *field.mode_mut(-xi) = a.iter().map(|z| z.conj()).collect();
                        *field.mode_mut(xi) = a;
                    }
                }
                field
            }
        };
        let mass = solver.space.mean(field.mode(0)).norm();
        let scale = solver.norms(&field).l2_sq.sqrt().max(f64::MIN_POSITIVE);
        if mass > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "initial datum does not have zero average (mean {mass:e})"
            )));
        }
        Ok(field)
    }

    pub fn describe(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{self:?}"))
    }
}
