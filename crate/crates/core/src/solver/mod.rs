//! Fourier-in-`x`, spectral/finite-volume-in-`v` solver for
//! `d_t h + v d_x h = Delta_alpha h` on the torus `(0, L)` (`d = 1`).
//!
//! Mode `xi` carries `exp(i k x)` with `k = 2 pi xi / L`, so its generator is
//! `M_xi = Delta - i k V` with `V` the multiplication by `v`.

mod initial;
mod trace;

pub use initial::{InitialDatum, VelocityProfile};
pub use trace::{DecayTrace, DensityHistory, NormSample, TraceMeta};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constants::DomainSpec;
use crate::error::{Error, Result};
use crate::velocity::{HermiteBasis, Profile, VelocitySpace, WeightedGrid, C64};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VelocityBasis {
    /// Hermite functions `0..n` of the Maxwellian (`alpha = 2` only).
    Hermite { n: usize },
    /// Finite-volume grid with `cells` cells on `[-radius, radius]`; the radius
    /// defaults to a `1e-12` equilibrium tail mass.
    WeightedGrid { cells: usize, radius: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `a(t + dt) = exp(M dt) a(t)` with a precomputed matrix exponential.
    EigenExponential,
    /// Cayley map `(I - dt M/2)^{-1} (I + dt M/2)`.
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Fourier modes `-xi_max..=xi_max`.
    pub xi_max: i64,
    pub basis: VelocityBasis,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Discretization {
    pub fn validate(&self, alpha: f64) -> Result<()> {
        if self.xi_max < 1 {
            return Err(Error::InvalidParameter(format!(
                "xi_max must be >= 1, got {}",
                self.xi_max
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        match self.basis {
            VelocityBasis::Hermite { n } => {
                if n < 4 {
                    return Err(Error::InvalidParameter(format!(
                        "Hermite size must be >= 4, got {n}"
                    )));
                }
                if alpha != 2.0 {
                    return Err(Error::IncompatibleBasis(format!(
                        "the Hermite basis requires alpha = 2, got {alpha}"
                    )));
                }
            }
            VelocityBasis::WeightedGrid { cells, .. } => {
                if cells < 16 {
                    return Err(Error::InvalidParameter(format!(
                        "grid needs >= 16 cells, got {cells}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn xis(&self) -> impl Iterator<Item = i64> {
        -self.xi_max..=self.xi_max
    }

    pub fn mode_count(&self) -> usize {
        (2 * self.xi_max + 1) as usize
    }
}

/// Builds the velocity discretization for `alpha`.
pub fn velocity_space(alpha: f64, basis: &VelocityBasis) -> Result<VelocitySpace> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    match *basis {
        VelocityBasis::Hermite { n } => {
            if alpha != 2.0 {
                return Err(Error::IncompatibleBasis(format!(
                    "the Hermite basis requires alpha = 2, got {alpha}"
                )));
            }
            Ok(VelocitySpace::Hermite(HermiteBasis::new(n)))
        }
        VelocityBasis::WeightedGrid { cells, radius } => Ok(VelocitySpace::Grid(
            WeightedGrid::new(Profile::for_alpha(alpha), cells, radius)?,
        )),
    }
}

/// Which parts of the generator are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parts {
    pub diffusion: bool,
    pub transport: bool,
}

impl Default for Parts {
    fn default() -> Self {
        Self {
            diffusion: true,
            transport: true,
        }
    }
}

/// Discrete generator of one Fourier mode.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub xi: i64,
    pub wavenumber: f64,
    pub diffusion: DMatrix<f64>,
    pub velocity: DMatrix<f64>,
    pub matrix: DMatrix<C64>,
    /// Diagonal weights of the discrete `L^2(gamma)` inner product.
    pub weights: Vec<f64>,
}

impl ModeOperator {
    pub fn assemble(
        space: &VelocitySpace,
        dom: &DomainSpec,
        xi: i64,
        parts: Parts,
    ) -> Result<Self> {
        let k = dom.wavenumber(xi);
        let diffusion = space.diffusion_matrix();
        let velocity = space.velocity_matrix();
        let n = diffusion.nrows();
        let d_on = if parts.diffusion { 1.0 } else { 0.0 };
        let t_on = if parts.transport { 1.0 } else { 0.0 };
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            C64::new(d_on * diffusion[(i, j)], -t_on * k * velocity[(i, j)])
        });
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "non-finite mode operator entries".into(),
            ));
        }
        Ok(Self {
            xi,
            wavenumber: k,
            diffusion,
            velocity,
            matrix,
            weights: space.weights(),
        })
    }

    /// Max entry of `W A - (W A)^T`, relative to the largest entry of `W A`.
    fn symmetry_defect(&self, a: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        let wa = DMatrix::from_fn(n, n, |i, j| self.weights[i] * a[(i, j)]);
        let scale = wa.amax().max(f64::MIN_POSITIVE);
        (&wa - wa.transpose()).amax() / scale
    }

    pub fn diffusion_symmetry_defect(&self) -> f64 {
        self.symmetry_defect(&self.diffusion)
    }

    pub fn velocity_symmetry_defect(&self) -> f64 {
        self.symmetry_defect(&self.velocity)
    }

    /// Eigenvalues of the full mode matrix.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let schur = self
            .matrix
            .clone()
            .try_schur(1e-15, 100_000)
            .ok_or_else(|| {
                Error::EigenFailure(format!("Schur decomposition failed for xi = {}", self.xi))
            })?;
        Ok(schur
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default())
    }
}

/// Solution state: `coeffs[j]` holds mode `xi = j - xi_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub xi_max: i64,
    pub coeffs: Vec<Vec<C64>>,
    pub time: f64,
}

impl Field {
    pub fn zeros(xi_max: i64, dim: usize) -> Self {
        Self {
            xi_max,
            coeffs: vec![vec![C64::new(0.0, 0.0); dim]; (2 * xi_max + 1) as usize],
            time: 0.0,
        }
    }

    pub fn mode(&self, xi: i64) -> &[C64] {
        &self.coeffs[(xi + self.xi_max) as usize]
    }

    pub fn mode_mut(&mut self, xi: i64) -> &mut Vec<C64> {
        &mut self.coeffs[(xi + self.xi_max) as usize]
    }

    /// Largest `|a_{-xi} - conj(a_xi)|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for xi in 0..=self.xi_max {
            for (a, b) in self.mode(xi).iter().zip(self.mode(-xi)) {
                worst = worst.max((b - a.conj()).norm());
            }
        }
        worst
    }
}

fn propagator(op: &ModeOperator, dt: f64, scheme: Scheme) -> (DMatrix<C64>, bool) {
    let n = op.matrix.nrows();
    let scaled = op.matrix.map(|z| z * dt);
    if scheme == Scheme::EigenExponential {
        let exp = scaled.clone().exp();
        if exp.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return (exp, false);
        }
    }
    let id = DMatrix::<C64>::identity(n, n);
    let half = scaled.map(|z| z * 0.5);
    let lhs = &id - &half;
    let rhs = &id + &half;
    let cayley = lhs
        .lu()
        .solve(&rhs)
        .unwrap_or_else(|| DMatrix::from_element(n, n, C64::new(f64::NAN, 0.0)));
    (cayley, scheme == Scheme::EigenExponential)
}

fn map_modes<T: Send, F: Fn(usize) -> T + Sync + Send>(count: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Norms of a field on `Q x R`, all including the `dx` measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2_sq: f64,
    pub gradv_sq: f64,
    /// `H^{-1}_alpha` norm of `Delta_alpha h` with the Dirichlet form (operative).
    pub hminus1_sq: f64,
    /// Same with `|w_z|_{L^2}` in place of the Dirichlet form.
    pub hminus1_displayed_sq: f64,
    /// `|<v>^{sigma/2} h|^2`, when a weight exponent is configured.
    pub weighted_sq: Option<f64>,
    /// `|h - rho_h|^2`.
    pub l2_fluct_sq: f64,
}

/// Time integrator for one equilibrium, domain and discretization.
#[derive(Debug, Clone)]
pub struct Solver {
    pub alpha: f64,
    pub dom: DomainSpec,
    pub disc: Discretization,
    pub parts: Parts,
    pub space: VelocitySpace,
    pub operators: Vec<ModeOperator>,
    propagators: Vec<DMatrix<C64>>,
    /// Set when the matrix exponential failed and the Cayley map was used instead.
    pub scheme_fallback: bool,
    weight: Option<(f64, DMatrix<f64>)>,
}

impl Solver {
    pub fn new(alpha: f64, dom: DomainSpec, disc: Discretization) -> Result<Self> {
        Self::with_parts(alpha, dom, disc, Parts::default())
    }

    pub fn with_parts(
        alpha: f64,
        dom: DomainSpec,
        disc: Discretization,
        parts: Parts,
    ) -> Result<Self> {
        disc.validate(alpha)?;
        if dom.dim != 1 {
            return Err(Error::InvalidParameter(
                "the solver supports d = 1 only".into(),
            ));
        }
        let space = velocity_space(alpha, &disc.basis)?;
        let xis: Vec<i64> = disc.xis().collect();
        let operators = xis
            .iter()
            .map(|&xi| ModeOperator::assemble(&space, &dom, xi, parts))
            .collect::<Result<Vec<_>>>()?;
        let built = map_modes(operators.len(), |j| {
            propagator(&operators[j], disc.dt, disc.scheme)
        });
        let scheme_fallback = built.iter().any(|(_, fb)| *fb);
        let propagators = built.into_iter().map(|(p, _)| p).collect();
        Ok(Self {
            alpha,
            dom,
            disc,
            parts,
            space,
            operators,
            propagators,
            scheme_fallback,
            weight: None,
        })
    }

    /// Enables the weighted norm `|<v>^{sigma/2} h|^2`.
    pub fn with_weight(mut self, sigma: f64) -> Self {
        self.weight = Some((sigma, self.space.japanese_weight_matrix(sigma)));
        self
    }

    pub fn weight_sigma(&self) -> Option<f64> {
        self.weight.as_ref().map(|w| w.0)
    }

    pub fn initial_field(&self, datum: &InitialDatum) -> Result<Field> {
        datum.build(self)
    }

    /// Advances `field` by one time step.
    pub fn step(&self, field: &Field) -> Result<Field> {
        let coeffs = map_modes(self.propagators.len(), |j| {
            let p = &self.propagators[j];
            let a = &field.coeffs[j];
            let n = a.len();
            (0..n)
                .map(|i| (0..n).map(|l| p[(i, l)] * a[l]).sum::<C64>())
                .collect::<Vec<C64>>()
        });
        let time = field.time + self.disc.dt;
        if coeffs
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::IntegrationFailure {
                t: time,
                reason: "non-finite coefficients".into(),
            });
        }
        Ok(Field {
            xi_max: field.xi_max,
            coeffs,
            time,
        })
    }

    pub fn norms(&self, field: &Field) -> Norms {
        let l = self.dom.length;
        let per_mode: Vec<[f64; 6]> = field
            .coeffs
            .iter()
            .map(|a| {
                let l2 = self.space.l2_sq(a);
                let grad = self.space.dirichlet_form(a);
                let z = self.space.apply_diffusion(a);
                let (hm, hd) = self.space.hminus1_sq(&z);
                let weighted = match &self.weight {
                    Some((_, w)) => {
                        let n = a.len();
                        let mut s = C64::new(0.0, 0.0);
                        for i in 0..n {
                            for j in 0..n {
                                s += a[i].conj() * w[(i, j)] * a[j];
                            }
                        }
                        s.re
                    }
                    None => 0.0,
                };
                let fluct = l2 - self.space.mean(a).norm_sqr();
                [l2, grad, hm, hd, weighted, fluct]
            })
            .collect();
        let sum = |i: usize| l * per_mode.iter().map(|m| m[i]).sum::<f64>();
        Norms {
            l2_sq: sum(0),
            gradv_sq: sum(1),
            hminus1_sq: sum(2),
            hminus1_displayed_sq: sum(3),
            weighted_sq: self.weight.as_ref().map(|_| sum(4)),
            l2_fluct_sq: sum(5).max(0.0),
        }
    }

    /// `rho_hat(xi) = int a_xi d gamma` for every mode.
    pub fn spatial_density(&self, field: &Field) -> Vec<C64> {
        field.coeffs.iter().map(|a| self.space.mean(a)).collect()
    }

    /// `d_t rho_hat(xi) = -i k int v a_xi d gamma` (transport only; `Delta` conserves the mean).
    pub fn density_rate(&self, field: &Field) -> Vec<C64> {
        field
            .coeffs
            .iter()
            .zip(&self.operators)
            .map(|(a, op)| {
                if self.parts.transport {
                    C64::new(0.0, -op.wavenumber) * self.space.velocity_mean(a)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// `d/dt |h|^2` of the semi-discrete system.
    pub fn energy_rate(&self, field: &Field) -> f64 {
        let l = self.dom.length;
        let mut rate = 0.0;
        for (a, op) in field.coeffs.iter().zip(&self.operators) {
            let ma: Vec<C64> = (0..a.len())
                .map(|i| (0..a.len()).map(|j| op.matrix[(i, j)] * a[j]).sum())
                .collect();
            let inner: C64 = a
                .iter()
                .zip(&ma)
                .zip(&op.weights)
                .map(|((x, y), w)| x.conj() * y * *w)
                .sum();
            rate += 2.0 * l * inner.re;
        }
        rate
    }

    /// Zero-mode mean (total mass).
    pub fn mass(&self, field: &Field) -> C64 {
        self.space.mean(field.mode(0))
    }

    /// Integrates up to `t_final`, recording every `stride` steps (and at `t = 0`).
    pub fn simulate(
        &self,
        datum: &InitialDatum,
        t_final: f64,
        stride: usize,
        keep_density: bool,
    ) -> Result<DecayTrace> {
        if stride == 0 {
            return Err(Error::InvalidParameter("record stride must be >= 1".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "T must be > 0, got {t_final}"
            )));
        }
        let steps = (t_final / self.disc.dt).round() as usize;
        let mut field = self.initial_field(datum)?;
        let mut trace = DecayTrace::new(TraceMeta::new(self, datum, t_final, stride));
        if keep_density {
            trace.density = Some(DensityHistory::new(self.disc.xis().collect()));
        }
        self.record(&mut trace, &field, 0.0);
        for n in 1..=steps {
            field = self.step(&field)?;
            let t = n as f64 * self.disc.dt;
            field.time = t;
            if n % stride == 0 {
                self.record(&mut trace, &field, t);
            }
        }
        trace.meta.scheme_fallback = self.scheme_fallback;
        Ok(trace)
    }

    fn record(&self, trace: &mut DecayTrace, field: &Field, t: f64) {
        let n = self.norms(field);
        trace.samples.push(NormSample {
            t,
            l2_sq: n.l2_sq,
            gradv_sq: n.gradv_sq,
            hminus1_sq: n.hminus1_sq,
            hminus1_displayed_sq: n.hminus1_displayed_sq,
            weighted_sq: n.weighted_sq,
            l2_fluct_sq: n.l2_fluct_sq,
        });
        if let Some(hist) = trace.density.as_mut() {
            hist.push(t, &self.spatial_density(field), &self.density_rate(field));
        }
    }

    /// Evolves and returns the final field (no trace).
    pub fn evolve(&self, datum: &InitialDatum, t_final: f64) -> Result<Field> {
        let steps = (t_final / self.disc.dt).round() as usize;
        let mut field = self.initial_field(datum)?;
        for n in 1..=steps {
            field = self.step(&field)?;
            field.time = n as f64 * self.disc.dt;
        }
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite_disc(n: usize, xi_max: i64, dt: f64) -> Discretization {
        Discretization {
            xi_max,
            basis: VelocityBasis::Hermite { n },
            dt,
            scheme: Scheme::EigenExponential,
        }
    }

    #[test]
    fn hermite_zero_mode_spectrum() {
        let space = velocity_space(2.0, &VelocityBasis::Hermite { n: 5 }).unwrap();
        let op =
            ModeOperator::assemble(&space, &DomainSpec::benchmark(), 0, Parts::default()).unwrap();
        let mut eig: Vec<f64> = op.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (k, e) in eig.iter().enumerate() {
            assert!((e + k as f64).abs() < 1e-12, "{eig:?}");
        }
    }

    #[test]
    fn hermite_requires_alpha_two() {
        let err = Solver::new(1.5, DomainSpec::benchmark(), hermite_disc(8, 1, 0.1)).unwrap_err();
        assert!(matches!(err, Error::IncompatibleBasis(_)));
    }

    #[test]
    fn operators_are_self_adjoint() {
        for basis in [
            VelocityBasis::Hermite { n: 12 },
            VelocityBasis::WeightedGrid {
                cells: 40,
                radius: None,
            },
        ] {
            let space = velocity_space(2.0, &basis).unwrap();
            let op = ModeOperator::assemble(&space, &DomainSpec::benchmark(), 2, Parts::default())
                .unwrap();
            assert!(op.diffusion_symmetry_defect() < 1e-14);
            assert_eq!(op.velocity_symmetry_defect(), 0.0);
        }
    }

    #[test]
    fn first_hermite_mode_decays_exactly() {
        let solver = Solver::new(2.0, DomainSpec::benchmark(), hermite_disc(8, 1, 0.1)).unwrap();
        let trace = solver
            .simulate(&InitialDatum::HermiteMode { xi: 0, k: 1 }, 10.0, 1, false)
            .unwrap();
        let l2_0 = trace.samples[0].l2_sq;
        for s in &trace.samples {
            let exact = l2_0 * (-2.0 * s.t).exp();
            assert!((s.l2_sq - exact).abs() <= 1e-10 * exact);
        }
    }
}
