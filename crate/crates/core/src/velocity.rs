//! Velocity discretizations of `Delta_alpha` on L^2(gamma): the Hermite basis
//! for the Maxwellian and a finite-volume grid for general equilibria.
//!
//! For `alpha = 2` both discretizations use the unit-variance Maxwellian, for
//! which `Delta = d_vv - v d_v` has eigenvalues `-k` on the Hermite functions.
//! For every other `alpha` the grid weight is `exp(-<v>^alpha)`.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::equilibria::japanese;
use crate::error::{Error, Result};
use crate::quadrature::{hermite_functions, GaussHermite, GaussLegendre};

pub type C64 = Complex<f64>;

/// Equilibrium weight behind a velocity discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// `exp(-v^2/2) / sqrt(2 pi)`
    Maxwellian,
    /// `exp(-<v>^alpha) / Z_alpha`
    Generalized { alpha: f64 },
}

impl Profile {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha == 2.0 {
            Profile::Maxwellian
        } else {
            Profile::Generalized { alpha }
        }
    }

    /// `-log` of the unnormalized weight.
    pub fn potential(&self, v: f64) -> f64 {
        match *self {
            Profile::Maxwellian => 0.5 * v * v,
            Profile::Generalized { alpha } => japanese(v).powf(alpha),
        }
    }

    fn weight(&self, v: f64) -> f64 {
        (-(self.potential(v) - self.potential(0.0))).exp()
    }

    /// Smallest radius whose two-sided tail mass is below `tol`.
    pub fn tail_radius(&self, tol: f64) -> f64 {
        let rule = GaussLegendre::new(40);
        let w = |v: f64| self.weight(v);
        let tail = |r: f64| -> f64 {
            let mut total = 0.0;
            let (mut a, mut width) = (r, r.max(1.0));
            loop {
                let piece = rule.integrate(a, a + width, w);
                total += piece;
                a += width;
                width *= 2.0;
                if piece <= 1e-18 * total.max(1e-300) || a > 1e12 {
                    break;
                }
            }
            total
        };
        let body = {
            let mut total = 0.0;
            let (mut a, mut width) = (0.0, 1.0);
            loop {
                let piece = rule.integrate(a, a + width, w);
                total += piece;
                a += width;
                width *= 2.0;
                if piece <= 1e-18 * total || a > 1e12 {
                    break;
                }
            }
            total
        };
        let mut hi = 1.0;
        while tail(hi) / body > tol {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) / body > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Orthonormal Hermite functions for the unit-variance Maxwellian.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub size: usize,
}

impl HermiteBasis {
    pub fn new(size: usize) -> Self {
        Self { size }
    }

    /// `Delta` is diagonal with entries `-k`.
    pub fn diffusion_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.size,
            self.size,
            |i, j| if i == j { -(i as f64) } else { 0.0 },
        )
    }

    /// Multiplication by `v`: `v psi_k = sqrt(k+1) psi_{k+1} + sqrt(k) psi_{k-1}`.
    pub fn velocity_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| {
            if j == i + 1 {
                (j as f64).sqrt()
            } else if i == j + 1 {
                (i as f64).sqrt()
            } else {
                0.0
            }
        })
    }

    /// Matrix of multiplication by `<v>^sigma`, by Gauss-Hermite quadrature.
    pub fn japanese_weight_matrix(&self, sigma: f64) -> DMatrix<f64> {
        let gh = GaussHermite::new(2 * self.size + 40);
        let mut m = DMatrix::<f64>::zeros(self.size, self.size);
        for (&v, &w) in gh.nodes.iter().zip(&gh.weights) {
            let psi = hermite_functions(self.size, v);
            let f = w * japanese(v).powf(sigma);
            for i in 0..self.size {
                let fi = f * psi[i];
                for j in 0..self.size {
                    m[(i, j)] += fi * psi[j];
                }
            }
        }
        m
    }

    /// Coefficients of `g` in the basis (Gauss-Hermite projection).
    pub fn project<G: Fn(f64) -> f64>(&self, g: G) -> Vec<f64> {
        let gh = GaussHermite::new(2 * self.size + 40);
        let mut coeffs = vec![0.0; self.size];
        for (&v, &w) in gh.nodes.iter().zip(&gh.weights) {
            let psi = hermite_functions(self.size, v);
            let gv = w * g(v);
            for (c, p) in coeffs.iter_mut().zip(&psi) {
                *c += gv * p;
            }
        }
        coeffs
    }
}

/// Cell-centred finite-volume discretization of `gamma^{-1} d_v (gamma d_v .)`
/// on `[-V, V]` with zero-flux ends, on a sinh-stretched mesh.
///
/// `mass[i]` is the normalized `gamma` mass of cell `i`; `flux[j]` couples nodes
/// `j` and `j + 1`. In the inner product `sum mass_i conj(a_i) b_i` the operator
/// is exactly self-adjoint and conserves `sum mass_i a_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedGrid {
    pub profile: Profile,
    pub radius: f64,
    pub nodes: Vec<f64>,
    pub faces: Vec<f64>,
    pub mass: Vec<f64>,
    pub flux: Vec<f64>,
}

/// Width of the quasi-uniform core of the stretched mesh.
const GRID_CORE: f64 = 2.0;
/// Default equilibrium tail mass left outside the grid.
pub const GRID_TAIL_MASS: f64 = 1e-12;

impl WeightedGrid {
    pub fn new(profile: Profile, cells: usize, radius: Option<f64>) -> Result<Self> {
        if cells < 16 {
            return Err(Error::InvalidParameter(format!(
                "weighted grid needs at least 16 cells, got {cells}"
            )));
        }
        let radius = match radius {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(r) => {
                return Err(Error::InvalidParameter(format!(
                    "grid radius {r} must be > 0"
                )))
            }
            None => profile.tail_radius(GRID_TAIL_MASS),
        };
        let beta = (radius / GRID_CORE).asinh();
        let map = |s: f64| GRID_CORE * (beta * s).sinh();
        let m = cells as f64;
        let faces: Vec<f64> = (0..=cells)
            .map(|j| {
                if j == 0 {
                    -radius
                } else if j == cells {
                    radius
                } else {
                    map(-1.0 + 2.0 * j as f64 / m)
                }
            })
            .collect();
        let nodes: Vec<f64> = (0..cells)
            .map(|i| map(-1.0 + (2 * i + 1) as f64 / m))
            .collect();

        let rule = GaussLegendre::new(12);
        let raw_mass: Vec<f64> = faces
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |v| profile.weight(v)))
            .collect();
        let total: f64 = raw_mass.iter().sum();
        let mass: Vec<f64> = raw_mass.iter().map(|x| x / total).collect();
        let flux: Vec<f64> = (1..cells)
            .map(|j| profile.weight(faces[j]) / total / (nodes[j] - nodes[j - 1]))
            .collect();
        if mass
            .iter()
            .chain(&flux)
            .any(|x| !x.is_finite() || *x <= 0.0)
        {
            return Err(Error::InvalidParameter(
                "grid weights underflow; reduce the radius or the cell count".into(),
            ));
        }
        Ok(Self {
            profile,
            radius,
            nodes,
            faces,
            mass,
            flux,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodal matrix of the discrete `Delta`.
    pub fn diffusion_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut d = DMatrix::<f64>::zeros(n, n);
        for (j, &c) in self.flux.iter().enumerate() {
            d[(j, j)] -= c / self.mass[j];
            d[(j, j + 1)] += c / self.mass[j];
            d[(j + 1, j + 1)] -= c / self.mass[j + 1];
            d[(j + 1, j)] += c / self.mass[j + 1];
        }
        d
    }

    /// Symmetric stiffness `M^{-1/2} K M^{-1/2}` (the negated, symmetrized Laplacian).
    pub fn symmetric_stiffness(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut s = DMatrix::<f64>::zeros(n, n);
        for (j, &c) in self.flux.iter().enumerate() {
            let (mi, mj) = (self.mass[j], self.mass[j + 1]);
            s[(j, j)] += c / mi;
            s[(j + 1, j + 1)] += c / mj;
            let off = -c / (mi * mj).sqrt();
            s[(j, j + 1)] += off;
            s[(j + 1, j)] += off;
        }
        s
    }

    pub fn dirichlet_form(&self, a: &[C64]) -> f64 {
        self.flux
            .iter()
            .enumerate()
            .map(|(j, c)| c * (a[j + 1] - a[j]).norm_sqr())
            .sum()
    }

    pub fn dirichlet_form_real(&self, a: &[f64]) -> f64 {
        self.flux
            .iter()
            .enumerate()
            .map(|(j, c)| c * (a[j + 1] - a[j]).powi(2))
            .sum()
    }

    pub fn mean(&self, a: &[C64]) -> C64 {
        a.iter().zip(&self.mass).map(|(x, m)| x * *m).sum()
    }

    /// Solves `-Delta w = z - mean(z)` with `mean(w) = 0` (tridiagonal, grounded at node 0).
    pub fn solve_poisson(&self, z: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mean = self.mean(z);
        // Flux balance m_i (-Delta w)_i = F_{i-1} - F_i with F_j = c_j (w_{j+1} - w_j)
        // and F vanishing at both ends; accumulate from the nearer end.
        let rhs: Vec<C64> = z
            .iter()
            .zip(&self.mass)
            .map(|(zi, m)| (zi - mean) * *m)
            .collect();
        let zero = C64::new(0.0, 0.0);
        let mut fluxes = vec![zero; n - 1];
        let half = (n - 1) / 2;
        let mut acc = zero;
        for j in 0..half {
            acc -= rhs[j];
            fluxes[j] = acc;
        }
        acc = zero;
        for j in (half..n - 1).rev() {
            acc += rhs[j + 1];
            fluxes[j] = acc;
        }
        let mut w = vec![zero; n];
        for j in 0..n - 1 {
            w[j + 1] = w[j] + fluxes[j] / self.flux[j];
        }
        let shift = self.mean(&w);
        w.iter().map(|x| x - shift).collect()
    }
}

/// A velocity discretization with its discrete `L^2(gamma)` inner product.
#[derive(Debug, Clone)]
pub enum VelocitySpace {
    Hermite(HermiteBasis),
    Grid(WeightedGrid),
}

impl VelocitySpace {
    pub fn dim(&self) -> usize {
        match self {
            VelocitySpace::Hermite(h) => h.size,
            VelocitySpace::Grid(g) => g.len(),
        }
    }

    /// Diagonal weights of the discrete inner product.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            VelocitySpace::Hermite(h) => vec![1.0; h.size],
            VelocitySpace::Grid(g) => g.mass.clone(),
        }
    }

    pub fn diffusion_matrix(&self) -> DMatrix<f64> {
        match self {
            VelocitySpace::Hermite(h) => h.diffusion_matrix(),
            VelocitySpace::Grid(g) => g.diffusion_matrix(),
        }
    }

    pub fn velocity_matrix(&self) -> DMatrix<f64> {
        match self {
            VelocitySpace::Hermite(h) => h.velocity_matrix(),
            VelocitySpace::Grid(g) => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&g.nodes))
            }
        }
    }

    /// Average against the equilibrium (the constant-in-v component).
    pub fn mean(&self, a: &[C64]) -> C64 {
        match self {
            VelocitySpace::Hermite(_) => a[0],
            VelocitySpace::Grid(g) => g.mean(a),
        }
    }

    /// `int v a d gamma`.
    pub fn velocity_mean(&self, a: &[C64]) -> C64 {
        match self {
            VelocitySpace::Hermite(_) => {
                if a.len() > 1 {
                    a[1]
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            VelocitySpace::Grid(g) => a
                .iter()
                .zip(g.mass.iter().zip(&g.nodes))
                .map(|(x, (m, v))| x * (m * v))
                .sum(),
        }
    }

    pub fn l2_sq(&self, a: &[C64]) -> f64 {
        match self {
            VelocitySpace::Hermite(_) => a.iter().map(|x| x.norm_sqr()).sum(),
            VelocitySpace::Grid(g) => a.iter().zip(&g.mass).map(|(x, m)| m * x.norm_sqr()).sum(),
        }
    }

    pub fn dirichlet_form(&self, a: &[C64]) -> f64 {
        match self {
            VelocitySpace::Hermite(_) => a
                .iter()
                .enumerate()
                .map(|(k, x)| k as f64 * x.norm_sqr())
                .sum(),
            VelocitySpace::Grid(g) => g.dirichlet_form(a),
        }
    }

    /// Applies the discrete `Delta`.
    pub fn apply_diffusion(&self, a: &[C64]) -> Vec<C64> {
        match self {
            VelocitySpace::Hermite(_) => a.iter().enumerate().map(|(k, x)| -x * k as f64).collect(),
            VelocitySpace::Grid(g) => {
                let n = g.len();
                let mut out = vec![C64::new(0.0, 0.0); n];
                for (j, &c) in g.flux.iter().enumerate() {
                    let diff = (a[j + 1] - a[j]) * c;
                    out[j] += diff / g.mass[j];
                    out[j + 1] -= diff / g.mass[j + 1];
                }
                out
            }
        }
    }

    /// H^{-1}_alpha norms of `z`: `(dirichlet, displayed)` where with
    /// `-Delta w = z - mean(z)`, `dirichlet = mean^2 + |grad w|^2` and
    /// `displayed = mean^2 + |w|^2`.
    pub fn hminus1_sq(&self, z: &[C64]) -> (f64, f64) {
        let mean = self.mean(z).norm_sqr();
        match self {
            VelocitySpace::Hermite(_) => {
                let mut dirichlet = mean;
                let mut displayed = mean;
                for (k, x) in z.iter().enumerate().skip(1) {
                    let kf = k as f64;
                    dirichlet += x.norm_sqr() / kf;
                    displayed += x.norm_sqr() / (kf * kf);
                }
                (dirichlet, displayed)
            }
            VelocitySpace::Grid(g) => {
                let w = g.solve_poisson(z);
                (mean + g.dirichlet_form(&w), mean + self.l2_sq(&w))
            }
        }
    }

    /// Matrix of multiplication by `<v>^sigma` in the discrete coordinates.
    pub fn japanese_weight_matrix(&self, sigma: f64) -> DMatrix<f64> {
        match self {
            VelocitySpace::Hermite(h) => h.japanese_weight_matrix(sigma),
            VelocitySpace::Grid(g) => {
                let diag: Vec<f64> = g
                    .nodes
                    .iter()
                    .zip(&g.mass)
                    .map(|(v, m)| m * japanese(*v).powf(sigma))
                    .collect();
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
            }
        }
    }

    /// Discrete representation of a velocity profile `g(v)`.
    pub fn represent<G: Fn(f64) -> f64>(&self, g: G) -> Vec<f64> {
        match self {
            VelocitySpace::Hermite(h) => h.project(g),
            VelocitySpace::Grid(grid) => grid.nodes.iter().map(|v| g(*v)).collect(),
        }
    }
}

/// Orthonormal basis (as columns) of the complement of `sqrt(weights)` in
/// Euclidean coordinates, from the Householder reflection taking
/// `sqrt(weights) / |sqrt(weights)|` to a signed first unit vector.
pub fn deflation_basis(weights: &[f64]) -> DMatrix<f64> {
    let n = weights.len();
    let mut u: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += sign;
    let ww: f64 = w.iter().map(|x| x * x).sum();
    DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * w[i] * w[col] / ww
    })
}
