//! Gauss rules used throughout: Gauss-Legendre panels for equilibrium
//! integrals and trace envelopes, Gauss-Hermite for the Hermite basis.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Returns `(int f, int |f|)` on `[a, b]`.
    pub fn integrate_with_abs<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (mut s, mut abs) = (0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let fx = w * f(mid + half * x);
            s += fx;
            abs += fx.abs();
        }
        (s * half, abs * half.abs())
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Node-doubling composite Gauss-Legendre integration over fixed panels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PanelRule {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Agreement required between successive node doublings, relative to `int |f|`.
    pub tol: f64,
}

impl Default for PanelRule {
    fn default() -> Self {
        Self {
            min_nodes: 16,
            max_nodes: 1024,
            tol: 1e-12,
        }
    }
}

impl PanelRule {
    /// Integrates `f` over the union of the panels `[breaks[i], breaks[i+1]]`,
    /// doubling the per-panel node count until two successive estimates agree.
    pub fn integrate<F: Fn(f64) -> f64>(&self, breaks: &[f64], f: F) -> Result<f64> {
        if breaks.len() < 2 {
            return Ok(0.0);
        }
        let estimate = |n: usize| -> (f64, f64) {
            let rule = GaussLegendre::new(n);
            breaks.windows(2).fold((0.0, 0.0), |(s, a), w| {
                let (ps, pa) = rule.integrate_with_abs(w[0], w[1], &f);
                (s + ps, a + pa)
            })
        };
        let mut n = self.min_nodes.max(2);
        let (mut prev, _) = estimate(n);
        let mut diff = f64::INFINITY;
        while n < self.max_nodes {
            n *= 2;
            let (next, scale) = estimate(n);
            diff = (next - prev).abs();
            if diff <= self.tol * scale.max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureFailure(format!(
            "successive estimates still differ by {:e} with {} nodes per panel",
            diff, self.max_nodes
        )))
    }
}

/// Recursive bisection with a 15/30-node Gauss-Legendre pair.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    thread_local! {
        static RULES: (GaussLegendre, GaussLegendre) = (GaussLegendre::new(15), GaussLegendre::new(30));
    }
    fn go<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        rules: &(GaussLegendre, GaussLegendre),
    ) -> f64 {
        let coarse = rules.0.integrate(a, b, f);
        let fine = rules.1.integrate(a, b, f);
        if (fine - coarse).abs() <= tol * fine.abs().max(1e-300) || depth >= 40 {
            return fine;
        }
        let mid = 0.5 * (a + b);
        go(f, a, mid, tol, depth + 1, rules) + go(f, mid, b, tol, depth + 1, rules)
    }
    RULES.with(|rules| go(f, a, b, tol, 0, rules))
}

/// Gauss-Hermite rule for the standard normal weight `exp(-v^2/2)/sqrt(2 pi)`
/// (Golub-Welsch). Weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }
}

/// Orthonormal Hermite polynomials `He_k / sqrt(k!)` for the standard normal
/// weight, evaluated at `v` for `k = 0..n`.
pub fn hermite_functions(n: usize, v: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = v;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (v * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(5);
        // degree 9 is the highest exact degree for 5 nodes
        let got = rule.integrate(-1.0, 2.0, |x| x.powi(9) + 3.0 * x.powi(4));
        let exact = (2f64.powi(10) - 1.0) / 10.0 + 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((got - exact).abs() < 1e-11 * exact.abs());
        assert!((rule.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn panel_rule_gaussian_integral() {
        let breaks: Vec<f64> = (0..=12).map(|i| i as f64).collect();
        let got = PanelRule::default()
            .integrate(&breaks, |x| (-x * x).exp())
            .unwrap();
        assert!((got - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn hermite_rule_moments() {
        let gh = GaussHermite::new(20);
        let m2: f64 = gh
            .nodes
            .iter()
            .zip(&gh.weights)
            .map(|(x, w)| w * x * x)
            .sum();
        let m6: f64 = gh
            .nodes
            .iter()
            .zip(&gh.weights)
            .map(|(x, w)| w * x.powi(6))
            .sum();
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m6 - 15.0).abs() < 1e-10);
    }

    #[test]
    fn hermite_functions_orthonormal() {
        let gh = GaussHermite::new(40);
        let n = 12;
        let mut gram = vec![vec![0.0; n]; n];
        for (x, w) in gh.nodes.iter().zip(&gh.weights) {
            let h = hermite_functions(n, *x);
            for i in 0..n {
                for j in 0..n {
                    gram[i][j] += w * h[i] * h[j];
                }
            }
        }
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-10, "({i},{j}) = {g}");
            }
        }
    }

    #[test]
    fn adaptive_gauss_handles_steep_integrand() {
        let got = adaptive_gauss(&|u: f64| (-3.0 * u).exp(), 0.0, 20.0, 1e-14);
        let exact = (1.0 - (-60f64).exp()) / 3.0;
        assert!((got - exact).abs() < 1e-14);
    }
}
