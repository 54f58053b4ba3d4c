//! Comparison of hypocoercivity rates on the benchmark: time-average rate,
//! DMS rates, Fourier-mode estimate and the direct spectral gap.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::constants::{
    dms_rate, is_benchmark, lambda_rates, poincare_constant, reference, DomainSpec, LambdaRates,
    POINCARE_CELLS,
};
use crate::equilibria::EquilibriumSpec;
use crate::error::{Error, Result};
use crate::solver::{velocity_space, ModeOperator, Parts, VelocityBasis};
use crate::velocity::{deflation_basis, VelocitySpace};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Relative change of `global_mu` allowed when both truncations are doubled.
pub const MU_GATE: f64 = 0.01;

fn constant_vector(space: &VelocitySpace) -> Vec<f64> {
    match space {
        VelocitySpace::Hermite(h) => (0..h.size)
            .map(|i| if i == 0 { 1.0 } else { 0.0 })
            .collect(),
        VelocitySpace::Grid(g) => vec![1.0; g.len()],
    }
}

/// Gap of the `xi = 0` operator on the complement of constants.
fn zero_mode_gap(space: &VelocitySpace) -> Result<f64> {
    let d = space.diffusion_matrix();
    let w = space.weights();
    let n = w.len();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let sym = w[i].sqrt() * d[(i, j)] / w[j].sqrt();
        let tr = w[j].sqrt() * d[(j, i)] / w[i].sqrt();
        0.5 * (sym + tr)
    });
    let c = constant_vector(space);
    let direction: Vec<f64> = w.iter().zip(&c).map(|(wi, ci)| wi * ci * ci).collect();
    let q = deflation_basis(&direction);
    let a = q.transpose() * s * &q;
    let eig = SymmetricEigen::try_new(a, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver failed for xi = 0".into()))?;
    Ok(-eig.eigenvalues.max())
}

fn gap_in_space(space: &VelocitySpace, dom: &DomainSpec, xi: i64) -> Result<f64> {
    if xi == 0 {
        return zero_mode_gap(space);
    }
    let op = ModeOperator::assemble(space, dom, xi, Parts::default())?;
    let eig = op.eigenvalues()?;
    let top = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::EigenFailure(format!(
            "no finite eigenvalues for xi = {xi}"
        )));
    }
    Ok(-top)
}

/// `-max Re` of the spectrum of mode `xi`, on the complement of constants when `xi = 0`.
pub fn mode_spectral_gap(
    alpha: f64,
    dom: &DomainSpec,
    basis: &VelocityBasis,
    xi: i64,
) -> Result<f64> {
    gap_in_space(&velocity_space(alpha, basis)?, dom, xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGap {
    pub xi: i64,
    pub gap: f64,
}

/// Gaps of modes `0..=xi_max` (gaps of `-xi` coincide) and their interior minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralScan {
    pub xi_max: i64,
    pub gaps: Vec<ModeGap>,
    /// Minimum over `|xi| < xi_max`.
    pub mu: f64,
    pub argmin_xi: i64,
    pub boundary_gap: f64,
}

impl SpectralScan {
    pub fn min_on_boundary(&self) -> bool {
        self.boundary_gap < self.mu
    }

    /// Whether gaps do not decrease for `|xi|` beyond the minimizer.
    pub fn monotone_beyond_argmin(&self) -> bool {
        self.gaps
            .iter()
            .skip(self.argmin_xi as usize)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1].gap >= w[0].gap * (1.0 - 1e-9))
    }
}

pub fn spectral_scan(
    alpha: f64,
    dom: &DomainSpec,
    basis: &VelocityBasis,
    xi_max: i64,
) -> Result<SpectralScan> {
    if xi_max < 1 {
        return Err(Error::InvalidParameter(format!(
            "xi_max must be >= 1, got {xi_max}"
        )));
    }
    let space = velocity_space(alpha, basis)?;
    let xis: Vec<i64> = (0..=xi_max).collect();
    #[cfg(feature = "parallel")]
    let gaps: Vec<Result<ModeGap>> = xis
        .par_iter()
        .map(|&xi| gap_in_space(&space, dom, xi).map(|gap| ModeGap { xi, gap }))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let gaps: Vec<Result<ModeGap>> = xis
        .iter()
        .map(|&xi| gap_in_space(&space, dom, xi).map(|gap| ModeGap { xi, gap }))
        .collect();
    let gaps = gaps.into_iter().collect::<Result<Vec<_>>>()?;
    let interior = &gaps[..gaps.len() - 1];
    let best = interior
        .iter()
        .copied()
        .fold(None, |acc: Option<ModeGap>, g| match acc {
            Some(a) if a.gap <= g.gap => Some(a),
            _ => Some(g),
        })
        .expect("xi_max >= 1 leaves an interior mode");
    Ok(SpectralScan {
        xi_max,
        mu: best.gap,
        argmin_xi: best.xi,
        boundary_gap: gaps[gaps.len() - 1].gap,
        gaps,
    })
}

/// Same basis family with twice the size.
pub fn refine_basis(basis: &VelocityBasis) -> VelocityBasis {
    match *basis {
        VelocityBasis::Hermite { n } => VelocityBasis::Hermite { n: 2 * n },
        VelocityBasis::WeightedGrid { cells, radius } => VelocityBasis::WeightedGrid {
            cells: 2 * cells,
            radius,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuReport {
    pub mu: f64,
    pub argmin_xi: i64,
    pub basis: VelocityBasis,
    pub scan: SpectralScan,
    /// `mu` with both truncations doubled.
    pub mu_refined: f64,
    pub relative_change: f64,
    pub flags: Vec<String>,
}

/// Convergence-gated global gap: the minimum over `|xi| < xi_max`, required to
/// change by at most [`MU_GATE`] when the basis size and `xi_max` are doubled.
pub fn global_mu(
    alpha: f64,
    dom: &DomainSpec,
    basis: &VelocityBasis,
    xi_max: i64,
) -> Result<MuReport> {
    let scan = spectral_scan(alpha, dom, basis, xi_max)?;
    let fine = spectral_scan(alpha, dom, &refine_basis(basis), 2 * xi_max)?;
    let relative_change = (fine.mu - scan.mu).abs() / scan.mu.abs().max(f64::MIN_POSITIVE);
    if !(relative_change <= MU_GATE) {
        return Err(Error::ConvergenceGate(format!(
            "global gap moved from {} to {} (relative {relative_change:.3e}) under doubling",
            scan.mu, fine.mu
        )));
    }
    let mut flags = Vec::new();
    if scan.min_on_boundary() {
        flags.push(format!(
            "min-on-boundary: gap at |xi| = {} is {} below the interior minimum {}",
            xi_max, scan.boundary_gap, scan.mu
        ));
    }
    if !scan.monotone_beyond_argmin() {
        flags.push("gap-not-monotone: gaps decrease somewhere beyond the minimizer".into());
    }
    Ok(MuReport {
        mu: scan.mu,
        argmin_xi: scan.argmin_xi,
        basis: *basis,
        mu_refined: fine.mu,
        relative_change,
        scan,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowProvenance {
    Computed,
    ExternalPaperValue,
    PaperLiteral,
}

impl RowProvenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowProvenance::Computed => "computed",
            RowProvenance::ExternalPaperValue => "external-paper-value",
            RowProvenance::PaperLiteral => "paper-literal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub rate: f64,
    pub prefactor: Option<f64>,
    pub provenance: RowProvenance,
    pub anchor: String,
}

impl ComparisonRow {
    fn new(
        method: &str,
        rate: f64,
        prefactor: Option<f64>,
        provenance: RowProvenance,
        anchor: &str,
    ) -> Result<Self> {
        if provenance == RowProvenance::Computed && !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Internal(format!(
                "computed rate for {method} is not positive: {rate}"
            )));
        }
        if provenance != RowProvenance::Computed && anchor.trim().is_empty() {
            return Err(Error::Internal(format!("row {method} needs an anchor")));
        }
        Ok(Self {
            method: method.into(),
            rate,
            prefactor,
            provenance,
            anchor: anchor.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    /// Velocity basis of the spectral scan; Hermite at `alpha = 2`, grid otherwise when absent.
    pub basis: Option<VelocityBasis>,
    pub xi_max: i64,
    pub poincare_cells: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            basis: None,
            xi_max: 8,
            poincare_cells: POINCARE_CELLS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub alpha: f64,
    pub domain: DomainSpec,
    pub benchmark: bool,
    pub rows: Vec<ComparisonRow>,
    pub lambda: Option<LambdaRates>,
    pub mu: MuReport,
    pub flags: Vec<String>,
}

pub const METHOD_TIME_AVERAGE: &str = "time-average";
pub const METHOD_TIME_AVERAGE_DISPLAYED: &str = "time-average, displayed constants";
pub const METHOD_TIME_AVERAGE_LITERAL: &str = "time-average, quoted";
pub const METHOD_DMS_DEFAULT: &str = "DMS default";
pub const METHOD_DMS_IMPROVED: &str = "DMS improved";
pub const METHOD_FOURIER: &str = "Fourier-mode estimate";
pub const METHOD_SPECTRAL: &str = "direct spectral";

pub fn benchmark_table(
    spec: &EquilibriumSpec,
    dom: &DomainSpec,
    opts: &TableOptions,
) -> Result<BenchmarkTable> {
    let benchmark = is_benchmark(spec, dom);
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    let mut lambda = None;

    if spec.alpha >= 1.0 && spec.dim == 1 {
        let p = poincare_constant(spec, opts.poincare_cells)?;
        let rates = lambda_rates(spec, dom, p)?;
        rows.push(ComparisonRow::new(
            METHOD_TIME_AVERAGE,
            rates.proof,
            Some((rates.proof * dom.tau).exp()),
            RowProvenance::Computed,
            "time-average rate 2 / kappa_alpha, prefactor exp(lambda tau)",
        )?);
        rows.push(ComparisonRow::new(
            METHOD_TIME_AVERAGE_DISPLAYED,
            rates.displayed,
            Some((rates.displayed * dom.tau).exp()),
            RowProvenance::Computed,
            "time-average rate from the displayed closed form",
        )?);
        if rates.discrepancy_flag {
            flags.push(format!(
                "lambda-discrepancy: proof {} vs displayed {} (relative {:.3})",
                rates.proof, rates.displayed, rates.relative_discrepancy
            ));
        }
        if benchmark {
            let literal = reference::lambda_literal();
            rows.push(ComparisonRow::new(
                METHOD_TIME_AVERAGE_LITERAL,
                literal,
                Some(reference::prefactor_literal()),
                RowProvenance::PaperLiteral,
                "benchmark time-average rate 1/(8 sqrt 3), prefactor exp(pi/(8 sqrt 3))",
            )?);
            flags.push(format!(
                "lambda-literal-inconsistent: quoted {} vs proof {} vs displayed {}",
                literal, rates.proof, rates.displayed
            ));
        }
        lambda = Some(rates);
    } else {
        flags.push("time-average-skipped: needs alpha >= 1 and d = 1".into());
    }

    if benchmark {
        rows.push(ComparisonRow::new(
            METHOD_DMS_DEFAULT,
            reference::DMS_DEFAULT,
            None,
            RowProvenance::PaperLiteral,
            "DMS estimate without customization, 1/24",
        )?);
        let (lm, lbig, cm) = reference::dms_inputs();
        let dms = dms_rate(lm, lbig, cm)?;
        rows.push(ComparisonRow::new(
            METHOD_DMS_IMPROVED,
            dms.lambda,
            Some(dms.c),
            RowProvenance::Computed,
            "DMS with lambda_m = lambda_M = 1, C_M = (1 + sqrt 3)/2",
        )?);
        rows.push(ComparisonRow::new(
            METHOD_FOURIER,
            reference::FOURIER_MODE_EXTERNAL,
            None,
            RowProvenance::ExternalPaperValue,
            "Fourier-mode hypocoercivity estimate, 0.176048",
        )?);
    } else {
        flags.push("literal-rows-skipped: not the benchmark configuration".into());
    }

    let basis = opts.basis.unwrap_or(if spec.alpha == 2.0 {
        VelocityBasis::Hermite { n: 64 }
    } else {
        VelocityBasis::WeightedGrid {
            cells: opts.poincare_cells,
            radius: None,
        }
    });
    let mu = global_mu(spec.alpha, dom, &basis, opts.xi_max)?;
    rows.push(ComparisonRow::new(
        METHOD_SPECTRAL,
        mu.mu,
        None,
        RowProvenance::Computed,
        "spectral gap of the truncated generator, minimum over modes",
    )?);
    flags.extend(mu.flags.iter().cloned());
    if benchmark {
        let rel = (mu.mu - reference::MU_LITERAL).abs() / reference::MU_LITERAL;
        if rel > 0.125 {
            flags.push(format!(
                "mu-differs-from-quoted: computed {} vs quoted {}",
                mu.mu,
                reference::MU_LITERAL
            ));
        }
    }

    Ok(BenchmarkTable {
        alpha: spec.alpha,
        domain: *dom,
        benchmark,
        rows,
        lambda,
        mu,
        flags,
    })
}

impl BenchmarkTable {
    pub fn row(&self, method: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Whether the direct spectral rate dominates every other computed rate.
    pub fn spectral_is_sharpest(&self) -> bool {
        let Some(spectral) = self.row(METHOD_SPECTRAL) else {
            return false;
        };
        self.rows
            .iter()
            .filter(|r| r.provenance == RowProvenance::Computed)
            .all(|r| r.rate <= spectral.rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,rate,prefactor,provenance,anchor\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "\"{}\",{:.17e},{},{},\"{}\"",
                r.method,
                r.rate,
                r.prefactor.map(|c| format!("{c:.17e}")).unwrap_or_default(),
                r.provenance.as_str(),
                r.anchor.replace('"', "'")
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "alpha = {}  L = {}  tau = {}  benchmark = {}",
            self.alpha, self.domain.length, self.domain.tau, self.benchmark
        );
        let mw = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let _ = writeln!(
            out,
            "{:<mw$}  {:>14}  {:>14}  {:<20}  anchor",
            "method", "rate", "prefactor", "provenance"
        );
        for r in &self.rows {
            let pre = r
                .prefactor
                .map(|c| format!("{c:.8}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<mw$}  {:>14.8}  {:>14}  {:<20}  {}",
                r.method,
                r.rate,
                pre,
                r.provenance.as_str(),
                r.anchor
            );
        }
        let _ = writeln!(
            out,
            "spectral gap attained at |xi| = {}; doubled truncations give {} (relative change {:.2e})",
            self.mu.argmin_xi, self.mu.mu_refined, self.mu.relative_change
        );
        for f in &self.flags {
            let _ = writeln!(out, "flag: {f}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite(n: usize) -> VelocityBasis {
        VelocityBasis::Hermite { n }
    }

    #[test]
    fn zero_mode_gap_is_one() {
        let dom = DomainSpec::benchmark();
        for n in [2usize, 4, 16] {
            let space = VelocitySpace::Hermite(crate::velocity::HermiteBasis::new(n));
            let g = gap_in_space(&space, &dom, 0).unwrap();
            assert!((g - 1.0).abs() < 1e-12, "n = {n}: {g}");
        }
    }

    #[test]
    fn gaps_are_symmetric_in_xi() {
        let dom = DomainSpec::benchmark();
        for xi in 1..4 {
            let a = mode_spectral_gap(2.0, &dom, &hermite(24), xi).unwrap();
            let b = mode_spectral_gap(2.0, &dom, &hermite(24), -xi).unwrap();
            assert!((a - b).abs() < 1e-10 * a, "{a} {b}");
        }
    }

    #[test]
    fn grid_zero_mode_matches_hermite() {
        let dom = DomainSpec::benchmark();
        let g = mode_spectral_gap(
            2.0,
            &dom,
            &VelocityBasis::WeightedGrid {
                cells: 256,
                radius: None,
            },
            0,
        )
        .unwrap();
        assert!((g - 1.0).abs() < 1e-3, "{g}");
    }

    #[test]
    fn non_benchmark_has_no_literal_rows() {
        let spec = EquilibriumSpec::with_defaults(2.0, 1).unwrap();
        let dom = DomainSpec::new(3.0, 1.0, 1, 0.0).unwrap();
        let opts = TableOptions {
            basis: Some(hermite(24)),
            xi_max: 4,
            ..TableOptions::default()
        };
        let table = benchmark_table(&spec, &dom, &opts).unwrap();
        assert!(!table.benchmark);
        assert!(table
            .rows
            .iter()
            .all(|r| r.provenance == RowProvenance::Computed));
    }
}
