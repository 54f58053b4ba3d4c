//! Command-line driver: configuration files, flag overrides and output files.
//!
//! Configuration grammar (TOML subset): optional top-level `command = "..."`,
//! then sections `[equilibrium]`, `[domain]`, `[discretization]`, `[initial]`,
//! `[subexp]`, `[verify]`, `[compare]`, `[sweep]`, `[output]` holding
//! `key = value` lines. Unknown keys are rejected. Command-line flags override
//! file values; `KFP_OUTPUT_DIR` overrides the output directory only.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, checks_table, empirical_w, verify_averaging_lemma, verify_corollary1,
    verify_gen_poincare, verify_lemma26, verify_theorem1, verify_theorem2, BihariEnvelope,
    BoundCheck, Phi, SweepConfig,
};
use crate::constants::{
    constants_report, d_alpha, lambda_rates, poincare_constant, subexp_constants, subexp_sigma,
    weighted_poincare_constant, DomainSpec, ReportOptions, SubexpInputs, POINCARE_CELLS,
};
use crate::equilibria::{EquilibriumSpec, MomentKind};
use crate::error::{Error, Result};
use crate::hypo_compare::{benchmark_table, TableOptions};
use crate::solver::{
    DecayTrace, Discretization, InitialDatum, Scheme, Solver, VelocityBasis, VelocityProfile,
};

pub const OUTPUT_DIR_ENV: &str = "KFP_OUTPUT_DIR";
pub const VERSION_STAMP: &str = concat!("kfp ", env!("CARGO_PKG_VERSION"), "\n");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Constants,
    #[default]
    Simulate,
    Verify,
    Compare,
    SweepAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Hermite,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumSection {
    pub alpha: f64,
    pub dim: usize,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        Self { alpha: 2.0, dim: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub length: f64,
    pub tau: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            length: 2.0 * std::f64::consts::PI,
            tau: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    pub basis: BasisKind,
    /// Hermite size `N` or grid cells `M`.
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub xi_max: i64,
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    pub scheme: Scheme,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        Self {
            basis: BasisKind::Hermite,
            size: 48,
            radius: None,
            xi_max: 6,
            dt: 0.05,
            t_final: 200.0,
            stride: 2,
            scheme: Scheme::EigenExponential,
        }
    }
}

impl DiscretizationSection {
    pub fn basis(&self) -> VelocityBasis {
        match self.basis {
            BasisKind::Hermite => VelocityBasis::Hermite { n: self.size },
            BasisKind::Grid => VelocityBasis::WeightedGrid {
                cells: self.size,
                radius: self.radius,
            },
        }
    }

    pub fn discretization(&self) -> Discretization {
        Discretization {
            xi_max: self.xi_max,
            basis: self.basis(),
            dt: self.dt,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SubexpSection {
    /// Hölder exponent; defaults to `2 - alpha`, or follows from `sigma`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Uniform weighted-variance bound; estimated from the run when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

impl SubexpSection {
    /// Resolves `(p, sigma)` with `sigma = 2 (1 - alpha) / (p - 1)`.
    pub fn resolve(&self, alpha: f64) -> Result<(f64, f64)> {
        let p = match (self.p, self.sigma) {
            (Some(p), Some(s)) => {
                let expected = subexp_sigma(alpha, p)?;
                if (expected - s).abs() > 1e-12 * s.abs().max(1.0) {
                    return Err(Error::Config(format!(
                        "subexp.sigma = {s} is inconsistent with p = {p} (expected {expected})"
                    )));
                }
                p
            }
            (Some(p), None) => p,
            (None, Some(s)) => {
                if !(s > 0.0) {
                    return Err(Error::Config(format!("subexp.sigma must be > 0, got {s}")));
                }
                1.0 + 2.0 * (1.0 - alpha) / s
            }
            (None, None) => SweepConfig::p_of(alpha),
        };
        Ok((p, subexp_sigma(alpha, p)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Rate checked instead of `lambda_proof`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub poincare_cells: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            lambda: None,
            poincare_cells: POINCARE_CELLS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub hermite_n: usize,
    pub xi_max: i64,
    pub poincare_cells: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            hermite_n: 64,
            xi_max: 8,
            poincare_cells: POINCARE_CELLS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
    pub reference_alpha: f64,
    pub tau: f64,
    pub cells: usize,
    pub xi_max: i64,
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    pub tail_fraction: f64,
    pub poincare_cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    pub datum: InitialDatum,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            alphas: vec![0.6, 0.8, 0.9, 0.95],
            reference_alpha: 1.0,
            tau: 1.0,
            cells: 128,
            xi_max: 2,
            dt: 0.1,
            t_final: 40.0,
            stride: 2,
            tail_fraction: 0.5,
            poincare_cells: POINCARE_CELLS,
            w: None,
            datum: InitialDatum::Separable {
                xi: 1,
                profile: VelocityProfile::BoundedOdd,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("kfp-out"),
            formats: vec![Format::Csv, Format::Json, Format::Text],
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    pub equilibrium: EquilibriumSection,
    pub domain: DomainSection,
    pub discretization: DiscretizationSection,
    pub initial: InitialDatum,
    pub subexp: SubexpSection,
    pub verify: VerifySection,
    pub compare: CompareSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::default(),
            equilibrium: EquilibriumSection::default(),
            domain: DomainSection::default(),
            discretization: DiscretizationSection::default(),
            initial: InitialDatum::RandomSmooth {
                seed: 7,
                xi_max: 3,
                k_max: 6,
            },
            subexp: SubexpSection::default(),
            verify: VerifySection::default(),
            compare: CompareSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn equilibrium_spec(&self) -> Result<EquilibriumSpec> {
        EquilibriumSpec::with_defaults(self.equilibrium.alpha, self.equilibrium.dim)
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        DomainSpec::new(
            self.domain.length,
            self.domain.tau,
            self.equilibrium.dim,
            0.0,
        )
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kfp",
    version,
    about = "Hypocoercive decay laboratory for the kinetic Fokker-Planck equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Evaluate every explicit constant.
    Constants(Overrides),
    /// Run the spectral solver and write the decay trace.
    Simulate(Overrides),
    /// Simulate and check the decay bounds.
    Verify(Overrides),
    /// Assemble the hypocoercivity rate comparison table.
    Compare(Overrides),
    /// Sweep alpha towards 1 from below.
    SweepAlpha(Overrides),
    /// Run the command stored in a configuration file.
    Run(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Configuration file (`key = value` with sections).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisKind>,
    /// Hermite size or grid cells.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub xi_max: Option<i64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Seed of a random initial datum.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    /// Rate to verify in place of the proof rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.alpha, cfg.equilibrium.alpha);
        set!(self.dim, cfg.equilibrium.dim);
        set!(self.length, cfg.domain.length);
        set!(self.tau, cfg.domain.tau);
        set!(self.basis, cfg.discretization.basis);
        set!(self.size, cfg.discretization.size);
        set!(self.xi_max, cfg.discretization.xi_max);
        set!(self.dt, cfg.discretization.dt);
        set!(self.t_final, cfg.discretization.t_final);
        set!(self.stride, cfg.discretization.stride);
        set!(self.format, cfg.output.formats);
        if self.p.is_some() {
            cfg.subexp.p = self.p;
        }
        if self.sigma.is_some() {
            cfg.subexp.sigma = self.sigma;
        }
        if self.w.is_some() {
            cfg.subexp.w = self.w;
        }
        if self.lambda.is_some() {
            cfg.verify.lambda = self.lambda;
        }
        if let Some(seed) = self.seed {
            match &mut cfg.initial {
                InitialDatum::RandomSmooth { seed: s, .. } => *s = seed,
                _ => {
                    return Err(Error::Config(
                        "--seed applies to random-smooth initial data only".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Resolves the configuration: defaults, then file, then `KFP_OUTPUT_DIR`, then flags.
pub fn resolve(
    command: Option<Command>,
    flags: &Overrides,
    env_dir: Option<PathBuf>,
) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = command {
        cfg.command = c;
    }
    if let Some(dir) = env_dir {
        cfg.output.dir = dir;
    }
    flags.apply(&mut cfg)?;
    if let Some(dir) = &flags.output_dir {
        cfg.output.dir = dir.clone();
    }
    cfg.output.formats.sort();
    cfg.output.formats.dedup();
    Ok(cfg)
}

/// Writes output files and never panics on I/O errors.
struct Outputs<'a> {
    dir: &'a Path,
}

impl Outputs<'_> {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        Ok(())
    }
}

/// Result of a successful run: `0` when every check passes, `1` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
}

fn write_trace(out: &Outputs, cfg: &RunConfig, trace: &DecayTrace) -> Result<()> {
    if cfg.wants(Format::Csv) {
        out.write("trace.csv", &trace.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.write("trace.json", &trace.to_json()?)?;
    }
    out.write("plot_l2_sq.dat", &trace.plot_data(|s| Some(s.l2_sq)))?;
    out.write("plot_gradv_sq.dat", &trace.plot_data(|s| Some(s.gradv_sq)))?;
    out.write(
        "plot_hminus1_sq.dat",
        &trace.plot_data(|s| Some(s.hminus1_sq)),
    )?;
    if trace.samples.iter().any(|s| s.weighted_sq.is_some()) {
        out.write("plot_weighted_sq.dat", &trace.plot_data(|s| s.weighted_sq))?;
    }
    Ok(())
}

fn build_solver(cfg: &RunConfig, weight: Option<f64>) -> Result<Solver> {
    let solver = Solver::new(
        cfg.equilibrium.alpha,
        cfg.domain_spec()?,
        cfg.discretization.discretization(),
    )?;
    Ok(match weight {
        Some(sigma) => solver.with_weight(sigma),
        None => solver,
    })
}

fn run_constants(cfg: &RunConfig, out: &Outputs) -> Result<RunOutcome> {
    let spec = cfg.equilibrium_spec()?;
    let dom = cfg.domain_spec()?;
    let opts = ReportOptions {
        poincare_cells: cfg.verify.poincare_cells,
        subexp: None,
        spectral_gap: (spec.alpha == 2.0 && spec.dim == 1)
            .then_some((cfg.compare.hermite_n, cfg.compare.xi_max)),
    };
    let report = constants_report(&spec, &dom, &opts)?;
    if cfg.wants(Format::Json) {
        out.write("constants.json", &report.to_json()?)?;
    }
    let text = report.to_text();
    if cfg.wants(Format::Text) {
        out.write("constants.txt", &text)?;
    }
    Ok(RunOutcome {
        exit_code: 0,
        summary: text,
    })
}

fn run_simulate(cfg: &RunConfig, out: &Outputs) -> Result<RunOutcome> {
    let alpha = cfg.equilibrium.alpha;
    let weight = if alpha < 1.0 {
        Some(cfg.subexp.resolve(alpha)?.1)
    } else {
        None
    };
    let solver = build_solver(cfg, weight)?;
    let d = &cfg.discretization;
    let trace = solver.simulate(&cfg.initial, d.t_final, d.stride, false)?;
    write_trace(out, cfg, &trace)?;
    let last = trace.samples.last().expect("trace holds t = 0");
    Ok(RunOutcome {
        exit_code: 0,
        summary: format!(
            "simulated {} samples up to t = {}; |h|^2: {:e} -> {:e}\n",
            trace.samples.len(),
            last.t,
            trace.samples[0].l2_sq,
            last.l2_sq
        ),
    })
}

/// Runs every applicable bound check on a fresh simulation.
pub fn verification_checks(cfg: &RunConfig) -> Result<(DecayTrace, Vec<BoundCheck>)> {
    let spec = cfg.equilibrium_spec()?;
    let dom = cfg.domain_spec()?;
    let alpha = spec.alpha;
    let d = &cfg.discretization;
    let da = d_alpha(&spec, &dom)?;
    let mut checks = Vec::new();
    if alpha >= 1.0 {
        let solver = build_solver(cfg, None)?;
        let trace = solver.simulate(&cfg.initial, d.t_final, d.stride, true)?;
        let p = poincare_constant(&spec, cfg.verify.poincare_cells)?;
        let rates = lambda_rates(&spec, &dom, p)?;
        let lambda = cfg.verify.lambda.unwrap_or(rates.proof);
        checks.push(verify_theorem1(&trace, lambda, dom.tau)?);
        checks.push(verify_corollary1(&trace, lambda, dom.tau)?);
        checks.push(verify_gen_poincare(&trace, rates.kappa, dom.tau)?);
        checks.push(verify_lemma26(&trace)?);
        checks.push(verify_averaging_lemma(&trace, &dom, da)?);
        Ok((trace, checks))
    } else {
        let (p, sigma) = cfg.subexp.resolve(alpha)?;
        let solver = build_solver(cfg, Some(sigma))?;
        let trace = solver.simulate(&cfg.initial, d.t_final, d.stride, true)?;
        let x0 = trace.samples[0].l2_sq;
        let weighted0 = trace.samples[0]
            .weighted_sq
            .ok_or_else(|| Error::Internal("weighted norm missing".into()))?;
        let w = match cfg.subexp.w {
            Some(w) => w,
            None => empirical_w(&trace, spec.moment(MomentKind::Japanese(sigma))?)?,
        };
        let wp = weighted_poincare_constant(&spec, cfg.verify.poincare_cells)?;
        let sc = subexp_constants(
            &spec,
            &dom,
            wp.value,
            &SubexpInputs {
                p,
                weighted_h0_sq: weighted0,
                x0,
                w,
            },
        )?;
        let mut env = BihariEnvelope::new(Phi::new(sc.a, sc.c, p)?, x0)?;
        let (mut envelope, explicit) =
            verify_theorem2(&trace, dom.tau, &mut env, sc.k, sc.exponent)?;
        if dom.tau != 1.0 {
            envelope.flags.push(format!(
                "unit-slab: constants assume tau = 1, got {}",
                dom.tau
            ));
        }
        checks.push(envelope);
        checks.push(explicit);
        checks.push(verify_lemma26(&trace)?);
        checks.push(verify_averaging_lemma(&trace, &dom, da)?);
        Ok((trace, checks))
    }
}

fn run_verify(cfg: &RunConfig, out: &Outputs) -> Result<RunOutcome> {
    let (trace, checks) = verification_checks(cfg)?;
    write_trace(out, cfg, &trace)?;
    let table = checks_table(&checks);
    if cfg.wants(Format::Json) {
        out.write("checks.json", &serde_json::to_string_pretty(&checks)?)?;
    }
    if cfg.wants(Format::Text) {
        out.write("checks.txt", &table)?;
    }
    let all = checks.iter().all(BoundCheck::passed);
    Ok(RunOutcome {
        exit_code: if all { 0 } else { 1 },
        summary: table,
    })
}

fn run_compare(cfg: &RunConfig, out: &Outputs) -> Result<RunOutcome> {
    let spec = cfg.equilibrium_spec()?;
    let dom = cfg.domain_spec()?;
    let opts = TableOptions {
        basis: Some(if spec.alpha == 2.0 {
            VelocityBasis::Hermite {
                n: cfg.compare.hermite_n,
            }
        } else {
            VelocityBasis::WeightedGrid {
                cells: cfg.compare.poincare_cells,
                radius: None,
            }
        }),
        xi_max: cfg.compare.xi_max,
        poincare_cells: cfg.compare.poincare_cells,
    };
    let table = benchmark_table(&spec, &dom, &opts)?;
    if cfg.wants(Format::Csv) {
        out.write("compare.csv", &table.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.write("compare.json", &table.to_json()?)?;
    }
    let text = table.to_text();
    if cfg.wants(Format::Text) {
        out.write("compare.txt", &text)?;
    }
    Ok(RunOutcome {
        exit_code: 0,
        summary: text,
    })
}

fn run_sweep(cfg: &RunConfig, out: &Outputs) -> Result<RunOutcome> {
    let s = &cfg.sweep;
    let sweep = SweepConfig {
        alphas: s.alphas.clone(),
        reference_alpha: s.reference_alpha,
        domain: DomainSpec::new(cfg.domain.length, s.tau, 1, 0.0)?,
        datum: s.datum,
        cells: s.cells,
        xi_max: s.xi_max,
        dt: s.dt,
        t_final: s.t_final,
        stride: s.stride,
        w: s.w,
        tail_fraction: s.tail_fraction,
        poincare_cells: s.poincare_cells,
    };
    let report = analysis::alpha_limit_sweep(&sweep)?;
    let csv = report.to_csv();
    out.write("sweep.csv", &csv)?;
    if cfg.wants(Format::Json) {
        out.write("sweep.json", &serde_json::to_string_pretty(&report)?)?;
    }
    let trends = format!(
        "exponents increasing: {}\nrates increasing: {}\nrates below reference: {}\n",
        report.exponents_increasing, report.rates_increasing, report.rates_below_reference
    );
    if cfg.wants(Format::Text) {
        out.write("sweep.txt", &format!("{csv}{trends}"))?;
    }
    Ok(RunOutcome {
        exit_code: 0,
        summary: format!("{csv}{trends}"),
    })
}

/// Executes `cfg`, writing the resolved configuration, a version stamp and all
/// artifacts into `cfg.output.dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&cfg.output.dir)?;
    let out = Outputs {
        dir: &cfg.output.dir,
    };
    out.write("config.resolved.toml", &cfg.to_toml()?)?;
    out.write("VERSION", VERSION_STAMP)?;
    match cfg.command {
        Command::Constants => run_constants(cfg, &out),
        Command::Simulate => run_simulate(cfg, &out),
        Command::Verify => run_verify(cfg, &out),
        Command::Compare => run_compare(cfg, &out),
        Command::SweepAlpha => run_sweep(cfg, &out),
    }
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

fn write_error(dir: &Path, err: &Error) {
    let record = ErrorRecord {
        kind: err.kind(),
        message: err.to_string(),
        exit_code: err.exit_code(),
    };
    if fs::create_dir_all(dir).is_ok() {
        if let Ok(text) = serde_json::to_string_pretty(&record) {
            let _ = fs::write(dir.join("error.json"), text);
        }
    }
}

/// Entry point: parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, flags) = match cli.command {
        CliCommand::Constants(f) => (Some(Command::Constants), f),
        CliCommand::Simulate(f) => (Some(Command::Simulate), f),
        CliCommand::Verify(f) => (Some(Command::Verify), f),
        CliCommand::Compare(f) => (Some(Command::Compare), f),
        CliCommand::SweepAlpha(f) => (Some(Command::SweepAlpha), f),
        CliCommand::Run(f) => (None, f),
    };
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let fallback_dir = flags
        .output_dir
        .clone()
        .or_else(|| env_dir.clone())
        .unwrap_or_else(|| OutputSection::default().dir);
    let cfg = match resolve(command, &flags, env_dir) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            write_error(&fallback_dir, &e);
            return e.exit_code();
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            write_error(&cfg.output.dir, &e);
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_toml("[domain]\nlenght = 3.0\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn flags_override_file_and_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "[equilibrium]\nalpha = 1.5\n[output]\ndir = \"from-file\"\n",
        )
        .unwrap();
        let flags = Overrides {
            config: Some(path),
            alpha: Some(3.0),
            ..Overrides::default()
        };
        let cfg = resolve(
            Some(Command::Constants),
            &flags,
            Some(PathBuf::from("from-env")),
        )
        .unwrap();
        assert_eq!(cfg.equilibrium.alpha, 3.0);
        assert_eq!(cfg.output.dir, PathBuf::from("from-env"));
        assert_eq!(cfg.command, Command::Constants);
    }

    #[test]
    fn sigma_and_p_resolve_consistently() {
        let s = SubexpSection {
            sigma: Some(1.0),
            ..SubexpSection::default()
        };
        assert_eq!(s.resolve(0.5).unwrap(), (2.0, 1.0));
        let bad = SubexpSection {
            p: Some(2.0),
            sigma: Some(3.0),
            w: None,
        };
        assert!(matches!(bad.resolve(0.5), Err(Error::Config(_))));
    }
}
