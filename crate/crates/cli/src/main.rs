#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fock_phase::lattice::{polar_order, Lattice};
use fock_phase::phaseless::lifted_injectivity;
use fock_phase::pointset::{angle_condition, certify_f_closeness, separation, AngleReport, ClosenessReport, DensityReport, SeparationReport};
use fock_phase::sampler::{
    construction_density, deterministic_triple, density_opt_even, density_opt_real, even_single, mc_angle_bound,
    mc_mirror_angle_bound, random_triple, real_pair, three_lines, Construction, ConstructionDoc, GeneratorConfig,
    OptConfig, PerturbationMode, ThreeLines,
};
use fock_phase::{json, Complex64, Error};
use serde::Serialize;

mod render;
mod verify;

#[derive(Parser)]
#[command(name = "fockphase", version, about = "Perturbed-lattice sampling sets for phase retrieval in Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sampling set.
    Generate(GenerateArgs),
    /// Certify closeness, angle, density and separation of a generated set.
    Certify(CertifyArgs),
    /// Run an invariant suite.
    Verify(VerifyArgs),
    /// Analyse the lifted measurement map on a truncated Fock space.
    Injectivity(InjectivityArgs),
    /// Monte Carlo estimate of the small-angle probability.
    Montecarlo(MonteCarloArgs),
    /// Render a set as an SVG scatter plot.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    Det3,
    Rand3,
    Real2,
    Even1,
    Optreal,
    Opteven,
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    Equilateral,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    construction: ConstructionArg,
    /// Fock weight.
    #[arg(long, default_value_t = PI)]
    alpha: f64,
    /// Closeness exponent in f(λ) = e^{−γ|λ|²}.
    #[arg(long, default_value_t = 7.0)]
    gamma: f64,
    /// Lattice spacing of v(ℤ+iℤ).
    #[arg(long, default_value_t = 0.45)]
    v: f64,
    /// Perturbation cap κ (default 1, or v/4 for opteven).
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 6.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbation mode of the density-optimised constructions.
    #[arg(long, value_enum, default_value = "uniform")]
    mode: ModeArg,
    /// Line directions for `lines`, comma separated.
    #[arg(long, value_delimiter = ',')]
    angles: Option<Vec<f64>>,
    /// Point spacing along the lines.
    #[arg(long, default_value_t = 0.1)]
    pitch: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CertifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    beta: f64,
    /// Closeness exponent (defaults to the one recorded in the set).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Target {
    Fock,
    Special,
    Gabor,
    Phaseless,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    target: Target,
    /// Run one named suite only.
    #[arg(long)]
    suite: Option<String>,
    /// Replace the default tolerance of every residual check.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct InjectivityArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Truncation degree N.
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = PI)]
    alpha: f64,
    /// Use only the first points in order of modulus.
    #[arg(long)]
    max_points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum McKind {
    Angles,
    Mirror,
}

#[derive(clap::Args)]
struct MonteCarloArgs {
    #[arg(value_enum)]
    kind: McKind,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Draw the unperturbed lattice points underneath.
    #[arg(long)]
    mesh: bool,
}

/// Why a run stopped: a failed check (exit 1) or bad input (exit 2).
enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Certify(a) => certify(a),
        Command::Verify(a) => run_verify(a),
        Command::Injectivity(a) => injectivity(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Render(a) => render_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("fockphase: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("fockphase: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    emit(out, &json::to_string(value)?)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// A parsed input file: either a lattice-indexed construction or a three-lines set.
pub enum Loaded {
    Construction(ConstructionDoc),
    Lines(ThreeLines),
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    if let Ok(doc) = serde_json::from_str::<ConstructionDoc>(&text) {
        return Ok(Loaded::Construction(doc));
    }
    serde_json::from_str::<ThreeLines>(&text)
        .map(Loaded::Lines)
        .map_err(|e| Failure::Usage(format!("{}: not a point set: {e}", path.display())))
}

fn generate(a: GenerateArgs) -> Outcome {
    if let ConstructionArg::Lines = a.construction {
        let angles = a.angles.unwrap_or_else(|| vec![0.0, PI / 3.0, 2.0 * PI / 3.0]);
        let angles: [f64; 3] =
            angles.try_into().map_err(|_| Failure::Usage("--angles takes exactly three values".into()))?;
        let lines = three_lines(angles, a.pitch, a.radius)?;
        match a.format {
            Format::Json => emit_json(a.out.as_deref(), &lines)?,
            Format::Csv => {
                let mut s = String::from("re,im\n");
                for p in &lines.points {
                    s.push_str(&format!("{},{}\n", json::format_f64(p.re), json::format_f64(p.im)));
                }
                emit(a.out.as_deref(), s.trim_end())?;
            }
        }
        return Ok(true);
    }
    let construction = build_construction(&a)?;
    match a.format {
        Format::Json => emit_json(a.out.as_deref(), &construction.to_doc())?,
        Format::Csv => emit(a.out.as_deref(), construction.samples.to_csv().trim_end())?,
    }
    Ok(true)
}

fn build_construction(a: &GenerateArgs) -> Result<Construction, Failure> {
    let lattice = Lattice::square(a.v)?;
    let mode = match a.mode {
        ModeArg::Uniform => PerturbationMode::Uniform,
        ModeArg::Equilateral => PerturbationMode::Equilateral,
    };
    let opt = |kappa: f64| OptConfig { v: a.v, gamma: a.gamma, kappa_cap: kappa, window_radius: a.radius, seed: a.seed, mode };
    let general = || GeneratorConfig::new(lattice, a.gamma, a.kappa.unwrap_or(1.0), a.radius, a.seed, a.alpha);
    let c = match a.construction {
        ConstructionArg::Det3 => deterministic_triple(&general()?)?,
        ConstructionArg::Rand3 => random_triple(&general()?)?,
        ConstructionArg::Real2 => real_pair(&general()?)?,
        ConstructionArg::Even1 => even_single(&general()?)?,
        ConstructionArg::Optreal => density_opt_real(&opt(a.kappa.unwrap_or(1.0)))?,
        ConstructionArg::Opteven => density_opt_even(&opt(a.kappa.unwrap_or(a.v / 4.0)))?,
        ConstructionArg::Lines => unreachable!("handled by the caller"),
    };
    Ok(c)
}

#[derive(Serialize)]
struct CertifyReport {
    #[serde(with = "json::extended_real")]
    kappa: f64,
    #[serde(with = "json::extended_real")]
    sup_ratio: f64,
    density: Option<f64>,
    delta: f64,
    passed: bool,
    closeness: ClosenessReport,
    angles: AngleReport,
    density_report: Option<DensityReport>,
    separation: SeparationReport,
}

fn certify(a: CertifyArgs) -> Outcome {
    let doc = match load(&a.input)? {
        Loaded::Construction(doc) => doc,
        Loaded::Lines(_) => return Err(Failure::Usage("certify needs a lattice-indexed set".into())),
    };
    if !(a.beta > 0.0) {
        return Err(Failure::Usage(format!("--beta must be positive, got {}", a.beta)));
    }
    let samples = doc.samples()?;
    let triples = doc.triples()?;
    let gamma = a.gamma.unwrap_or(samples.offset_gamma());
    let closeness = certify_f_closeness(&samples, gamma, None)?;
    let angles = angle_condition(triples.as_ref().unwrap_or(&samples), a.beta)?;
    let trusted = samples.trusted_radius();
    let density_report = if trusted > 0.0 { Some(construction_density(&samples, &[0.5 * trusted, trusted])?) } else { None };
    let separation = separation(&samples.positions())?;
    let passed = closeness.kappa <= 1.0 && angles.sup_ratio.is_finite();
    let report = CertifyReport {
        kappa: closeness.kappa,
        sup_ratio: angles.sup_ratio,
        density: density_report.as_ref().map(|d| d.fitted_density),
        delta: separation.delta,
        passed,
        closeness,
        angles,
        density_report,
        separation,
    };
    emit_json(a.out.as_deref(), &report)?;
    Ok(passed)
}

fn run_verify(a: VerifyArgs) -> Outcome {
    let report = verify::run(a.target, a.suite.as_deref(), a.tol, a.seed)?;
    emit_json(a.out.as_deref(), &report)?;
    Ok(report.passed)
}

fn injectivity(a: InjectivityArgs) -> Outcome {
    let mut points: Vec<Complex64> = match load(&a.input)? {
        Loaded::Construction(doc) => doc.samples()?.positions(),
        Loaded::Lines(lines) => lines.points,
    };
    points.sort_by(|x, y| polar_order(*x, *y));
    if let Some(m) = a.max_points {
        points.truncate(m);
    }
    let report = lifted_injectivity(&points, a.dim, a.alpha)?;
    emit_json(a.out.as_deref(), &report)?;
    Ok(report.kernel_dim == 0)
}

fn montecarlo(a: MonteCarloArgs) -> Outcome {
    let report = match a.kind {
        McKind::Angles => mc_angle_bound(a.trials, a.eps, a.seed)?,
        McKind::Mirror => mc_mirror_angle_bound(a.trials, a.eps, a.seed)?,
    };
    emit_json(a.out.as_deref(), &report)?;
    Ok(report.passed)
}

fn render_cmd(a: RenderArgs) -> Outcome {
    let svg = render::svg(&load(&a.input)?, a.mesh)?;
    emit(a.out.as_deref(), &svg)?;
    Ok(true)
}
