//! `ptcircle`: batch front end for spectra, inversion, kernels and two-point systems
//! of a particle on a circle with point interactions.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for numeric failures.

mod spec;
mod table;

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptcircle::inverse::{fit_parameters, recover_parameters, Case};
use ptcircle::kernels::{box_kernel, scale_invariant_kernel, smooth_kernel, smooth_theta, BoxCase, KernelQuery, SpectralKernel};
use ptcircle::spectrum::{degeneracy_at, full_spectrum, sector_matrix, DegeneracyReport};
use ptcircle::twopoint::{conjugate_pair, isospectral_group_of, spectrum2, IsospectralGroup, TwoPointSystem};
use ptcircle::u2core::{
    classify_with_tol, haar_su2, haar_u2, p_theta_map, parity_map, pauli_exp, pt_map, time_reversal_map,
    CharacteristicMatrix, SpectralTriple, SubfamilyReport,
};
use ptcircle::{Level, Sector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use table::{csv_string, prefix_from_rows, read_spectrum, LevelRow, SpectrumFile};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<ptcircle::Error> for CliError {
    fn from(e: ptcircle::Error) -> Self {
        use ptcircle::Error as E;
        match e {
            E::NonUnitary { .. } | E::NotSpecialUnitary(_) | E::InvalidParameters(_) | E::Unsupported(_) | E::NonConvergent => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "ptcircle", version, about = "Spectra and propagators on a circle with point interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Emit JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV (the default).
    #[arg(long)]
    csv: bool,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Target {
    /// Boundary matrix: inline JSON or a path to a JSON file.
    #[arg(long)]
    u: String,
    /// Geometry `{"l": .., "L0": ..}`, inline or as a file; defaults to l = L0 = 1.
    #[arg(long)]
    geom: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Asymptotic,
    Fit,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Box,
    F2,
    Smooth,
    Spectral,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest positive levels plus all nonpositive ones.
    Spectrum {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        /// Rank tolerance used to certify every reported level.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Subfamily membership, separated walls and degeneracy type (JSON).
    Classify {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectra along symmetry maps (one point) or SU(2) conjugations (two points).
    Orbit {
        #[command(flatten)]
        target: Target,
        /// Condition at l/2; switches to the two-point sweep.
        #[arg(long)]
        u2: Option<String>,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Recovers (xi, alpha_R, beta_I) from a spectrum table written by `spectrum`.
    Invert {
        #[arg(long)]
        input: PathBuf,
        /// Overrides the geometry stored in a JSON table; required for CSV input unless l = L0 = 1.
        #[arg(long)]
        geom: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euclidean kernel K(x, y; -i tau) on a grid (CSV: x, y, re_k, im_k).
    Kernel {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        u: Option<String>,
        /// Smooth-family phase; taken from `--u` when absent.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        geom: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Levels per sector in the spectral sum.
        #[arg(long, default_value_t = 80)]
        levels: usize,
        #[arg(long, default_value_t = 1e-12)]
        truncation_tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Spectrum with conditions U1 at 0 and U2 at l/2.
    Twopoint {
        #[arg(long)]
        u1: String,
        #[arg(long)]
        u2: String,
        #[arg(long)]
        geom: Option<String>,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Random U, forward spectrum, inverse recovery (JSON).
    Roundtrip {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        levels: usize,
        #[arg(long)]
        geom: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const ASYMPTOTIC_TOL: f64 = 1e-3;
const FIT_TOL: f64 = 1e-9;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ptcircle: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Numeric(_) => 3,
            })
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Numeric(format!("cannot write output: {e}"))),
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn check_count(n: usize, what: &str) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Config(format!("{what} must be at least 1")));
    }
    Ok(())
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Spectrum { target, levels, tol, output } => cmd_spectrum(&target, levels, tol, &output),
        Command::Classify { target, tol, out } => cmd_classify(&target, tol, out.as_ref()),
        Command::Orbit { target, u2, levels, samples, seed, tol, output } => {
            cmd_orbit(&target, u2.as_deref(), levels, samples, seed, tol, &output)
        }
        Command::Invert { input, geom, method, out } => cmd_invert(&input, geom.as_deref(), method, out.as_ref()),
        Command::Kernel { family, u, theta, geom, tau, grid, levels, truncation_tol, output } => {
            let k = KernelArgs { family, u, theta, geom, tau, grid, levels, truncation_tol };
            cmd_kernel(&k, &output)
        }
        Command::Twopoint { u1, u2, geom, levels, output } => cmd_twopoint(&u1, &u2, geom.as_deref(), levels, &output),
        Command::Roundtrip { seed, levels, geom, out } => cmd_roundtrip(seed, levels, geom.as_deref(), out.as_ref()),
    }
}

fn write_spectrum(file: &SpectrumFile, output: &Output) -> Result<(), CliError> {
    let text = if output.json { json(file)? } else { csv_string(&file.levels)? };
    emit(output.out.as_ref(), &text)
}

fn cmd_spectrum(target: &Target, levels: usize, tol: f64, output: &Output) -> Result<(), CliError> {
    check_count(levels, "--levels")?;
    let u = spec::parse_u(&target.u)?;
    let geom = spec::parse_geom(target.geom.as_deref())?;
    let sp = full_spectrum(&u, &geom, levels)?;
    for l in &sp.levels {
        let m = sector_matrix(&u, &geom, l.sector, l.wavenumber);
        if m.singular_values()[1] > tol * m.rank_scale(&geom) {
            return Err(CliError::Numeric(format!(
                "{} level at wavenumber {} fails the rank check at tol {tol:e}",
                l.sector.as_str(),
                l.wavenumber
            )));
        }
    }
    let file = SpectrumFile {
        geometry: geom,
        triple: Some(sp.triple),
        levels: LevelRow::rows(&sp.levels),
    };
    write_spectrum(&file, output)
}

#[derive(Serialize)]
struct ClassifyReport {
    u: CharacteristicMatrix,
    triple: SpectralTriple,
    subfamilies: SubfamilyReport,
    degeneracy: DegeneracyReport,
}

fn cmd_classify(target: &Target, tol: f64, out: Option<&PathBuf>) -> Result<(), CliError> {
    let u = spec::parse_u(&target.u)?;
    let geom = spec::parse_geom(target.geom.as_deref())?;
    let report = ClassifyReport {
        u,
        triple: u.spectral_triple(),
        subfamilies: classify_with_tol(&u, &geom, tol),
        degeneracy: degeneracy_at(&u, &geom),
    };
    emit(out, &json(&report)?)
}

/// Largest relative wavenumber deviation, or infinity on a structural mismatch.
fn spectrum_deviation(a: &[Level], b: &[Level]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |acc, (x, y)| {
        if x.sector != y.sector || x.multiplicity != y.multiplicity {
            f64::INFINITY
        } else {
            acc.max((x.wavenumber - y.wavenumber).abs() / x.wavenumber.abs().max(1.0))
        }
    })
}

#[derive(Serialize)]
struct OrbitEntry {
    map: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    max_deviation: f64,
    isospectral: bool,
    levels: Vec<LevelRow>,
}

#[derive(Serialize)]
struct OrbitReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    isospectral_group: Option<IsospectralGroup>,
    all_isospectral: bool,
    entries: Vec<OrbitEntry>,
}

#[derive(Serialize)]
struct OrbitRow<'a> {
    map: &'a str,
    index: usize,
    sector: &'a str,
    wavenumber: f64,
    energy: f64,
    multiplicity: usize,
}

fn cmd_orbit(
    target: &Target,
    u2: Option<&str>,
    levels: usize,
    samples: usize,
    seed: u64,
    tol: f64,
    output: &Output,
) -> Result<(), CliError> {
    check_count(levels, "--levels")?;
    let u = spec::parse_u(&target.u)?;
    let geom = spec::parse_geom(target.geom.as_deref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectra: Vec<(String, Option<f64>, Vec<Level>)> = Vec::new();
    let mut group = None;

    match u2 {
        None => {
            spectra.push(("identity".into(), None, full_spectrum(&u, &geom, levels)?.levels));
            for (name, m) in [("parity", parity_map(&u)), ("time_reversal", time_reversal_map(&u)), ("pt", pt_map(&u))] {
                spectra.push((name.into(), None, full_spectrum(&m, &geom, levels)?.levels));
            }
            for _ in 0..samples {
                let theta = rng.random_range(0.0..2.0 * PI);
                spectra.push(("p_theta".into(), Some(theta), full_spectrum(&p_theta_map(&u, theta), &geom, levels)?.levels));
            }
        }
        Some(u2) => {
            let sys = TwoPointSystem::new(u, spec::parse_u(u2)?, geom);
            spectra.push(("identity".into(), None, spectrum2(&sys, levels)?.levels));
            for _ in 0..samples {
                let v = haar_su2(&mut rng);
                spectra.push(("joint_conjugation".into(), None, spectrum2(&conjugate_pair(&sys, &v)?, levels)?.levels));
            }
            let g = isospectral_group_of(&sys.u2);
            if let Some(a) = g.axis_matrix() {
                for _ in 0..samples {
                    let rho = rng.random_range(0.0..2.0 * PI);
                    let v = pauli_exp(&a, rho);
                    let t = conjugate_pair(&sys, &v)?;
                    let t = TwoPointSystem::new(t.u1, sys.u2, geom);
                    spectra.push(("stabiliser".into(), Some(rho), spectrum2(&t, levels)?.levels));
                }
            }
            group = Some(g);
        }
    }

    let base = spectra[0].2.clone();
    let entries: Vec<OrbitEntry> = spectra
        .into_iter()
        .map(|(map, theta, lv)| {
            let d = spectrum_deviation(&base, &lv);
            OrbitEntry {
                map,
                theta,
                max_deviation: d,
                isospectral: d <= tol,
                levels: LevelRow::rows(&lv),
            }
        })
        .collect();
    let report = OrbitReport {
        isospectral_group: group,
        all_isospectral: entries.iter().all(|e| e.isospectral),
        entries,
    };
    let text = if output.json {
        json(&report)?
    } else {
        let rows: Vec<OrbitRow> = report
            .entries
            .iter()
            .flat_map(|e| {
                e.levels.iter().map(|r| OrbitRow {
                    map: &e.map,
                    index: r.index,
                    sector: &r.sector,
                    wavenumber: r.wavenumber,
                    energy: r.energy,
                    multiplicity: r.multiplicity,
                })
            })
            .collect();
        csv_string(&rows)?
    };
    emit(output.out.as_ref(), &text)
}

#[derive(Serialize)]
struct AsymptoticOut {
    triple: SpectralTriple,
    case: Case,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

#[derive(Serialize)]
struct FitOut {
    triple: SpectralTriple,
    residual: f64,
}

#[derive(Serialize)]
struct InvertReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    asymptotic: Option<AsymptoticOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disagreement: Option<f64>,
}

fn cmd_invert(input: &Path, geom: Option<&str>, method: Method, out: Option<&PathBuf>) -> Result<(), CliError> {
    let geom = geom.map(|g| spec::parse_geom(Some(g))).transpose()?;
    let (rows, geometry) = read_spectrum(input, geom)?;
    let prefix = prefix_from_rows(&rows, geometry)?;
    let asymptotic = match method {
        Method::Asymptotic | Method::Both => {
            let r = recover_parameters(&prefix)?;
            Some(AsymptoticOut {
                triple: r.triple,
                case: r.case,
                residual: r.residual,
                warning: r.warning,
            })
        }
        Method::Fit => None,
    };
    let fit = match method {
        Method::Fit | Method::Both => {
            let f = fit_parameters(&prefix)?;
            Some(FitOut {
                triple: f.triple,
                residual: f.residual,
            })
        }
        Method::Asymptotic => None,
    };
    let disagreement = match (&asymptotic, &fit) {
        (Some(a), Some(f)) => Some(a.triple.distance(&f.triple)),
        _ => None,
    };
    emit(out, &json(&InvertReport { asymptotic, fit, disagreement })?)
}

struct KernelArgs {
    family: Family,
    u: Option<String>,
    theta: Option<f64>,
    geom: Option<String>,
    tau: f64,
    grid: usize,
    levels: usize,
    truncation_tol: f64,
}

type KernelEval = Box<dyn Fn(&KernelQuery) -> Result<num_complex::Complex64, CliError>>;

#[derive(Serialize)]
struct KernelRow {
    x: f64,
    y: f64,
    re_k: f64,
    im_k: f64,
}

fn cmd_kernel(k: &KernelArgs, output: &Output) -> Result<(), CliError> {
    check_count(k.grid, "--grid")?;
    let geom = spec::parse_geom(k.geom.as_deref())?;
    let u = k.u.as_deref().map(spec::parse_u).transpose()?;
    let need_u = || u.ok_or_else(|| CliError::Config("this kernel family needs --u".into()));
    let eval: KernelEval = match k.family {
        Family::Box => {
            let u = need_u()?;
            let case = BoxCase::from_u(&u, &geom)
                .ok_or_else(|| CliError::Config("U is not a box condition (separated walls with L in {0, inf})".into()))?;
            Box::new(move |q| Ok(box_kernel(case, &geom, q)?))
        }
        Family::Smooth => {
            let theta = match (k.theta, u) {
                (Some(t), _) => t,
                (None, Some(u)) => {
                    if !classify_with_tol(&u, &geom, 1e-10).smooth {
                        return Err(CliError::Config("U is not in the smooth family".into()));
                    }
                    smooth_theta(&u)
                }
                (None, None) => return Err(CliError::Config("smooth kernel needs --theta or --u".into())),
            };
            Box::new(move |q| Ok(smooth_kernel(theta, &geom, q)?))
        }
        Family::F2 => {
            let u = need_u()?;
            Box::new(move |q| Ok(scale_invariant_kernel(&u, &geom, q)?))
        }
        Family::Spectral => {
            let sk = SpectralKernel::new(&need_u()?, &geom, k.levels)?;
            Box::new(move |q| Ok(sk.eval(q)?.value))
        }
    };
    let mut rows = Vec::with_capacity(k.grid * k.grid);
    for i in 0..k.grid {
        for j in 0..k.grid {
            let (x, y) = (geom.l * i as f64 / k.grid as f64, geom.l * j as f64 / k.grid as f64);
            let q = KernelQuery::euclidean(x, y, k.tau, k.truncation_tol)?;
            let v = eval(&q)?;
            rows.push(KernelRow { x, y, re_k: v.re, im_k: v.im });
        }
    }
    let text = if output.json { json(&rows)? } else { csv_string(&rows)? };
    emit(output.out.as_ref(), &text)
}

fn cmd_twopoint(u1: &str, u2: &str, geom: Option<&str>, levels: usize, output: &Output) -> Result<(), CliError> {
    check_count(levels, "--levels")?;
    let geometry = spec::parse_geom(geom)?;
    let sys = TwoPointSystem::new(spec::parse_u(u1)?, spec::parse_u(u2)?, geometry);
    let sp = spectrum2(&sys, levels)?;
    let file = SpectrumFile {
        geometry,
        triple: None,
        levels: LevelRow::rows(&sp.levels),
    };
    write_spectrum(&file, output)
}

#[derive(Serialize)]
struct Recovered {
    triple: SpectralTriple,
    error: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct RoundtripReport {
    seed: u64,
    u: CharacteristicMatrix,
    triple: SpectralTriple,
    positive_levels: usize,
    nonpositive: Vec<LevelRow>,
    case: Case,
    asymptotic: Recovered,
    fit: Recovered,
}

fn cmd_roundtrip(seed: u64, levels: usize, geom: Option<&str>, out: Option<&PathBuf>) -> Result<(), CliError> {
    check_count(levels, "--levels")?;
    let geometry = spec::parse_geom(geom)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_u2(&mut rng);
    let truth = u.spectral_triple();
    let sp = full_spectrum(&u, &geometry, levels)?;
    let prefix = ptcircle::inverse::SpectrumPrefix::from_spectrum(&sp, geometry);
    let rec = recover_parameters(&prefix)?;
    let fit = fit_parameters(&prefix)?;
    let recovered = |t: SpectralTriple, tolerance: f64| {
        let error = t.distance(&truth);
        Recovered { triple: t, error, tolerance, pass: error <= tolerance }
    };
    let report = RoundtripReport {
        seed,
        u,
        triple: truth,
        positive_levels: prefix.positive_k.len(),
        nonpositive: LevelRow::rows(&sp.levels.iter().filter(|l| l.sector != Sector::Positive).copied().collect::<Vec<_>>()),
        case: rec.case,
        asymptotic: recovered(rec.triple, ASYMPTOTIC_TOL),
        fit: recovered(fit.triple, FIT_TOL),
    };
    emit(out, &json(&report)?)?;
    if !(report.asymptotic.pass && report.fit.pass) {
        return Err(CliError::Numeric(format!(
            "recovery outside tolerance: asymptotic error {:.3e}, fit error {:.3e}",
            report.asymptotic.error, report.fit.error
        )));
    }
    Ok(())
}
