//! Command implementations behind the `conic-cert` binary.
//!
//! Exit codes: `solve` returns 0 on `converged_kkt`, 2 on
//! `infeasible_stationary` and 3 otherwise; `certify` returns 0 iff the KKT
//! and WSOC verdicts hold and 3 otherwise; `corpus` returns 4 when any
//! expectation is not met. Errors of any command return 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use super::corpus::{self, load_problem, solve_and_certify};
use super::report::{ConfigEcho, ProblemReport, ReportDocument};
use crate::certificates::{self, MultiplierSource, Tolerances};
use crate::cone::{BlockKind, BlockPoint, SymMat};
use crate::error::{Error, Result};
use crate::model::{Multipliers, ProblemInstance};
use crate::penalty::{self, SolveStatus, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "conic-cert", version, about = "Penalty solver and stationarity certificates for small SOCP/SDP problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file with the external penalty method and certify the result.
    Solve(SolveArgs),
    /// Certify a given point (and optional multipliers).
    Certify(CertifyArgs),
    /// Run the corpus in a directory and check its expectations.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long = "rho-mult")]
    pub rho_mult: Option<f64>,
    /// Outer stopping tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-outer")]
    pub max_outer: Option<usize>,
    /// Starting point, comma separated (zeros by default).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub file: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Cone multipliers: packed block entries (PSD lower triangle, row-major), concatenated.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parses `v1,v2,...`; the empty string is the empty vector.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("invalid number `{}`", t.trim())))
        })
        .collect()
}

/// Splits packed entries into block points following the instance's cones.
pub fn unpack_omega(inst: &ProblemInstance, packed: &[f64]) -> Result<Vec<BlockPoint>> {
    let total: usize = inst.blocks().iter().map(|b| b.kind.dim()).sum();
    if packed.len() != total {
        return Err(Error::dim("packed cone multipliers", total, packed.len()));
    }
    let mut off = 0;
    let mut out = Vec::new();
    for b in inst.blocks() {
        let chunk = &packed[off..off + b.kind.dim()];
        out.push(match b.kind {
            BlockKind::Lorentz(_) => BlockPoint::lorentz(chunk),
            BlockKind::Psd(m) => BlockPoint::Psd(SymMat::new(m, chunk.to_vec())?),
        });
        off += b.kind.dim();
    }
    Ok(out)
}

fn emit(doc: &ReportDocument, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let json = doc.to_json()?;
    match path {
        Some(p) => std::fs::write(p, json + "\n").map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => writeln!(out, "{json}").map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn status_code(status: Option<SolveStatus>) -> i32 {
    match status {
        Some(SolveStatus::ConvergedKkt) => EXIT_OK,
        Some(SolveStatus::InfeasibleStationary) => EXIT_INFEASIBLE,
        Some(_) => EXIT_UNCERTIFIED,
        None => EXIT_ERROR,
    }
}

fn solve_inner(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let inst = load_problem(&args.file)?;
    let x0 = match &args.x0 {
        Some(s) => {
            let v = parse_vector(s)?;
            if v.len() != inst.n() {
                return Err(Error::dim("--x0", inst.n(), v.len()));
            }
            DVector::from_vec(v)
        }
        None => DVector::zeros(inst.n()),
    };
    let defaults = SolverConfig::default();
    let config = SolverConfig {
        rho0: args.rho0.unwrap_or(defaults.rho0),
        rho_mult: args.rho_mult.unwrap_or(defaults.rho_mult),
        outer_tol: args.tol.unwrap_or(defaults.outer_tol),
        max_outer: args.max_outer.unwrap_or(defaults.max_outer),
        ..defaults
    };
    config.validate(inst.n())?;
    let tol = Tolerances {
        seed: args.seed,
        ..Tolerances::default()
    };
    let name = args.file.file_stem().map_or("problem".into(), |s| s.to_string_lossy().into_owned());
    let report = solve_and_certify(&name, &inst, &x0, &config, &tol);
    if let Some(e) = &report.error {
        let _ = writeln!(err, "{name}: {e}");
    }
    let code = status_code(report.status);
    let _ = writeln!(
        err,
        "{name}: {}",
        report.status.map_or("error", |s| s.as_str())
    );
    let doc = ReportDocument::new(
        ConfigEcho {
            command: "solve".into(),
            inputs: vec![args.file.display().to_string()],
            seed: args.seed,
        },
        vec![report],
    );
    emit(&doc, args.report.as_deref(), out)?;
    Ok(code)
}

/// Estimates `(ω, μ)` at `x` by one inner penalty solve with the quartic
/// term centred at `x`.
pub fn estimate_multipliers(inst: &ProblemInstance, x: &DVector<f64>) -> Result<Multipliers> {
    // The multiplier error is O(1/ρ); 1e8 keeps it below the KKT tolerance
    // while ρ·ε_mach stays small.
    const RHO: f64 = 1e8;
    let config = SolverConfig {
        quartic_center: Some(x.iter().copied().collect()),
        ..SolverConfig::default()
    };
    let eps = (config.eps0 / RHO).max(config.inner_tol_floor);
    let inner = penalty::inner_minimize(inst, RHO, x, eps, &config)?;
    penalty::penalty_multipliers(&inst.evaluate(&inner.x)?, RHO)
}

fn certify_inner(args: &CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let start = std::time::Instant::now();
    let inst = load_problem(&args.file)?;
    let xv = parse_vector(&args.x)?;
    if xv.len() != inst.n() {
        return Err(Error::dim("--x", inst.n(), xv.len()));
    }
    let x = DVector::from_vec(xv);
    let (m, source) = match (&args.omega, &args.mu) {
        (None, None) => (estimate_multipliers(&inst, &x)?, MultiplierSource::Estimated),
        (omega, mu) => {
            let omega = match omega {
                Some(s) => unpack_omega(&inst, &parse_vector(s)?)?,
                None => Multipliers::zeros(&inst).omega,
            };
            let mu = match mu {
                Some(s) => DVector::from_vec(parse_vector(s)?),
                None => DVector::zeros(inst.p()),
            };
            (Multipliers { omega, mu }, MultiplierSource::User)
        }
    };
    let tol = Tolerances {
        seed: args.seed,
        ..Tolerances::default()
    };
    let cert = certificates::certify(&inst, &x, &m, source, &tol)?;
    let ok = cert.kkt_holds && cert.wsoc_holds();
    let name = args.file.file_stem().map_or("problem".into(), |s| s.to_string_lossy().into_owned());
    let _ = writeln!(
        err,
        "{name}: kkt {} wsoc {}",
        if cert.kkt_holds { "holds" } else { "fails" },
        if cert.wsoc_holds() { "holds" } else { "fails" }
    );
    let report = ProblemReport {
        name,
        n: inst.n(),
        p: inst.p(),
        blocks: inst.block_kinds(),
        x0: x.iter().copied().collect(),
        solver_config: None,
        status: None,
        x: Some(x.iter().copied().collect()),
        trace: None,
        certificate: Some(cert),
        mismatches: Vec::new(),
        error: None,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let doc = ReportDocument::new(
        ConfigEcho {
            command: "certify".into(),
            inputs: vec![args.file.display().to_string()],
            seed: args.seed,
        },
        vec![report],
    );
    emit(&doc, args.report.as_deref(), out)?;
    Ok(if ok { EXIT_OK } else { EXIT_UNCERTIFIED })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Fixed-width summary table of a corpus run.
pub fn summary_table(doc: &ReportDocument) -> String {
    let mut s = format!(
        "{:<16} {:<28} {:>4} {:>5} {:>5} {:>4} {:>6} {:>3} {:>10}\n",
        "problem", "status", "kkt", "wsoc", "robin", "wcr", "nondeg", "sc", "expect"
    );
    for p in &doc.problems {
        let c = p.certificate.as_ref();
        let flag = |f: fn(&certificates::CertificateReport) -> bool| c.map_or("-", |c| yes_no(f(c)));
        s += &format!(
            "{:<16} {:<28} {:>4} {:>5} {:>5} {:>4} {:>6} {:>3} {:>10}\n",
            p.name,
            p.status.map_or("error", |s| s.as_str()),
            flag(|c| c.kkt_holds),
            flag(|c| c.wsoc_holds()),
            flag(|c| c.robinson_holds()),
            flag(|c| c.wcr_holds()),
            flag(|c| c.nondegeneracy_holds()),
            flag(|c| c.strict_complementarity_holds()),
            if p.mismatches.is_empty() { "met" } else { "MISMATCH" },
        );
    }
    s
}

fn corpus_inner(args: &CorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let doc = corpus::run_corpus(&args.dir, args.jobs, args.seed)?;
    let _ = write!(out, "{}", summary_table(&doc));
    let mut code = EXIT_OK;
    for (name, m) in doc.mismatches() {
        let _ = writeln!(
            err,
            "expectation mismatch: {name}: {} expected {} found {}",
            m.field, m.expected, m.found
        );
        code = EXIT_MISMATCH;
    }
    if let Some(path) = &args.report {
        emit(&doc, Some(path), out)?;
    }
    Ok(code)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(solve_inner(args, out, err), err)
}

pub fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(certify_inner(args, out, err), err)
}

pub fn cmd_corpus(args: &CorpusArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    finish(corpus_inner(args, out, err), err)
}

fn finish(r: Result<i32>, err: &mut dyn Write) -> i32 {
    r.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_ERROR
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Certify(a) => cmd_certify(a, out, err),
        Command::Corpus(a) => cmd_corpus(a, out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("1, -2.5,3e-1").unwrap(), vec![1.0, -2.5, 0.3]);
        assert!(parse_vector("").unwrap().is_empty());
        assert!(parse_vector("1,,2").is_err());
        assert!(parse_vector("nan").is_err());
    }

    #[test]
    fn omega_unpacks_by_block() {
        let inst = parse_problem("vars 1\nminimize x1\ncone lorentz 2: x1, 0\ncone psd 2: 1, 0, 1\n").unwrap();
        let w = unpack_omega(&inst, &[1.0, 0.5, 2.0, 0.1, 3.0]).unwrap();
        assert_eq!(w[0], BlockPoint::lorentz(&[1.0, 0.5]));
        let BlockPoint::Psd(m) = &w[1] else { panic!("psd block expected") };
        assert_eq!((m.get(0, 0), m.get(1, 0), m.get(1, 1)), (2.0, 0.1, 3.0));
        assert!(unpack_omega(&inst, &[1.0]).is_err());
    }
}
