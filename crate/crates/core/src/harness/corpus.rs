//! The bundled problem corpus: manifest, per-problem runs and expectation
//! checks.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ConfigEcho, Mismatch, ProblemReport, ReportDocument};
use crate::certificates::{self, CertificateReport, MultiplierSource, Tolerances};
use crate::error::{Error, Result};
use crate::model::{parse_problem, ProblemInstance};
use crate::penalty::{self, SolveStatus, SolverConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub status: Option<SolveStatus>,
    pub kkt: Option<bool>,
    pub wsoc: Option<bool>,
    pub robinson: Option<bool>,
    pub wcr: Option<bool>,
    pub nondegeneracy: Option<bool>,
    pub strict_complementarity: Option<bool>,
    /// Expected solution and the max-norm distance allowed.
    pub x: Option<Vec<f64>>,
    pub x_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    /// Starting point; zeros when absent.
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub expect: Expectations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub problems: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Location of the corpus shipped with the crate.
pub fn bundled_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let text = read(&dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| Error::Report(format!("{}: {e}", MANIFEST_FILE)))
}

pub fn load_problem(path: &Path) -> Result<ProblemInstance> {
    parse_problem(&read(path)?)
}

/// Solves from `x0` and certifies the output when it is feasible.
pub fn solve_and_certify(
    name: &str,
    inst: &ProblemInstance,
    x0: &DVector<f64>,
    config: &SolverConfig,
    tol: &Tolerances,
) -> ProblemReport {
    let start = Instant::now();
    let mut report = ProblemReport {
        name: name.to_string(),
        n: inst.n(),
        p: inst.p(),
        blocks: inst.block_kinds(),
        x0: x0.iter().copied().collect(),
        solver_config: Some(config.clone()),
        status: None,
        x: None,
        trace: None,
        certificate: None,
        mismatches: Vec::new(),
        error: None,
        wall_time_ms: 0.0,
    };
    match penalty::solve(inst, x0, config) {
        Ok(out) => {
            report.status = Some(out.status);
            report.x = Some(out.x.iter().copied().collect());
            match certificates::certify(inst, &out.x, &out.multipliers, MultiplierSource::Solver, tol) {
                Ok(c) => report.certificate = Some(c),
                Err(e) => report.error = Some(format!("certification failed: {e}")),
            }
            report.trace = Some(out.trace);
        }
        Err(e) => report.error = Some(format!("solve failed: {e}")),
    }
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

fn verdict(cert: Option<&CertificateReport>, f: impl Fn(&CertificateReport) -> bool) -> String {
    cert.map_or_else(|| "missing".to_string(), |c| f(c).to_string())
}

/// Compares a problem report against its expectations.
pub fn check_expectations(report: &ProblemReport, expect: &Expectations) -> Vec<Mismatch> {
    let mut out = Vec::new();
    let mut push = |field: &str, expected: String, found: String| {
        if expected != found {
            out.push(Mismatch {
                field: field.to_string(),
                expected,
                found,
            });
        }
    };
    if let Some(s) = expect.status {
        let found = report.status.map_or("missing", |s| s.as_str());
        push("status", s.as_str().to_string(), found.to_string());
    }
    let cert = report.certificate.as_ref();
    let checks: [(&str, Option<bool>, fn(&CertificateReport) -> bool); 6] = [
        ("kkt", expect.kkt, |c| c.kkt_holds),
        ("wsoc", expect.wsoc, |c| c.wsoc_holds()),
        ("robinson", expect.robinson, |c| c.robinson_holds()),
        ("wcr", expect.wcr, |c| c.wcr_holds()),
        ("nondegeneracy", expect.nondegeneracy, |c| c.nondegeneracy_holds()),
        ("strict_complementarity", expect.strict_complementarity, |c| c.strict_complementarity_holds()),
    ];
    for (field, want, f) in checks {
        if let Some(want) = want {
            push(field, want.to_string(), verdict(cert, f));
        }
    }
    if let Some(xe) = &expect.x {
        let tol = expect.x_tol.unwrap_or(1e-5);
        let found = report.x.as_ref().map(|x| {
            x.iter()
                .zip(xe)
                .fold(if x.len() == xe.len() { 0.0 } else { f64::INFINITY }, |a, (p, q)| a.max((p - q).abs()))
        });
        let ok = found.is_some_and(|d| d <= tol);
        if !ok {
            out.push(Mismatch {
                field: "x".to_string(),
                expected: format!("{xe:?} within {tol:e}"),
                found: report.x.as_ref().map_or("missing".to_string(), |x| format!("{x:?}")),
            });
        }
    }
    out
}

/// Runs one manifest entry.
pub fn run_entry(dir: &Path, entry: &ManifestEntry, seed: u64) -> ProblemReport {
    let inst = match load_problem(&dir.join(&entry.file)) {
        Ok(inst) => inst,
        Err(e) => {
            return ProblemReport {
                name: entry.name.clone(),
                n: 0,
                p: 0,
                blocks: Vec::new(),
                x0: entry.x0.clone().unwrap_or_default(),
                solver_config: None,
                status: None,
                x: None,
                trace: None,
                certificate: None,
                mismatches: vec![Mismatch {
                    field: "load".to_string(),
                    expected: "ok".to_string(),
                    found: e.to_string(),
                }],
                error: Some(e.to_string()),
                wall_time_ms: 0.0,
            }
        }
    };
    let x0 = entry
        .x0
        .as_ref()
        .map_or_else(|| DVector::zeros(inst.n()), |v| DVector::from_column_slice(v));
    let tol = Tolerances {
        seed,
        ..entry.tolerances.clone()
    };
    let mut report = solve_and_certify(&entry.name, &inst, &x0, &entry.solver, &tol);
    report.mismatches = check_expectations(&report, &entry.expect);
    report
}

/// Runs the corpus in `dir` on a pool of `jobs` threads. Problem `i` uses
/// the WCR seed `seed + i`; results keep manifest order.
pub fn run_corpus(dir: &Path, jobs: usize, seed: u64) -> Result<ReportDocument> {
    let manifest = load_manifest(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let problems: Vec<ProblemReport> = pool.install(|| {
        manifest
            .problems
            .par_iter()
            .enumerate()
            .map(|(i, e)| run_entry(dir, e, seed.wrapping_add(i as u64)))
            .collect()
    });
    let config = ConfigEcho {
        command: "corpus".to_string(),
        inputs: manifest.problems.iter().map(|e| e.file.clone()).collect(),
        seed,
    };
    Ok(ReportDocument::new(config, problems))
}
