//! Versioned JSON report documents.

use serde::{Deserialize, Serialize};

use crate::certificates::CertificateReport;
use crate::cone::BlockKind;
use crate::error::{Error, Result};
use crate::penalty::{IterateTrace, SolveStatus, SolverConfig};

pub const SCHEMA_VERSION: &str = "conic-cert-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
}

/// One field whose observed value differed from the corpus manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mismatch {
    pub field: String,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemReport {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub blocks: Vec<BlockKind>,
    pub x0: Vec<f64>,
    pub solver_config: Option<SolverConfig>,
    pub status: Option<SolveStatus>,
    pub x: Option<Vec<f64>>,
    pub trace: Option<IterateTrace>,
    pub certificate: Option<CertificateReport>,
    pub mismatches: Vec<Mismatch>,
    pub error: Option<String>,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema: String,
    pub tool_version: String,
    pub config: ConfigEcho,
    pub problems: Vec<ProblemReport>,
}

impl ReportDocument {
    pub fn new(config: ConfigEcho, problems: Vec<ProblemReport>) -> Self {
        ReportDocument {
            schema: SCHEMA_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            problems,
        }
    }

    /// Copy with every wall-time field zeroed.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.problems {
            p.wall_time_ms = 0.0;
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Report(e.to_string()))
    }

    /// Parses and validates a report: unknown or missing fields and a wrong
    /// schema tag are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "unsupported schema `{}` (expected `{SCHEMA_VERSION}`)",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = (&str, &Mismatch)> {
        self.problems
            .iter()
            .flat_map(|p| p.mismatches.iter().map(move |m| (p.name.as_str(), m)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> ReportDocument {
        let p = ProblemReport {
            name: "p".into(),
            n: 1,
            p: 0,
            blocks: vec![BlockKind::Lorentz(1)],
            x0: vec![0.0],
            solver_config: None,
            status: None,
            x: None,
            trace: None,
            certificate: None,
            mismatches: vec![Mismatch {
                field: "kkt".into(),
                expected: "true".into(),
                found: "false".into(),
            }],
            error: None,
            wall_time_ms: 12.5,
        };
        let config = ConfigEcho {
            command: "corpus".into(),
            inputs: vec!["p.ncp".into()],
            seed: 1,
        };
        ReportDocument::new(config, vec![p])
    }

    #[test]
    fn round_trip_and_timing() {
        let d = doc();
        assert_eq!(ReportDocument::from_json(&d.to_json().unwrap()).unwrap(), d);
        assert_eq!(d.without_timing().problems[0].wall_time_ms, 0.0);
        assert_eq!(d.mismatches().map(|(n, m)| (n, m.field.as_str())).collect::<Vec<_>>(), [("p", "kkt")]);
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = doc().to_json().unwrap().replace(SCHEMA_VERSION, "conic-cert-report/0");
        assert!(ReportDocument::from_json(&text).is_err());
    }
}
