//! Self-contained JSON run records. Everything needed to re-check a result
//! is embedded, so `verify` needs nothing but the file.

use serde::{Deserialize, Serialize};

use crate::constructors::{ConstructionCertificate, VerifyReport};
use crate::error::{Error, Result};
use crate::evaluator::{exact_law, exact_law_with_cells, LawReport};
use crate::exec::Execution;
use crate::measures::{levy_distance, DiscreteMeasure};
use crate::rational::{self, Rational};
use crate::sequence::NormalizingSequence;
use crate::sets::IntervalSet;
use crate::tower::{rokhlin_tower, RokhlinTower};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outputs {
    Certificate {
        certificate: Box<ConstructionCertificate>,
    },
    Law {
        set: IntervalSet,
        seq: NormalizingSequence,
        report: LawReport,
    },
    Levy {
        nu: DiscreteMeasure,
        eta: DiscreteMeasure,
        #[serde(with = "rational::serde_str")]
        tol: Rational,
        #[serde(with = "rational::serde_str")]
        lo: Rational,
        #[serde(with = "rational::serde_str")]
        hi: Rational,
    },
    Tower {
        n: u64,
        #[serde(with = "rational::serde_str")]
        gamma: Rational,
        tower: RokhlinTower,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Inputs as given, rationals as `"p/q"` strings.
    pub config: serde_json::Value,
    pub outputs: Outputs,
    pub tool_version: String,
    pub deterministic: bool,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, outputs: Outputs) -> Self {
        Self {
            command: command.into(),
            config,
            outputs,
            tool_version: TOOL_VERSION.to_string(),
            deterministic: true,
        }
    }

    /// Pretty JSON with a trailing newline; key order is fixed, so equal
    /// manifests give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Recomputes every recorded result.
    pub fn verify(&self) -> VerifyReport {
        let mut report = VerifyReport::default();
        let mut check = |ok: Result<bool>, what: &str| match ok {
            Ok(true) => {}
            Ok(false) => report.failures.push(format!("{what} does not reproduce")),
            Err(e) => report.failures.push(format!("{what}: {e}")),
        };
        match &self.outputs {
            Outputs::Certificate { certificate } => return certificate.verify(),
            Outputs::Law { set, seq, report: law } => {
                let fresh = if law.cells.is_some() {
                    exact_law_with_cells(set, law.n, seq, Execution::default())
                } else {
                    exact_law(set, law.n, seq)
                };
                check(fresh.map(|f| f == *law), "law");
            }
            Outputs::Levy { nu, eta, tol, lo, hi } => {
                check(levy_distance(nu, eta, tol).map(|(l, h)| l == *lo && h == *hi), "levy bracket");
            }
            Outputs::Tower { n, gamma, tower } => {
                check(rokhlin_tower(*n, gamma).map(|t| t == *tower), "tower");
            }
        }
        report
    }
}
