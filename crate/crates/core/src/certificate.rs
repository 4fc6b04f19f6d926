//! Machine-checkable inequality/identity certificates.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One time slice of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
}

impl CertificateRow {
    pub fn new(t: f64, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            t,
            lhs,
            rhs,
            residual: lhs - rhs,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// A named check `lhs − rhs ≤ tolerance`, optionally backed by a per-time table.
///
/// When built from rows the headline numbers are those of the worst row
/// (largest `residual − tolerance`), so `pass` holds iff every row passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<CertificateRow>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = lhs - rhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            rows: Vec::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn from_rows(name: impl Into<String>, rows: Vec<CertificateRow>) -> Self {
        let worst = rows
            .iter()
            .max_by(|a, b| {
                let ea = a.residual - a.tolerance;
                let eb = b.residual - b.tolerance;
                // NaN sorts last so it is always reported
                ea.partial_cmp(&eb).unwrap_or_else(|| ea.is_nan().cmp(&eb.is_nan()))
            })
            .cloned()
            .unwrap_or_else(|| CertificateRow::new(0.0, 0.0, 0.0, 0.0));
        let mut cert = Self::new(name, worst.lhs, worst.rhs, worst.tolerance);
        cert.pass = rows.iter().all(CertificateRow::pass);
        cert.rows = rows;
        cert
    }

    pub fn with_metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    /// Forces a failure with an explanatory note.
    pub fn fail(mut self, reason: impl Into<String>) -> Self {
        self.pass = false;
        self.notes.push(reason.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    /// AND of all pass flags.
    pub fn all_pass<'a>(certs: impl IntoIterator<Item = &'a Certificate>) -> bool {
        certs.into_iter().all(|c| c.pass)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: lhs={:.6e} rhs={:.6e} residual={:.3e} tol={:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.lhs,
            self.rhs,
            self.residual,
            self.tolerance
        )
    }
}
