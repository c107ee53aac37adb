//! Evidence records produced by the verification operations.

use serde::Serialize;

use crate::manifold::Point;

/// Where a residual was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    /// Indices, exponents or times identifying the worst case.
    pub indices: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Witness {
    pub fn at(point: &Point, indices: Vec<i64>) -> Self {
        Witness {
            point: point.coords(),
            indices,
            note: None,
        }
    }

    pub fn note(note: impl Into<String>) -> Self {
        Witness {
            point: Vec::new(),
            indices: Vec::new(),
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// A secondary pass/fail condition attached to a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

/// One row of a per-index table, e.g. `(b, δ_b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub index: i64,
    pub value: f64,
}

/// Result of one check. `passed` holds exactly when `residual <= tolerance`
/// and every gate passed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Largest unscaled residual when `residual` is normalized by the
    /// composition count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_residual: Option<f64>,
    pub cases_checked: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub surrogate: bool,
    /// Informational entries do not affect the overall verdict.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub informational: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gates: Vec<Gate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub untestable: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckEntry {
    pub fn new(check: impl Into<String>, residual: f64, tolerance: f64, cases_checked: usize) -> Self {
        CheckEntry {
            check: check.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
            raw_residual: None,
            cases_checked,
            surrogate: false,
            informational: false,
            witness: None,
            gates: Vec::new(),
            untestable: Vec::new(),
            table: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_gate(mut self, name: impl Into<String>, value: f64, limit: f64) -> Self {
        let passed = value <= limit;
        self.gates.push(Gate {
            name: name.into(),
            value,
            limit,
            passed,
        });
        self.passed &= passed;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    /// A failed entry for a check that could not run.
    pub fn errored(check: impl Into<String>, err: &crate::Error) -> Self {
        let mut e = CheckEntry::new(check, f64::INFINITY, 0.0, 0);
        e.passed = false;
        e.notes.push(err.to_string());
        e
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed || e.informational)
    }

    pub fn get(&self, check: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.check == check)
    }

    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_residual_and_gates() {
        assert!(CheckEntry::new("x", 1e-13, 1e-12, 1).passed);
        assert!(!CheckEntry::new("x", 2e-12, 1e-12, 1).passed);
        assert!(!CheckEntry::new("x", 0.0, 1e-12, 1).with_gate("g", 2.0, 1.0).passed);
        assert!(!CheckEntry::new("x", f64::NAN, 1.0, 1).passed);
    }

    #[test]
    fn informational_entries_do_not_fail_reports() {
        let mut r = VerificationReport::default();
        r.push(CheckEntry::new("a", 0.0, 1.0, 1));
        r.push(CheckEntry::new("b", 5.0, 1.0, 1).informational());
        assert!(r.passed());
        r.push(CheckEntry::new("c", 5.0, 1.0, 1));
        assert!(!r.passed());
    }
}
