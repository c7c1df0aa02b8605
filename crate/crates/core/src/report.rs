use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One named inequality check.
///
/// `max_violation` is the largest signed amount by which the inequality fails
/// over the sampled points (negative means it holds with margin). It is `None`
/// when the check was not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub region: String,
    pub times: Vec<f64>,
    pub max_violation: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReportEntry {
    pub fn measured(
        name: impl Into<String>,
        region: impl Into<String>,
        times: Vec<f64>,
        max_violation: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            region: region.into(),
            times,
            max_violation: Some(max_violation),
            tolerance,
            pass: max_violation <= tolerance,
            note: None,
        }
    }

    pub fn not_applicable(name: impl Into<String>, region: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            region: region.into(),
            times: Vec::new(),
            max_violation: None,
            tolerance: 0.0,
            pass: true,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_applicable(&self) -> bool {
        self.max_violation.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<ReportEntry>,
    /// Hash of the configuration that produced the data.
    pub provenance: String,
}

impl VerificationReport {
    pub fn new(provenance: impl Into<String>) -> Self {
        Self { entries: Vec::new(), provenance: provenance.into() }
    }

    pub fn push(&mut self, entry: ReportEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.entries.extend(other.entries);
    }

    pub fn all_pass(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    /// Fixed-width text table, one line per entry.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<44} {:>14} {:>10}  {:<6} region", "check", "max_violation", "tolerance", "status");
        for e in &self.entries {
            let (viol, status) = match e.max_violation {
                Some(v) => (format!("{v:>14.6e}"), if e.pass { "PASS" } else { "FAIL" }),
                None => (format!("{:>14}", "-"), "N/A"),
            };
            let _ = writeln!(out, "{:<44} {} {:>10.3e}  {:<6} {}", e.name, viol, e.tolerance, status, e.region);
        }
        out
    }
}
