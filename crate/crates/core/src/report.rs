//! Margin reports: the outcome of every check.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Where a report came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

/// A structural constant measured once on a fixed-seed sweep and then frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// The frozen constant used by later checks.
    pub constant: f64,
    /// The extreme ratio observed on the sweep.
    pub measured: f64,
    /// Factor applied to `measured` to obtain `constant`.
    pub safety: f64,
    pub seed: u64,
    pub samples: usize,
}

/// A named inequality `lhs ≤ rhs` with its measured sides.
///
/// `margin = rhs − lhs` and `pass ⇔ margin ≥ −tolerance`; array-valued checks
/// are reduced to their worst case before a report is built.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub name: String,
    /// Short description of the inequality being checked.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub calibrated: Option<f64>,
    pub pass: bool,
    pub provenance: Provenance,
    pub notes: Vec<String>,
}

impl MarginReport {
    pub fn new(name: &str, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            margin,
            tolerance,
            calibrated: None,
            pass: margin >= -tolerance,
            provenance: Provenance::default(),
            notes: Vec::new(),
        }
    }

    pub fn with_calibrated(mut self, c: f64) -> Self {
        self.calibrated = Some(c);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Slack left before the report fails; negative when it fails.
    pub fn slack(&self) -> f64 {
        self.margin + self.tolerance
    }

    /// Reduces several reports to the one with the least slack, renamed.
    /// Notes of all parts are kept. Panics on an empty list.
    pub fn worst(name: &str, anchor: &str, parts: Vec<MarginReport>) -> Self {
        let all_pass = parts.iter().all(|p| p.pass);
        let mut notes = Vec::new();
        for p in &parts {
            notes.extend(p.notes.iter().cloned());
        }
        let mut worst = parts
            .into_iter()
            .min_by(|a, b| a.slack().total_cmp(&b.slack()))
            .expect("at least one report");
        worst.name = name.to_string();
        worst.anchor = anchor.to_string();
        worst.notes = notes;
        debug_assert_eq!(worst.pass, all_pass);
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_margin_within_tolerance() {
        assert!(MarginReport::new("a", "x", 1.0, 1.0, 0.0).pass);
        assert!(MarginReport::new("a", "x", 1.0 + 1e-10, 1.0, 1e-9).pass);
        assert!(!MarginReport::new("a", "x", 1.1, 1.0, 1e-9).pass);
    }

    #[test]
    fn worst_picks_least_slack() {
        let r = MarginReport::worst(
            "w",
            "x",
            alloc::vec![
                MarginReport::new("a", "x", 0.0, 1.0, 0.0),
                MarginReport::new("b", "x", 0.5, 0.6, 0.0)
            ],
        );
        assert!((r.margin - 0.1).abs() < 1e-15);
        assert_eq!(r.name, "w");
    }
}
