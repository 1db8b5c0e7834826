use std::fmt::Write;

use serde::Serialize;

/// Outcome of a semi-decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub instances: usize,
    pub max_violation: f64,
    pub passed: bool,
    /// Seeds (or instance numbers) of failing instances.
    pub failure_seeds: Vec<u64>,
    pub verdict: Option<Verdict>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            instances: 0,
            max_violation: 0.0,
            passed: true,
            failure_seeds: Vec::new(),
            verdict: None,
            notes: Vec::new(),
        }
    }

    /// Records one instance whose worst deviation is `violation`.
    pub fn record(&mut self, seed: u64, violation: f64, tol: f64) {
        self.instances += 1;
        if violation.is_nan() || violation > self.max_violation {
            self.max_violation = violation;
        }
        if !(violation <= tol) {
            self.passed = false;
            self.failure_seeds.push(seed);
        }
    }

    pub fn fail(&mut self, seed: u64, note: impl Into<String>) {
        self.instances += 1;
        self.passed = false;
        self.failure_seeds.push(seed);
        self.notes.push(note.into());
    }

    /// Attributes every failure of this report to `seed`.
    pub fn tagged(mut self, seed: u64) -> Self {
        if !self.failure_seeds.is_empty() {
            self.failure_seeds = vec![seed];
        }
        self
    }

    /// Folds another report for the same check into this one.
    pub fn merge(&mut self, other: CheckReport) {
        self.instances += other.instances;
        self.max_violation = self.max_violation.max(other.max_violation);
        self.passed &= other.passed;
        self.failure_seeds.extend(other.failure_seeds);
        self.notes.extend(other.notes);
        self.verdict = match (self.verdict, other.verdict) {
            (None, v) | (v, None) => v,
            (Some(a), Some(b)) if a == b => Some(a),
            _ => Some(Verdict::Unknown),
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Fixed-width table of reports, sorted by check name.
pub fn summary_table(reports: &[CheckReport]) -> String {
    let mut rows: Vec<&CheckReport> = reports.iter().collect();
    rows.sort_by(|a, b| a.check.cmp(&b.check));
    let mut out = String::new();
    let _ = writeln!(out, "{:<40} {:>9} {:>12} {:>8} {:>14}", "check", "instances", "max_viol", "result", "verdict");
    for r in rows {
        let verdict = r.verdict.map_or("-".to_string(), |v| format!("{v:?}"));
        let _ = writeln!(
            out,
            "{:<40} {:>9} {:>12.3e} {:>8} {:>14}",
            r.check,
            r.instances,
            r.max_violation,
            if r.passed { "pass" } else { "FAIL" },
            verdict
        );
    }
    out
}
