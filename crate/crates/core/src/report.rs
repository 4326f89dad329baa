//! Residual records and per-scenario reports.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// How a check's tolerance should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckClass {
    /// Identity evaluated with exact jets; residual is rounding only.
    Exact,
    /// Comparison against a finite-difference oracle.
    FiniteDifference,
    /// Reported for insight; never affects the verdict.
    Diagnostic,
}

/// Outcome a scenario declares for a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Pass,
    Fail,
    /// Outcome not asserted either way.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// Running max/mean of a nonnegative residual with the location of the max.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stat {
    pub max: f64,
    pub sum: f64,
    pub count: usize,
    pub worst: Option<Vec<f64>>,
    pub nan: bool,
}

impl Stat {
    pub fn push(&mut self, value: f64, at: &[f64]) {
        if value.is_nan() {
            self.nan = true;
            if self.worst.is_none() {
                self.worst = Some(at.to_vec());
            }
        } else {
            if self.count == 0 || value > self.max {
                self.max = value;
                self.worst = Some(at.to_vec());
            }
            self.sum += value;
        }
        self.count += 1;
    }

    /// Associative merge; ties keep the left-hand location so ordered
    /// reductions stay deterministic.
    pub fn merge(mut self, other: Stat) -> Stat {
        if other.count > 0 && (self.count == 0 || other.max > self.max) {
            self.max = other.max;
            self.worst = other.worst;
        }
        self.sum += other.sum;
        self.count += other.count;
        self.nan |= other.nan;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// Short human label of the property being checked.
    pub anchor: String,
    pub class: CheckClass,
    pub status: Status,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    pub expect: Expect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_at: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Pass iff every residual is a number and the max is within tolerance.
    pub fn from_stat(id: &str, anchor: &str, class: CheckClass, stat: Stat, tolerance: f64, seed: u64) -> CheckRecord {
        let pass = !stat.nan && stat.max <= tolerance;
        CheckRecord {
            id: id.to_string(),
            anchor: anchor.to_string(),
            class,
            status: if pass { Status::Pass } else { Status::Fail },
            max: if stat.nan { f64::NAN } else { stat.max },
            mean: stat.mean(),
            tolerance,
            samples: stat.count,
            seed,
            expect: Expect::Pass,
            worst_at: stat.worst,
            note: None,
        }
    }

    pub fn skipped(id: &str, anchor: &str, class: CheckClass, reason: impl Into<String>, seed: u64) -> CheckRecord {
        CheckRecord {
            id: id.to_string(),
            anchor: anchor.to_string(),
            class,
            status: Status::Skipped,
            max: 0.0,
            mean: 0.0,
            tolerance: 0.0,
            samples: 0,
            seed,
            expect: Expect::Any,
            worst_at: None,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> CheckRecord {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    /// Whether the observed status agrees with the declared expectation.
    /// Skips agree with anything but an asserted pass or fail.
    pub fn as_expected(&self) -> bool {
        matches!(
            (self.expect, self.status),
            (Expect::Any, _) | (Expect::Pass, Status::Pass) | (Expect::Fail, Status::Fail)
        )
    }

    /// Counts toward the verdict: non-diagnostic and not skipped.
    pub fn counts(&self) -> bool {
        self.class != CheckClass::Diagnostic && self.status != Status::Skipped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slant_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cos_slant_angle: Option<f64>,
    /// Spread of sampled slant angles, radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slant_spread: Option<f64>,
    pub d_invariant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySummary {
    /// Values at the sampled point with the smallest margin.
    pub lhs: f64,
    pub rhs: f64,
    pub min_margin: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub scenario: String,
    pub seed: u64,
    pub points: usize,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<InequalitySummary>,
    /// Conjunction of all non-diagnostic, non-skipped checks.
    pub verdict: bool,
    /// Every check agrees with the scenario's declared expectations.
    pub as_expected: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn new(scenario: impl Into<String>, seed: u64, points: usize) -> CheckReport {
        CheckReport {
            scenario: scenario.into(),
            seed,
            points,
            checks: Vec::new(),
            classification: None,
            inequality: None,
            verdict: true,
            as_expected: true,
            values: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Recomputes the verdict and expectation flags from the records.
    pub fn finish(&mut self) {
        self.verdict = self.checks.iter().filter(|c| c.counts()).all(CheckRecord::passed);
        self.as_expected = self.checks.iter().all(CheckRecord::as_expected);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.3e}")
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}  (seed {}, {} points)", self.scenario, self.seed, self.points)?;
        if let Some(c) = &self.classification {
            write!(f, "  classification: {}", c.kind)?;
            if let Some(t) = c.slant_angle {
                write!(f, ", slant angle {t:.12} rad")?;
            }
            if let Some(cs) = c.cos_slant_angle {
                write!(f, ", cos {cs:.12}")?;
            }
            writeln!(f)?;
        }
        if let Some(i) = &self.inequality {
            writeln!(
                f,
                "  |h|^2 bound: lhs {} rhs {} min margin {}",
                fmt_num(i.lhs),
                fmt_num(i.rhs),
                fmt_num(i.min_margin)
            )?;
        }
        let w = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(5).max(5);
        writeln!(
            f,
            "  {:<w$}  {:<7}  {:<10}  {:>10}  {:>10}  {:>9}  {:>7}  expected",
            "check", "status", "class", "max", "mean", "tol", "samples"
        )?;
        for c in &self.checks {
            let status = match (c.status, c.class) {
                (Status::Skipped, _) => "skipped",
                (_, CheckClass::Diagnostic) => "info",
                (Status::Pass, _) => "pass",
                (Status::Fail, _) => "FAIL",
            };
            let class = match c.class {
                CheckClass::Exact => "exact",
                CheckClass::FiniteDifference => "fd",
                CheckClass::Diagnostic => "diagnostic",
            };
            let expect = match (c.expect, c.as_expected()) {
                (Expect::Any, _) => "-",
                (_, true) => "yes",
                (_, false) => "NO",
            };
            if c.status == Status::Skipped {
                writeln!(
                    f,
                    "  {:<w$}  {:<7}  {:<10}  {}",
                    c.id,
                    status,
                    class,
                    c.note.as_deref().unwrap_or("")
                )?;
                continue;
            }
            writeln!(
                f,
                "  {:<w$}  {:<7}  {:<10}  {:>10}  {:>10}  {:>9}  {:>7}  {}",
                c.id,
                status,
                class,
                fmt_num(c.max),
                fmt_num(c.mean),
                fmt_num(c.tolerance),
                c.samples,
                expect
            )?;
            if let (Some(note), Status::Fail) = (&c.note, c.status) {
                writeln!(f, "  {:<w$}    {note}", "")?;
            }
        }
        writeln!(
            f,
            "  verdict: {}   matches expectations: {}",
            if self.verdict { "pass" } else { "fail" },
            if self.as_expected { "yes" } else { "no" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_merge_is_associative_and_tracks_location() {
        let mut a = Stat::default();
        a.push(1.0, &[0.0]);
        let mut b = Stat::default();
        b.push(3.0, &[1.0]);
        let mut c = Stat::default();
        c.push(2.0, &[2.0]);
        let left = a.clone().merge(b.clone()).merge(c.clone());
        let right = a.merge(b.merge(c));
        assert_eq!(left, right);
        assert_eq!(left.max, 3.0);
        assert_eq!(left.worst, Some(vec![1.0]));
        assert_eq!(left.mean(), 2.0);
    }

    #[test]
    fn nan_fails() {
        let mut s = Stat::default();
        s.push(f64::NAN, &[0.5]);
        let r = CheckRecord::from_stat("x", "x", CheckClass::Exact, s, 1.0, 0);
        assert!(r.failed());
    }

    #[test]
    fn verdict_ignores_diagnostics_and_skips() {
        let mut rep = CheckReport::new("s", 1, 1);
        let mut bad = Stat::default();
        bad.push(1.0, &[]);
        let mut diag = CheckRecord::from_stat("d", "d", CheckClass::Diagnostic, bad.clone(), 0.1, 1);
        diag.expect = Expect::Any;
        rep.push(diag);
        rep.push(CheckRecord::skipped("s", "s", CheckClass::Exact, "reason", 1));
        rep.finish();
        assert!(rep.verdict && rep.as_expected);
        let mut neg = CheckRecord::from_stat("n", "n", CheckClass::Exact, bad, 0.1, 1);
        neg.expect = Expect::Fail;
        rep.push(neg);
        rep.finish();
        assert!(!rep.verdict);
        assert!(rep.as_expected);
    }
}
