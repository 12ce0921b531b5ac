//! Replicate experiments and their reports.

pub mod experiments;
pub mod measures;
pub mod stats;

use std::fmt::Write as _;
use std::time::Duration;

pub use experiments::*;
pub use measures::{shape_deviation, ShapeDeviation};

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn new(name: impl Into<String>, value: f64, se: f64, n: usize) -> Self {
        Estimate {
            name: name.into(),
            value,
            se,
            n,
        }
    }

    pub fn from_samples(name: impl Into<String>, xs: &[f64]) -> Self {
        Estimate::new(name, stats::mean(xs), stats::std_error(xs), xs.len())
    }

    /// `|value - target| <= z * se`; an exact hit passes with zero error.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.se
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRecord {
    pub seed: u64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub id: String,
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub records: Vec<SeedRecord>,
    pub estimates: Vec<Estimate>,
    pub verdicts: Vec<Verdict>,
    pub elapsed: Duration,
}

impl ExperimentReport {
    pub fn new(id: impl Into<String>) -> Self {
        ExperimentReport {
            id: id.into(),
            params: Vec::new(),
            columns: Vec::new(),
            records: Vec::new(),
            estimates: Vec::new(),
            verdicts: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Column `name` across all seed records.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.records.iter().map(|r| r.values[i]).collect())
    }

    /// Per-seed records as CSV, `seed` first, then the columns in order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.records {
            write!(out, "{}", r.seed).unwrap();
            for v in &r.values {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable summary. Wall-clock time is left out so that reruns
    /// produce identical text.
    pub fn summary(&self) -> String {
        let mut out = format!("experiment: {}\n", self.id);
        for (k, v) in &self.params {
            writeln!(out, "  {k} = {v}").unwrap();
        }
        for e in &self.estimates {
            writeln!(out, "{}: {} ± {} (n={})", e.name, e.value, e.se, e.n).unwrap();
        }
        for v in &self.verdicts {
            let tag = if v.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{}: {}, {tag}", v.name, v.detail).unwrap();
        }
        out
    }
}
