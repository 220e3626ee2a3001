//! Report serialization. Layouts are described in docs/report-format.md.

use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ExperimentReport;

/// Bumped whenever a column or field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::config(format!("unknown format {s:?}; expected csv or json"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    /// Query slots `q` on the deepest path.
    pub queries: usize,
    pub naive_formula_bits: u64,
    pub noisy_formula_bits: u64,
    /// Naive over noisy formula cost.
    pub ratio: f64,
    /// Smallest tensor arity from which the noisy walk stays cheaper.
    pub crossover_k: Option<usize>,
    pub naive: ExperimentReport,
    pub noisy: ExperimentReport,
    #[serde(skip)]
    pub wall_clock: Duration,
}

const REPORT_COLUMNS: [&str; 28] = [
    "schema_version",
    "workload",
    "variant",
    "n",
    "k",
    "delta",
    "c",
    "trials",
    "seed",
    "distribution",
    "schedule",
    "mode",
    "depth",
    "runs",
    "errors",
    "error_rate",
    "wilson_low",
    "wilson_high",
    "bits_min",
    "bits_mean",
    "bits_max",
    "expected_bits",
    "mean_good",
    "mean_bad",
    "mean_mistakes",
    "violations",
    "first_violation",
    "crossover_k",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn row(r: &ExperimentReport, crossover: Option<usize>) -> Vec<String> {
    let c = &r.config;
    vec![
        r.schema_version.to_string(),
        c.workload.clone(),
        c.variant.to_string(),
        c.n.to_string(),
        c.k.to_string(),
        c.delta.to_string(),
        c.c.to_string(),
        c.trials.to_string(),
        c.seed.to_string(),
        c.distribution.to_string(),
        enum_name(&c.schedule),
        enum_name(&c.mode),
        opt(r.depth),
        r.runs.to_string(),
        r.errors.to_string(),
        r.error_rate.to_string(),
        r.wilson_low.to_string(),
        r.wilson_high.to_string(),
        r.bits.min.to_string(),
        r.bits.mean.to_string(),
        r.bits.max.to_string(),
        opt(r.expected_bits),
        opt(r.mean_good),
        opt(r.mean_bad),
        opt(r.mean_mistakes),
        r.violations.to_string(),
        r.violation_examples.first().cloned().unwrap_or_default(),
        opt(crossover),
    ]
}

fn write_csv(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(REPORT_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

impl ExperimentReport {
    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => write_csv(&[row(self, None)]),
            ReportFormat::Json => to_json(self),
        }
    }
}

impl CompareReport {
    /// CSV carries one row per variant; the formula totals sit in `expected_bits`.
    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => write_csv(&[row(&self.naive, self.crossover_k), row(&self.noisy, self.crossover_k)]),
            ReportFormat::Json => to_json(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{estimate_error, ExperimentConfig, Variant};
    use super::*;

    #[test]
    fn csv_has_header_and_row() {
        let mut cfg = ExperimentConfig::new("gt", Variant::Noisy, 8, 2);
        cfg.trials = 20;
        let r = estimate_error(&cfg).unwrap();
        let csv = r.render(ReportFormat::Csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), REPORT_COLUMNS.len());
        assert!(lines.next().unwrap().starts_with("1,gt,noisy,8,2,"));
        assert!(lines.next().is_none());
    }

    #[test]
    fn json_round_trips_and_is_reproducible() {
        let mut cfg = ExperimentConfig::new("hd1-bsearch", Variant::Noisy, 16, 1);
        cfg.trials = 50;
        cfg.seed = 17;
        let a = estimate_error(&cfg).unwrap().render(ReportFormat::Json).unwrap();
        let b = estimate_error(&cfg).unwrap().render(ReportFormat::Json).unwrap();
        assert_eq!(a, b);
        let back: ExperimentReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back.runs, 50);
        assert_eq!(back.config, cfg);
    }
}
