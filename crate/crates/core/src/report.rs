//! Self-describing run reports: plain text, line-delimited JSON records, and a
//! CSV trend table.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub n: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
}

impl Metric {
    pub fn new(n: usize, metric: impl Into<String>, value: f64, stderr: f64) -> Self {
        Metric { n, metric: metric.into(), value, stderr }
    }
}

/// Outcome of one command. Everything serialised here is a pure function of
/// the resolved config and seed; timings are kept aside and never written into
/// the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub metrics: Vec<Metric>,
    /// Free-form detail rows (per-inequality records, per-seed measurements, …).
    pub records: Vec<Value>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Records,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "text" => Ok(Format::Text),
            "records" => Ok(Format::Records),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format {other}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Records => "jsonl",
            Format::Csv => "csv",
        }
    }
}

/// Fixed-precision float rendering so that payloads are stable across platforms.
fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.9}")
    }
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        RunReport {
            command: command.into(),
            seed,
            config,
            metrics: Vec::new(),
            records: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn metric(&self, n: usize, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.n == n && m.metric == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Records => self.to_records(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,metric,value,stderr,seed\n");
        for m in &self.metrics {
            let _ = writeln!(s, "{},{},{},{},{}", m.n, m.metric, num(m.value), num(m.stderr), self.seed);
        }
        s
    }

    pub fn to_records(&self) -> String {
        let mut lines = vec![serde_json::json!({
            "kind": "header",
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
        })];
        lines.extend(self.metrics.iter().map(|m| {
            serde_json::json!({"kind": "metric", "n": m.n, "metric": m.metric, "value": m.value, "stderr": m.stderr})
        }));
        lines.extend(self.records.iter().map(|r| serde_json::json!({"kind": "record", "data": r})));
        lines.extend(self.notes.iter().map(|n| serde_json::json!({"kind": "note", "text": n})));
        lines.iter().map(|l| l.to_string() + "\n").collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.command);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "config: {}", self.config);
        if !self.metrics.is_empty() {
            let _ = writeln!(s, "\n{:>4}  {:<28} {:>14} {:>12}", "n", "metric", "value", "stderr");
            for m in &self.metrics {
                let _ = writeln!(s, "{:>4}  {:<28} {:>14.6} {:>12.6}", m.n, m.metric, m.value, m.stderr);
            }
        }
        if !self.records.is_empty() {
            let _ = writeln!(s, "\nrecords:");
            for r in &self.records {
                let _ = writeln!(s, "  {r}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Frequency of successes with its binomial standard error.
pub fn frequency(hits: usize, trials: usize) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = RunReport::new("x", 7, serde_json::json!({"a": 1}));
        r.metrics.push(Metric::new(8, "coverage", 0.5, 0.1));
        r.timings.push((8, 1.25));
        assert_eq!(r.to_csv(), "n,metric,value,stderr,seed\n8,coverage,0.500000000,0.100000000,7\n");
        assert!(!serde_json::to_string(&r).unwrap().contains("1.25"));
        assert!(r.to_records().starts_with("{\"command\":\"x\""));
    }

    #[test]
    fn stats() {
        assert_eq!(mean_stderr(&[1.0, 1.0, 1.0]), (1.0, 0.0));
        let (p, se) = frequency(5, 20);
        assert!((p - 0.25).abs() < 1e-12 && (se - (0.25f64 * 0.75 / 20.0).sqrt()).abs() < 1e-12);
    }
}
