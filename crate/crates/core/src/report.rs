//! Topic reports and their markdown, canonical JSON and CSV renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::topic::Topic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    /// Full run configuration.
    pub config: Value,
    pub seed: u64,
    /// Vocabulary size seen by the engine.
    pub vocab_size: usize,
    pub num_docs: usize,
    /// Engine diagnostics (singular values, final log-likelihood, inertia, ...).
    pub diagnostics: BTreeMap<String, Value>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub engine: String,
    pub k: usize,
    pub top_n: usize,
    pub topics: Vec<Topic>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Markdown,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::invalid(format!("unknown output format {other:?}"))),
        }
    }
}

/// Round to 6 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn fmt_weight(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Pretty JSON with sorted object keys and floats rounded to 6 significant digits.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match value {
        Value::Null | Value::Bool(_) | Value::String(_) => {
            out.push_str(&serde_json::to_string(value).unwrap())
        }
        Value::Number(n) => {
            if n.is_f64() {
                let x = round_sig(n.as_f64().unwrap());
                match serde_json::Number::from_f64(x) {
                    Some(num) => out.push_str(&num.to_string()),
                    None => out.push_str("null"),
                }
            } else {
                out.push_str(&n.to_string())
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            if items.iter().all(|v| !v.is_array() && !v.is_object()) {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, v) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, v, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(out, &map[k.as_str()], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn render(report: &TopicReport, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => {
            canonical_json(&serde_json::to_value(report).expect("report serializes")).into_bytes()
        }
        OutputFormat::Markdown => render_markdown(report).into_bytes(),
        OutputFormat::Csv => render_csv(report),
    }
}

/// Topics as columns, one ranked term per row.
fn render_markdown(report: &TopicReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# Extracted topics ({}, K = {})\n",
        report.engine, report.k
    );
    let header: Vec<String> = report
        .topics
        .iter()
        .map(|t| format!("Topic {}", t.id))
        .collect();
    let _ = writeln!(s, "| {} |", header.join(" | "));
    let _ = writeln!(s, "|{}", " --- |".repeat(report.topics.len()));
    let rows = report
        .topics
        .iter()
        .map(|t| t.terms.len())
        .max()
        .unwrap_or(0);
    for r in 0..rows {
        let cells: Vec<String> = report
            .topics
            .iter()
            .map(|t| match t.terms.get(r) {
                Some((term, w)) => format!("{} ({})", term.replace('_', "\\_"), fmt_weight(*w)),
                None => String::new(),
            })
            .collect();
        let _ = writeln!(s, "| {} |", cells.join(" | "));
    }
    let p = &report.provenance;
    let _ = writeln!(
        s,
        "\nseed {} | vocabulary {} terms | {} documents | config {}",
        p.seed, p.vocab_size, p.num_docs, p.config_hash
    );
    s
}

fn render_csv(report: &TopicReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["topic", "rank", "term", "weight"]).unwrap();
    for t in &report.topics {
        for (rank, (term, weight)) in t.terms.iter().enumerate() {
            w.write_record([
                t.id.to_string(),
                (rank + 1).to_string(),
                term.clone(),
                fmt_weight(*weight),
            ])
            .unwrap();
        }
    }
    w.into_inner().expect("in-memory writer")
}
