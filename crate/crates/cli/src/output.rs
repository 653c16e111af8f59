//! Result records and their CSV and JSON-lines encodings.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

/// One result value. `key` is the radius, scale, index or quantity name the
/// value belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub estimator: String,
    pub key: Value,
    pub point: f64,
    pub stderr: Option<f64>,
    pub replicas: Option<u64>,
    pub diagnostics: Value,
}

impl Record {
    pub fn new(estimator: &str, key: impl Into<Value>, point: f64) -> Record {
        Record {
            estimator: estimator.to_string(),
            key: key.into(),
            point,
            stderr: None,
            replicas: None,
            diagnostics: Value::Null,
        }
    }

    pub fn stderr(mut self, stderr: f64) -> Record {
        self.stderr = Some(stderr);
        self
    }

    pub fn replicas(mut self, replicas: u64) -> Record {
        self.replicas = Some(replicas);
        self
    }

    pub fn diagnostics(mut self, diagnostics: Value) -> Record {
        self.diagnostics = diagnostics;
        self
    }
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    estimator: &'a str,
    config_digest: &'a str,
    seed: u64,
    key: &'a Value,
    point: Value,
    stderr: Option<Value>,
    replicas: Option<u64>,
    diagnostics: &'a Value,
}

/// JSON has no infinities; they are written as the strings "inf", "-inf"
/// and "nan".
fn json_number(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn render(records: &[Record], format: Format, digest: &str, seed: u64) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("estimator,key,estimate,stderr,config_digest\n");
            for r in records {
                let stderr = r.stderr.map(|s| s.to_string()).unwrap_or_default();
                writeln!(out, "{},{},{},{},{}", r.estimator, csv_field(&r.key), r.point, stderr, digest)
                    .expect("writing to a String");
            }
        }
        Format::Json => {
            for r in records {
                let rec = JsonRecord {
                    estimator: &r.estimator,
                    config_digest: digest,
                    seed,
                    key: &r.key,
                    point: json_number(r.point),
                    stderr: r.stderr.map(json_number),
                    replicas: r.replicas,
                    diagnostics: &r.diagnostics,
                };
                out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
                out.push('\n');
            }
        }
    }
    out
}
