use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Json,
}

/// One command result. Field order is the serialized key order.
#[derive(Debug, Serialize)]
pub struct Report {
    pub kind: &'static str,
    pub verdict: Value,
    pub regions: Value,
    pub witness: Value,
    pub timings: Value,
    pub details: Value,
    #[serde(skip)]
    pub pass: bool,
}

impl Report {
    pub fn new(kind: &'static str, verdict: impl Into<Value>, pass: bool) -> Self {
        Report {
            kind,
            verdict: verdict.into(),
            regions: Value::Null,
            witness: Value::Null,
            timings: Value::Null,
            details: Value::Null,
            pass,
        }
    }

    pub fn regions(mut self, v: Value) -> Self {
        self.regions = v;
        self
    }

    pub fn witness(mut self, v: Value) -> Self {
        self.witness = v;
        self
    }

    pub fn details(mut self, v: Value) -> Self {
        self.details = v;
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string(self).expect("report serializes"),
            Format::Human => {
                let mut out = format!("{}: {}\n", self.kind, compact(&self.verdict));
                for (name, v) in [
                    ("regions", &self.regions),
                    ("witness", &self.witness),
                    ("timings", &self.timings),
                ] {
                    if !v.is_null() {
                        let _ = writeln!(out, "{name}: {}", compact(v));
                    }
                }
                human_details(&self.details, &mut out);
                out.pop();
                out
            }
        }
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        v => v.to_string(),
    }
}

fn human_details(v: &Value, out: &mut String) {
    match v {
        Value::Null => {}
        Value::String(s) => {
            let _ = writeln!(out, "{s}");
        }
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::Array(items) if items.iter().all(Value::is_string) => {
                        let _ = writeln!(out, "{k}:");
                        for i in items {
                            let _ = writeln!(out, "  {}", compact(i));
                        }
                    }
                    x => {
                        let _ = writeln!(out, "{k}: {}", compact(x));
                    }
                }
            }
        }
        v => {
            let _ = writeln!(out, "{}", compact(v));
        }
    }
}
