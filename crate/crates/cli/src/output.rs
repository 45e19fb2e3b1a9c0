use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// One invocation's output. `rows` is the tabular view used for CSV; every
/// cell in it is copied from `results`.
pub struct Record {
    pub command: &'static str,
    pub inputs: Map<String, Value>,
    pub results: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
    pub rows: Vec<Map<String, Value>>,
    pub text: String,
}

impl Record {
    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "diagnostics": self.diagnostics,
        })
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)
            }
            Format::Csv => write_csv(&self.rows, out),
            Format::Text => out.write_all(self.text.as_bytes()),
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_csv(rows: &[Map<String, Value>], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "# visitprob schema {SCHEMA_VERSION}")?;
    let mut columns: Vec<&str> = Vec::new();
    for row in rows {
        for key in row.keys() {
            if !columns.contains(&key.as_str()) {
                columns.push(key);
            }
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(&columns)?;
    for row in rows {
        w.write_record(columns.iter().map(|c| row.get(*c).map(cell).unwrap_or_default()))?;
    }
    w.flush()
}

/// Builds a JSON object from key/value pairs, keeping their order.
#[macro_export]
macro_rules! object {
    ($($key:expr => $value:expr),* $(,)?) => {{
        let mut m = serde_json::Map::new();
        $(m.insert($key.to_string(), serde_json::Value::from($value));)*
        m
    }};
}
