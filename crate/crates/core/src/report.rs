//! Report records and their JSON-lines / CSV serialisation.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Jsonl,
    Csv,
}

/// Flags for constants that are not determined by the mathematics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Provenance {
    /// The margin `c` in `c/√T` when a resonance floor is reported.
    pub heuristic_margin: Option<f64>,
    /// The additive constant in the second-moment log factor is taken as 0.
    pub constant_c_zero: bool,
    /// Constant of the character-sum envelopes.
    pub charsum_constant: f64,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            heuristic_margin: None,
            constant_c_zero: true,
            charsum_constant: crate::dirichlet::CHARSUM_CONSTANT,
        }
    }
}

/// One output row: a record type plus its fields.
#[derive(Debug, Clone)]
pub struct Row {
    pub record: &'static str,
    pub fields: Map<String, Value>,
}

impl Row {
    pub fn new<T: Serialize>(record: &'static str, data: &T) -> Result<Self> {
        match serde_json::to_value(data).map_err(|e| Error::Io(e.to_string()))? {
            Value::Object(fields) => Ok(Row { record, fields }),
            other => {
                let mut fields = Map::new();
                fields.insert("value".into(), other);
                Ok(Row { record, fields })
            }
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.fields.insert(key.to_string(), v);
        self
    }
}

/// A command's full output.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: Value,
    pub provenance: Provenance,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(config: Value) -> Self {
        Report {
            config,
            provenance: Provenance::default(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    fn full_rows(&self) -> Vec<Map<String, Value>> {
        let prov = serde_json::to_value(self.provenance).unwrap_or(Value::Null);
        self.rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("schema_version".into(), SCHEMA_VERSION.into());
                m.insert("record".into(), r.record.into());
                m.insert("config".into(), self.config.clone());
                m.insert("provenance".into(), prov.clone());
                for (k, v) in &r.fields {
                    m.insert(k.clone(), v.clone());
                }
                m
            })
            .collect()
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<()> {
        match format {
            Format::Jsonl => self.write_jsonl(out),
            Format::Csv => self.write_csv(out),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.full_rows() {
            serde_json::to_writer(&mut out, &row).map_err(|e| Error::Io(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Columns are `schema_version, record`, the sorted union of row fields,
    /// then `config, provenance`; nested values are written as compact JSON.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut keys: BTreeSet<&str> = BTreeSet::new();
        for r in &self.rows {
            keys.extend(r.fields.keys().map(String::as_str));
        }
        let mut columns = vec!["schema_version", "record"];
        columns.extend(keys.iter().copied().filter(|k| !matches!(*k, "schema_version" | "record" | "config" | "provenance")));
        columns.extend(["config", "provenance"]);
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&columns).map_err(io)?;
        for row in self.full_rows() {
            let cells: Vec<String> = columns.iter().map(|c| cell(row.get(*c))).collect();
            w.write_record(&cells).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}
