//! Tabular study output with a metadata header, written as CSV or JSON and
//! parsed back by [`StudyRecord::parse`].

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::config::Format;
use crate::error::{CliError, Result};

pub const VERSION: &str = concat!("noisy-bs ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub summary: Option<Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl StudyRecord {
    pub fn new(command: &str, seed: u64, config: Value, columns: &[&str]) -> Self {
        Self {
            version: VERSION.to_string(),
            command: command.to_string(),
            seed,
            config,
            summary: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column, in row order.
    pub fn values(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    pub fn to_bytes(&self, format: Format) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(buf)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.version)?;
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "# config: {}", serde_json::to_string(&self.config)?)?;
        if let Some(s) = &self.summary {
            writeln!(out, "# summary: {}", serde_json::to_string(s)?)?;
        }
        let text_columns = self.text_columns();
        if !text_columns.is_empty() {
            writeln!(out, "# text columns: {}", serde_json::to_string(&text_columns)?)?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Columns holding strings; their cells are never read back as numbers.
    fn text_columns(&self) -> Vec<&str> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(i, _)| self.rows.iter().any(|r| r[*i].is_string()))
            .map(|(_, c)| c.as_str())
            .collect()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// Parses either output format.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Ok(serde_json::from_str(text)?)
        } else {
            Self::parse_csv(text)
        }
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut version = None;
        let mut command = None;
        let mut seed = None;
        let mut config = None;
        let mut summary = None;
        let mut text_columns: Vec<String> = Vec::new();
        let mut body_start = text.len();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let Some(meta) = line.strip_prefix("# ") else {
                body_start = offset;
                break;
            };
            let meta = meta.trim_end_matches('\n');
            if let Some(v) = meta.strip_prefix("command: ") {
                command = Some(v.to_string());
            } else if let Some(v) = meta.strip_prefix("seed: ") {
                seed = Some(v.parse().map_err(|_| malformed("seed"))?);
            } else if let Some(v) = meta.strip_prefix("config: ") {
                config = Some(serde_json::from_str(v)?);
            } else if let Some(v) = meta.strip_prefix("summary: ") {
                summary = Some(serde_json::from_str(v)?);
            } else if let Some(v) = meta.strip_prefix("text columns: ") {
                text_columns = serde_json::from_str(v)?;
            } else if version.is_none() {
                version = Some(meta.to_string());
            }
            offset += line.len();
        }
        let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start..]);
        let columns: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        let is_text: Vec<bool> = columns.iter().map(|c| text_columns.contains(c)).collect();
        let rows = reader
            .records()
            .map(|r| {
                Ok(r?
                    .iter()
                    .zip(&is_text)
                    .map(|(c, &text)| if text { Value::String(c.to_string()) } else { parse_cell(c) })
                    .collect())
            })
            .collect::<Result<Vec<Vec<Value>>>>()?;
        Ok(Self {
            version: version.ok_or_else(|| malformed("version"))?,
            command: command.ok_or_else(|| malformed("command"))?,
            seed: seed.ok_or_else(|| malformed("seed"))?,
            config: config.ok_or_else(|| malformed("config"))?,
            summary,
            columns,
            rows,
        })
    }
}

fn malformed(what: &str) -> CliError {
    CliError::Parse(format!("missing or malformed `{what}` header"))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_cell(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    if let Ok(b) = s.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(u) = s.parse::<u64>() {
        return Value::from(u);
    }
    if let Ok(i) = s.parse::<i64>() {
        return Value::from(i);
    }
    if s.contains(['.', 'e', 'E']) {
        if let Some(n) = s.parse::<f64>().ok().and_then(Number::from_f64) {
            return Value::Number(n);
        }
    }
    Value::String(s.to_string())
}

/// JSON number for a float; non-finite values become `null`.
pub fn num(v: f64) -> Value {
    Number::from_f64(v).map_or(Value::Null, Value::Number)
}
