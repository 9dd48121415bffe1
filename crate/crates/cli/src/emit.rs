//! CSV and JSON emission.
//!
//! CSV output starts with `#` lines echoing the command and its settings,
//! followed by a column header and the rows. JSON output carries the same
//! content as one object. Floats use Rust's shortest round-trip decimal form.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::{Common, Failure, Format};

pub struct Report {
    command: &'static str,
    config: Value,
    summary: Map<String, Value>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    plot: Option<Vec<(f64, f64)>>,
}

impl Report {
    pub fn new(command: &'static str, config: &impl Serialize, columns: &[&'static str]) -> Self {
        Report {
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            summary: Map::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn note(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(v).expect("value serializes"));
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    /// `(x, y)` pairs emitted under `--plot-data`; non-finite pairs are dropped.
    pub fn plot(&mut self, pts: Vec<(f64, f64)>) {
        self.plot = Some(pts.into_iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect());
    }

    pub fn write(self, common: &Common) -> Result<(), Failure> {
        let mut out: Box<dyn Write> = match &common.output {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        if common.plot_data {
            let pts = self
                .plot
                .as_ref()
                .ok_or_else(|| Failure::Precondition(format!("{} has no plot data", self.command)))?;
            self.header(&mut out)?;
            writeln!(out, "x,y")?;
            for (x, y) in pts {
                writeln!(out, "{x},{y}")?;
            }
        } else {
            match common.format {
                Format::Csv => self.csv(&mut out)?,
                Format::Json => self.json(&mut out)?,
            }
        }
        out.flush()?;
        Ok(())
    }

    fn header(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "# psseq {}", self.command)?;
        if let Value::Object(m) = &self.config {
            for (k, v) in m {
                if !v.is_null() {
                    writeln!(out, "# {k} = {}", cell(v))?;
                }
            }
        }
        for (k, v) in &self.summary {
            writeln!(out, "# {k} = {}", cell(v))?;
        }
        Ok(())
    }

    fn csv(&self, out: &mut dyn Write) -> io::Result<()> {
        self.header(out)?;
        writeln!(out, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(cell).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    fn json(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut obj = Map::new();
        obj.insert("command".into(), Value::String(self.command.into()));
        obj.insert("config".into(), self.config.clone());
        obj.extend(self.summary.clone());
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect();
        obj.insert("rows".into(), Value::Array(rows));
        serde_json::to_writer_pretty(&mut *out, &Value::Object(obj))?;
        writeln!(out)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A float as a JSON number, or null when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
