//! Tables, run manifests and their CSV / JSON encodings.
//!
//! Floats are written as `{:.16e}` (17 significant digits) in CSV and as
//! shortest round-trip numbers in JSON; lines end in `\n`. Nothing that
//! depends on the machine or the clock goes into the data file, so equal
//! manifests give equal bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => csv_escape(s),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// A named table with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Table {
            name,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_csv(&self, out: &mut String) {
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }

    fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| ((*h).to_owned(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Everything needed to reproduce a data file.
///
/// Worker count and wall-clock time are deliberately absent: they go to the
/// sidecar written by [`write_sidecar`], so `--threads` never changes the
/// data bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub master_seed: u64,
    pub config: Value,
    pub failures: u64,
}

impl Manifest {
    pub fn new(subcommand: impl Into<String>, master_seed: u64, config: Value) -> Self {
        Manifest {
            tool: "ginprod",
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.into(),
            master_seed,
            config,
            failures: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Tables separated by one blank line (CSV), or one JSON object holding the
/// manifest and one array per table.
pub fn render(format: Format, manifest: &Manifest, tables: &[Table]) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                t.write_csv(&mut out);
            }
            out
        }
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serialises"));
            for t in tables {
                obj.insert(t.name.into(), t.to_json());
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
            s.push('\n');
            s
        }
    }
}

pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    name.into()
}

/// `<out>.manifest.json`: the manifest plus run facts that vary between
/// otherwise identical runs.
pub fn write_sidecar(out: &Path, manifest: &Manifest, workers: usize, seconds: f64) -> std::io::Result<()> {
    let mut v = serde_json::to_value(manifest).expect("manifest serialises");
    if let Value::Object(m) = &mut v {
        m.insert("workers".into(), json!(workers));
        m.insert("wall_clock_seconds".into(), json!(seconds));
    }
    let mut f = std::fs::File::create(sidecar_path(out))?;
    serde_json::to_writer_pretty(&mut f, &v)?;
    f.write_all(b"\n")
}
