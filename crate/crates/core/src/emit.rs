//! Deterministic CSV and JSON output.
//!
//! Numbers are written with 17 significant digits in scientific notation in
//! both formats, so the two files carry bit-identical values. Every file
//! starts with the tool version, the unit convention and a SHA-256 digest of
//! the inputs that produced it.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const UNITS: &str = "frequencies, rates and detunings in units of the mean mechanical frequency omega_bar";

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub command: String,
    /// Canonical text of every input; hashed into the header.
    pub provenance: String,
    /// Extra `key: value` header lines, kept in insertion order.
    pub notes: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format {s:?}, expected csv or json"))),
        }
    }
}

pub fn config_hash(provenance: &str) -> String {
    Sha256::digest(provenance.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn format_number(v: f64) -> Option<String> {
    v.is_finite().then(|| format!("{v:.16e}"))
}

fn header(ds: &Dataset) -> Vec<(String, String)> {
    let mut h = vec![
        ("tool".to_string(), format!("mediated {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), ds.command.clone()),
        ("config-sha256".to_string(), config_hash(&ds.provenance)),
        ("units".to_string(), UNITS.to_string()),
    ];
    h.extend(ds.notes.iter().cloned());
    h
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_number(*v).unwrap_or_else(|| "nan".into()),
        Cell::Int(i) => i.to_string(),
        Cell::Text(t) if t.contains([',', '"', '\n']) => format!("\"{}\"", t.replace('"', "\"\"")),
        Cell::Text(t) => t.clone(),
        Cell::Missing => String::new(),
    }
}

pub fn to_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    for (k, v) in header(ds) {
        let _ = writeln!(out, "# {k}: {}", v.replace('\n', " "));
    }
    for t in &ds.tables {
        let _ = writeln!(out, "# table: {}", t.name);
        let _ = writeln!(out, "{}", t.columns.join(","));
        for row in &t.rows {
            let line: Vec<String> = row.iter().map(csv_field).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
    }
    out
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_number(*v).unwrap_or_else(|| "null".into()),
        Cell::Int(i) => i.to_string(),
        Cell::Text(t) => json_str(t),
        Cell::Missing => "null".into(),
    }
}

pub fn to_json(ds: &Dataset) -> String {
    let mut out = String::from("{\n  \"meta\": {");
    let meta: Vec<String> = header(ds)
        .iter()
        .map(|(k, v)| format!("\n    {}: {}", json_str(k), json_str(v)))
        .collect();
    out.push_str(&meta.join(","));
    out.push_str("\n  },\n  \"tables\": [");
    let tables: Vec<String> = ds
        .tables
        .iter()
        .map(|t| {
            let cols: Vec<String> = t.columns.iter().map(|c| json_str(c)).collect();
            let rows: Vec<String> = t
                .rows
                .iter()
                .map(|r| format!("\n        [{}]", r.iter().map(json_cell).collect::<Vec<_>>().join(", ")))
                .collect();
            format!(
                "\n    {{\n      \"name\": {},\n      \"columns\": [{}],\n      \"rows\": [{}\n      ]\n    }}",
                json_str(&t.name),
                cols.join(", "),
                rows.join(",")
            )
        })
        .collect();
    out.push_str(&tables.join(","));
    out.push_str("\n  ]\n}\n");
    out
}

pub fn render(ds: &Dataset, format: Format) -> String {
    match format {
        Format::Csv => to_csv(ds),
        Format::Json => to_json(ds),
    }
}

pub fn emit(ds: &Dataset, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render(ds, format)).map_err(|source| Error::Io {
        context: path.to_path_buf(),
        source,
    })
}
