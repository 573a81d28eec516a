//! Artifact formats: CSV with `#` metadata lines, or JSON `{meta, data}`.
//!
//! Non-finite numbers never reach a file as bare `NaN`: they are written as
//! the sentinel strings `"NaN"`, `"Inf"` and `"-Inf"`; absent values as `"NA"`.

use crate::error::Result;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use std::fmt;
use std::io::Write;

pub const SENTINEL_NAN: &str = "NaN";
pub const SENTINEL_POS_INF: &str = "Inf";
pub const SENTINEL_NEG_INF: &str = "-Inf";
pub const SENTINEL_MISSING: &str = "NA";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    UInt(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::UInt(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

fn sentinel(v: f64) -> &'static str {
    if v.is_nan() {
        SENTINEL_NAN
    } else if v > 0.0 {
        SENTINEL_POS_INF
    } else {
        SENTINEL_NEG_INF
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) if v.is_finite() => write!(f, "{v:?}"),
            Cell::Num(v) => f.write_str(sentinel(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::UInt(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => f.write_str(SENTINEL_MISSING),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(v) => s.serialize_str(sentinel(*v)),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::UInt(v) => s.serialize_u64(*v),
            Cell::Bool(v) => s.serialize_bool(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Missing => s.serialize_str(SENTINEL_MISSING),
        }
    }
}

/// Ordered key/value pairs, serialized as a JSON object.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(pub Vec<(String, Cell)>);

impl Record {
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Cell>) -> &mut Self {
        self.0.push((key.into(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Two-column `key,value` view of a record.
    pub fn from_record(r: &Record) -> Self {
        let mut t = Table::new(&["key", "value"]);
        for (k, v) in &r.0 {
            t.push(vec![Cell::Text(k.clone()), v.clone()]);
        }
        t
    }
}

/// Named tables; a command emits one or more.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sections(pub Vec<(String, Table)>);

impl Serialize for Sections {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub command: String,
    /// The invocation as typed.
    pub argv: Vec<String>,
    /// Every effective parameter, defaults included.
    pub parameters: Record,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_s: f64,
    pub converged: bool,
}

impl Serialize for Meta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Argv<'a>(&'a [String]);
        impl Serialize for Argv<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.len()))?;
                for a in self.0 {
                    seq.serialize_element(a)?;
                }
                seq.end()
            }
        }
        let mut map = s.serialize_map(Some(7))?;
        map.serialize_entry("command", &self.command)?;
        map.serialize_entry("argv", &Argv(&self.argv))?;
        map.serialize_entry("parameters", &self.parameters)?;
        map.serialize_entry("seed", &Cell::from(self.seed))?;
        map.serialize_entry("version", &self.version)?;
        map.serialize_entry("wall_time_s", &Cell::Num(self.wall_time_s))?;
        map.serialize_entry("converged", &self.converged)?;
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Document<'a> {
    meta: &'a Meta,
    data: &'a Sections,
}

/// CSV layout: `# key: value` metadata lines (parameters as
/// `# parameter.<name>: value`), then per section a `# section: <name>` line,
/// the header row and the data rows.
pub fn write_csv(out: &mut dyn Write, meta: &Meta, data: &Sections) -> Result<()> {
    writeln!(out, "# command: {}", meta.command)?;
    writeln!(out, "# argv: {}", meta.argv.join(" "))?;
    for (k, v) in &meta.parameters.0 {
        writeln!(out, "# parameter.{k}: {v}")?;
    }
    writeln!(out, "# seed: {}", Cell::from(meta.seed))?;
    writeln!(out, "# version: {}", meta.version)?;
    writeln!(out, "# wall_time_s: {}", Cell::Num(meta.wall_time_s))?;
    writeln!(out, "# converged: {}", meta.converged)?;
    for (name, table) in &data.0 {
        writeln!(out, "# section: {name}")?;
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn write_json(out: &mut dyn Write, meta: &Meta, data: &Sections) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &Document { meta, data })?;
    writeln!(out)?;
    Ok(())
}

pub fn write(out: &mut dyn Write, format: Format, meta: &Meta, data: &Sections) -> Result<()> {
    match format {
        Format::Csv => write_csv(out, meta, data),
        Format::Json => write_json(out, meta, data),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Meta {
        let mut parameters = Record::default();
        parameters.push("N", 100usize).push("tol", 1e-8).push("seed", u64::MAX);
        Meta {
            command: "demo".into(),
            argv: vec!["ginreal".into(), "demo".into()],
            parameters,
            seed: Some(7),
            version: "0.1.0".into(),
            wall_time_s: 0.5,
            converged: true,
        }
    }

    fn data() -> Sections {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![1.5.into(), f64::NAN.into()]);
        t.push(vec![f64::NEG_INFINITY.into(), Cell::Missing]);
        Sections(vec![("values".into(), t)])
    }

    #[test]
    fn csv_has_header_and_sentinels() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &meta(), &data()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("# command: demo\n"));
        assert!(s.contains("# parameter.N: 100\n"));
        assert!(s.contains("# section: values\nx,y\n1.5,NaN\n-Inf,NA\n"), "{s}");
    }

    #[test]
    fn json_has_meta_and_data() {
        let mut buf = Vec::new();
        write_json(&mut buf, &meta(), &data()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["meta"]["command"], "demo");
        assert_eq!(v["meta"]["parameters"]["N"], 100);
        assert_eq!(v["meta"]["parameters"]["seed"], u64::MAX);
        assert_eq!(v["data"]["values"]["rows"][0][1], "NaN");
        assert_eq!(v["data"]["values"]["rows"][1][0], "-Inf");
    }
}
