//! Serialization of result tables and summaries.
//!
//! Floats are always written with 17 significant digits so that files
//! round-trip exactly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string().to_lowercase()
    }
}

/// A cell of a table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format_f64(*x),
            Cell::Missing => "nan".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(n) => Value::from(*n),
            Cell::Float(x) => Value::from(*x),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A file to be written once every computation has succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Header lines shared by every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(entries: Vec<(String, String)>) -> Self {
        Header { entries }
    }

    fn comment(&self) -> String {
        let mut out = format!("# fermi-landauer {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.entries {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out
    }

    fn meta(&self) -> Value {
        let mut config = Map::new();
        for (k, v) in &self.entries {
            config.insert(k.clone(), Value::String(v.clone()));
        }
        let mut meta = Map::new();
        meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        meta.insert("config".into(), Value::Object(config));
        Value::Object(meta)
    }
}

pub fn table_artifact(stem: &str, table: &Table, header: &Header, format: Format) -> Artifact {
    match format {
        Format::Csv => {
            let mut out = header.comment();
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            Artifact {
                name: format!("{stem}.csv"),
                contents: out,
            }
        }
        Format::Json => {
            let rows = table
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.clone(), cell.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("meta".into(), header.meta());
            doc.insert("rows".into(), Value::Array(rows));
            Artifact {
                name: format!("{stem}.json"),
                contents: to_json(&Value::Object(doc)),
            }
        }
    }
}

/// Summaries are always JSON; the header lives under `meta`.
pub fn summary_artifact(stem: &str, fields: Vec<(&str, Cell)>, header: &Header) -> Artifact {
    let mut doc = Map::new();
    doc.insert("meta".into(), header.meta());
    for (k, cell) in fields {
        doc.insert(k.to_string(), cell.json());
    }
    Artifact {
        name: format!("{stem}.json"),
        contents: to_json(&Value::Object(doc)),
    }
}

/// Pretty JSON with 17 significant digits for every float.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn to_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    serde::Serialize::serialize(value, &mut ser).expect("serializing a Value into memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Write all artifacts into `dir`; on any failure, remove what was written.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let io_err = |path: &Path, source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let path = dir.join(&artifact.name);
        if let Err(e) = fs::write(&path, &artifact.contents) {
            for done in &written {
                let _ = fs::remove_file(done);
            }
            let _ = fs::remove_file(&path);
            return Err(io_err(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}
