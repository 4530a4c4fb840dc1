//! Writing tables and models with the run configuration attached.

use std::fs;
use std::path::{Path, PathBuf};

use kda_core::ScoreGrid;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata stored next to the configuration.
    pub meta: Value,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), meta: Value::Null }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new(), meta: Value::Null }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }
}

pub fn grid_table(grid: &ScoreGrid) -> Table {
    let mut t = Table::new(&["x", "y", "score"]);
    for (x, y, s) in grid.triples() {
        t.push(vec![x.into(), y.into(), s.into()]);
    }
    t
}

/// Destination directory plus the configuration embedded in every file.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    config: Value,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, config: Value) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), format, config, written: Vec::new() })
    }

    pub fn header(&self, meta: &Value) -> Value {
        if meta.is_null() {
            json!({ "config": self.config })
        } else {
            json!({ "config": self.config, "meta": meta })
        }
    }

    /// Writes `<stem>.csv` or `<stem>.json` depending on the format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let path = match self.format {
            Format::Csv => {
                let path = self.dir.join(format!("{stem}.csv"));
                let mut text = format!("# {}\n", serde_json::to_string(&self.header(&table.meta))?);
                let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
                w.write_record(&table.columns)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                text.push_str(&String::from_utf8_lossy(&w.into_inner().map_err(|e| e.into_error())?));
                fs::write(&path, text)?;
                path
            }
            Format::Json => {
                let path = self.dir.join(format!("{stem}.json"));
                let mut doc = self.header(&table.meta);
                doc["columns"] = json!(table.columns);
                doc["rows"] = serde_json::to_value(&table.rows)?;
                fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
                path
            }
        };
        self.written.push(path);
        Ok(())
    }

    /// Writes `<stem>.json` regardless of the table format, merging the
    /// members of `fields` next to the configuration.
    pub fn json(&mut self, stem: &str, fields: Value) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.json"));
        let mut doc = self.header(&Value::Null);
        if let Value::Object(map) = fields {
            for (k, v) in map {
                doc[k] = v;
            }
        }
        fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
