//! Tables and their CSV / JSON-lines encodings.

use std::io::Write;
use std::path::Path;

use crate::config::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.to_string())
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        ryu::Buffer::new().format_finite(v).to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn delimited(&self, header_prefix: &str, sep: &str) -> String {
        let mut out = format!("{header_prefix}{}\n", self.columns.join(sep));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(f) => format_float(*f),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(sep));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        self.delimited("", ",")
    }

    /// Data file readable by gnuplot's `plot ... using`.
    pub fn to_gnuplot(&self) -> String {
        self.delimited("# ", " ")
    }

    /// One JSON object per row, keys in column order.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push('{');
            for (i, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(col).expect("string"));
                out.push(':');
                match cell {
                    Cell::Int(v) => out.push_str(&v.to_string()),
                    Cell::Float(v) if v.is_finite() => out.push_str(&format_float(*v)),
                    Cell::Float(v) => out.push_str(&serde_json::to_string(&format_float(*v)).expect("string")),
                    Cell::Text(s) => out.push_str(&serde_json::to_string(s).expect("string")),
                }
            }
            out.push_str("}\n");
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Records => self.to_records(),
            OutputFormat::Gnuplot => self.to_gnuplot(),
        }
    }
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
