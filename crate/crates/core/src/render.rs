//! Plain tables and their CSV / Markdown text forms.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Md,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Md),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidInput(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Md => "md",
            Format::Json => "json",
        })
    }
}

/// Fixed-point text with `decimals` places, rounding half away from zero.
///
/// Values whose scaled fractional part lies within 1e-9 of one half are
/// treated as exact halves, so binary representation error in inputs such
/// as 1.005 does not pull them down.
pub fn fixed(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = value.abs() * scale;
    let frac = scaled - scaled.trunc();
    let magnitude = if (frac - 0.5).abs() < 1e-9 {
        scaled.trunc() + 1.0
    } else {
        scaled.round()
    };
    let rounded = magnitude / scale;
    if magnitude == 0.0 {
        return format!("{:.*}", decimals, 0.0);
    }
    format!("{:.*}", decimals, rounded.copysign(value))
}

/// SPSS-style significance: three decimals without the leading zero.
pub fn sig(p: f64) -> String {
    let s = fixed(p, 3);
    s.strip_prefix('0').map(str::to_string).unwrap_or(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: &str, header: &[&str]) -> Self {
        Table {
            title: title.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Short rows are padded with empty cells to the header width.
    pub fn push(&mut self, mut row: Vec<String>) {
        if row.len() < self.header.len() {
            row.resize(self.header.len(), String::new());
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn to_markdown(&self) -> String {
        let escape = |s: &str| s.replace('|', "\\|");
        let mut out = format!("### {}\n\n", self.title);
        out.push_str(&format!(
            "| {} |\n",
            self.header
                .iter()
                .map(|h| escape(h))
                .collect::<Vec<_>>()
                .join(" | ")
        ));
        out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for row in &self.rows {
            out.push_str(&format!(
                "| {} |\n",
                row.iter()
                    .map(|c| escape(c))
                    .collect::<Vec<_>>()
                    .join(" | ")
            ));
        }
        out
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv output: {e}"))
}

/// Several tables in one text document. CSV tables are preceded by a
/// `# title` line and separated by blank lines.
pub fn render_tables(tables: &[Table], format: Format) -> Result<String> {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match format {
            Format::Csv => {
                if tables.len() > 1 {
                    out.push_str(&format!("# {}\n", t.title));
                }
                out.push_str(&t.to_csv()?);
            }
            Format::Md => out.push_str(&t.to_markdown()),
            Format::Json => {
                return Err(Error::InvalidInput(
                    "tables render as csv or md; json goes through serde".into(),
                ))
            }
        }
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
