//! CSV grid files: a header row naming the columns, `t` first, one numeric
//! record per line, `t` strictly increasing. Values are written with 17
//! significant digits so a write/read cycle is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{FptError, Result};

/// Columns of a parsed grid file, in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl GridFile {
    pub fn new(header: &[&str], columns: Vec<Vec<f64>>) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), columns }
    }

    pub fn times(&self) -> &[f64] {
        &self.columns[0]
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Format a value with 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_grid(path: &Path, accepted: &[&[&str]]) -> Result<GridFile> {
    let text = fs::read_to_string(path).map_err(|e| FptError::Io(format!("{}: {e}", path.display())))?;
    parse_grid(&text, accepted).map_err(|e| match e {
        FptError::Validation(m) => FptError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parse CSV text whose header must equal one of `accepted`.
pub fn parse_grid(text: &str, accepted: &[&[&str]]) -> Result<GridFile> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| FptError::Validation(format!("line 1: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if !accepted.iter().any(|cols| cols.iter().copied().eq(header.iter().map(String::as_str))) {
        let want: Vec<String> = accepted.iter().map(|c| c.join(",")).collect();
        return Err(FptError::Validation(format!(
            "line 1: header '{}' not one of: {}",
            header.join(","),
            want.join(" | ")
        )));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            FptError::Validation(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(FptError::Validation(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| {
                FptError::Validation(format!("line {line}: non-numeric cell '{cell}' in column '{}'", header[j]))
            })?;
            if !x.is_finite() {
                return Err(FptError::Validation(format!("line {line}: non-finite value in column '{}'", header[j])));
            }
            columns[j].push(x);
        }
        let t = &columns[0];
        if t.len() >= 2 && t[t.len() - 1] <= t[t.len() - 2] {
            return Err(FptError::Validation(format!("line {line}: t not strictly increasing")));
        }
    }
    Ok(GridFile { header, columns })
}

pub fn render_grid(grid: &GridFile) -> String {
    let mut out = grid.header.join(",");
    out.push('\n');
    for i in 0..grid.len() {
        let row: Vec<String> = grid.columns.iter().map(|c| format_value(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_grid(path: &Path, grid: &GridFile) -> Result<()> {
    write_text(path, &render_grid(grid))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| FptError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes()).map_err(|e| FptError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}
