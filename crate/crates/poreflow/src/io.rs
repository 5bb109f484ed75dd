//! CSV and JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use poreflow_core::DensityField;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("writing {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("serializing {path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

/// 15 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.14e}")
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.display().to_string(), source })?;
    }
    fs::write(path, text).map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

/// `# variables=<tag> time=<t>` then `x,value` rows; unsigned fields are clipped at 0.
pub fn field_csv(field: &DensityField) -> String {
    let mut out = format!("# variables={} time={}\nx,value\n", field.variables().tag(), num(field.time()));
    for (x, v) in field.grid().centers().iter().zip(field.output_values()) {
        let _ = writeln!(out, "{},{}", num(*x), num(v));
    }
    out
}

pub fn write_field(path: &Path, field: &DensityField) -> Result<(), IoError> {
    write(path, &field_csv(field))
}

/// A CSV table with a `#` comment line, a header and numeric rows.
pub fn table_csv(comment: &str, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {comment}\n{}\n", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_table(path: &Path, comment: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), IoError> {
    write(path, &table_csv(comment, header, rows))
}

/// Pretty JSON; key order follows struct field order.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    text.push('\n');
    write(path, &text)
}

pub fn write_toml(path: &Path, text: &str) -> Result<(), IoError> {
    write(path, text)
}

/// File name for a self-similar snapshot at `tau`.
pub fn profile_name(tau: f64) -> String {
    format!("tau={tau:.4}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use poreflow_core::{RadialGrid, Variables};

    #[test]
    fn csv_layout() {
        let grid = RadialGrid::uniform(16, 16.0).unwrap();
        let f = DensityField::sample(grid, |x| x, Variables::SelfSimilar, 2.0);
        let text = field_csv(&f);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# variables=selfsim time=2.00000000000000e0");
        assert_eq!(lines.next().unwrap(), "x,value");
        assert_eq!(lines.next().unwrap(), "5.00000000000000e-1,5.00000000000000e-1");
        assert_eq!(text.lines().count(), 18);
    }

    #[test]
    fn table_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.csv");
        write_table(&p, "demo", &["t", "v"], &[vec![1.0, -2.5]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "# demo\nt,v\n1.00000000000000e0,-2.50000000000000e0\n");
        #[derive(Serialize)]
        struct R {
            z: u8,
            a: u8,
        }
        let j = dir.path().join("r.json");
        write_json(&j, &R { z: 1, a: 2 }).unwrap();
        assert_eq!(fs::read_to_string(&j).unwrap(), "{\n  \"z\": 1,\n  \"a\": 2\n}\n");
        assert_eq!(profile_name(4.60517), "tau=4.6052.csv");
    }
}
