//! CSV tables with fixed column sets and 12-significant-digit decimals.

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// A decimal with 12 significant digits; `inf`, `-inf` and `nan` otherwise.
pub fn dec(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn units_dec(units: u64, resolution: u64) -> String {
    dec(units as f64 / resolution as f64)
}

/// Colon-joined lattice coordinates.
pub fn coords(c: &[i64]) -> String {
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: Vec<&'static str>) -> Self {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Serialize)]
pub struct Sidecar<'a, C: Serialize, X: Serialize> {
    pub command: &'a str,
    pub artifact_version: &'a str,
    pub seed: Option<u64>,
    pub config: &'a C,
    pub files: Vec<String>,
    pub extra: X,
}

pub fn write_outputs<C: Serialize, X: Serialize>(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    config: &C,
    tables: &[Table],
    extra: X,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for t in tables {
        let file = format!("{}.csv", t.name);
        let path = dir.join(&file);
        std::fs::write(&path, t.to_bytes()?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        files.push(file);
    }
    let sidecar = Sidecar { command, artifact_version: env!("CARGO_PKG_VERSION"), seed, config, files, extra };
    let path = dir.join(format!("{command}.json"));
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(dec(0.9), "9.00000000000e-1");
        assert_eq!(dec(1.0), "1.00000000000e0");
        assert_eq!(dec(f64::INFINITY), "inf");
        assert_eq!(dec(f64::NAN), "nan");
        assert_eq!(units_dec(3 << 19, 1 << 20), "1.50000000000e0");
        assert_eq!(coords(&[1, -2, 3]), "1:-2:3");
    }

    #[test]
    fn csv_bytes() {
        let mut t = Table::new("x", vec!["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "a,b\n1,2\n");
    }
}
