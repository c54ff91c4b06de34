//! Tidy CSV (RFC 4180) and JSON writers. Rows are written in the order given,
//! which callers keep sorted so files are byte-stable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `rows` to `dir/stem.<ext>` for every format; returns the paths.
pub fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T], formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for &f in formats {
        let path = dir.join(format!("{stem}.{}", f.extension()));
        match f {
            Format::Csv => write_csv(&path, rows)?,
            Format::Json => write_json(&path, rows)?,
        }
        written.push(path);
    }
    Ok(written)
}

/// Rows go through `serde_json::Value` so flattened structs keep field order;
/// `null` becomes an empty cell.
fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (i, r) in rows.iter().enumerate() {
        let map = match serde_json::to_value(r).map_err(|e| CliError::Config(e.to_string()))? {
            Value::Object(m) => m,
            _ => return Err(CliError::Config("table rows must be structs".into())),
        };
        if i == 0 {
            w.write_record(map.keys()).map_err(csv_err)?;
        }
        w.write_record(map.values().map(cell)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
