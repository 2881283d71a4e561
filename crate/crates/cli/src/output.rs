//! CSV and JSON artifact writers. CSV is RFC-4180 with '.' decimals and
//! every float printed with 17 significant digits so files round-trip
//! bit-exactly through a parser.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::AppError;

/// 17 significant digits: enough to reconstruct the exact f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(
    out_dir: &Path,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<PathBuf, AppError> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = out_dir.join(name);
    fs::write(&path, text)
        .map_err(|e| AppError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(out_dir: &Path, name: &str, value: &T) -> Result<PathBuf, AppError> {
    let path = out_dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Run(format!("cannot serialize {name}: {e}")))?;
    fs::write(&path, text)
        .map_err(|e| AppError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn timestamp_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}
