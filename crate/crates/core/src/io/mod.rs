//! On-disk formats. Layouts are described in FORMATS.md at the repo root.

pub mod cloud;
mod demo;
mod policy;
mod report;

use std::path::{Path, PathBuf};

pub use demo::{load_demo, load_truth, save_demo, save_truth, DEMO_VERSION};
pub use policy::{load_policy, save_policy, POLICY_VERSION};
pub use report::{
    eval_table, plot_csv, primitives_json, read_result, timeline_csv, trace_csv, write_result, EvalTable, PlotOptions,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("{}{}: {message}", file.display(), offset.map(|o| format!(" (byte {o})")).unwrap_or_default())]
pub struct FormatError {
    pub file: PathBuf,
    pub offset: Option<u64>,
    pub message: String,
}

impl FormatError {
    pub fn new(file: &Path, message: impl Into<String>) -> Self {
        FormatError { file: file.to_path_buf(), offset: None, message: message.into() }
    }

    pub fn at(file: &Path, offset: u64, message: impl Into<String>) -> Self {
        FormatError { file: file.to_path_buf(), offset: Some(offset), message: message.into() }
    }

    pub(crate) fn io(file: &Path, e: std::io::Error) -> Self {
        Self::new(file, e.to_string())
    }

    /// serde_json errors carry line/column; convert to a byte offset.
    pub(crate) fn json(file: &Path, text: &str, e: serde_json::Error) -> Self {
        if e.line() == 0 {
            return Self::new(file, e.to_string());
        }
        let line_start: usize = text.split_inclusive('\n').take(e.line() - 1).map(str::len).sum();
        Self::at(file, (line_start + e.column().saturating_sub(1)) as u64, e.to_string())
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

/// Reads any serde JSON document, failing on a `version` other than `supported`.
pub fn read_versioned<T: serde::de::DeserializeOwned>(path: &Path, supported: u32) -> Result<T, FormatError> {
    let text = read_text(path)?;
    check_version(path, &text, supported)?;
    serde_json::from_str(&text).map_err(|e| FormatError::json(path, &text, e))
}

pub(crate) fn check_version(path: &Path, text: &str, supported: u32) -> Result<(), FormatError> {
    #[derive(serde::Deserialize)]
    struct V {
        version: Option<serde_json::Value>,
    }
    let v: V = serde_json::from_str(text).map_err(|e| FormatError::json(path, text, e))?;
    match v.version {
        Some(serde_json::Value::Number(n)) if n.as_u64() == Some(supported as u64) => Ok(()),
        Some(found) => Err(FormatError::new(path, format!("unsupported format version {found} (supported: {supported})"))),
        None => Err(FormatError::new(path, format!("missing format version (supported: {supported})"))),
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| FormatError::new(path, e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// Object names become file names; keep them portable.
pub(crate) fn check_name(file: &Path, name: &str) -> Result<(), FormatError> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(FormatError::new(file, format!("object name '{name}' is not usable as a file name")))
    }
}
