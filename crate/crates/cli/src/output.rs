//! Report writers. Floats in CSV files use `{:.16e}`, i.e. 17 significant
//! digits, so reruns with the same seed are byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(fs::File::create(dir.join(name))?);
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    category: &'a str,
    exit_code: u8,
    message: String,
}

/// Best effort; the error has already been printed.
pub fn write_error(dir: &Path, e: &CliError) {
    let report = ErrorReport {
        category: e.category(),
        exit_code: e.exit_code(),
        message: e.message(),
    };
    let _ = write_json(dir, "error.json", &report);
    if let CliError::Core(core) = e {
        if let Some(trace) = core.trace() {
            if let Ok(file) = fs::File::create(dir.join("trace.csv")) {
                let _ = trace.write_csv(BufWriter::new(file));
            }
        }
    }
}
