//! CSV and JSON rendering of result bundles.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::error::CliError;
use crate::run::ResultBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One header line with the column names, then one line per row.
fn csv(bundle: &ResultBundle) -> String {
    let mut out = bundle.table.columns.join(",");
    out.push('\n');
    for row in &bundle.table.rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn render(bundle: &ResultBundle, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => Ok(csv(bundle)),
        Format::Json => Ok(serde_json::to_string_pretty(bundle)? + "\n"),
    }
}

/// Writes `<kind>.<ext>` into `dir`, plus the summary and config echo next to a CSV.
pub fn write(bundle: &ResultBundle, format: Format, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let stem = bundle.kind.name();
    let mut files = vec![(dir.join(format!("{stem}.{}", format.extension())), render(bundle, format)?)];
    if format == Format::Csv {
        files.push((dir.join(format!("{stem}.summary.json")), serde_json::to_string_pretty(&bundle.summary)? + "\n"));
        files.push((dir.join(format!("{stem}.config")), bundle.config_text.clone()));
    }
    for (path, text) in &files {
        std::fs::write(path, text).map_err(CliError::io(path))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
