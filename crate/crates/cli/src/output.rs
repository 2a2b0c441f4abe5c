use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::Format;
use crate::CliError;

/// Named pass/fail outcome reported by a subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Writes artifacts under one directory and remembers their names.
pub struct Output {
    dir: PathBuf,
    format: Format,
    artifacts: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn create(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            artifacts: Vec::new(),
        })
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.text(name, &text)
    }

    /// A table as `<stem>.csv` or `<stem>.json` depending on the format.
    pub fn table<T: Serialize + ?Sized>(&mut self, stem: &str, csv: &str, rows: &T) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.text(&format!("{stem}.csv"), csv),
            Format::Json => self.json(&format!("{stem}.json"), rows),
        }
    }

    pub fn manifest(&self, manifest: &impl Serialize) -> Result<(), CliError> {
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}
