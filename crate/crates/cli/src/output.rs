//! Reading inputs and writing artifacts with their metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::CliError;

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes artifacts of one subcommand into the output directory. Each file
/// gets a `<name>.meta.json` sidecar echoing the tool version, inputs and
/// effective configuration; nothing time-dependent is recorded.
pub struct Artifacts<'a> {
    dir: PathBuf,
    command: &'a str,
    inputs: Vec<String>,
    config: &'a PipelineConfig,
}

impl<'a> Artifacts<'a> {
    pub fn new(command: &'a str, config: &'a PipelineConfig, inputs: &[&Path]) -> Result<Artifacts<'a>, CliError> {
        let dir = config.out_dir.clone();
        fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir,
            command,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
        })
    }

    pub fn write(&self, name: &str, bytes: &[u8], records: usize) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        let meta = json!({
            "tool": "cookiesync",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "format_version": cookiesync::FORMAT_VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "output": name,
            "records": records,
            "config": self.config,
        });
        let mut text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        let meta_path = self.dir.join(format!("{name}.meta.json"));
        fs::write(&meta_path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", meta_path.display())))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T, records: usize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes(), records)
    }

    pub fn write_records<T: Serialize>(&self, name: &str, records: &[T]) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        cookiesync::log_model::jsonl::write_records(records, &mut buf)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        self.write(name, &buf, records.len())
    }

    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Internal(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        self.write(name, &bytes, rows.len())
    }
}
