use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::commands::CliError;

/// Provenance record written next to a command's outputs.
///
/// Kept apart from the CSV files because the duration changes between runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

pub struct ManifestBuilder {
    command: &'static str,
    started: Instant,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start(command: &'static str) -> Self {
        ManifestBuilder {
            command,
            started: Instant::now(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<main>.manifest.json` once every output exists.
    pub fn finish(
        self,
        main: &Path,
        config: serde_json::Value,
        seed: Option<u64>,
        diagnostics: Option<serde_json::Value>,
    ) -> Result<PathBuf, CliError> {
        for p in &self.outputs {
            if !p.exists() {
                return Err(CliError::Io(p.clone(), std::io::Error::other("output missing after write")));
            }
        }
        let manifest = RunManifest {
            command: self.command.to_string(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
            diagnostics,
        };
        let path = main.with_extension("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(path.clone(), e))?;
        Ok(path)
    }
}
