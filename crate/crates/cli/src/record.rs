//! Versioned run records and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Version of every JSON and CSV layout written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RngProvenance {
    pub generator: String,
    pub keying: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub artifact_version: String,
    pub workers: usize,
    pub wall_clock_s: f64,
    pub rng: RngProvenance,
    pub config: Value,
    pub outputs: Value,
}

impl ExperimentRecord {
    pub fn new(command: &str, cfg: &ExperimentConfig, wall_clock_s: f64, outputs: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config_hash: cfg.hash(),
            artifact_version: format!("phi4-cli v{}", env!("CARGO_PKG_VERSION")),
            workers: cfg.workers,
            wall_clock_s,
            rng: RngProvenance {
                generator: "ChaCha12".into(),
                keying: "(seed, stream, cell)".into(),
                seed: cfg.seed,
            },
            config: serde_json::to_value(cfg).expect("config serialises"),
            outputs,
        }
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, CliError> {
        fs::create_dir_all(out)?;
        let path = out.join(format!("{}.json", self.command));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Writes a CSV with a leading `# schema_version` comment.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut s = format!("# schema_version = {SCHEMA_VERSION}\n{}\n", header.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}
