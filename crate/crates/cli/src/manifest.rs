//! Run manifests: the full parameter set of a subcommand invocation,
//! written next to its outputs so the run can be repeated.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use scenestat_core::complexity::CtmParams;
use scenestat_core::grid::ExtractionMode;
use serde::{Deserialize, Serialize};

use crate::{CliError, Command};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    /// Complete arguments, with paths made absolute.
    pub command: Command,
    pub corpus: Option<PathBuf>,
    pub k: Option<usize>,
    pub mode: Option<ExtractionMode>,
    pub alpha: Option<f64>,
    pub ctm: Option<CtmParams>,
    pub stimulus_seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: Command) -> RunManifest {
        RunManifest {
            tool: format!("scenestat {}", env!("CARGO_PKG_VERSION")),
            command,
            corpus: None,
            k: None,
            mode: None,
            alpha: None,
            ctm: None,
            stimulus_seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        crate::commands::write_file(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: not a run manifest: {e}", path.display())))
    }
}

/// `<out>.manifest.json`, or the explicit `--manifest` path.
pub fn default_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    })
}
