use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::GlobalArgs;
use crate::error::{read_file, write_file, CliError, CliResult};

pub const FILE_NAME: &str = "manifest.json";

/// Record of one run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub params: BTreeMap<String, String>,
    pub version: String,
    pub timestamp: String,
    pub argv: Vec<String>,
    pub cwd: PathBuf,
}

impl RunManifest {
    pub fn new(command: &str, global: &GlobalArgs, argv: &[String]) -> Self {
        let mut params = BTreeMap::new();
        params.insert("iou".into(), global.iou.to_string());
        params.insert("tau_seed".into(), global.tau_seed.to_string());
        params.insert("min_area_m2".into(), global.min_area_m2.to_string());
        params.insert("dilate_px".into(), global.dilate_px.to_string());
        params.insert("connectivity".into(), global.connectivity.to_string());
        params.insert("jobs".into(), global.jobs.to_string());
        params.insert("out".into(), global.out.display().to_string());
        Self {
            command: command.into(),
            inputs: Vec::new(),
            params,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            argv: argv.to_vec(),
            cwd: std::env::current_dir().unwrap_or_default(),
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        write_file(&out_dir.join(FILE_NAME), text + "\n")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}
