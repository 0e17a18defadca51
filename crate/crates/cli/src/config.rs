use std::path::{Path, PathBuf};

use prepub_service::ServiceConfig;
use serde::Deserialize;

use crate::CliError;

/// `~/.config/prepub/config.toml` (or the platform equivalent).
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub api_url: Option<String>,
    pub token: Option<String>,
    pub server: ServiceConfig,
}

pub fn default_path() -> Option<PathBuf> {
    dirs::config_dir().map(|d| d.join("prepub").join("config.toml"))
}

/// Loads `explicit` if given (it must exist), else the default path if present.
pub fn load(explicit: Option<&Path>) -> Result<FileConfig, CliError> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => match default_path() {
            Some(p) if p.exists() => p,
            _ => return Ok(FileConfig::default()),
        },
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}
