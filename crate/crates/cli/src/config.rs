//! TOML experiment configuration. Every key is optional; missing keys take
//! the defaults of [`ExperimentConfig`], unknown keys are rejected.

use std::path::{Path, PathBuf};

use evoadam_core::config::ExperimentConfig;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config key `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("config key `{key}`: {detail}")]
    Range { key: String, detail: String },
}

impl ConfigError {
    /// Dotted path of the offending key, when known.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { key, .. } | ConfigError::Range { key, .. } => Some(key),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
        key: String::new(),
        message: e.message().to_string(),
    })?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().message().to_string();
        ConfigError::Parse {
            key: key_path(&path, &message),
            message,
        }
    })?;
    config.validate().map_err(|e| match e {
        evoadam_core::Error::Config { key, detail } => ConfigError::Range { key, detail },
        other => ConfigError::Range {
            key: String::new(),
            detail: other.to_string(),
        },
    })?;
    Ok(config)
}

/// Errors at the document root carry no path, so the field name is taken
/// from the message.
fn key_path(path: &str, message: &str) -> String {
    if path != "." {
        return path.to_string();
    }
    message
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
        .unwrap_or(path)
        .to_string()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Fully defaulted TOML form, as written into run directories.
pub fn to_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("experiment config serializes to TOML")
}
