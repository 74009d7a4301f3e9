//! Self-describing JSON checkpoints.
//!
//! Each parameter is stored as the 16 hex digits of its IEEE-754 binary64 bit
//! pattern, most significant digit first (`1.0` is `"3ff0000000000000"`), so a
//! save/load roundtrip is bit-exact.

use std::path::{Path, PathBuf};

use evoadam_core::fusion::RegressorSpec;
use evoadam_core::model::{FlatParams, LayerLayout, MlpSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
pub const ENCODING: &str = "ieee754-binary64-hex-msb-first";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed checkpoint: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("unsupported checkpoint format version {found} (reader understands {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("unsupported value encoding `{0}`")]
    Encoding(String),
    #[error("payload has {payload} values but the layout needs {layout}")]
    Length { payload: usize, layout: usize },
    #[error("malformed hex value `{value}` at index {index}")]
    Hex { index: usize, value: String },
    #[error(transparent)]
    Params(#[from] evoadam_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Generator,
    Discriminator,
    Regressor,
    Fused,
    /// Universal fusion weights, one layer of shape `[L, N]`.
    FusionWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ModelSpec {
    Mlp(MlpSpec),
    Regressor(RegressorSpec),
    /// Plain decision vector of an analytic problem.
    Vector,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the config snapshot the model came from.
    pub config_hash: String,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub role: Role,
    pub spec: ModelSpec,
    pub layout: Vec<LayerLayout>,
    pub lambda: Option<f64>,
    pub provenance: Provenance,
    pub encoding: String,
    pub payload: Vec<String>,
}

pub fn encode_f64(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

pub fn decode_f64(s: &str) -> Option<f64> {
    if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

pub fn config_hash(snapshot: &str) -> String {
    Sha256::digest(snapshot.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Checkpoint {
    pub fn new(role: Role, spec: ModelSpec, params: &FlatParams, lambda: Option<f64>, provenance: Provenance) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            role,
            spec,
            layout: params.layout().to_vec(),
            lambda,
            provenance,
            encoding: ENCODING.to_string(),
            payload: params.data().iter().map(|&v| encode_f64(v)).collect(),
        }
    }

    /// Decodes the payload against the embedded layout.
    pub fn params(&self) -> Result<FlatParams, CheckpointError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found: self.format_version,
            });
        }
        if self.encoding != ENCODING {
            return Err(CheckpointError::Encoding(self.encoding.clone()));
        }
        let need: usize = self.layout.iter().map(|l| l.len).sum();
        if self.payload.len() != need {
            return Err(CheckpointError::Length {
                payload: self.payload.len(),
                layout: need,
            });
        }
        let data = self
            .payload
            .iter()
            .enumerate()
            .map(|(index, s)| {
                decode_f64(s).ok_or_else(|| CheckpointError::Hex {
                    index,
                    value: s.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FlatParams::new(data, self.layout.clone())?)
    }

    pub fn mlp_spec(&self) -> Option<&MlpSpec> {
        match &self.spec {
            ModelSpec::Mlp(s) => Some(s),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json()).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|source| CheckpointError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if ck.format_version != FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found: ck.format_version,
            });
        }
        Ok(ck)
    }
}
