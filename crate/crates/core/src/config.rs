//! JSON configuration loading with errors located by JSON pointer.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_path_to_error::Segment;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("config error at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
}

impl ConfigError {
    pub fn invalid(pointer: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            pointer: pointer.to_string(),
            message: message.into(),
        }
    }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parse `text` into `T`, reporting where in the document it failed.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    Ok(value)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text)
}
