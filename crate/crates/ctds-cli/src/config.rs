//! Key=value config files and the resolved global settings every
//! subcommand shares. Command-line flags override file values; the fully
//! resolved configuration is echoed into each run's manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: cannot parse `{value}` as {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("config line {0} is not `key=value`")]
    Malformed(usize),
}

/// Global settings after merging defaults, config file, and flags.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub eps: f64,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for Globals {
    fn default() -> Self {
        Globals {
            seed: 0,
            eps: ctds_core::StepControl::default().eps,
            threads: 0,
            out: None,
        }
    }
}

/// Parses a key=value file ('#' comments, blank lines ignored). Only the
/// global keys are accepted: seed, eps, threads, out.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed(lineno + 1));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_as<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

/// Applies file values to the defaults; flag overrides happen afterwards.
pub fn apply_config(
    globals: &mut Globals,
    map: &BTreeMap<String, String>,
) -> Result<(), ConfigError> {
    for (key, value) in map {
        match key.as_str() {
            "seed" => globals.seed = parse_as(key, value, "unsigned integer")?,
            "eps" => globals.eps = parse_as(key, value, "number")?,
            "threads" => globals.threads = parse_as(key, value, "unsigned integer")?,
            "out" => globals.out = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }
    Ok(())
}
