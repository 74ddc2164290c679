//! Flat JSON run configuration. Command-line flags override file values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

/// Invalid or missing configuration. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Every key a config file may carry. Keys unused by a subcommand are
/// ignored so that one manifest can drive several subcommands.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub preset: Option<String>,
    pub method: Option<String>,
    pub c: Option<f64>,
    pub ch: Option<f64>,
    pub theta: Option<f64>,
    pub convention: Option<String>,
    pub n_s: Option<usize>,
    pub clamp_mu: Option<bool>,
    pub mu_table_tri: Option<PathBuf>,
    pub mu_table_quad: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub samples: Option<String>,
    pub ch_ref: Option<f64>,
    pub methods: Option<Vec<String>>,
    pub c_list: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
    pub n_theta: Option<usize>,
    pub timings: Option<bool>,
    pub scheme: Option<String>,
    pub form: Option<String>,
    pub ch_min: Option<f64>,
    pub ch_max: Option<f64>,
    pub n_ch: Option<usize>,
    pub kind: Option<String>,
    pub key: Option<f64>,
    pub vtk: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
    }
}

/// Flag value if given, else the file value parsed from a string.
pub fn pick_parsed<T>(flag: Option<T>, file: &Option<String>, field: &str) -> Result<Option<T>, ConfigError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    file.as_deref()
        .map(|s| {
            s.parse()
                .map_err(|e| ConfigError(format!("config field `{field}`: {e}")))
        })
        .transpose()
}

pub fn pick_parsed_list<T>(
    flag: Option<Vec<T>>,
    file: &Option<Vec<String>>,
    field: &str,
) -> Result<Option<Vec<T>>, ConfigError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    file.as_ref()
        .map(|v| {
            v.iter()
                .enumerate()
                .map(|(i, s)| {
                    s.parse()
                        .map_err(|e| ConfigError(format!("config field `{field}[{i}]`: {e}")))
                })
                .collect()
        })
        .transpose()
}

pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}

pub fn require_positive(value: f64, field: &str) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError(format!("`{field}` must be positive and finite, got {value}")))
    }
}
