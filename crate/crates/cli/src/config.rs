use std::path::{Path, PathBuf};

use gapbound::{BoxRegion, Tolerances};
use serde::Deserialize;

use crate::exit::{CliError, CliResult};
use crate::io::read_text;

/// Settings read from `--config`. Every key is optional; command-line flags
/// take precedence over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: Option<PathBuf>,
    pub rho: Option<f64>,
    pub tolerances: Option<Tolerances>,
    pub x: Option<Vec<f64>>,
    pub alpha: Option<String>,
    #[serde(rename = "box")]
    pub region: Option<BoxRegion>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub points: Option<PathBuf>,
    pub sequence: Option<bool>,
    pub zero_box: Option<BoxRegion>,
    pub zero_points: Option<Vec<Vec<f64>>>,
    pub starts: Option<usize>,
    pub xbar: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub method: Option<String>,
    pub max_iter: Option<usize>,
    pub step: Option<f64>,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = read_text(path)?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Parse(format!(
                "{} at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }
}

/// Flag value if given, else the config value, else an error naming the flag.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> CliResult<T> {
    flag.or(file)
        .ok_or_else(|| CliError::Precondition(format!("--{name} is required (on the command line or in the config file)")))
}
