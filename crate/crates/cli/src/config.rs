//! Optional TOML config file. Flags win over file values, which win over
//! built-in defaults.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,

    pub window_size: Option<usize>,
    pub step: Option<usize>,
    pub strict: Option<bool>,
    pub whole_sequence: Option<bool>,
    pub joints: Option<String>,
    pub normalize: Option<String>,

    pub hidden_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub windows_per_trajectory: Option<usize>,

    pub threshold: Option<f64>,
    pub aggregation: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
