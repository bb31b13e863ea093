//! Declarative run configuration (TOML) merged with command-line flags.
//!
//! ```toml
//! workers = 8
//!
//! [dataset]
//! count = 20000
//! seed = 1
//! mode = "cot"                      # or "direct"
//! inputs = { task = "add", operands = { kind = "length", min_len = 1, max_len = 10 } }
//! noise = { kind = "char", intensity = 0.7, dataset_level = 1.0 }
//!
//! [endpoint]
//! base_url = "https://api.example.com/v1"
//! model = "some-model"
//! max_in_flight = 8
//! retry = { max_attempts = 5, backoff_base_ms = 500, max_backoff_ms = 30000 }
//!
//! [eval]
//! k = 6
//! n = 100
//! pool = 100
//!
//! [sweep]
//! levels = [0.25, 0.5, 0.75, 1.0]
//! intensities = [0.25, 0.5, 0.75, 1.0]
//! ```
//!
//! The API credential is read from the environment only.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use tracecot::dataset::DatasetSpec;
use tracecot::eval::EndpointConfig;

use crate::ConfigError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub workers: Option<usize>,
    pub dataset: Option<DatasetSpec>,
    pub endpoint: Option<EndpointConfig>,
    pub eval: Option<EvalSection>,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub pool: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub levels: Option<Vec<f64>>,
    pub intensities: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg = toml::from_str(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))
            .context("parsing config")?;
        Ok(cfg)
    }
}
