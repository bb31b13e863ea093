//! Dataset records and the generation pipeline.
//!
//! A record is one JSON object per line with the fields
//! `id, task, problem, cot_lines, answer, noised, noise, seed, meta`.
//! For training, the problem line is the prompt and `cot_lines` + `answer`
//! is the target.

mod io;
mod pipeline;
mod stats;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{AlgoError, Op};
use crate::noise::{NoiseConfig, NoiseError, NoiseMeta};
use crate::sampling::{SamplingError, TaskInputSpec};

pub use io::{
    digest_file, manifest_path, read_jsonl, read_manifest, write_atomic, write_jsonl, Manifest, TOOL_VERSION,
};
pub use pipeline::{
    build_sample, generate, generate_to_file, postprocess, trace_record, PostprocessOptions, RecordOptions,
};
pub use stats::{stats, DatasetStats, OpStats, RateStat, StatsAccumulator};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error(transparent)]
    Algorithm(#[from] AlgoError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("parse error on line {line}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("i/o error on {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Cot,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub operand_lengths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub task: Op,
    pub problem: String,
    pub cot_lines: Vec<String>,
    pub answer: String,
    pub noised: bool,
    pub noise: Option<NoiseMeta>,
    pub seed: u64,
    pub meta: SampleMeta,
}

impl SampleRecord {
    /// Problem, CoT and answer lines joined by newlines.
    pub fn text(&self) -> String {
        let mut lines = Vec::with_capacity(self.cot_lines.len() + 2);
        lines.push(self.problem.as_str());
        lines.extend(self.cot_lines.iter().map(String::as_str));
        lines.push(self.answer.as_str());
        lines.join("\n")
    }

    /// Everything except the noise audit fields.
    pub fn same_content(&self, other: &SampleRecord) -> bool {
        self.id == other.id
            && self.task == other.task
            && self.problem == other.problem
            && self.cot_lines == other.cot_lines
            && self.answer == other.answer
            && self.seed == other.seed
            && self.meta == other.meta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub inputs: TaskInputSpec,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub mode: Mode,
    /// First sample index; disjoint index ranges under one seed give
    /// disjoint splits.
    #[serde(default)]
    pub start_index: u64,
    #[serde(default)]
    pub keep_code_lines: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl DatasetSpec {
    pub fn new(inputs: TaskInputSpec, count: usize, seed: u64) -> Self {
        DatasetSpec {
            inputs,
            count,
            seed,
            noise: NoiseConfig::none(),
            mode: Mode::Cot,
            start_index: 0,
            keep_code_lines: false,
            output: None,
        }
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.count == 0 {
            return Err(DatasetError::InvalidSpec("count must be positive".into()));
        }
        self.inputs.validate()?;
        self.noise.validate()?;
        Ok(())
    }

    pub fn record_options(&self) -> RecordOptions {
        RecordOptions { noise: self.noise, mode: self.mode, keep_code_lines: self.keep_code_lines }
    }

    pub fn record_id(&self, index: u64) -> String {
        format!("{}-{:07}", self.inputs.task.name(), index)
    }
}
