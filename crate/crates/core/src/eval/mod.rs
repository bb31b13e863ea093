//! Few-shot prompting against a chat-completion endpoint, answer extraction
//! and exact-match scoring.

mod client;
mod prompt;
mod score;

use thiserror::Error;

use crate::algorithms::AlgoError;
use crate::dataset::DatasetError;

pub use client::{ChatClient, EndpointConfig, Prediction, RetryPolicy, TransportError, API_KEY_VARS};
pub use prompt::{build_fewshot_prompt, build_prompts, noise_demo, PromptBundle, DEFAULT_INSTRUCTION};
pub use score::{extract_answer, score, write_curve_csv, CurveRow, ScoreReport, ScoredSample, TaskScore};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("demo pool has {have} records, need {need}")]
    PoolTooSmall { need: usize, have: usize },
    #[error("test record {0} is also in the demo pool")]
    TestInPool(String),
    #[error("invalid endpoint config: {0}")]
    Config(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("endpoint returned {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    BadResponse(String),
    #[error("predictions and references disagree on ids: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Algorithm(#[from] AlgoError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
