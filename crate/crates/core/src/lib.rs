//! Traced-integer chain-of-thought synthesis.
//!
//! Grade-school algorithms run over [`TInt`] values and print one line per
//! assignment into a [`TraceContext`]. The [`dataset`] pipeline samples
//! inputs, traces them, applies [`noise`] and writes JSONL; [`eval`] builds
//! few-shot prompts and scores completions from a chat endpoint.

pub mod algorithms;
pub mod dataset;
pub mod eval;
pub mod noise;
pub mod sampling;
pub mod tint;
pub mod trace;

pub use algorithms::{AnswerValue, Op, Operands, TaskKind};
pub use dataset::{DatasetSpec, Mode, SampleRecord};
pub use noise::{FlipMode, NoiseConfig, NoiseKind};
pub use tint::{DigitBuf, Render, TInt};
pub use trace::TraceContext;
