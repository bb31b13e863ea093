use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::algorithms::parse_problem;
use crate::dataset::{trace_record, Mode, RecordOptions, SampleRecord};
use crate::noise::{NoiseConfig, NoiseKind};
use crate::sampling::{derive_seed, stream_rng, Stream};

pub const DEFAULT_INSTRUCTION: &str =
    "Follow the demonstrated algorithm exactly, one step per line, and end with the answer on the final line.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub instruction: String,
    pub demos: Vec<SampleRecord>,
    pub test_id: String,
    pub test_problem: String,
    pub k: usize,
    pub noised_demos: usize,
}

impl PromptBundle {
    /// Instruction, then each demo, then the test problem, separated by
    /// blank lines.
    pub fn render(&self) -> String {
        let mut blocks = Vec::with_capacity(self.demos.len() + 2);
        blocks.push(self.instruction.clone());
        blocks.extend(self.demos.iter().map(SampleRecord::text));
        blocks.push(self.test_problem.clone());
        blocks.join("\n\n")
    }
}

/// Re-traces a clean demo under `noise` with the noise always applied, so
/// dynamic corruptions propagate the same way they do in datasets.
pub fn noise_demo(demo: &SampleRecord, noise: &NoiseConfig, seed: u64) -> Result<SampleRecord, EvalError> {
    let (op, operands) = parse_problem(&demo.problem)?;
    let opts = RecordOptions {
        noise: NoiseConfig { dataset_level: 1.0, ..*noise },
        mode: Mode::Cot,
        keep_code_lines: false,
    };
    Ok(trace_record(&opts, demo.id.clone(), seed, op, &operands)?)
}

/// Draws `k` demos from `pool` without replacement and noises each with
/// probability `noise.dataset_level`.
pub fn build_fewshot_prompt<R: Rng + ?Sized>(
    rng: &mut R,
    pool: &[SampleRecord],
    test: &SampleRecord,
    k: usize,
    noise: &NoiseConfig,
) -> Result<PromptBundle, EvalError> {
    if pool.len() < k {
        return Err(EvalError::PoolTooSmall { need: k, have: pool.len() });
    }
    if pool.iter().any(|r| r.id == test.id && r.problem == test.problem) {
        return Err(EvalError::TestInPool(test.id.clone()));
    }
    let mut demos = Vec::with_capacity(k);
    let mut noised_demos = 0;
    for i in index::sample(rng, pool.len(), k) {
        let demo = &pool[i];
        let noised = !matches!(noise.kind, NoiseKind::None) && rng.gen_bool(noise.dataset_level);
        if noised {
            noised_demos += 1;
            demos.push(noise_demo(demo, noise, rng.gen())?);
        } else {
            demos.push(demo.clone());
        }
    }
    Ok(PromptBundle {
        instruction: DEFAULT_INSTRUCTION.to_string(),
        demos,
        test_id: test.id.clone(),
        test_problem: test.problem.clone(),
        k,
        noised_demos,
    })
}

/// One bundle per test record; bundle `i` depends only on
/// `(seed, i, pool, k, noise)`.
pub fn build_prompts(
    seed: u64,
    pool: &[SampleRecord],
    tests: &[SampleRecord],
    k: usize,
    noise: &NoiseConfig,
) -> Result<Vec<PromptBundle>, EvalError> {
    noise.validate().map_err(|e| EvalError::Config(e.to_string()))?;
    tests
        .iter()
        .enumerate()
        .map(|(i, t)| build_fewshot_prompt(&mut stream_rng(derive_seed(seed, i as u64), Stream::Inputs), pool, t, k, noise))
        .collect()
}
