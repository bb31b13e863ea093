//! Seeded input generation.
//!
//! Magnitude sampling draws uniformly from `[lower, upper]`. Length sampling
//! draws a digit count uniformly, then a non-zero leading digit and uniform
//! remaining digits; it never produces 0.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algorithms::{Op, Operands, TaskKind};
use crate::tint::TInt;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("magnitude bounds out of order: {lower} > {upper}")]
    BadBounds { lower: u64, upper: u64 },
    #[error("length bounds must satisfy 1 <= min_len <= max_len, got {min_len}..={max_len}")]
    BadLengths { min_len: u32, max_len: u32 },
    #[error("list length bounds must satisfy 1 <= min <= max, got {min}..={max}")]
    BadListLengths { min: u32, max: u32 },
    #[error("division needs a sampler that can produce a non-zero divisor")]
    ZeroDivisorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplerSpec {
    Magnitude { lower: u64, upper: u64 },
    Length { min_len: u32, max_len: u32 },
}

impl SamplerSpec {
    pub fn length(max_len: u32) -> Self {
        SamplerSpec::Length { min_len: 1, max_len }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        match *self {
            SamplerSpec::Magnitude { lower, upper } if lower > upper => {
                Err(SamplingError::BadBounds { lower, upper })
            }
            SamplerSpec::Length { min_len, max_len } if min_len == 0 || min_len > max_len => {
                Err(SamplingError::BadLengths { min_len, max_len })
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TInt {
        match *self {
            SamplerSpec::Magnitude { lower, upper } => TInt::from_u64(sample_magnitude(rng, lower, upper)),
            SamplerSpec::Length { min_len, max_len } => sample_length(rng, min_len, max_len),
        }
    }

    fn can_be_nonzero(&self) -> bool {
        match *self {
            SamplerSpec::Magnitude { upper, .. } => upper > 0,
            SamplerSpec::Length { .. } => true,
        }
    }
}

/// Per-op default operand sampler: length 1-10 for add/sub, 1-5 for mul,
/// div and median elements.
pub fn default_sampler(op: Op) -> SamplerSpec {
    match op {
        Op::Add | Op::Sub => SamplerSpec::length(10),
        Op::Mul | Op::Div | Op::Median => SamplerSpec::length(5),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInputSpec {
    pub task: TaskKind,
    /// Operand sampler; `None` uses [`default_sampler`] for each op.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operands: Option<SamplerSpec>,
    #[serde(default = "default_list_min")]
    pub list_min: u32,
    #[serde(default = "default_list_max")]
    pub list_max: u32,
}

fn default_list_min() -> u32 {
    1
}

fn default_list_max() -> u32 {
    10
}

impl TaskInputSpec {
    pub fn new(task: TaskKind) -> Self {
        TaskInputSpec { task, operands: None, list_min: 1, list_max: 10 }
    }

    pub fn with_operands(mut self, sampler: SamplerSpec) -> Self {
        self.operands = Some(sampler);
        self
    }

    pub fn sampler_for(&self, op: Op) -> SamplerSpec {
        self.operands.unwrap_or_else(|| default_sampler(op))
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if let Some(s) = &self.operands {
            s.validate()?;
            if matches!(self.task, TaskKind::Div | TaskKind::Mixed) && !s.can_be_nonzero() {
                return Err(SamplingError::ZeroDivisorOnly);
            }
        }
        if self.list_min == 0 || self.list_min > self.list_max {
            return Err(SamplingError::BadListLengths { min: self.list_min, max: self.list_max });
        }
        Ok(())
    }
}

pub fn sample_magnitude<R: Rng + ?Sized>(rng: &mut R, lower: u64, upper: u64) -> u64 {
    rng.gen_range(lower..=upper)
}

pub fn sample_length<R: Rng + ?Sized>(rng: &mut R, min_len: u32, max_len: u32) -> TInt {
    let len = rng.gen_range(min_len..=max_len) as usize;
    let mut msb = Vec::with_capacity(len);
    msb.push(rng.gen_range(1..=9u8));
    for _ in 1..len {
        msb.push(rng.gen_range(0..=9u8));
    }
    TInt::from_digits(&msb).expect("digits in range")
}

/// Picks the concrete op, then operands honouring the op's constraints:
/// ordered pairs for sub, non-zero divisors for div.
pub fn sample_task_inputs<R: Rng + ?Sized>(rng: &mut R, spec: &TaskInputSpec) -> (Op, Operands) {
    let op = match spec.task.op() {
        Some(op) => op,
        None => *Op::ARITHMETIC.choose(rng).expect("non-empty"),
    };
    let sampler = spec.sampler_for(op);
    let operands = match op {
        Op::Add | Op::Mul => Operands::Pair(sampler.sample(rng), sampler.sample(rng)),
        Op::Sub => {
            let (a, b) = (sampler.sample(rng), sampler.sample(rng));
            if a < b {
                Operands::Pair(b, a)
            } else {
                Operands::Pair(a, b)
            }
        }
        Op::Div => {
            let a = sampler.sample(rng);
            let mut b = sampler.sample(rng);
            while b.is_zero() {
                b = sampler.sample(rng);
            }
            Operands::Pair(a, b)
        }
        Op::Median => {
            let n = rng.gen_range(spec.list_min..=spec.list_max);
            Operands::List((0..n).map(|_| sampler.sample(rng)).collect())
        }
    };
    (op, operands)
}

/// Seed of sample `index` under `master`: the first eight bytes of
/// SHA-256 over both values, little-endian.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

/// Independent random streams carved out of one sample seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Inputs = 0,
    Gate = 1,
    Dynamic = 2,
    Static = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
