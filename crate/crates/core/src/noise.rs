//! Noise models.
//!
//! Static noise (character flips, line deletion) rewrites a finished record.
//! Dynamic noise corrupts values as they are initialized during tracing, so
//! every later step computes from the corrupted state. Which samples get
//! noised at all is decided per sample with probability `dataset_level`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::SampleRecord;
use crate::tint::TInt;
use crate::trace::Corruption;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Char { intensity: f64 },
    Line { intensity: f64 },
    Dynamic { intensity: f64 },
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Char { .. } => "char",
            NoiseKind::Line { .. } => "line",
            NoiseKind::Dynamic { .. } => "dynamic",
        }
    }

    pub fn intensity(&self) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::Char { intensity }
            | NoiseKind::Line { intensity }
            | NoiseKind::Dynamic { intensity } => intensity,
        }
    }

    pub fn with_intensity(&self, intensity: f64) -> NoiseKind {
        match self {
            NoiseKind::None => NoiseKind::None,
            NoiseKind::Char { .. } => NoiseKind::Char { intensity },
            NoiseKind::Line { .. } => NoiseKind::Line { intensity },
            NoiseKind::Dynamic { .. } => NoiseKind::Dynamic { intensity },
        }
    }
}

/// How a flipped digit picks its replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipMode {
    /// Uniform over the nine other digits, so the intensity is the true change rate.
    #[default]
    DifferentDigit,
    /// Uniform over all ten digits (may leave the digit unchanged).
    UniformDigit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Fraction of samples that receive any noise.
    #[serde(default)]
    pub dataset_level: f64,
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub flip_mode: FlipMode,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::none()
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        NoiseConfig { dataset_level: 0.0, kind: NoiseKind::None, flip_mode: FlipMode::default() }
    }

    pub fn new(dataset_level: f64, kind: NoiseKind) -> Self {
        NoiseConfig { dataset_level, kind, flip_mode: FlipMode::default() }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        check_prob("dataset_level", self.dataset_level)?;
        check_prob("intensity", self.kind.intensity())
    }

    /// `dataset_level`, or 0 for the noise-free kind.
    pub fn effective_level(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            _ => self.dataset_level,
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.kind, NoiseKind::Char { .. } | NoiseKind::Line { .. })
    }
}

fn check_prob(name: &'static str, value: f64) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NoiseError::OutOfRange { name, value })
    }
}

/// Per-record audit of what a noise transform did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseMeta {
    Char {
        intensity: f64,
        dataset_level: f64,
        flip_mode: FlipMode,
        digits_considered: usize,
        digits_flipped: usize,
    },
    Line {
        intensity: f64,
        dataset_level: f64,
        lines_considered: usize,
        lines_deleted: usize,
    },
    Dynamic {
        intensity: f64,
        dataset_level: f64,
        /// Visible initialization sites that were eligible for corruption.
        init_sites: usize,
        corruptions: Vec<Corruption>,
    },
}

pub fn select_noised<R: Rng + ?Sized>(rng: &mut R, dataset_level: f64) -> bool {
    rng.gen_bool(dataset_level)
}

fn flip_digit<R: Rng + ?Sized>(rng: &mut R, d: u8, mode: FlipMode) -> u8 {
    match mode {
        FlipMode::DifferentDigit => {
            let r = rng.gen_range(0..9u8);
            if r >= d {
                r + 1
            } else {
                r
            }
        }
        FlipMode::UniformDigit => rng.gen_range(0..10u8),
    }
}

/// Flips digit characters of the CoT lines and the answer; the problem line
/// is never touched. Returns the rewritten record and the audit counts.
pub fn apply_char_noise<R: Rng + ?Sized>(
    rng: &mut R,
    sample: &SampleRecord,
    intensity: f64,
    mode: FlipMode,
) -> (SampleRecord, usize, usize) {
    let mut considered = 0;
    let mut flipped = 0;
    let mut noise_line = |line: &str| -> String {
        line.chars()
            .map(|c| match c.to_digit(10) {
                Some(d) => {
                    considered += 1;
                    if rng.gen_bool(intensity) {
                        let nd = flip_digit(rng, d as u8, mode);
                        if nd != d as u8 {
                            flipped += 1;
                        }
                        char::from(b'0' + nd)
                    } else {
                        c
                    }
                }
                None => c,
            })
            .collect()
    };
    let cot_lines: Vec<String> = sample.cot_lines.iter().map(|l| noise_line(l)).collect();
    let answer = noise_line(&sample.answer);
    let out = SampleRecord { cot_lines, answer, ..sample.clone() };
    (out, considered, flipped)
}

/// Deletes each intermediate line with probability `intensity`. Problem and
/// answer always survive.
pub fn apply_line_noise<R: Rng + ?Sized>(
    rng: &mut R,
    sample: &SampleRecord,
    intensity: f64,
) -> (SampleRecord, usize, usize) {
    let considered = sample.cot_lines.len();
    let cot_lines: Vec<String> = sample
        .cot_lines
        .iter()
        .filter(|_| !rng.gen_bool(intensity))
        .cloned()
        .collect();
    let deleted = considered - cot_lines.len();
    (SampleRecord { cot_lines, ..sample.clone() }, considered, deleted)
}

/// With probability `intensity`, replaces every digit of `t` by a uniform
/// random digit and re-canonicalizes. `None` means the gate did not fire.
pub fn maybe_corrupt<R: Rng + ?Sized>(rng: &mut R, t: &TInt, intensity: f64) -> Option<TInt> {
    if !rng.gen_bool(intensity) {
        return None;
    }
    let digits: Vec<u8> = (0..t.len()).map(|_| rng.gen_range(0..10u8)).collect();
    Some(TInt::from_lsb_vec(digits))
}

pub fn corrupt_init<R: Rng + ?Sized>(rng: &mut R, t: &TInt, intensity: f64) -> Option<TInt> {
    maybe_corrupt(rng, t, intensity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{SampleMeta, SampleRecord};
    use crate::algorithms::Op;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record() -> SampleRecord {
        SampleRecord {
            id: "add-0".into(),
            task: Op::Add,
            problem: "5 + 6".into(),
            cot_lines: vec!["x = 5 , y = 6".into(), "res = 0".into(), "ds = 1 1".into()],
            answer: "1 1".into(),
            noised: false,
            noise: None,
            seed: 1,
            meta: SampleMeta { operand_lengths: vec![1, 1], list_len: None },
        }
    }

    fn three_sigma(p: f64, n: usize) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn select_noised_extremes_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| !select_noised(&mut rng, 0.0)));
        assert!((0..1000).all(|_| select_noised(&mut rng, 1.0)));
        let n = 1_000_000;
        let hits = (0..n).filter(|_| select_noised(&mut rng, 0.25)).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.25).abs() <= three_sigma(0.25, n), "rate {rate}");
    }

    #[test]
    fn char_noise_zero_and_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = record();
        let (same, considered, flipped) = apply_char_noise(&mut rng, &r, 0.0, FlipMode::DifferentDigit);
        assert_eq!(same, r);
        assert_eq!((considered, flipped), (7, 0));

        let (all, _, flipped) = apply_char_noise(&mut rng, &r, 1.0, FlipMode::DifferentDigit);
        assert_eq!(flipped, 7);
        assert_eq!(all.problem, r.problem);
        for (a, b) in all.cot_lines.iter().chain([&all.answer]).zip(r.cot_lines.iter().chain([&r.answer])) {
            assert_eq!(a.len(), b.len());
            for (ca, cb) in a.chars().zip(b.chars()) {
                if cb.is_ascii_digit() {
                    assert_ne!(ca, cb);
                } else {
                    assert_eq!(ca, cb);
                }
            }
        }
    }

    #[test]
    fn char_noise_rate_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = record();
        let (mut considered, mut flipped) = (0, 0);
        while considered < 100_000 {
            let (_, c, f) = apply_char_noise(&mut rng, &r, 0.7, FlipMode::DifferentDigit);
            considered += c;
            flipped += f;
        }
        let rate = flipped as f64 / considered as f64;
        assert!((rate - 0.7).abs() <= three_sigma(0.7, considered), "rate {rate}");
    }

    #[test]
    fn uniform_flip_mode_has_ninety_percent_effect() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = record();
        let (mut considered, mut flipped) = (0, 0);
        while considered < 100_000 {
            let (_, c, f) = apply_char_noise(&mut rng, &r, 1.0, FlipMode::UniformDigit);
            considered += c;
            flipped += f;
        }
        let rate = flipped as f64 / considered as f64;
        assert!((rate - 0.9).abs() <= three_sigma(0.9, considered), "rate {rate}");
    }

    #[test]
    fn line_noise_extremes_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let r = record();
        let (same, _, d) = apply_line_noise(&mut rng, &r, 0.0);
        assert_eq!((same, d), (r.clone(), 0));
        let (direct, c, d) = apply_line_noise(&mut rng, &r, 1.0);
        assert!(direct.cot_lines.is_empty());
        assert_eq!((c, d), (3, 3));
        assert_eq!((direct.problem.as_str(), direct.answer.as_str()), ("5 + 6", "1 1"));

        let (mut considered, mut deleted) = (0, 0);
        while considered < 100_000 {
            let (_, c, d) = apply_line_noise(&mut rng, &r, 0.5);
            considered += c;
            deleted += d;
        }
        let rate = deleted as f64 / considered as f64;
        assert!((rate - 0.5).abs() <= three_sigma(0.5, considered), "rate {rate}");
    }

    #[test]
    fn corrupt_init_zero_is_identity_and_replays() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let t = TInt::from_u64(98765);
        for _ in 0..1000 {
            assert_eq!(maybe_corrupt(&mut rng, &t, 0.0), None);
        }
        let a = corrupt_init(&mut ChaCha8Rng::seed_from_u64(23), &t, 1.0).unwrap();
        let b = corrupt_init(&mut ChaCha8Rng::seed_from_u64(23), &t, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.len() <= t.len());
    }

    #[test]
    fn config_validation() {
        assert!(NoiseConfig::new(0.5, NoiseKind::Char { intensity: 0.7 }).validate().is_ok());
        assert!(NoiseConfig::new(1.5, NoiseKind::Char { intensity: 0.7 }).validate().is_err());
        assert!(NoiseConfig::new(0.5, NoiseKind::Line { intensity: -0.1 }).validate().is_err());
        assert!(NoiseConfig::new(0.5, NoiseKind::Dynamic { intensity: f64::NAN }).validate().is_err());
        assert_eq!(NoiseConfig::new(0.9, NoiseKind::None).effective_level(), 0.0);
    }

    #[test]
    fn config_serde_shape() {
        let c = NoiseConfig::new(1.0, NoiseKind::Char { intensity: 0.7 });
        let j = serde_json::to_value(c).unwrap();
        assert_eq!(j["kind"], "char");
        assert_eq!(j["intensity"], 0.7);
        assert_eq!(j["flip_mode"], "different-digit");
        let back: NoiseConfig = serde_json::from_value(j).unwrap();
        assert_eq!(back, c);
    }
}
