use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SampleRecord;
use crate::algorithms::Op;
use crate::noise::NoiseMeta;

/// An empirical Bernoulli rate next to the configured probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStat {
    /// Mean configured probability over the contributing records.
    pub configured: f64,
    pub trials: usize,
    pub events: usize,
    pub rate: f64,
}

impl RateStat {
    /// Whether the observed count lies within `k` binomial standard
    /// deviations of the configured probability.
    pub fn within_sigma(&self, k: f64) -> bool {
        let n = self.trials as f64;
        let p = self.configured;
        let sd = (n * p * (1.0 - p)).sqrt();
        (self.events as f64 - n * p).abs() <= k * sd + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpStats {
    pub count: usize,
    pub mean_cot_lines: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub records: usize,
    pub noised: usize,
    pub noised_fraction: f64,
    pub mean_cot_lines: f64,
    pub per_op: BTreeMap<Op, OpStats>,
    pub operand_length_histogram: BTreeMap<usize, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub list_length_histogram: BTreeMap<usize, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digit_flip: Option<RateStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_deletion: Option<RateStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_corruption: Option<RateStat>,
}

#[derive(Debug, Default)]
struct RateAcc {
    configured_sum: f64,
    records: usize,
    trials: usize,
    events: usize,
}

impl RateAcc {
    fn add(&mut self, configured: f64, trials: usize, events: usize) {
        self.configured_sum += configured;
        self.records += 1;
        self.trials += trials;
        self.events += events;
    }

    fn finish(self) -> Option<RateStat> {
        (self.records > 0).then(|| RateStat {
            configured: self.configured_sum / self.records as f64,
            trials: self.trials,
            events: self.events,
            rate: if self.trials == 0 { 0.0 } else { self.events as f64 / self.trials as f64 },
        })
    }
}

/// Incremental statistics, so large files need not be held in memory.
#[derive(Debug, Default)]
pub struct StatsAccumulator {
    records: usize,
    noised: usize,
    cot_lines: usize,
    per_op: BTreeMap<Op, (usize, usize)>,
    operand_lengths: BTreeMap<usize, usize>,
    list_lengths: BTreeMap<usize, usize>,
    char: RateAcc,
    line: RateAcc,
    dynamic: RateAcc,
}

impl StatsAccumulator {
    pub fn add(&mut self, r: &SampleRecord) {
        self.records += 1;
        self.noised += r.noised as usize;
        self.cot_lines += r.cot_lines.len();
        let e = self.per_op.entry(r.task).or_default();
        e.0 += 1;
        e.1 += r.cot_lines.len();
        for &len in &r.meta.operand_lengths {
            *self.operand_lengths.entry(len).or_default() += 1;
        }
        if let Some(n) = r.meta.list_len {
            *self.list_lengths.entry(n).or_default() += 1;
        }
        match &r.noise {
            Some(NoiseMeta::Char { intensity, digits_considered, digits_flipped, .. }) => {
                self.char.add(*intensity, *digits_considered, *digits_flipped)
            }
            Some(NoiseMeta::Line { intensity, lines_considered, lines_deleted, .. }) => {
                self.line.add(*intensity, *lines_considered, *lines_deleted)
            }
            Some(NoiseMeta::Dynamic { intensity, init_sites, corruptions, .. }) => {
                self.dynamic.add(*intensity, *init_sites, corruptions.len())
            }
            None => {}
        }
    }

    pub fn finish(self) -> DatasetStats {
        let mean = |total: usize, n: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
        DatasetStats {
            records: self.records,
            noised: self.noised,
            noised_fraction: mean(self.noised, self.records),
            mean_cot_lines: mean(self.cot_lines, self.records),
            per_op: self
                .per_op
                .into_iter()
                .map(|(op, (count, lines))| (op, OpStats { count, mean_cot_lines: mean(lines, count) }))
                .collect(),
            operand_length_histogram: self.operand_lengths,
            list_length_histogram: self.list_lengths,
            digit_flip: self.char.finish(),
            line_deletion: self.line.finish(),
            dynamic_corruption: self.dynamic.finish(),
        }
    }
}

pub fn stats(records: &[SampleRecord]) -> DatasetStats {
    let mut acc = StatsAccumulator::default();
    records.iter().for_each(|r| acc.add(r));
    acc.finish()
}
