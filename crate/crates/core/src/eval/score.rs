use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalError, Prediction};
use crate::algorithms::{AnswerValue, Op};
use crate::dataset::{write_atomic, DatasetError, SampleRecord};
use crate::tint::Render;

/// Parses the last non-empty line as an answer for `op`.
pub fn extract_answer(text: &str, op: Op) -> Option<AnswerValue> {
    let last = text.lines().rev().find(|l| !l.trim().is_empty())?;
    AnswerValue::parse(last, op)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: String,
    pub task: Op,
    pub prediction: Option<String>,
    pub reference: String,
    pub correct: bool,
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub total: usize,
    pub correct: usize,
    pub extraction_failures: usize,
    pub transport_failures: usize,
    pub accuracy: f64,
}

impl TaskScore {
    fn add(&mut self, s: &ScoredSample) {
        self.total += 1;
        self.correct += s.correct as usize;
        if s.error.is_some() {
            self.transport_failures += 1;
        } else if s.prediction.is_none() {
            self.extraction_failures += 1;
        }
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub overall: TaskScore,
    pub per_task: BTreeMap<Op, TaskScore>,
    /// True when some predictions carry no model text.
    pub incomplete: bool,
    pub samples: Vec<ScoredSample>,
}

/// Exact-match scoring of predictions against reference records, aligned
/// by id. Unparseable or missing completions count as incorrect.
pub fn score(predictions: &[Prediction], references: &[SampleRecord]) -> Result<ScoreReport, EvalError> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(EvalError::IdMismatch(format!("duplicate prediction {}", p.id)));
        }
    }
    if predictions.len() != references.len() {
        return Err(EvalError::IdMismatch(format!(
            "{} predictions for {} references",
            predictions.len(),
            references.len()
        )));
    }
    let mut samples = Vec::with_capacity(references.len());
    for r in references {
        let p = by_id
            .get(r.id.as_str())
            .ok_or_else(|| EvalError::IdMismatch(format!("no prediction for {}", r.id)))?;
        let expected = AnswerValue::parse(&r.answer, r.task);
        let got = p.text.as_deref().and_then(|t| extract_answer(t, r.task));
        samples.push(ScoredSample {
            id: r.id.clone(),
            task: r.task,
            correct: got.is_some() && got == expected,
            prediction: got.map(|v| v.render()),
            reference: r.answer.clone(),
            raw: p.text.clone(),
            error: p.error.clone(),
        });
    }
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    let mut overall = TaskScore::default();
    let mut per_task: BTreeMap<Op, TaskScore> = BTreeMap::new();
    for s in &samples {
        overall.add(s);
        per_task.entry(s.task).or_default().add(s);
    }
    Ok(ScoreReport { incomplete: overall.transport_failures > 0, overall, per_task, samples })
}

/// One point of an accuracy-versus-noise curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub noise: String,
    pub dataset_level: f64,
    pub intensity: f64,
    pub task: String,
    pub k: usize,
    pub n: usize,
    pub accuracy: f64,
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<(), DatasetError> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in rows {
            csv.serialize(r).map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
        }
        csv.flush().map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
    })
}
