use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::metrics::OOT_LIMIT;

/// Ranked substitutes emitted for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(rename = "id")]
    pub instance_id: String,
    /// `lemma.pos` of the target, used by the legacy line formats.
    pub lexelt: String,
    pub substitutes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl PredictionRecord {
    fn check(&self) -> Result<(), DataError> {
        let mut seen = BTreeSet::new();
        for s in &self.substitutes {
            if !seen.insert(s.to_lowercase()) {
                return Err(DataError::DuplicateSurface { id: self.instance_id.clone(), word: s.clone() });
            }
        }
        if let Some(scores) = &self.scores {
            if scores.len() != self.substitutes.len() {
                return Err(DataError::MalformedLine {
                    line: 0,
                    reason: format!(
                        "instance {}: {} scores for {} substitutes",
                        self.instance_id,
                        scores.len(),
                        self.substitutes.len()
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionStyle {
    /// `lexelt id :: best`
    Best,
    /// `lexelt id ::: s1;s2;...` (at most ten)
    Oot,
    /// One JSON record per line.
    Jsonl,
}

/// Renders records in `style`. Every line, including the last, ends with `\n`.
pub fn write_predictions(records: &[PredictionRecord], style: PredictionStyle) -> Result<String, DataError> {
    let mut out = String::new();
    for r in records {
        r.check()?;
        match style {
            PredictionStyle::Best => {
                let _ = write!(out, "{} {} ::", r.lexelt, r.instance_id);
                if let Some(first) = r.substitutes.first() {
                    let _ = write!(out, " {first}");
                }
            }
            PredictionStyle::Oot => {
                if r.substitutes.len() > OOT_LIMIT {
                    return Err(DataError::TooManyGuesses { id: r.instance_id.clone(), count: r.substitutes.len() });
                }
                let _ = write!(out, "{} {} :::", r.lexelt, r.instance_id);
                if !r.substitutes.is_empty() {
                    let _ = write!(out, " {}", r.substitutes.join(";"));
                }
            }
            PredictionStyle::Jsonl => out.push_str(&serde_json::to_string(r).expect("record serializes")),
        }
        out.push('\n');
    }
    Ok(out)
}

/// Reads records written with [`PredictionStyle::Jsonl`].
pub fn read_predictions_jsonl(text: &str) -> Result<Vec<PredictionRecord>, DataError> {
    let mut ids = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(raw).map_err(|e| DataError::MalformedLine { line, reason: e.to_string() })?;
        record.check().map_err(|e| match e {
            DataError::MalformedLine { reason, .. } => DataError::MalformedLine { line, reason },
            other => other,
        })?;
        if !ids.insert(record.instance_id.clone()) {
            return Err(DataError::DuplicateId { line, id: record.instance_id });
        }
        out.push(record);
    }
    Ok(out)
}
