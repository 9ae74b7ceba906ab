use std::collections::BTreeSet;

use serde_json::{Map, Value};

use super::DataError;
use crate::model::{GoldAnnotation, SwordsAnnotation};
use crate::text::{char_span_to_bytes, segment_words, SentenceError, TokenizedSentence, Tokenizer};

/// Gold attached to an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceGold {
    Weighted(GoldAnnotation<f64>),
    Swords(SwordsAnnotation),
}

/// One benchmark item: a sentence, its target span (char offsets) and optional gold.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkInstance {
    pub instance_id: String,
    pub sentence_text: String,
    pub target_char_span: (usize, usize),
    pub target_lemma: String,
    pub pos_tag: Option<String>,
    pub gold: Option<InstanceGold>,
}

impl BenchmarkInstance {
    pub fn sentence(&self, tokenizer: &dyn Tokenizer) -> Result<TokenizedSentence, SentenceError> {
        TokenizedSentence::new(&self.sentence_text, self.target_char_span, tokenizer)
    }

    /// `lemma.pos`, or the bare lemma.
    pub fn lexelt(&self) -> String {
        match &self.pos_tag {
            Some(pos) => format!("{}.{}", self.target_lemma, pos),
            None => self.target_lemma.clone(),
        }
    }
}

pub(super) fn required<'a>(
    obj: &'a Map<String, Value>,
    field: &'static str,
    line: usize,
) -> Result<&'a Value, DataError> {
    obj.get(field).filter(|v| !v.is_null()).ok_or(DataError::MissingField { line, field })
}

pub(super) fn string_field(obj: &Map<String, Value>, field: &'static str, line: usize) -> Result<String, DataError> {
    match required(obj, field, line)? {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(DataError::MalformedLine { line, reason: format!("{field} must be a string, got {other}") }),
    }
}

pub(super) fn index_field(obj: &Map<String, Value>, field: &'static str, line: usize) -> Result<usize, DataError> {
    required(obj, field, line)?
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| DataError::MalformedLine { line, reason: format!("{field} must be a non-negative integer") })
}

/// Reads the context fields shared by the JSONL and SwordS formats and validates the span.
pub(super) fn instance_from_object(obj: &Map<String, Value>, line: usize) -> Result<BenchmarkInstance, DataError> {
    let instance_id = string_field(obj, "id", line)?;
    let sentence_text = string_field(obj, "text", line)?;
    let start = index_field(obj, "target_start", line)?;
    let end = index_field(obj, "target_end", line)?;
    let target_lemma = string_field(obj, "lemma", line)?;
    let pos_tag = match obj.get("pos") {
        None | Some(Value::Null) => None,
        Some(_) => Some(string_field(obj, "pos", line)?),
    };
    let bytes = char_span_to_bytes(&sentence_text, start, end).map_err(|_| DataError::SpanOutOfRange {
        id: instance_id.clone(),
        start,
        end,
    })?;
    if !segment_words(&sentence_text).contains(&bytes) {
        return Err(DataError::SpanMisaligned { id: instance_id, start, end });
    }
    Ok(BenchmarkInstance {
        instance_id,
        sentence_text,
        target_char_span: (start, end),
        target_lemma,
        pos_tag,
        gold: None,
    })
}

/// Parses one instance per line: `{"id", "text", "target_start", "target_end", "lemma", "pos"?}`.
/// Offsets are in characters, end exclusive. Blank lines are skipped.
pub fn parse_contexts_jsonl(text: &str) -> Result<Vec<BenchmarkInstance>, DataError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(raw).map_err(|e| DataError::MalformedLine { line, reason: e.to_string() })?;
        let obj =
            value.as_object().ok_or_else(|| DataError::MalformedLine { line, reason: "expected an object".into() })?;
        let inst = instance_from_object(obj, line)?;
        if !seen.insert(inst.instance_id.clone()) {
            return Err(DataError::DuplicateId { line, id: inst.instance_id });
        }
        out.push(inst);
    }
    Ok(out)
}
