use std::collections::BTreeSet;

use serde_json::Value;

use super::contexts::{index_field, instance_from_object, string_field};
use super::{BenchmarkInstance, DataError, InstanceGold};
use crate::model::{SwordsAnnotation, Votes};

/// Parses a SwordS-style document:
///
/// ```json
/// {"instances": [{"id": "s1", "text": "...", "target_start": 0, "target_end": 3, "lemma": "...",
///                 "substitutes": [{"word": "x", "good": 6, "total": 10}]}]}
/// ```
///
/// Vote counts are kept as given; acceptable/conceivable sets are derived on demand.
pub fn parse_swords(document: &str) -> Result<Vec<BenchmarkInstance>, DataError> {
    let root: Value = serde_json::from_str(document)
        .map_err(|e| DataError::MalformedLine { line: e.line(), reason: e.to_string() })?;
    let items = root
        .get("instances")
        .and_then(Value::as_array)
        .ok_or(DataError::MissingField { line: 0, field: "instances" })?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let index = i + 1;
        let obj = item
            .as_object()
            .ok_or_else(|| DataError::MalformedLine { line: index, reason: "instance must be an object".into() })?;
        let mut inst = instance_from_object(obj, index)?;
        let subs = obj
            .get("substitutes")
            .and_then(Value::as_array)
            .ok_or(DataError::MissingField { line: index, field: "substitutes" })?;
        let mut votes = Vec::with_capacity(subs.len());
        for sub in subs {
            let sub = sub.as_object().ok_or_else(|| DataError::MalformedLine {
                line: index,
                reason: "substitute must be an object".into(),
            })?;
            let word = string_field(sub, "word", index)?;
            let missing = || DataError::MissingVotes { id: inst.instance_id.clone(), word: word.clone() };
            let good = index_field(sub, "good", index).map_err(|_| missing())?;
            let total = index_field(sub, "total", index).map_err(|_| missing())?;
            votes.push((word, Votes { good: good as u32, total: total as u32 }));
        }
        let annotation = SwordsAnnotation::new(inst.instance_id.clone(), votes)?;
        if !seen.insert(inst.instance_id.clone()) {
            return Err(DataError::DuplicateId { line: index, id: inst.instance_id });
        }
        inst.gold = Some(InstanceGold::Swords(annotation));
        out.push(inst);
    }
    Ok(out)
}
