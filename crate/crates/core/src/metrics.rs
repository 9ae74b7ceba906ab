//! Lexical-substitution evaluation measures.
//!
//! Per-instance scores are fractions in `[0, 1]`; aggregates are percentages. Guesses are
//! matched against gold by case-folded exact string comparison, after dropping repeated
//! guesses (first position wins).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GoldAnnotation, SwordsAnnotation};
use crate::scalar::Scalar;

pub const BEST: &str = "best";
pub const BEST_MODE: &str = "best-m";
pub const OOT: &str = "oot";
pub const OOT_MODE: &str = "oot-m";
pub const P_AT_1: &str = "p@1";
pub const GAP: &str = "gap";
pub const F_ACCEPTABLE: &str = "f_a";
pub const F_CONCEIVABLE: &str = "f_c";

/// Out-of-ten guess limit.
pub const OOT_LIMIT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("instance {0}: gold set is empty")]
    EmptyGold(String),
}

/// Case-folds and removes repeated guesses, keeping first positions.
pub fn dedup_guesses<G: AsRef<str>>(guesses: &[G]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(guesses.len());
    for g in guesses {
        let folded = g.as_ref().to_lowercase();
        if seen.insert(folded.clone()) {
            out.push(folded);
        } else {
            log::warn!("duplicate guess {:?} dropped", g.as_ref());
        }
    }
    out
}

fn capped<G: AsRef<str>>(guesses: &[G], limit: usize) -> Vec<String> {
    let mut g = dedup_guesses(guesses);
    if g.len() > limit {
        log::warn!("{} guesses truncated to {limit}", g.len());
        g.truncate(limit);
    }
    g
}

/// Credit of the guesses divided by the number of guesses and the total gold weight.
pub fn score_best<S: Scalar, G: AsRef<str>>(gold: &GoldAnnotation<S>, guesses: &[G]) -> S {
    let guesses = dedup_guesses(guesses);
    if guesses.is_empty() {
        return S::zero();
    }
    let credit: S = guesses.iter().map(|g| gold.weight(g)).sum();
    credit / (S::count(guesses.len()) * gold.total_weight())
}

/// 1 when the first guess is the unique gold mode; `None` when the gold has no unique mode.
pub fn score_best_mode<S: Scalar, G: AsRef<str>>(gold: &GoldAnnotation<S>, guesses: &[G]) -> Option<S> {
    let mode = gold.mode()?;
    let hit = guesses.first().is_some_and(|g| g.as_ref().to_lowercase() == mode);
    Some(if hit { S::one() } else { S::zero() })
}

/// Credit of up to ten guesses divided by the total gold weight.
pub fn score_oot<S: Scalar, G: AsRef<str>>(gold: &GoldAnnotation<S>, guesses: &[G]) -> S {
    let guesses = capped(guesses, OOT_LIMIT);
    let credit: S = guesses.iter().map(|g| gold.weight(g)).sum();
    credit / gold.total_weight()
}

/// 1 when the unique gold mode is among the first ten guesses.
pub fn score_oot_mode<S: Scalar, G: AsRef<str>>(gold: &GoldAnnotation<S>, guesses: &[G]) -> Option<S> {
    let mode = gold.mode()?;
    let hit = capped(guesses, OOT_LIMIT).iter().any(|g| g == mode);
    Some(if hit { S::one() } else { S::zero() })
}

/// 1 when the first guess is any gold substitute.
pub fn score_p_at_1<S: Scalar, G: AsRef<str>>(gold: &GoldAnnotation<S>, guesses: &[G]) -> S {
    match guesses.first() {
        Some(g) if gold.weight(g.as_ref()) > S::zero() => S::one(),
        _ => S::zero(),
    }
}

/// Generalized average precision of a ranked list against weighted gold.
///
/// With `x_i` the gold weight at rank `i` (1-based) and `y` the gold weights sorted
/// nonincreasing: `Σ_i [x_i>0]·(Σ_{k≤i} x_k)/i  /  Σ_j [y_j>0]·(Σ_{k≤j} y_k)/j`.
pub fn score_gap<S: Scalar, G: AsRef<str>>(gold: &GoldAnnotation<S>, ranked: &[G]) -> S {
    fn average_precision<S: Scalar>(weights: impl Iterator<Item = S>) -> S {
        let mut cumulative = S::zero();
        let mut total = S::zero();
        for (i, x) in weights.enumerate() {
            cumulative += x;
            if x > S::zero() {
                total += cumulative / S::count(i + 1);
            }
        }
        total
    }
    let ranked = dedup_guesses(ranked);
    let mut ideal: Vec<S> = gold.substitutes().values().copied().filter(|&w| w > S::zero()).collect();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let denominator = average_precision(ideal.into_iter());
    if denominator <= S::zero() {
        return S::zero();
    }
    average_precision(ranked.iter().map(|g| gold.weight(g))) / denominator
}

/// Which SwordS gold set to score against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwordsGold {
    /// Strict majority of annotators.
    Acceptable,
    /// At least one annotator.
    Conceivable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall<S = f64> {
    pub precision: S,
    pub recall: S,
    pub f: S,
}

/// Precision, recall and F of the top-ten guesses against the chosen SwordS gold set.
pub fn score_swords<S: Scalar, G: AsRef<str>>(
    annotation: &SwordsAnnotation,
    top10: &[G],
    gold_set: SwordsGold,
) -> Result<PrecisionRecall<S>, MetricError> {
    let gold = match gold_set {
        SwordsGold::Acceptable => annotation.acceptable(),
        SwordsGold::Conceivable => annotation.conceivable(),
    };
    if gold.is_empty() {
        return Err(MetricError::EmptyGold(annotation.instance_id.clone()));
    }
    let guesses = capped(top10, OOT_LIMIT);
    let hits = guesses.iter().filter(|g| gold.contains(g.as_str())).count();
    let precision = if guesses.is_empty() { S::zero() } else { S::count(hits) / S::count(guesses.len()) };
    let recall = S::count(hits) / S::count(gold.len());
    let f = if precision + recall > S::zero() {
        S::lit(2.0) * precision * recall / (precision + recall)
    } else {
        S::zero()
    };
    Ok(PrecisionRecall { precision, recall, f })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub answered: usize,
    pub total: usize,
    pub with_mode: usize,
}

/// Per-instance and aggregate scores.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct MetricReport<S = f64> {
    pub per_instance: BTreeMap<String, BTreeMap<String, S>>,
    /// Percentages.
    pub aggregate: BTreeMap<String, S>,
    pub counts: Counts,
}

impl<S: Scalar> MetricReport<S> {
    /// Folds another report into this one; metrics from `other` overwrite on collision.
    pub fn merge(&mut self, other: MetricReport<S>) {
        for (id, metrics) in other.per_instance {
            self.per_instance.entry(id).or_default().extend(metrics);
        }
        self.aggregate.extend(other.aggregate);
        self.counts.answered = self.counts.answered.max(other.counts.answered);
        self.counts.total = self.counts.total.max(other.counts.total);
        self.counts.with_mode = self.counts.with_mode.max(other.counts.with_mode);
    }

    /// Fixed-width console rendering of the aggregates.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>8}", "metric", "score");
        let _ = writeln!(out, "{:-<10} {:->8}", "", "");
        for (name, value) in &self.aggregate {
            let _ = writeln!(out, "{:<10} {:>8.2}", name, value.to_f64_lossy());
        }
        let _ = writeln!(
            out,
            "answered {}/{} (with mode: {})",
            self.counts.answered, self.counts.total, self.counts.with_mode
        );
        out
    }
}

/// Options for the SemEval-style metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemevalOptions {
    /// Guesses submitted to `best` / `best-m`.
    pub best_k: usize,
    /// Guesses submitted to `oot` / `oot-m`.
    pub oot_k: usize,
    /// Credit P@1 only when the first guess is the gold mode; instances without a unique
    /// mode fall back to any gold substitute.
    pub mode_p_at_1: bool,
}

impl Default for SemevalOptions {
    fn default() -> Self {
        Self { best_k: 1, oot_k: OOT_LIMIT, mode_p_at_1: false }
    }
}

struct Accumulator<S> {
    sums: BTreeMap<&'static str, (S, usize)>,
}

impl<S: Scalar> Accumulator<S> {
    fn new() -> Self {
        Self { sums: BTreeMap::new() }
    }

    fn add(&mut self, metric: &'static str, value: S) {
        let e = self.sums.entry(metric).or_insert((S::zero(), 0));
        e.0 += value;
        e.1 += 1;
    }

    fn percentages(self) -> BTreeMap<String, S> {
        self.sums
            .into_iter()
            .filter(|(_, (_, n))| *n > 0)
            .map(|(k, (sum, n))| (k.to_string(), S::lit(100.0) * sum / S::count(n)))
            .collect()
    }
}

fn answered_count<S>(gold_ids: impl Iterator<Item = S>, predictions: &BTreeMap<String, Vec<String>>) -> usize
where
    S: AsRef<str>,
{
    gold_ids.filter(|id| predictions.get(id.as_ref()).is_some_and(|p| !p.is_empty())).count()
}

/// best, best-m, oot, oot-m and P@1 over every gold instance. Missing or empty predictions
/// count as unanswered (zero credit).
pub fn evaluate_semeval<S: Scalar>(
    gold: &BTreeMap<String, GoldAnnotation<S>>,
    predictions: &BTreeMap<String, Vec<String>>,
    options: SemevalOptions,
) -> MetricReport<S> {
    let empty = Vec::new();
    let mut acc = Accumulator::new();
    let mut report = MetricReport::default();
    for (id, g) in gold {
        let guesses = predictions.get(id).unwrap_or(&empty);
        let best_guesses = &guesses[..guesses.len().min(options.best_k)];
        let oot_guesses = &guesses[..guesses.len().min(options.oot_k)];
        let mut row = BTreeMap::new();
        let best = score_best(g, best_guesses);
        let oot = score_oot(g, oot_guesses);
        let p1 = if options.mode_p_at_1 {
            score_best_mode(g, guesses).unwrap_or_else(|| score_p_at_1(g, guesses))
        } else {
            score_p_at_1(g, guesses)
        };
        for (name, value) in [(BEST, best), (OOT, oot), (P_AT_1, p1)] {
            acc.add(name, value);
            row.insert(name.to_string(), value);
        }
        if let Some(bm) = score_best_mode(g, best_guesses) {
            acc.add(BEST_MODE, bm);
            row.insert(BEST_MODE.to_string(), bm);
            report.counts.with_mode += 1;
        }
        if let Some(om) = score_oot_mode(g, oot_guesses) {
            acc.add(OOT_MODE, om);
            row.insert(OOT_MODE.to_string(), om);
        }
        report.per_instance.insert(id.clone(), row);
    }
    report.counts.total = gold.len();
    report.counts.answered = answered_count(gold.keys(), predictions);
    report.aggregate = acc.percentages();
    report
}

/// Mean GAP over every gold instance, scoring full ranked lists.
pub fn evaluate_gap<S: Scalar>(
    gold: &BTreeMap<String, GoldAnnotation<S>>,
    predictions: &BTreeMap<String, Vec<String>>,
) -> MetricReport<S> {
    let empty = Vec::new();
    let mut acc = Accumulator::new();
    let mut report = MetricReport::default();
    for (id, g) in gold {
        let value = score_gap(g, predictions.get(id).unwrap_or(&empty));
        acc.add(GAP, value);
        report.per_instance.insert(id.clone(), BTreeMap::from([(GAP.to_string(), value)]));
    }
    report.counts.total = gold.len();
    report.counts.answered = answered_count(gold.keys(), predictions);
    report.aggregate = acc.percentages();
    report
}

/// Mean top-ten F against the acceptable and conceivable gold sets. Instances with an
/// empty gold set are skipped for that set.
pub fn evaluate_swords<S: Scalar>(
    gold: &BTreeMap<String, SwordsAnnotation>,
    predictions: &BTreeMap<String, Vec<String>>,
    top_n: usize,
) -> MetricReport<S> {
    let empty = Vec::new();
    let mut acc = Accumulator::new();
    let mut report = MetricReport::default();
    for (id, ann) in gold {
        let guesses = predictions.get(id).unwrap_or(&empty);
        let top = &guesses[..guesses.len().min(top_n)];
        let mut row = BTreeMap::new();
        for (name, set) in [(F_ACCEPTABLE, SwordsGold::Acceptable), (F_CONCEIVABLE, SwordsGold::Conceivable)] {
            match score_swords::<S, _>(ann, top, set) {
                Ok(prf) => {
                    acc.add(name, prf.f);
                    row.insert(name.to_string(), prf.f);
                }
                Err(e) => log::warn!("{e}; skipped for {name}"),
            }
        }
        report.per_instance.insert(id.clone(), row);
    }
    report.counts.total = gold.len();
    report.counts.answered = answered_count(gold.keys(), predictions);
    report.aggregate = acc.percentages();
    report
}
