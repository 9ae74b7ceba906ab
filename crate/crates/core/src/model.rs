//! Domain types shared across generation, ranking and evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cmp_desc, Scalar};
use crate::text::{TokenId, TokenizedSentence};

/// Candidate scoring strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Score `log p(y_t | x_<t)` after forcing the source prefix.
    PrefixOnly,
    /// Average the candidate token log-prob with the forced-suffix log-probs that follow it.
    Lookahead,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::PrefixOnly => "prefix",
            Strategy::Lookahead => "lookahead",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prefix" | "prefix_only" | "parals" => Ok(Strategy::PrefixOnly),
            "lookahead" | "parals-star" => Ok(Strategy::Lookahead),
            other => Err(format!("unknown strategy {other:?} (expected prefix or lookahead)")),
        }
    }
}

/// A substitute word produced by the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct Candidate<S = f64> {
    pub surface: String,
    pub tokens: Vec<TokenId>,
    /// Strategy score of the first token, log domain.
    pub decode_score: S,
    pub strategy: Strategy,
    /// Set when word completion hit the token limit before a word boundary.
    #[serde(default)]
    pub truncated: bool,
}

impl<S: Scalar> Candidate<S> {
    pub fn first_token(&self) -> Option<TokenId> {
        self.tokens.first().copied()
    }

    pub fn folded(&self) -> String {
        self.surface.to_lowercase()
    }
}

/// Orders candidates by decode score (descending), then ascending first-token id.
pub fn candidate_order<S: Scalar>(a: &Candidate<S>, b: &Candidate<S>) -> std::cmp::Ordering {
    let first = |c: &Candidate<S>| c.first_token().map_or(u32::MAX, |t| t.0);
    cmp_desc(a.decode_score, b.decode_score)
        .then_with(|| first(a).cmp(&first(b)))
        .then_with(|| a.surface.cmp(&b.surface))
}

/// Scored substitute candidates for one target word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct CandidateSet<S = f64> {
    pub sentence: Arc<TokenizedSentence>,
    candidates: Vec<Candidate<S>>,
    pub k_requested: usize,
}

impl<S: Scalar> CandidateSet<S> {
    /// Sorts, drops case-folded duplicates (keeping the better one) and truncates to `k`.
    pub fn new(sentence: Arc<TokenizedSentence>, mut candidates: Vec<Candidate<S>>, k: usize) -> Self {
        candidates.sort_by(candidate_order);
        let mut seen = BTreeSet::new();
        candidates.retain(|c| seen.insert(c.folded()));
        candidates.truncate(k);
        Self { sentence, candidates, k_requested: k }
    }

    pub fn candidates(&self) -> &[Candidate<S>] {
        &self.candidates
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.surface.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Ranking features for one candidate. `None` marks a disabled or failed feature.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct FeatureVector<S = f64> {
    pub paraphraser: Option<S>,
    pub meaning_scores: BTreeMap<String, Option<S>>,
}

/// One ranked entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct RankedEntry<S = f64> {
    pub candidate: Candidate<S>,
    pub features: FeatureVector<S>,
    pub combined_score: S,
}

/// Candidates ordered by combined score.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct RankedSubstitutes<S = f64> {
    pub entries: Vec<RankedEntry<S>>,
}

impl<S: Scalar> RankedSubstitutes<S> {
    pub fn surfaces(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.candidate.surface.as_str()).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("instance {0}: no substitutes")]
    Empty(String),
    #[error("instance {id}: substitute {word:?} has non-positive weight")]
    NonPositiveWeight { id: String, word: String },
    #[error("instance {id}: substitute {word:?} has {good} good votes out of {total}")]
    InvalidVotes { id: String, word: String, good: u32, total: u32 },
}

/// Weighted gold substitutes for one benchmark instance. Keys are case-folded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct GoldAnnotation<S = f64> {
    pub instance_id: String,
    pub target_lemma: String,
    pub pos_tag: Option<String>,
    substitutes: BTreeMap<String, S>,
}

impl<S: Scalar> GoldAnnotation<S> {
    /// Validates weights; case-folded duplicates are merged by summing.
    pub fn new(
        instance_id: impl Into<String>,
        target_lemma: impl Into<String>,
        pos_tag: Option<String>,
        substitutes: impl IntoIterator<Item = (String, S)>,
    ) -> Result<Self, AnnotationError> {
        let instance_id = instance_id.into();
        let mut merged: BTreeMap<String, S> = BTreeMap::new();
        for (word, weight) in substitutes {
            if !weight.is_finite() || weight <= S::zero() {
                return Err(AnnotationError::NonPositiveWeight { id: instance_id, word });
            }
            *merged.entry(word.to_lowercase()).or_insert_with(S::zero) += weight;
        }
        if merged.is_empty() {
            return Err(AnnotationError::Empty(instance_id));
        }
        Ok(Self { instance_id, target_lemma: target_lemma.into(), pos_tag, substitutes: merged })
    }

    pub fn substitutes(&self) -> &BTreeMap<String, S> {
        &self.substitutes
    }

    /// Gold weight of `surface` (case-folded), zero when absent.
    pub fn weight(&self, surface: &str) -> S {
        self.substitutes.get(&surface.to_lowercase()).copied().unwrap_or_else(S::zero)
    }

    pub fn total_weight(&self) -> S {
        self.substitutes.values().copied().sum()
    }

    /// The unique highest-weighted substitute, if there is one.
    pub fn mode(&self) -> Option<&str> {
        let max = self.substitutes.values().copied().fold(S::neg_infinity(), S::max);
        let mut top = self.substitutes.iter().filter(|(_, &w)| w == max);
        match (top.next(), top.next()) {
            (Some((word, _)), None) => Some(word),
            _ => None,
        }
    }

    pub fn lexelt(&self) -> String {
        match &self.pos_tag {
            Some(pos) => format!("{}.{}", self.target_lemma, pos),
            None => self.target_lemma.clone(),
        }
    }
}

/// Annotator votes for one substitute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Votes {
    pub good: u32,
    pub total: u32,
}

/// Crowd judgements for one SwordS-style instance. Keys are case-folded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwordsAnnotation {
    pub instance_id: String,
    votes: BTreeMap<String, Votes>,
}

impl SwordsAnnotation {
    pub fn new(
        instance_id: impl Into<String>,
        votes: impl IntoIterator<Item = (String, Votes)>,
    ) -> Result<Self, AnnotationError> {
        let instance_id = instance_id.into();
        let mut map = BTreeMap::new();
        for (word, v) in votes {
            if v.total == 0 || v.good > v.total {
                return Err(AnnotationError::InvalidVotes { id: instance_id, word, good: v.good, total: v.total });
            }
            map.insert(word.to_lowercase(), v);
        }
        Ok(Self { instance_id, votes: map })
    }

    pub fn votes(&self) -> &BTreeMap<String, Votes> {
        &self.votes
    }

    /// Substitutes endorsed by a strict majority of annotators.
    pub fn acceptable(&self) -> BTreeSet<&str> {
        self.votes.iter().filter(|(_, v)| 2 * v.good > v.total).map(|(w, _)| w.as_str()).collect()
    }

    /// Substitutes endorsed by at least one annotator.
    pub fn conceivable(&self) -> BTreeSet<&str> {
        self.votes.iter().filter(|(_, v)| v.good >= 1).map(|(w, _)| w.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Vocab;

    fn sentence() -> Arc<TokenizedSentence> {
        let v = Vocab::new(vec!["a".into(), "</s>".into()], "</s>").unwrap();
        Arc::new(TokenizedSentence::new("a", (0, 1), &v).unwrap())
    }

    fn cand(surface: &str, first: u32, score: f64) -> Candidate {
        Candidate {
            surface: surface.into(),
            tokens: vec![TokenId(first)],
            decode_score: score,
            strategy: Strategy::PrefixOnly,
            truncated: false,
        }
    }

    #[test]
    fn candidate_set_orders_dedups_truncates() {
        let set = CandidateSet::new(
            sentence(),
            vec![cand("b", 5, -1.0), cand("A", 3, -0.5), cand("a", 1, -2.0), cand("c", 2, -1.0), cand("d", 9, -3.0)],
            3,
        );
        assert_eq!(set.surfaces(), ["A", "c", "b"]);
        assert_eq!(set.k_requested, 3);
    }

    #[test]
    fn gold_mode_and_weights() {
        let g = GoldAnnotation::new("1", "dry", Some("a".into()), [("arid".into(), 3.0), ("Waterless".into(), 1.0)])
            .unwrap();
        assert_eq!(g.mode(), Some("arid"));
        assert_eq!(g.weight("WATERLESS"), 1.0);
        assert_eq!(g.total_weight(), 4.0);
        assert_eq!(g.lexelt(), "dry.a");
        let tie = GoldAnnotation::new("2", "x", None, [("a".into(), 2.0), ("b".into(), 2.0)]).unwrap();
        assert_eq!(tie.mode(), None);
    }

    #[test]
    fn gold_rejects_bad_weights() {
        assert!(GoldAnnotation::<f64>::new("1", "x", None, []).is_err());
        assert!(GoldAnnotation::new("1", "x", None, [("a".into(), 0.0)]).is_err());
    }

    #[test]
    fn swords_thresholds() {
        let ann = SwordsAnnotation::new(
            "s1",
            [
                ("six".into(), Votes { good: 6, total: 10 }),
                ("five".into(), Votes { good: 5, total: 10 }),
                ("one".into(), Votes { good: 1, total: 10 }),
                ("zero".into(), Votes { good: 0, total: 10 }),
            ],
        )
        .unwrap();
        assert_eq!(ann.acceptable().into_iter().collect::<Vec<_>>(), ["six"]);
        assert_eq!(ann.conceivable().into_iter().collect::<Vec<_>>(), ["five", "one", "six"]);
        assert!(SwordsAnnotation::new("s", [("x".into(), Votes { good: 3, total: 2 })]).is_err());
    }

    #[test]
    fn strategy_parses() {
        assert_eq!("prefix".parse::<Strategy>(), Ok(Strategy::PrefixOnly));
        assert_eq!("lookahead".parse::<Strategy>(), Ok(Strategy::Lookahead));
        assert!("beam".parse::<Strategy>().is_err());
    }
}
