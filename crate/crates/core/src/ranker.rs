//! Substitute ranking: splice each candidate into the sentence, score the pair with the
//! meaning scorers, and combine with the decode score linearly.

use std::collections::BTreeMap;

use crate::backends::PairScorer;
use crate::config::{RunConfig, Weights, PARAPHRASER_FEATURE};
use crate::model::{Candidate, CandidateSet, FeatureVector, RankedEntry, RankedSubstitutes};
use crate::scalar::{cmp_desc, Scalar};
use crate::text::TokenizedSentence;

/// A named sentence-pair scorer.
pub struct NamedScorer<'a, S> {
    pub name: String,
    pub scorer: &'a dyn PairScorer<S>,
}

impl<'a, S> NamedScorer<'a, S> {
    pub fn new(name: impl Into<String>, scorer: &'a dyn PairScorer<S>) -> Self {
        Self { name: name.into(), scorer }
    }
}

/// Replaces exactly the target span of the original text with `surface`.
pub fn substitute_in_sentence(sentence: &TokenizedSentence, surface: &str) -> String {
    let span = sentence.target_byte_span();
    let text = sentence.text();
    let mut out = String::with_capacity(text.len() + surface.len());
    out.push_str(&text[..span.start]);
    out.push_str(surface);
    out.push_str(&text[span.end..]);
    out
}

/// Feature values for one candidate. Disabled features and failing scorers are `None`.
pub fn compute_features<S: Scalar>(
    scorers: &[NamedScorer<'_, S>],
    sentence: &TokenizedSentence,
    candidate: &Candidate<S>,
    config: &RunConfig,
) -> FeatureVector<S> {
    let paraphraser = config.is_enabled(PARAPHRASER_FEATURE).then_some(candidate.decode_score);
    let mut meaning_scores = BTreeMap::new();
    let updated = substitute_in_sentence(sentence, &candidate.surface);
    for named in scorers {
        let value = if config.is_enabled(&named.name) {
            match named.scorer.score(sentence.text(), &updated) {
                Ok(v) if v.is_finite() => Some(v),
                Ok(v) => {
                    log::warn!("scorer {} returned non-finite {v} for {:?}", named.name, candidate.surface);
                    None
                }
                Err(e) => {
                    log::warn!("{e}; feature recorded absent for {:?}", candidate.surface);
                    None
                }
            }
        } else {
            None
        };
        meaning_scores.insert(named.name.clone(), value);
    }
    FeatureVector { paraphraser, meaning_scores }
}

/// `w_p * paraphraser + Σ w_s * scorer_s` over present features.
pub fn combine<S: Scalar>(features: &FeatureVector<S>, weights: &Weights) -> S {
    let mut total = S::zero();
    if let Some(p) = features.paraphraser {
        total += S::lit(weights.paraphraser) * p;
    }
    for (name, value) in &features.meaning_scores {
        if let Some(v) = value {
            total += S::lit(weights.scorer(name)) * *v;
        }
    }
    total
}

fn min_max_normalize<S: Scalar>(features: &mut [FeatureVector<S>]) {
    fn rescale<S: Scalar>(values: Vec<&mut S>) {
        let (lo, hi) = values.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), v| (lo.min(**v), hi.max(**v)));
        let range = hi - lo;
        for v in values {
            *v = if range > S::zero() { (*v - lo) / range } else { S::zero() };
        }
    }
    rescale(features.iter_mut().filter_map(|f| f.paraphraser.as_mut()).collect());
    let names: Vec<String> = features.first().map(|f| f.meaning_scores.keys().cloned().collect()).unwrap_or_default();
    for name in names {
        rescale(features.iter_mut().filter_map(|f| f.meaning_scores.get_mut(&name).and_then(Option::as_mut)).collect());
    }
}

/// Ranks candidates by combined feature score; ties fall back to decode score, then surface.
pub fn rank_candidates<S: Scalar>(
    scorers: &[NamedScorer<'_, S>],
    sentence: &TokenizedSentence,
    candidates: &[Candidate<S>],
    config: &RunConfig,
) -> RankedSubstitutes<S> {
    let mut features: Vec<FeatureVector<S>> =
        candidates.iter().map(|c| compute_features(scorers, sentence, c, config)).collect();
    if config.normalize_features {
        min_max_normalize(&mut features);
    }
    let mut entries: Vec<RankedEntry<S>> = candidates
        .iter()
        .zip(features)
        .map(|(c, f)| RankedEntry { combined_score: combine(&f, &config.weights), candidate: c.clone(), features: f })
        .collect();
    entries.sort_by(|a, b| {
        cmp_desc(a.combined_score, b.combined_score)
            .then_with(|| cmp_desc(a.candidate.decode_score, b.candidate.decode_score))
            .then_with(|| a.candidate.surface.cmp(&b.candidate.surface))
    });
    RankedSubstitutes { entries }
}

/// [`rank_candidates`] over a generated set, using the set's own sentence.
pub fn rank_candidate_set<S: Scalar>(
    scorers: &[NamedScorer<'_, S>],
    set: &CandidateSet<S>,
    config: &RunConfig,
) -> RankedSubstitutes<S> {
    rank_candidates(scorers, &set.sentence, set.candidates(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{ScorerError, TokenEditScorer};
    use crate::config::{SCORER_A, SCORER_B};
    use crate::model::Strategy;
    use crate::text::Vocab;

    fn sentence(text: &str, span: (usize, usize)) -> TokenizedSentence {
        let words: Vec<String> = text.split_whitespace().map(String::from).chain(["</s>".into()]).collect();
        let mut uniq = words.clone();
        uniq.dedup();
        let v = Vocab::new(uniq, "</s>").unwrap();
        TokenizedSentence::new(text, span, &v).unwrap()
    }

    fn cand(surface: &str, score: f64) -> Candidate {
        Candidate {
            surface: surface.into(),
            tokens: vec![],
            decode_score: score,
            strategy: Strategy::PrefixOnly,
            truncated: false,
        }
    }

    struct Fixed(BTreeMap<String, f64>);

    impl PairScorer<f64> for Fixed {
        fn score(&self, _original: &str, updated: &str) -> Result<f64, ScorerError> {
            self.0
                .iter()
                .find(|(w, _)| updated.split_whitespace().any(|t| t == w.as_str()))
                .map(|(_, &v)| v)
                .ok_or_else(|| ScorerError { scorer: "fixed".into(), message: updated.into() })
        }
    }

    fn fixed(pairs: &[(&str, f64)]) -> Fixed {
        Fixed(pairs.iter().map(|(w, v)| (w.to_string(), *v)).collect())
    }

    #[test]
    fn splice_replaces_only_the_target() {
        let s = sentence("the cat sat", (4, 7));
        assert_eq!(substitute_in_sentence(&s, "dog"), "the dog sat");
        assert_eq!(substitute_in_sentence(&s, "cat"), "the cat sat");
        let s = sentence("a dry continent", (2, 5));
        assert_eq!(substitute_in_sentence(&s, "arid"), "a arid continent");
    }

    #[test]
    fn splice_keeps_surrounding_bytes() {
        let v = Vocab::new(vec!["so".into(), "dry".into(), ",".into(), "</s>".into()], "</s>").unwrap();
        let s = TokenizedSentence::new("so  dry,\tso", (4, 7), &v).unwrap();
        assert_eq!(substitute_in_sentence(&s, "arid"), "so  arid,\tso");
    }

    #[test]
    fn identity_candidate_scores_one() {
        let s = sentence("the cat sat", (4, 7));
        let mock = TokenEditScorer;
        let scorers = [NamedScorer::new(SCORER_A, &mock as &dyn PairScorer<f64>)];
        let f = compute_features(&scorers, &s, &cand("cat", -1.0), &RunConfig::default());
        assert_eq!(f.meaning_scores[SCORER_A], Some(1.0));
    }

    #[test]
    fn paraphraser_only_reduces_to_weighted_decode_score() {
        let s = sentence("the cat sat", (4, 7));
        let mock = TokenEditScorer;
        let scorers = [NamedScorer::new(SCORER_A, &mock as &dyn PairScorer<f64>)];
        let config = RunConfig { features_enabled: [PARAPHRASER_FEATURE.to_string()].into(), ..RunConfig::default() };
        let ranked = rank_candidates(&scorers, &s, &[cand("dog", -1.5), cand("cow", -0.5)], &config);
        assert_eq!(ranked.surfaces(), ["cow", "dog"]);
        assert!((ranked.entries[0].combined_score - 0.02 * -0.5).abs() < 1e-15);
        assert_eq!(ranked.entries[0].features.meaning_scores[SCORER_A], None);
    }

    #[test]
    fn weighted_combination_arithmetic() {
        let s = sentence("the cat sat", (4, 7));
        let a = fixed(&[("aa", 0.8), ("bb", 0.6)]);
        let b = fixed(&[("aa", 0.7), ("bb", 0.6)]);
        let scorers = [
            NamedScorer::new(SCORER_A, &a as &dyn PairScorer<f64>),
            NamedScorer::new(SCORER_B, &b as &dyn PairScorer<f64>),
        ];
        let ranked = rank_candidates(&scorers, &s, &[cand("bb", -0.5), cand("aa", -1.0)], &RunConfig::default());
        assert_eq!(ranked.surfaces(), ["aa", "bb"]);
        assert!((ranked.entries[0].combined_score - 1.48).abs() < 1e-12);
        assert!((ranked.entries[1].combined_score - 1.19).abs() < 1e-12);
    }

    #[test]
    fn equal_features_fall_back_to_decode_score() {
        let s = sentence("the cat sat", (4, 7));
        let config = RunConfig { weights: Weights { paraphraser: 0.0, ..Weights::default() }, ..RunConfig::default() };
        let ranked = rank_candidates::<f64>(&[], &s, &[cand("zz", -2.0), cand("yy", -1.0), cand("xx", -2.0)], &config);
        assert_eq!(ranked.surfaces(), ["yy", "xx", "zz"]);
    }

    #[test]
    fn single_scorer_dominates() {
        let s = sentence("the cat sat", (4, 7));
        let a = fixed(&[("cc", 0.9), ("dd", 0.1)]);
        let scorers = [NamedScorer::new(SCORER_A, &a as &dyn PairScorer<f64>)];
        let config = RunConfig { features_enabled: [SCORER_A.to_string()].into(), ..RunConfig::default() };
        let ranked = rank_candidates(&scorers, &s, &[cand("dd", -0.1), cand("cc", -9.0)], &config);
        assert_eq!(ranked.surfaces(), ["cc", "dd"]);
    }

    #[test]
    fn failing_scorer_is_absent() {
        let s = sentence("the cat sat", (4, 7));
        let a = fixed(&[("cc", 0.9)]);
        let scorers = [NamedScorer::new(SCORER_A, &a as &dyn PairScorer<f64>)];
        let f = compute_features(&scorers, &s, &cand("dd", -1.0), &RunConfig::default());
        assert_eq!(f.meaning_scores[SCORER_A], None);
        assert_eq!(f.paraphraser, Some(-1.0));
    }

    #[test]
    fn normalization_maps_to_unit_range() {
        let s = sentence("the cat sat", (4, 7));
        let config = RunConfig { normalize_features: true, ..RunConfig::default() };
        let ranked = rank_candidates::<f64>(&[], &s, &[cand("aa", -4.0), cand("bb", -1.0), cand("cc", -2.0)], &config);
        let p: Vec<f64> = ranked.entries.iter().map(|e| e.features.paraphraser.unwrap()).collect();
        assert_eq!(ranked.surfaces(), ["bb", "cc", "aa"]);
        assert_eq!(p[0], 1.0);
        assert_eq!(p[2], 0.0);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
    }
}
