use std::collections::BTreeMap;
use std::sync::Arc;

use parals_core::backends::{random_sentence, random_table_fixture, RandomTableSpec};
use parals_core::io::{
    parse_gold_legacy, read_predictions_jsonl, write_predictions, CacheEntry, CacheKey, PredictionRecord,
    PredictionStyle, ScoreCache,
};
use parals_core::{
    generate_candidates, CandidateSet, ConditionalModel, FeatureVector, GoldAnnotation, MorphologyFilter, RunConfig,
    Strategy as DecodeStrategy, TableModel, TokenizedSentence,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLD_SAMPLE: &str = include_str!("fixtures/gold_sample.txt");
const GOLD_CHECKSUM: &str = include_str!("fixtures/gold_sample.checksum");

fn stated(name: &str) -> f64 {
    GOLD_CHECKSUM
        .lines()
        .find_map(|l| l.strip_prefix(name).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("checksum file lacks {name}"))
}

#[test]
fn gold_corpus_matches_stated_checksum() {
    let gold = parse_gold_legacy::<f64>(GOLD_SAMPLE).unwrap();
    assert_eq!(gold.len() as f64, stated("instances"));
    let subs: usize = gold.values().map(|g| g.substitutes().len()).sum();
    assert_eq!(subs as f64, stated("substitutes"));
    let total: f64 = gold.values().map(GoldAnnotation::total_weight).sum();
    assert_eq!(total, stated("total_weight"));
    assert!(gold["12"].substitutes().contains_key("motion picture"));
    assert!(!gold["21"].substitutes().contains_key("chuck"));
}

fn random_case(seed: u64) -> (TableModel, Arc<TokenizedSentence>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixture = random_table_fixture(&mut rng, &RandomTableSpec::default());
    let model = TableModel::from_fixture(&fixture).unwrap();
    let (text, span) = random_sentence(&mut rng, &fixture, 6);
    let sentence = Arc::new(TokenizedSentence::new(&text, span, model.tokenizer()).unwrap());
    (model, sentence)
}

fn feature_value() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        Just(None),
        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some),
        (-1e6f64..1e6).prop_map(Some),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detokenize_restores_normalized_text(seed in any::<u64>()) {
        let (model, sentence) = random_case(seed);
        prop_assert_eq!(model.tokenizer().decode(sentence.tokens()), sentence.normalized_text());
    }

    #[test]
    fn cache_round_trip_is_bitwise(
        seed in any::<u64>(),
        k in 1usize..6,
        values in proptest::collection::vec((feature_value(), feature_value()), 6),
    ) {
        let (model, sentence) = random_case(seed);
        let config = RunConfig { k, ..RunConfig::default() };
        let set: CandidateSet =
            generate_candidates(&model, sentence, &config, DecodeStrategy::Lookahead, &MorphologyFilter::default())
                .unwrap();
        let features: Vec<FeatureVector> = set
            .candidates()
            .iter()
            .zip(&values)
            .map(|(c, (a, b))| FeatureVector {
                paraphraser: Some(c.decode_score),
                meaning_scores: BTreeMap::from([("scorer_a".to_string(), *a), ("scorer_b".to_string(), *b)]),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey {
            model_id: model.model_id(),
            instance_id: seed.to_string(),
            strategy: DecodeStrategy::Lookahead,
            config_hash: config.config_hash(),
        };
        let cache = ScoreCache::open(dir.path(), &model.model_id(), "random");
        let entry = CacheEntry { candidates: set.clone(), features: Some(features.clone()) };
        cache.put(&key, &entry);
        cache.flush().unwrap();
        let got: CacheEntry = ScoreCache::open(dir.path(), &model.model_id(), "random").get(&key).unwrap();
        prop_assert_eq!(got.candidates.surfaces(), set.surfaces());
        for (a, b) in got.candidates.candidates().iter().zip(set.candidates()) {
            prop_assert_eq!(a.decode_score.to_bits(), b.decode_score.to_bits());
            prop_assert_eq!(&a.tokens, &b.tokens);
        }
        let bits = |f: &[FeatureVector]| -> Vec<Vec<Option<u64>>> {
            f.iter()
                .map(|v| {
                    std::iter::once(v.paraphraser)
                        .chain(v.meaning_scores.values().copied())
                        .map(|x| x.map(f64::to_bits))
                        .collect()
                })
                .collect()
        };
        prop_assert_eq!(bits(&got.features.unwrap()), bits(&features));
        let stale = CacheKey { config_hash: RunConfig { k: k + 1, ..config }.config_hash(), ..key };
        prop_assert!(cache.get::<f64>(&stale).is_none());
    }

    #[test]
    fn prediction_jsonl_round_trips(
        subs in proptest::collection::btree_set("[a-zA-Z' -]{1,12}", 0..8),
        score in proptest::option::of(any::<f64>().prop_filter("finite", |v| v.is_finite())),
        id in "[0-9a-z._]{1,8}",
    ) {
        let mut seen = std::collections::BTreeSet::new();
        let substitutes: Vec<String> = subs.into_iter().filter(|s| seen.insert(s.to_lowercase())).collect();
        let scores = score.map(|s| substitutes.iter().enumerate().map(|(i, _)| s / (i + 1) as f64).collect());
        let record = PredictionRecord { instance_id: id, lexelt: "word.n".into(), substitutes, scores };
        let text = write_predictions(std::slice::from_ref(&record), PredictionStyle::Jsonl).unwrap();
        let back = read_predictions_jsonl(&text).unwrap();
        prop_assert_eq!(&back, &vec![record]);
        prop_assert_eq!(write_predictions(&back, PredictionStyle::Jsonl).unwrap(), text);
    }
}

#[test]
fn strategy_names_round_trip() {
    for s in [DecodeStrategy::PrefixOnly, DecodeStrategy::Lookahead] {
        assert_eq!(s.to_string().parse::<DecodeStrategy>().unwrap(), s);
    }
}
