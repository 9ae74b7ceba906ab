use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_prefix, BackendError, ConditionalModel, LmDistribution};
use crate::scalar::Scalar;
use crate::text::{DecodePrefix, TokenId, TokenizedSentence, Tokenizer, Vocab, CONTINUATION_PREFIX};

const SUM_TOLERANCE: f64 = 1e-9;

/// On-disk form of a [`TableModel`].
///
/// `entries` maps a space-joined context (the trailing decoder tokens) to a next-token
/// distribution; the empty key matches every context. `default` applies when no key matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableFixture {
    pub vocab: Vec<String>,
    pub eos: String,
    #[serde(default)]
    pub entries: BTreeMap<String, BTreeMap<String, f64>>,
    pub default: BTreeMap<String, f64>,
}

impl TableFixture {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }
}

/// Deterministic table-driven conditional model. Ignores the source sentence and conditions
/// on the longest matching suffix of the decoder prefix.
#[derive(Debug, Clone)]
pub struct TableModel<S = f64> {
    vocab: Vocab,
    entries: HashMap<Vec<TokenId>, LmDistribution<S>>,
    default: LmDistribution<S>,
    max_context: usize,
    id: String,
}

impl<S: Scalar> TableModel<S> {
    pub fn from_fixture(fixture: &TableFixture) -> Result<Self, BackendError> {
        let vocab = Vocab::new(fixture.vocab.clone(), &fixture.eos)?;
        let default = distribution(&vocab, &fixture.default, "default")?;
        let mut entries = HashMap::with_capacity(fixture.entries.len());
        let mut max_context = 0;
        for (ctx, probs) in &fixture.entries {
            let key = ctx
                .split_whitespace()
                .map(|t| {
                    vocab
                        .id(t)
                        .ok_or_else(|| BackendError::InvalidFixture(format!("context {ctx:?}: unknown token {t:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            max_context = max_context.max(key.len());
            if entries.insert(key, distribution(&vocab, probs, ctx)?).is_some() {
                return Err(BackendError::InvalidFixture(format!("context {ctx:?} listed twice")));
            }
        }
        let canonical = serde_json::to_vec(fixture).expect("fixture serializes");
        let id = format!("table-{}", &hex::encode(Sha256::digest(&canonical))[..16]);
        Ok(Self { vocab, entries, default, max_context, id })
    }

    pub fn from_json(json: &str) -> Result<Self, BackendError> {
        let fixture: TableFixture =
            serde_json::from_str(json).map_err(|e| BackendError::InvalidFixture(e.to_string()))?;
        Self::from_fixture(&fixture)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path)
            .map_err(|e| BackendError::InvalidFixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn lookup(&self, prefix: &[TokenId]) -> &LmDistribution<S> {
        let longest = prefix.len().min(self.max_context);
        (0..=longest).rev().find_map(|n| self.entries.get(&prefix[prefix.len() - n..])).unwrap_or(&self.default)
    }
}

fn distribution<S: Scalar>(
    vocab: &Vocab,
    probs: &BTreeMap<String, f64>,
    label: &str,
) -> Result<LmDistribution<S>, BackendError> {
    let mut dense = vec![0.0f64; vocab.len()];
    for (tok, &p) in probs {
        let id = vocab
            .id(tok)
            .ok_or_else(|| BackendError::InvalidFixture(format!("entry {label:?}: unknown token {tok:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(BackendError::InvalidFixture(format!("entry {label:?}: probability {p} for {tok:?}")));
        }
        dense[id.index()] = p;
    }
    let sum: f64 = dense.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(BackendError::InvalidFixture(format!("entry {label:?} sums to {sum}")));
    }
    let dense: Vec<S> = dense.into_iter().map(S::lit).collect();
    Ok(LmDistribution::from_probs(&dense))
}

impl<S: Scalar> ConditionalModel<S> for TableModel<S> {
    fn model_id(&self) -> String {
        self.id.clone()
    }

    fn tokenizer(&self) -> &dyn Tokenizer {
        &self.vocab
    }

    fn next_distribution(
        &self,
        _source: &TokenizedSentence,
        prefix: &DecodePrefix,
    ) -> Result<LmDistribution<S>, BackendError> {
        check_prefix(prefix, self.vocab.len())?;
        Ok(self.lookup(&prefix.tokens).clone())
    }
}

/// Shape of randomly generated table fixtures.
#[derive(Debug, Clone)]
pub struct RandomTableSpec {
    /// Whole-word tokens (excluding end-of-sequence).
    pub words: usize,
    /// `##` continuation pieces.
    pub pieces: usize,
    /// Number of context entries besides the default.
    pub contexts: usize,
    pub max_context_len: usize,
}

impl Default for RandomTableSpec {
    fn default() -> Self {
        Self { words: 8, pieces: 2, contexts: 12, max_context_len: 2 }
    }
}

/// Generates a random, valid fixture. Weights are small integers so exact ties occur.
pub fn random_table_fixture<R: Rng + ?Sized>(rng: &mut R, spec: &RandomTableSpec) -> TableFixture {
    let mut vocab: Vec<String> = (0..spec.words).map(|i| format!("w{i}")).collect();
    vocab.extend((0..spec.pieces).map(|i| format!("{CONTINUATION_PREFIX}p{i}")));
    vocab.push("</s>".into());
    let random_dist = |rng: &mut R| {
        let mut weights: Vec<u32> = (0..vocab.len()).map(|_| rng.gen_range(0..4)).collect();
        if weights.iter().all(|&w| w == 0) {
            let i = rng.gen_range(0..weights.len());
            weights[i] = 1;
        }
        let total: u32 = weights.iter().sum();
        vocab
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 0)
            .map(|(t, &w)| (t.clone(), f64::from(w) / f64::from(total)))
            .collect::<BTreeMap<_, _>>()
    };
    let default = random_dist(rng);
    let mut entries = BTreeMap::new();
    for _ in 0..spec.contexts {
        let len = rng.gen_range(0..=spec.max_context_len);
        let ctx: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
        let dist = random_dist(rng);
        entries.insert(ctx.join(" "), dist);
    }
    TableFixture { vocab, eos: "</s>".into(), entries, default }
}

/// Draws a sentence of whole-word tokens from `fixture` and a random target; returns the
/// text and the target char span.
pub fn random_sentence<R: Rng + ?Sized>(
    rng: &mut R,
    fixture: &TableFixture,
    max_len: usize,
) -> (String, (usize, usize)) {
    let words: Vec<&String> =
        fixture.vocab.iter().filter(|t| !t.starts_with(CONTINUATION_PREFIX) && **t != fixture.eos).collect();
    let len = rng.gen_range(1..=max_len.max(1));
    let chosen: Vec<&str> = (0..len).map(|_| words.choose(rng).expect("fixture has words").as_str()).collect();
    let target = rng.gen_range(0..len);
    let start: usize = chosen[..target].iter().map(|w| w.chars().count() + 1).sum();
    let end = start + chosen[target].chars().count();
    (chosen.join(" "), (start, end))
}
