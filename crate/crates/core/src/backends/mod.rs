//! Sequence-model and sentence-pair-scorer contracts, plus the deterministic test doubles.
//!
//! Every log-probability the decoder sees comes from [`ConditionalModel::next_distribution`].
//! Zero probabilities are mapped to a finite sentinel (see [`crate::scalar::LOG_ZERO`]).

mod oracle;
mod scorer;
mod table;

use std::sync::Mutex;

use thiserror::Error;

pub use oracle::{oracle_topk_next, ORACLE_MAX_VOCAB};
pub use scorer::{
    mock_pair_scorer, CharEditScorer, PairScorer, ScorerError, SerializedScorer, TokenEditScorer, UnsyncPairScorer,
};
pub use table::{random_sentence, random_table_fixture, RandomTableSpec, TableFixture, TableModel};

use crate::scalar::Scalar;
use crate::text::{DecodePrefix, TokenId, TokenizedSentence, Tokenizer, VocabError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("token id {id} is outside the vocabulary (size {vocab_size})")]
    UnknownToken { id: u32, vocab_size: usize },
    #[error("vocabulary of {0} tokens is too large for exhaustive enumeration")]
    VocabTooLarge(usize),
    #[error("invalid table fixture: {0}")]
    InvalidFixture(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("sequence must not be empty")]
    EmptySequence,
    #[error("backend failure: {0}")]
    Backend(String),
}

/// Next-token log-probabilities over a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LmDistribution<S = f64> {
    logprobs: Vec<S>,
}

impl<S: Scalar> LmDistribution<S> {
    /// Builds a distribution from probabilities; zero maps to the log-zero sentinel.
    pub fn from_probs(probs: &[S]) -> Self {
        Self { logprobs: probs.iter().map(|&p| p.safe_ln()).collect() }
    }

    pub fn from_logprobs(logprobs: Vec<S>) -> Self {
        Self { logprobs }
    }

    pub fn vocab_size(&self) -> usize {
        self.logprobs.len()
    }

    pub fn logprobs(&self) -> &[S] {
        &self.logprobs
    }

    pub fn logprob(&self, token: TokenId) -> S {
        self.logprobs.get(token.index()).copied().unwrap_or_else(S::log_zero)
    }

    pub fn prob(&self, token: TokenId) -> S {
        let lp = self.logprob(token);
        if lp <= S::log_zero() {
            S::zero()
        } else {
            lp.exp()
        }
    }

    /// Total probability mass; 1 for a well-formed distribution.
    pub fn mass(&self) -> S {
        (0..self.logprobs.len()).map(|i| self.prob(TokenId(i as u32))).sum()
    }

    /// Most likely token, lowest id on ties.
    pub fn argmax(&self) -> Option<TokenId> {
        let mut best: Option<(usize, S)> = None;
        for (i, &lp) in self.logprobs.iter().enumerate() {
            if best.is_none_or(|(_, b)| lp > b) {
                best = Some((i, lp));
            }
        }
        best.map(|(i, _)| TokenId(i as u32))
    }
}

/// A conditional autoregressive model `p(y_t | y_<t, x)`.
///
/// Implementations must be deterministic: identical `(source, prefix)` pairs yield identical
/// distributions. Models that cannot be shared across threads implement [`UnsyncModel`]
/// and are wrapped in [`SerializedModel`].
pub trait ConditionalModel<S: Scalar>: Send + Sync {
    /// Stable identifier used to key caches.
    fn model_id(&self) -> String;

    fn tokenizer(&self) -> &dyn Tokenizer;

    fn eos(&self) -> TokenId {
        self.tokenizer().eos()
    }

    fn vocab_size(&self) -> usize {
        self.tokenizer().vocab_size()
    }

    fn next_distribution(
        &self,
        source: &TokenizedSentence,
        prefix: &DecodePrefix,
    ) -> Result<LmDistribution<S>, BackendError>;

    /// Batched variant; same results as calling [`ConditionalModel::next_distribution`] per prefix.
    fn next_distributions(
        &self,
        source: &TokenizedSentence,
        prefixes: &[DecodePrefix],
    ) -> Result<Vec<LmDistribution<S>>, BackendError> {
        prefixes.iter().map(|p| self.next_distribution(source, p)).collect()
    }
}

/// Rejects prefixes containing ids outside `0..vocab_size`.
pub fn check_prefix(prefix: &DecodePrefix, vocab_size: usize) -> Result<(), BackendError> {
    match prefix.tokens.iter().find(|t| t.index() >= vocab_size) {
        Some(t) => Err(BackendError::UnknownToken { id: t.0, vocab_size }),
        None => Ok(()),
    }
}

/// `log p(tokens | source)` by the chain rule, accumulated left to right.
pub fn sequence_logprob<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    source: &TokenizedSentence,
    tokens: &[TokenId],
) -> Result<S, BackendError> {
    if tokens.is_empty() {
        return Err(BackendError::EmptySequence);
    }
    let mut prefix = DecodePrefix::default();
    let mut total = S::zero();
    for &tok in tokens {
        if tok.index() >= model.vocab_size() {
            return Err(BackendError::UnknownToken { id: tok.0, vocab_size: model.vocab_size() });
        }
        let dist = model.next_distribution(source, &prefix)?;
        total += dist.logprob(tok);
        prefix.tokens.push(tok);
    }
    Ok(total)
}

/// A model that needs exclusive access per call.
pub trait UnsyncModel<S: Scalar>: Send {
    fn model_id(&self) -> String;

    fn next_distribution(
        &mut self,
        source: &TokenizedSentence,
        prefix: &DecodePrefix,
    ) -> Result<LmDistribution<S>, BackendError>;
}

/// Serializing gate that turns an [`UnsyncModel`] into a shareable [`ConditionalModel`].
pub struct SerializedModel<M, T> {
    inner: Mutex<M>,
    tokenizer: T,
}

impl<M, T> SerializedModel<M, T> {
    pub fn new(model: M, tokenizer: T) -> Self {
        Self { inner: Mutex::new(model), tokenizer }
    }
}

impl<S: Scalar, M: UnsyncModel<S>, T: Tokenizer> ConditionalModel<S> for SerializedModel<M, T> {
    fn model_id(&self) -> String {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).model_id()
    }

    fn tokenizer(&self) -> &dyn Tokenizer {
        &self.tokenizer
    }

    fn next_distribution(
        &self,
        source: &TokenizedSentence,
        prefix: &DecodePrefix,
    ) -> Result<LmDistribution<S>, BackendError> {
        check_prefix(prefix, self.tokenizer.vocab_size())?;
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).next_distribution(source, prefix)
    }
}
