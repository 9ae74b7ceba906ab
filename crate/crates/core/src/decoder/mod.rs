//! Substitute generation by prefix-fixed decoding, with optional lookahead over the
//! source words that follow the target.
//!
//! With the source prefix `x_<t` forced, every vocabulary token `y` gets a score:
//!
//! * prefix only: `log p(y | x_<t)`
//! * lookahead: the mean of `log p(y | x_<t)` and `log p(s_j | x_<t ∘ y ∘ s_<j)` over the
//!   tokens `s` of the next `L` source words. `L = 0` reduces to prefix only.
//!
//! The best `2k` tokens are completed greedily into words, filtered, and the top `k` kept.

mod morphology;

use std::sync::Arc;

use thiserror::Error;

pub use morphology::{is_morphological_variant, Lemmatizer, MorphologyFilter};

use crate::backends::{BackendError, ConditionalModel, LmDistribution};
use crate::config::{ConfigError, RunConfig};
use crate::model::{Candidate, CandidateSet, Strategy};
use crate::scalar::{cmp_desc, Scalar};
use crate::text::{TokenId, TokenizedSentence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("token {0:?} does not start a word")]
    NotAWordStart(TokenId),
    #[error("completion {0:?} has no alphabetic content")]
    EmptyWord(String),
}

/// Forced suffix used by the lookahead strategy.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LookaheadSpec {
    /// Requested number of source words.
    pub length: usize,
    /// Tokens of the next `length` source words after the target, truncated at sentence end.
    pub forced_suffix_tokens: Vec<TokenId>,
}

impl LookaheadSpec {
    pub fn for_sentence(sentence: &TokenizedSentence, length: usize) -> Self {
        Self { length, forced_suffix_tokens: sentence.suffix_tokens(length) }
    }
}

struct TokenScores<S> {
    first: LmDistribution<S>,
    scores: Vec<S>,
}

fn score_tokens<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    sentence: &TokenizedSentence,
    strategy: Strategy,
    lookahead: &LookaheadSpec,
) -> Result<TokenScores<S>, DecodeError> {
    let prefix = sentence.prefix();
    let first = model.next_distribution(sentence, &prefix)?;
    let suffix = match strategy {
        Strategy::PrefixOnly => &[][..],
        Strategy::Lookahead => &lookahead.forced_suffix_tokens[..],
    };
    if suffix.is_empty() {
        let scores = first.logprobs().to_vec();
        return Ok(TokenScores { first, scores });
    }
    let steps = S::count(suffix.len() + 1);
    let mut scores = Vec::with_capacity(first.vocab_size());
    for (id, &head) in first.logprobs().iter().enumerate() {
        let mut context = prefix.extended(TokenId(id as u32));
        let mut contexts = Vec::with_capacity(suffix.len());
        for &tok in suffix {
            contexts.push(context.clone());
            context.tokens.push(tok);
        }
        let dists = model.next_distributions(sentence, &contexts)?;
        let mut total = head;
        for (dist, &tok) in dists.iter().zip(suffix) {
            total += dist.logprob(tok);
        }
        scores.push(total / steps);
    }
    Ok(TokenScores { first, scores })
}

/// Strategy scores for every vocabulary token, indexed by token id.
pub fn candidate_token_scores<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    sentence: &TokenizedSentence,
    strategy: Strategy,
    lookahead: &LookaheadSpec,
) -> Result<Vec<(TokenId, S)>, DecodeError> {
    let scored = score_tokens(model, sentence, strategy, lookahead)?;
    Ok(scored.scores.into_iter().enumerate().map(|(i, s)| (TokenId(i as u32), s)).collect())
}

fn top_n<S: Scalar>(mut scored: Vec<(TokenId, S)>, n: usize) -> Vec<(TokenId, S)> {
    let order = |a: &(TokenId, S), b: &(TokenId, S)| cmp_desc(a.1, b.1).then(a.0.cmp(&b.0));
    if n < scored.len() {
        if n == 0 {
            return Vec::new();
        }
        scored.select_nth_unstable_by(n - 1, order);
        scored.truncate(n);
    }
    scored.sort_unstable_by(order);
    scored
}

/// The `n` best first tokens before any word completion or filtering.
pub fn rank_first_tokens<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    sentence: &TokenizedSentence,
    strategy: Strategy,
    lookahead: &LookaheadSpec,
    n: usize,
) -> Result<Vec<(TokenId, S)>, DecodeError> {
    Ok(top_n(candidate_token_scores(model, sentence, strategy, lookahead)?, n))
}

/// Greedily extends `first_token` with continuation pieces until a word boundary
/// (a word-start token or end of sequence) or `max_word_tokens` tokens.
pub fn complete_word<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    sentence: &TokenizedSentence,
    first_token: TokenId,
    decode_score: S,
    strategy: Strategy,
    max_word_tokens: usize,
) -> Result<Candidate<S>, DecodeError> {
    let tokenizer = model.tokenizer();
    if first_token.index() >= tokenizer.vocab_size() {
        return Err(BackendError::UnknownToken { id: first_token.0, vocab_size: tokenizer.vocab_size() }.into());
    }
    if !tokenizer.starts_word(first_token) {
        return Err(DecodeError::NotAWordStart(first_token));
    }
    let is_continuation = |t: TokenId| t != tokenizer.eos() && !tokenizer.starts_word(t);
    let mut context = sentence.prefix().extended(first_token);
    let mut word = vec![first_token];
    let mut truncated = false;
    loop {
        let next = model.next_distribution(sentence, &context)?.argmax();
        let Some(next) = next.filter(|&t| is_continuation(t)) else { break };
        if word.len() >= max_word_tokens {
            truncated = true;
            break;
        }
        word.push(next);
        context.tokens.push(next);
    }
    let surface = tokenizer.decode(&word);
    if !surface.chars().any(char::is_alphabetic) {
        return Err(DecodeError::EmptyWord(surface));
    }
    Ok(Candidate { surface, tokens: word, decode_score, strategy, truncated })
}

/// Generates up to `config.k` substitutes for the sentence's target word.
///
/// Examines the best `2k` first tokens with nonzero probability, completes each into a word,
/// and drops non-words, morphological variants of the target and case-folded duplicates.
pub fn generate_candidates<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    sentence: Arc<TokenizedSentence>,
    config: &RunConfig,
    strategy: Strategy,
    filter: &MorphologyFilter,
) -> Result<CandidateSet<S>, DecodeError> {
    config.validate()?;
    let lookahead = LookaheadSpec::for_sentence(&sentence, config.lookahead_length);
    let scored = score_tokens(model, &sentence, strategy, &lookahead)?;
    let supported: Vec<(TokenId, S)> = scored
        .scores
        .iter()
        .enumerate()
        .map(|(i, &s)| (TokenId(i as u32), s))
        .filter(|&(t, _)| scored.first.logprob(t) > S::log_zero())
        .collect();
    let target = sentence.target_word();
    let mut kept = Vec::new();
    for (token, score) in top_n(supported, config.k.saturating_mul(2)) {
        match complete_word(model, &sentence, token, score, strategy, config.max_word_tokens) {
            Ok(c) if filter.is_variant(&c.surface, target) => {}
            Ok(c) => kept.push(c),
            Err(DecodeError::NotAWordStart(_) | DecodeError::EmptyWord(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(CandidateSet::new(sentence, kept, config.k))
}
