//! Exhaustive reference for first-token scoring, used to cross-check the decoder.
//!
//! Every vocabulary token is scored from scratch: one fresh model call per step, no shared
//! distributions, then a full sort. Slow and simple on purpose.

use super::{BackendError, ConditionalModel};
use crate::scalar::Scalar;
use crate::text::{DecodePrefix, TokenId, TokenizedSentence};

pub const ORACLE_MAX_VOCAB: usize = 64;

/// Top `k` first tokens after `forced_prefix`, scored by the mean of the token log-prob and
/// the log-probs of the first `lookahead_length` forced suffix words (given as token groups).
pub fn oracle_topk_next<S: Scalar, M: ConditionalModel<S> + ?Sized>(
    model: &M,
    source: &TokenizedSentence,
    forced_prefix: &DecodePrefix,
    k: usize,
    lookahead_length: usize,
    forced_suffix_words: &[&[TokenId]],
) -> Result<Vec<(TokenId, S)>, BackendError> {
    let vocab_size = model.vocab_size();
    if vocab_size > ORACLE_MAX_VOCAB {
        return Err(BackendError::VocabTooLarge(vocab_size));
    }
    let suffix: Vec<TokenId> =
        forced_suffix_words.iter().take(lookahead_length).flat_map(|w| w.iter().copied()).collect();

    let mut scored = Vec::with_capacity(vocab_size);
    for id in 0..vocab_size as u32 {
        let candidate = TokenId(id);
        let mut context = forced_prefix.clone();
        let mut total = model.next_distribution(source, &context)?.logprob(candidate);
        let mut steps = 1usize;
        context.tokens.push(candidate);
        for &next in &suffix {
            total += model.next_distribution(source, &context)?.logprob(next);
            steps += 1;
            context.tokens.push(next);
        }
        scored.push((candidate, total / S::count(steps)));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}
