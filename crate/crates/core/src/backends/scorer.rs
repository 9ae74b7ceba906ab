use std::sync::Mutex;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("scorer {scorer} failed: {message}")]
pub struct ScorerError {
    pub scorer: String,
    pub message: String,
}

/// Sentence-pair meaning-preservation scorer; higher means closer in meaning.
pub trait PairScorer<S: Scalar>: Send + Sync {
    fn score(&self, original: &str, updated: &str) -> Result<S, ScorerError>;
}

/// Normalized token-level edit similarity: `1 - lev(tokens_a, tokens_b) / max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenEditScorer;

/// Same as [`TokenEditScorer`] over characters.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharEditScorer;

impl<S: Scalar> PairScorer<S> for TokenEditScorer {
    fn score(&self, original: &str, updated: &str) -> Result<S, ScorerError> {
        Ok(S::lit(mock_pair_scorer(original, updated)))
    }
}

impl<S: Scalar> PairScorer<S> for CharEditScorer {
    fn score(&self, original: &str, updated: &str) -> Result<S, ScorerError> {
        let a: Vec<char> = original.chars().collect();
        let b: Vec<char> = updated.chars().collect();
        Ok(S::lit(edit_similarity(&a, &b)))
    }
}

/// Deterministic similarity in `[0, 1]` over whitespace tokens.
pub fn mock_pair_scorer(original: &str, updated: &str) -> f64 {
    let a: Vec<&str> = original.split_whitespace().collect();
    let b: Vec<&str> = updated.split_whitespace().collect();
    edit_similarity(&a, &b)
}

fn edit_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// A scorer that needs exclusive access per call.
pub trait UnsyncPairScorer<S: Scalar>: Send {
    fn score(&mut self, original: &str, updated: &str) -> Result<S, ScorerError>;
}

/// Serializing gate for [`UnsyncPairScorer`] implementations.
pub struct SerializedScorer<P> {
    inner: Mutex<P>,
}

impl<P> SerializedScorer<P> {
    pub fn new(scorer: P) -> Self {
        Self { inner: Mutex::new(scorer) }
    }
}

impl<S: Scalar, P: UnsyncPairScorer<S>> PairScorer<S> for SerializedScorer<P> {
    fn score(&self, original: &str, updated: &str) -> Result<S, ScorerError> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).score(original, updated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mock_scorer_fixtures() {
        assert_eq!(mock_pair_scorer("a b c", "a b c"), 1.0);
        assert!((mock_pair_scorer("a b c", "a x c") - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
        assert!((mock_pair_scorer("a b c", "a x c") - 0.6667).abs() < 1e-4);
        assert_eq!(mock_pair_scorer("a b c", "x y z"), 0.0);
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein::<u8>(b"", b"abc"), 3);
    }

    struct Counting(usize);

    impl UnsyncPairScorer<f64> for Counting {
        fn score(&mut self, a: &str, b: &str) -> Result<f64, ScorerError> {
            self.0 += 1;
            Ok(mock_pair_scorer(a, b))
        }
    }

    #[test]
    fn serialized_gate_forwards() {
        let gate = SerializedScorer::new(Counting(0));
        let s: f64 = gate.score("a b", "a b").unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(gate.inner.lock().unwrap().0, 1);
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_identity_max(a in "[abc ]{0,12}", b in "[abc ]{0,12}") {
            let ab = mock_pair_scorer(&a, &b);
            prop_assert_eq!(ab, mock_pair_scorer(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(mock_pair_scorer(&a, &a) >= ab);
            let c: f64 = PairScorer::<f64>::score(&CharEditScorer, &a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}
