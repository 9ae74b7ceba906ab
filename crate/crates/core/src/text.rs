//! Word segmentation, subword vocabularies and target-marked sentences.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index into a model vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Marker prefix for subword pieces that continue the previous word.
pub const CONTINUATION_PREFIX: &str = "##";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SentenceError {
    #[error("sentence text is empty")]
    EmptyText,
    #[error("target span {start}..{end} is outside the text ({len} chars)")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("target span {start}..{end} does not align with a single word")]
    SpanMisaligned { start: usize, end: usize },
    #[error("target word {0:?} does not occur in the text")]
    TargetNotFound(String),
    #[error("word {0:?} cannot be tokenized with this vocabulary")]
    OutOfVocabulary(String),
}

/// Tokenizer contract shared by the mock model and any external adapter.
pub trait Tokenizer: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn eos(&self) -> TokenId;

    /// Tokenizes a single whitespace-free word.
    fn tokenize_word(&self, word: &str) -> Result<Vec<TokenId>, SentenceError>;

    /// True when `id` opens a new word, i.e. is neither a continuation piece nor a special token.
    fn starts_word(&self, id: TokenId) -> bool;

    /// Renders a token sequence as text; words are separated by single spaces.
    fn decode(&self, tokens: &[TokenId]) -> String;
}

/// A WordPiece-style vocabulary: whole words and `##`-prefixed continuation pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    eos: TokenId,
}

impl Vocab {
    /// Builds a vocabulary. `eos` must be one of `tokens`; duplicates are rejected.
    pub fn new(tokens: Vec<String>, eos: &str) -> Result<Self, VocabError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(VocabError::InvalidToken(tok.clone()));
            }
            if index.insert(tok.clone(), TokenId(i as u32)).is_some() {
                return Err(VocabError::Duplicate(tok.clone()));
            }
        }
        let eos = *index.get(eos).ok_or_else(|| VocabError::MissingEos(eos.to_string()))?;
        Ok(Self { tokens, index, eos })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    fn is_continuation(&self, id: TokenId) -> bool {
        self.token(id).is_some_and(|t| t.starts_with(CONTINUATION_PREFIX) && t.len() > CONTINUATION_PREFIX.len())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VocabError {
    #[error("duplicate vocabulary token {0:?}")]
    Duplicate(String),
    #[error("invalid vocabulary token {0:?}")]
    InvalidToken(String),
    #[error("end-of-sequence token {0:?} is not in the vocabulary")]
    MissingEos(String),
}

impl Tokenizer for Vocab {
    fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    fn eos(&self) -> TokenId {
        self.eos
    }

    fn tokenize_word(&self, word: &str) -> Result<Vec<TokenId>, SentenceError> {
        if let Some(id) = self.id(word) {
            if id != self.eos {
                return Ok(vec![id]);
            }
        }
        // greedy longest-match-first
        let mut out = Vec::new();
        let mut rest = word;
        let mut first = true;
        while !rest.is_empty() {
            let mut matched = None;
            let mut cut = rest.len();
            while cut > 0 {
                if rest.is_char_boundary(cut) {
                    let piece = &rest[..cut];
                    let key = if first { piece.to_string() } else { format!("{CONTINUATION_PREFIX}{piece}") };
                    if let Some(id) = self.id(&key) {
                        if id != self.eos {
                            matched = Some(id);
                            break;
                        }
                    }
                }
                cut -= 1;
            }
            match matched {
                Some(id) => {
                    out.push(id);
                    rest = &rest[cut..];
                    first = false;
                }
                None => return Err(SentenceError::OutOfVocabulary(word.to_string())),
            }
        }
        Ok(out)
    }

    fn starts_word(&self, id: TokenId) -> bool {
        id != self.eos && id.index() < self.tokens.len() && !self.is_continuation(id)
    }

    fn decode(&self, tokens: &[TokenId]) -> String {
        let mut out = String::new();
        for &id in tokens {
            if id == self.eos {
                continue;
            }
            let Some(tok) = self.token(id) else { continue };
            if self.is_continuation(id) {
                out.push_str(&tok[CONTINUATION_PREFIX.len()..]);
            } else {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(tok);
            }
        }
        out
    }
}

/// Word-level vocabulary over every segmented word in `texts`, plus `</s>`.
pub fn word_vocab<'a>(texts: impl IntoIterator<Item = &'a str>) -> Vocab {
    let mut words = std::collections::BTreeSet::new();
    for text in texts {
        for span in segment_words(text) {
            words.insert(text[span].to_string());
        }
    }
    words.remove(WORD_VOCAB_EOS);
    let mut tokens: Vec<String> = words.into_iter().collect();
    tokens.push(WORD_VOCAB_EOS.to_string());
    Vocab::new(tokens, WORD_VOCAB_EOS).expect("segmented words are valid tokens")
}

const WORD_VOCAB_EOS: &str = "</s>";

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-' || c == '_'
}

/// Splits text into words. Runs of alphanumerics (with `'`, `-`, `_`) form one word; every
/// other non-whitespace character is a word of its own. Returns byte ranges into `text`.
pub fn segment_words(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut current: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            current.get_or_insert(i);
            continue;
        }
        if let Some(start) = current.take() {
            spans.push(start..i);
        }
        if !c.is_whitespace() {
            spans.push(i..i + c.len_utf8());
        }
    }
    if let Some(start) = current {
        spans.push(start..text.len());
    }
    spans
}

/// Converts a span in Unicode scalar offsets into a byte range.
pub fn char_span_to_bytes(text: &str, start: usize, end: usize) -> Result<Range<usize>, SentenceError> {
    let len = text.chars().count();
    if start > end || end > len {
        return Err(SentenceError::SpanOutOfRange { start, end, len });
    }
    let byte_at = |n: usize| text.char_indices().nth(n).map(|(b, _)| b).unwrap_or(text.len());
    Ok(byte_at(start)..byte_at(end))
}

/// A source sentence with word, token and character alignment plus a marked target word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    text: String,
    tokens: Vec<TokenId>,
    words: Vec<String>,
    word_byte_spans: Vec<Range<usize>>,
    word_to_token_span: Vec<Range<usize>>,
    target_word_index: usize,
}

impl TokenizedSentence {
    /// Builds a sentence whose target is the word at `target_char_span` (char offsets, end exclusive).
    pub fn new(text: &str, target_char_span: (usize, usize), tokenizer: &dyn Tokenizer) -> Result<Self, SentenceError> {
        let spans = segment_words(text);
        if spans.is_empty() {
            return Err(SentenceError::EmptyText);
        }
        let (start, end) = target_char_span;
        let bytes = char_span_to_bytes(text, start, end)?;
        let target = spans.iter().position(|s| *s == bytes).ok_or(SentenceError::SpanMisaligned { start, end })?;
        Self::assemble(text, spans, target, tokenizer)
    }

    /// Builds a sentence targeting the first occurrence (case-folded) of `word`.
    /// Used for benchmark instances that carry no offsets.
    pub fn with_first_occurrence(text: &str, word: &str, tokenizer: &dyn Tokenizer) -> Result<Self, SentenceError> {
        let spans = segment_words(text);
        if spans.is_empty() {
            return Err(SentenceError::EmptyText);
        }
        let folded = word.to_lowercase();
        let hits: Vec<usize> = spans
            .iter()
            .enumerate()
            .filter(|(_, s)| text[(*s).clone()].to_lowercase() == folded)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => Err(SentenceError::TargetNotFound(word.to_string())),
            [first, rest @ ..] => {
                if !rest.is_empty() {
                    log::warn!("target {word:?} occurs {} times; using the first occurrence", hits.len());
                }
                Self::assemble(text, spans, *first, tokenizer)
            }
        }
    }

    fn assemble(
        text: &str,
        word_byte_spans: Vec<Range<usize>>,
        target_word_index: usize,
        tokenizer: &dyn Tokenizer,
    ) -> Result<Self, SentenceError> {
        let words: Vec<String> = word_byte_spans.iter().map(|s| text[s.clone()].to_string()).collect();
        let mut tokens = Vec::new();
        let mut word_to_token_span = Vec::with_capacity(words.len());
        for w in &words {
            let start = tokens.len();
            tokens.extend(tokenizer.tokenize_word(w)?);
            word_to_token_span.push(start..tokens.len());
        }
        Ok(Self { text: text.to_string(), tokens, words, word_byte_spans, word_to_token_span, target_word_index })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_token_span(&self, word: usize) -> Range<usize> {
        self.word_to_token_span[word].clone()
    }

    pub fn target_word_index(&self) -> usize {
        self.target_word_index
    }

    pub fn target_word(&self) -> &str {
        &self.words[self.target_word_index]
    }

    /// Byte range of the target word inside [`TokenizedSentence::text`].
    pub fn target_byte_span(&self) -> Range<usize> {
        self.word_byte_spans[self.target_word_index].clone()
    }

    /// Words joined by single spaces; what detokenizing [`TokenizedSentence::tokens`] yields.
    pub fn normalized_text(&self) -> String {
        self.words.join(" ")
    }

    /// Source tokens preceding the target word.
    pub fn prefix(&self) -> DecodePrefix {
        let start = self.word_to_token_span[self.target_word_index].start;
        DecodePrefix::new(self.tokens[..start].to_vec())
    }

    /// Token groups of the words after the target, one group per word.
    pub fn suffix_word_tokens(&self) -> Vec<&[TokenId]> {
        self.word_to_token_span[self.target_word_index + 1..].iter().map(|s| &self.tokens[s.clone()]).collect()
    }

    /// Tokens of the next `words` source words after the target, truncated at sentence end.
    pub fn suffix_tokens(&self, words: usize) -> Vec<TokenId> {
        self.suffix_word_tokens().into_iter().take(words).flatten().copied().collect()
    }
}

/// Tokens the decoder is forced to emit before reading a distribution. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecodePrefix {
    pub tokens: Vec<TokenId>,
}

impl DecodePrefix {
    pub fn new(tokens: Vec<TokenId>) -> Self {
        Self { tokens }
    }

    pub fn extended(&self, token: TokenId) -> Self {
        let mut tokens = Vec::with_capacity(self.tokens.len() + 1);
        tokens.extend_from_slice(&self.tokens);
        tokens.push(token);
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
