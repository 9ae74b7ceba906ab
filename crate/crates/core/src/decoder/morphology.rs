use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

/// Pluggable lemmatizer consulted in addition to the stemmer.
pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, word: &str) -> Option<String>;
}

/// Decides whether a candidate is a morphological derivation of the target word.
pub struct MorphologyFilter {
    stemmer: Stemmer,
    lemmatizer: Option<Box<dyn Lemmatizer>>,
}

impl Default for MorphologyFilter {
    fn default() -> Self {
        Self { stemmer: Stemmer::create(Algorithm::English), lemmatizer: None }
    }
}

impl std::fmt::Debug for MorphologyFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MorphologyFilter").field("lemmatizer", &self.lemmatizer.is_some()).finish()
    }
}

impl MorphologyFilter {
    pub fn with_lemmatizer(lemmatizer: Box<dyn Lemmatizer>) -> Self {
        Self { lemmatizer: Some(lemmatizer), ..Self::default() }
    }

    /// Case-folded equality, shared English Snowball stem, or shared lemma.
    pub fn is_variant(&self, a: &str, b: &str) -> bool {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        if a == b || self.stemmer.stem(&a) == self.stemmer.stem(&b) {
            return true;
        }
        match &self.lemmatizer {
            Some(l) => matches!((l.lemma(&a), l.lemma(&b)), (Some(x), Some(y)) if x == y),
            None => false,
        }
    }
}

/// [`MorphologyFilter::is_variant`] with the default (stemmer-only) filter.
pub fn is_morphological_variant(a: &str, b: &str) -> bool {
    static FILTER: OnceLock<MorphologyFilter> = OnceLock::new();
    FILTER.get_or_init(MorphologyFilter::default).is_variant(a, b)
}
