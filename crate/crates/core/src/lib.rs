//! Lexical substitution with a paraphraser: substitutes for a target word are read off the
//! decoder after forcing the source prefix, optionally rescored with a lookahead over the
//! following source words, then ranked by a linear mix of the decode score and
//! sentence-pair meaning scores.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix the
//! common instantiations.

pub mod backends;
pub mod config;
pub mod decoder;
pub mod io;
pub mod metrics;
pub mod model;
pub mod ranker;
pub mod scalar;
pub mod text;

pub use backends::{ConditionalModel, LmDistribution, PairScorer, TableModel};
pub use config::RunConfig;
pub use decoder::{generate_candidates, MorphologyFilter};
pub use model::{
    Candidate, CandidateSet, FeatureVector, GoldAnnotation, RankedSubstitutes, Strategy, SwordsAnnotation,
};
pub use ranker::rank_candidates;
pub use scalar::Scalar;
pub use text::{word_vocab, DecodePrefix, TokenId, TokenizedSentence, Tokenizer, Vocab};

pub type Candidate64 = Candidate<f64>;
pub type Candidate32 = Candidate<f32>;
pub type CandidateSet64 = CandidateSet<f64>;
pub type CandidateSet32 = CandidateSet<f32>;
pub type Distribution64 = LmDistribution<f64>;
pub type Distribution32 = LmDistribution<f32>;
pub type TableModel64 = TableModel<f64>;
pub type TableModel32 = TableModel<f32>;
pub type Ranked64 = RankedSubstitutes<f64>;
pub type Ranked32 = RankedSubstitutes<f32>;
pub type Gold64 = GoldAnnotation<f64>;
pub type Gold32 = GoldAnnotation<f32>;
pub type MetricReport64 = metrics::MetricReport<f64>;
pub type MetricReport32 = metrics::MetricReport<f32>;
