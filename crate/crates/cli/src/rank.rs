use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;
use parals_core::backends::{CharEditScorer, TokenEditScorer};
use parals_core::config::PARAPHRASER_FEATURE;
use parals_core::io::{read_predictions_jsonl, write_predictions, PredictionRecord};
use parals_core::ranker::NamedScorer;
use parals_core::{rank_candidates, word_vocab, Candidate, PairScorer, RunConfig, Strategy};
use serde::{Deserialize, Serialize};

use crate::generate::manifest_path;
use crate::manifest::Manifest;
use crate::{absolute, compare_ids, load_config, load_dataset, read_text, write_text, CliError, Command, OutputFormat};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RankArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSONL output of `generate`, with decode scores.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Sentence-pair scorers, filling the feature slots scorer_a, scorer_b, ... in order.
    #[arg(long, value_delimiter = ',', default_value = "mock-token,mock-char")]
    pub scorers: Vec<String>,
    /// `all`, or a comma-separated subset of paraphraser and the scorer slots.
    #[arg(long)]
    pub features: Option<String>,
    /// Paraphraser weight followed by one weight per scorer.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    /// Min-max normalize features within each instance.
    #[arg(long)]
    pub normalize: bool,
    /// Keep only the best n substitutes.
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: OutputFormat,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Feature name of the scorer in position `index`: scorer_a, scorer_b, ...
pub fn scorer_slot(index: usize) -> String {
    let letter = (b'a' + (index % 26) as u8) as char;
    if index < 26 {
        format!("scorer_{letter}")
    } else {
        format!("scorer_{letter}{}", index / 26)
    }
}

pub fn open_scorer(id: &str) -> Result<Box<dyn PairScorer<f64>>, CliError> {
    match id {
        "mock-token" => Ok(Box::new(TokenEditScorer)),
        "mock-char" => Ok(Box::new(CharEditScorer)),
        other => Err(CliError::Backend(format!("scorer unavailable: {other:?} (expected mock-token or mock-char)"))),
    }
}

impl RankArgs {
    pub fn resolved_config(&self) -> Result<RunConfig, CliError> {
        let mut config = load_config(self.config.as_deref())?;
        let slots: Vec<String> = (0..self.scorers.len()).map(scorer_slot).collect();
        if let Some(features) = &self.features {
            let known: BTreeSet<&str> = slots.iter().map(String::as_str).chain([PARAPHRASER_FEATURE]).collect();
            config.features_enabled = if features.trim() == "all" {
                known.iter().map(|s| s.to_string()).collect()
            } else {
                let mut set = BTreeSet::new();
                for f in features.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    if !known.contains(f) {
                        return Err(CliError::Usage(format!(
                            "unknown feature {f:?} (expected all or a subset of {})",
                            known.iter().copied().collect::<Vec<_>>().join(", ")
                        )));
                    }
                    set.insert(f.to_string());
                }
                set
            };
        }
        if let Some(w) = &self.weights {
            if w.len() != slots.len() + 1 {
                return Err(CliError::Usage(format!(
                    "--weights needs {} values (paraphraser, then one per scorer), got {}",
                    slots.len() + 1,
                    w.len()
                )));
            }
            config.weights.paraphraser = w[0];
            config.weights.scorers = slots.iter().cloned().zip(w[1..].iter().copied()).collect();
        }
        if self.normalize {
            config.normalize_features = true;
        }
        config.validate()?;
        Ok(config)
    }

    fn recorded(&self) -> Self {
        Self {
            dataset: absolute(&self.dataset),
            predictions: absolute(&self.predictions),
            features: None,
            weights: None,
            normalize: false,
            config: None,
            output: absolute(&self.output),
            manifest: self.manifest.as_deref().map(absolute),
            ..self.clone()
        }
    }
}

pub fn run(args: &RankArgs) -> Result<(), CliError> {
    let config = args.resolved_config()?;
    execute(args, &config)
}

/// Ranks with an already-resolved config; feature and weight flags are not consulted.
pub fn execute(args: &RankArgs, config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let scorers: Vec<Box<dyn PairScorer<f64>>> =
        args.scorers.iter().map(|s| open_scorer(s)).collect::<Result<_, _>>()?;
    let named: Vec<NamedScorer<'_, f64>> =
        scorers.iter().enumerate().map(|(i, s)| NamedScorer::new(scorer_slot(i), s.as_ref())).collect();

    let instances = load_dataset(&args.dataset)?;
    let predictions_text = read_text(&args.predictions, "predictions")?;
    let mut records = read_predictions_jsonl(&predictions_text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.predictions.display())))?;
    let vocab = word_vocab(instances.iter().map(|i| i.sentence_text.as_str()));
    let by_id: BTreeMap<&str, _> = instances.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let unknown: Vec<&str> =
        records.iter().map(|r| r.instance_id.as_str()).filter(|id| !by_id.contains_key(id)).collect();
    if !unknown.is_empty() {
        return Err(CliError::Data(format!(
            "predictions reference ids missing from the dataset: {}",
            unknown.join(", ")
        )));
    }
    records.sort_by(|a, b| compare_ids(&a.instance_id, &b.instance_id));

    let mut ranked = Vec::with_capacity(records.len());
    for record in &records {
        let inst = by_id[record.instance_id.as_str()];
        let scores = record.scores.as_ref().ok_or_else(|| {
            CliError::Data(format!(
                "instance {}: predictions carry no decode scores; rank needs generate output",
                record.instance_id
            ))
        })?;
        let sentence =
            inst.sentence(&vocab).map_err(|e| CliError::Data(format!("instance {}: {e}", inst.instance_id)))?;
        // Tokens and strategy do not enter the ranking features.
        let candidates: Vec<Candidate<f64>> = record
            .substitutes
            .iter()
            .zip(scores)
            .map(|(surface, &decode_score)| Candidate {
                surface: surface.clone(),
                tokens: Vec::new(),
                decode_score,
                strategy: Strategy::PrefixOnly,
                truncated: false,
            })
            .collect();
        let result = rank_candidates(&named, &sentence, &candidates, config);
        let keep = args.top_n.unwrap_or(usize::MAX);
        let entries = &result.entries[..result.entries.len().min(keep)];
        ranked.push(PredictionRecord {
            instance_id: record.instance_id.clone(),
            lexelt: record.lexelt.clone(),
            substitutes: entries.iter().map(|e| e.candidate.surface.clone()).collect(),
            scores: Some(entries.iter().map(|e| e.combined_score).collect()),
        });
    }

    let text = write_predictions(&ranked, args.format.into()).map_err(|e| CliError::Data(e.to_string()))?;
    write_text(&args.output, &text)?;
    let mut manifest = Manifest::new(Command::Rank(args.recorded()), Some(config.clone()));
    manifest.add_input(&args.dataset)?;
    manifest.add_input(&args.predictions)?;
    manifest.add_output(&args.output, text.as_bytes());
    manifest.write(&manifest_path(args.manifest.as_deref(), &args.output))
}
