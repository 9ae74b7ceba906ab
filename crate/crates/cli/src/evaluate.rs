use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use parals_core::io::{parse_gold_legacy, parse_swords, read_predictions_jsonl, InstanceGold};
use parals_core::metrics::{evaluate_gap, evaluate_semeval, evaluate_swords, MetricReport, SemevalOptions};
use parals_core::SwordsAnnotation;
use serde::{Deserialize, Serialize};

use crate::{absolute, read_text, write_text, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    Semeval,
    Gap,
    Swords,
    /// Everything the gold format supports.
    All,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Legacy `lemma.pos id :: sub w;...` gold file.
    #[arg(long, required_unless_present = "swords", conflicts_with = "swords")]
    pub gold: Option<PathBuf>,
    /// SwordS-style document with vote counts.
    #[arg(long)]
    pub swords: Option<PathBuf>,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub metric: MetricChoice,
    /// Guesses submitted to best and best-m.
    #[arg(long, default_value_t = 1)]
    pub best_k: usize,
    /// Guesses scored by the SwordS F measures.
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    /// Credit P@1 only for the gold mode; instances without a unique mode accept any gold word.
    #[arg(long)]
    pub p1_mode: bool,
    /// Write the full report (aggregates and per-instance scores) as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

enum Gold {
    Weighted(BTreeMap<String, parals_core::GoldAnnotation<f64>>),
    Swords(BTreeMap<String, SwordsAnnotation>),
}

impl Gold {
    fn ids(&self) -> BTreeSet<&str> {
        match self {
            Gold::Weighted(g) => g.keys().map(String::as_str).collect(),
            Gold::Swords(g) => g.keys().map(String::as_str).collect(),
        }
    }
}

fn load_gold(args: &EvaluateArgs) -> Result<Gold, CliError> {
    if let Some(path) = &args.gold {
        let text = read_text(path, "gold")?;
        let gold = parse_gold_legacy(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(Gold::Weighted(gold))
    } else if let Some(path) = &args.swords {
        let text = read_text(path, "gold")?;
        let instances = parse_swords(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let gold = instances
            .into_iter()
            .filter_map(|inst| match inst.gold {
                Some(InstanceGold::Swords(a)) => Some((inst.instance_id, a)),
                _ => None,
            })
            .collect();
        Ok(Gold::Swords(gold))
    } else {
        Err(CliError::Usage("one of --gold or --swords is required".into()))
    }
}

/// Computes the report without printing or writing it.
pub fn compute(args: &EvaluateArgs) -> Result<MetricReport<f64>, CliError> {
    let gold = load_gold(args)?;
    let text = read_text(&args.predictions, "predictions")?;
    let records =
        read_predictions_jsonl(&text).map_err(|e| CliError::Data(format!("{}: {e}", args.predictions.display())))?;
    let predictions: BTreeMap<String, Vec<String>> =
        records.into_iter().map(|r| (r.instance_id, r.substitutes)).collect();

    let gold_ids = gold.ids();
    let pred_ids: BTreeSet<&str> = predictions.keys().map(String::as_str).collect();
    if gold_ids != pred_ids {
        let only_gold: Vec<&str> = gold_ids.difference(&pred_ids).copied().collect();
        let only_pred: Vec<&str> = pred_ids.difference(&gold_ids).copied().collect();
        return Err(CliError::Data(format!(
            "gold and predictions cover different ids; only in gold: [{}]; only in predictions: [{}]",
            only_gold.join(", "),
            only_pred.join(", ")
        )));
    }

    let options = SemevalOptions { best_k: args.best_k, mode_p_at_1: args.p1_mode, ..SemevalOptions::default() };
    match (&gold, args.metric) {
        (Gold::Weighted(g), MetricChoice::Semeval) => Ok(evaluate_semeval(g, &predictions, options)),
        (Gold::Weighted(g), MetricChoice::Gap) => Ok(evaluate_gap(g, &predictions)),
        (Gold::Weighted(g), MetricChoice::All) => {
            let mut report = evaluate_semeval(g, &predictions, options);
            report.merge(evaluate_gap(g, &predictions));
            Ok(report)
        }
        (Gold::Swords(g), MetricChoice::Swords | MetricChoice::All) => Ok(evaluate_swords(g, &predictions, args.top_n)),
        (Gold::Weighted(_), MetricChoice::Swords) => {
            Err(CliError::Usage("--metric swords needs vote counts; pass the gold with --swords".into()))
        }
        (Gold::Swords(_), m) => Err(CliError::Usage(format!(
            "--metric {} needs weighted gold; pass a legacy gold file with --gold",
            m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
        ))),
    }
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let report = compute(args)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write_text(&absolute(path), &text)?;
    }
    Ok(())
}
