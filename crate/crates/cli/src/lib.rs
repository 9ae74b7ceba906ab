//! `parals` command-line front end: generate, rank and evaluate lexical substitutes.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use parals_core::backends::BackendError;
use parals_core::config::ConfigError;
use parals_core::decoder::DecodeError;
use parals_core::io::{parse_contexts_jsonl, parse_swords, BenchmarkInstance, DataError, PredictionStyle};
use parals_core::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub mod evaluate;
pub mod generate;
pub mod manifest;
pub mod rank;

pub use evaluate::EvaluateArgs;
pub use generate::GenerateArgs;
pub use manifest::{Manifest, ReplayArgs};
pub use rank::RankArgs;

/// Environment variable naming the score-cache directory.
pub const CACHE_DIR_ENV: &str = "PARALS_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "parals", version, about = "Lexical substitution with paraphraser decoding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Generate substitute candidates for every instance of a dataset.
    Generate(GenerateArgs),
    /// Re-rank generated candidates with the combined feature score.
    Rank(RankArgs),
    /// Score predictions against gold annotations.
    Evaluate(EvaluateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    /// Process exit status: 2 usage, 3 data, 4 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Backend(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("invalid configuration: {e}"))
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Backend(e) => e.into(),
            DecodeError::Config(e) => e.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn data_error(path: &Path, e: DataError) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Output line format for prediction files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Jsonl,
    Best,
    Oot,
}

impl From<OutputFormat> for PredictionStyle {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Jsonl => PredictionStyle::Jsonl,
            OutputFormat::Best => PredictionStyle::Best,
            OutputFormat::Oot => PredictionStyle::Oot,
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => generate::run(&args),
        Command::Rank(args) => rank::run(&args),
        Command::Evaluate(args) => evaluate::run(&args),
        Command::Replay(args) => manifest::replay(&args),
    }
}

pub(crate) fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {what} {}: {e}", path.display())))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Absolute form of `path`, so manifests can be replayed from any directory.
pub(crate) fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Numeric ids order numerically and come first; the rest order lexicographically.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Reads a dataset: a SwordS-style document (a JSON object with `instances`) or contexts JSONL.
pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkInstance>, CliError> {
    let text = read_text(path, "dataset")?;
    let is_document = text.trim_start().starts_with('{')
        && serde_json::from_str::<serde_json::Value>(&text).is_ok_and(|v| v.get("instances").is_some());
    let parsed = if is_document { parse_swords(&text) } else { parse_contexts_jsonl(&text) };
    parsed.map_err(|e| data_error(path, e))
}

/// Base config from an optional TOML file.
pub(crate) fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = read_text(p, "config")?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}
