use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::Args;
use parals_core::io::{write_predictions, BenchmarkInstance, CacheEntry, CacheKey, PredictionRecord, ScoreCache};
use parals_core::{
    generate_candidates, CandidateSet, ConditionalModel, MorphologyFilter, RunConfig, Strategy, TableModel,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::{Manifest, Timing};
use crate::{
    absolute, compare_ids, load_config, load_dataset, write_text, CliError, Command, OutputFormat, CACHE_DIR_ENV,
};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Contexts JSONL or SwordS-style document.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Backend id, e.g. `table:toy_lm.json`.
    #[arg(long)]
    pub backend: String,
    #[arg(long, default_value = "lookahead", value_parser = clap::builder::PossibleValuesParser::new(["prefix", "lookahead"]))]
    pub strategy: String,
    /// Substitutes per instance (overrides the config file).
    #[arg(long)]
    pub k: Option<usize>,
    /// Lookahead length in source words (overrides the config file).
    #[arg(long)]
    pub lookahead: Option<usize>,
    #[arg(long)]
    pub max_word_tokens: Option<usize>,
    /// TOML file with run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: OutputFormat,
    /// Where to write the run manifest; defaults to `<output>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Score-cache directory; off when unset.
    #[arg(long, env = CACHE_DIR_ENV)]
    pub cache_dir: Option<PathBuf>,
}

impl GenerateArgs {
    pub fn resolved_config(&self) -> Result<RunConfig, CliError> {
        let mut config = load_config(self.config.as_deref())?;
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(l) = self.lookahead {
            config.lookahead_length = l;
        }
        if let Some(m) = self.max_word_tokens {
            config.max_word_tokens = m;
        }
        config.validate()?;
        Ok(config)
    }

    fn strategy(&self) -> Result<Strategy, CliError> {
        self.strategy.parse().map_err(CliError::Usage)
    }

    /// Copy with absolute paths and the config folded in, for the manifest.
    fn recorded(&self) -> Self {
        Self {
            dataset: absolute(&self.dataset),
            backend: match self.backend.split_once(':') {
                Some(("table", path)) => format!("table:{}", absolute(Path::new(path)).display()),
                _ => self.backend.clone(),
            },
            config: None,
            k: None,
            lookahead: None,
            max_word_tokens: None,
            output: absolute(&self.output),
            manifest: self.manifest.as_deref().map(absolute),
            cache_dir: None,
            ..self.clone()
        }
    }
}

/// Resolves a backend id. Only `table:<fixture path>` is built in.
pub fn open_backend(id: &str) -> Result<(TableModel<f64>, PathBuf), CliError> {
    match id.split_once(':') {
        Some(("table", path)) => {
            let path = PathBuf::from(path);
            if !path.exists() {
                return Err(CliError::Backend(format!("backend unavailable: fixture {} not found", path.display())));
            }
            Ok((TableModel::load(&path)?, path))
        }
        _ => Err(CliError::Backend(format!("backend unavailable: {id:?} (expected table:<path>)"))),
    }
}

pub fn run(args: &GenerateArgs) -> Result<(), CliError> {
    let config = args.resolved_config()?;
    execute(args, &config)
}

/// Runs generation with an already-resolved config.
pub fn execute(args: &GenerateArgs, config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let strategy = args.strategy()?;
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let instances = load_dataset(&args.dataset)?;
    let (model, fixture) = open_backend(&args.backend)?;
    let cache = args.cache_dir.as_ref().map(|dir| {
        let dataset = args.dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        ScoreCache::open(dir, &ConditionalModel::<f64>::model_id(&model), &dataset)
    });
    let filter = MorphologyFilter::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", args.jobs)))?;

    let started = Instant::now();
    let results: Vec<Result<(PredictionRecord, f64), CliError>> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                let t = Instant::now();
                let record = generate_one(&model, inst, config, strategy, &filter, cache.as_ref())?;
                Ok((record, t.elapsed().as_secs_f64() * 1e3))
            })
            .collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| compare_ids(&a.0.instance_id, &b.0.instance_id));
    if let Some(cache) = &cache {
        if let Err(e) = cache.flush() {
            log::warn!("cannot persist cache {}: {e}", cache.path().display());
        }
    }

    let timing = Timing {
        total_ms: started.elapsed().as_secs_f64() * 1e3,
        per_instance_ms: rows.iter().map(|(r, ms)| (r.instance_id.clone(), *ms)).collect(),
    };
    let records: Vec<PredictionRecord> = rows.into_iter().map(|(r, _)| r).collect();
    let text = write_predictions(&records, args.format.into()).map_err(|e| CliError::Data(e.to_string()))?;
    write_text(&args.output, &text)?;

    let mut manifest = Manifest::new(Command::Generate(args.recorded()), Some(config.clone()));
    manifest.backend_id = Some(args.backend.clone());
    manifest.model_id = Some(ConditionalModel::<f64>::model_id(&model));
    manifest.add_input(&args.dataset)?;
    manifest.add_input(&fixture)?;
    manifest.add_output(&args.output, text.as_bytes());
    manifest.timing = Some(timing);
    manifest.write(&manifest_path(args.manifest.as_deref(), &args.output))
}

pub(crate) fn manifest_path(explicit: Option<&Path>, output: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut name = output.as_os_str().to_os_string();
        name.push(".manifest.json");
        PathBuf::from(name)
    })
}

fn generate_one(
    model: &TableModel<f64>,
    inst: &BenchmarkInstance,
    config: &RunConfig,
    strategy: Strategy,
    filter: &MorphologyFilter,
    cache: Option<&ScoreCache>,
) -> Result<PredictionRecord, CliError> {
    let mut record = PredictionRecord {
        instance_id: inst.instance_id.clone(),
        lexelt: inst.lexelt(),
        substitutes: Vec::new(),
        scores: None,
    };
    let sentence = match inst.sentence(model.tokenizer()) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            log::warn!("instance {}: {e}; left unanswered", inst.instance_id);
            record.scores = Some(Vec::new());
            return Ok(record);
        }
    };
    let key = CacheKey {
        model_id: ConditionalModel::<f64>::model_id(model),
        instance_id: inst.instance_id.clone(),
        strategy,
        config_hash: config.config_hash(),
    };
    let cached: Option<CandidateSet<f64>> =
        cache.and_then(|c| c.get::<f64>(&key)).map(|e| e.candidates).filter(|set| *set.sentence == *sentence);
    let set = match cached {
        Some(set) => set,
        None => {
            let set = generate_candidates(model, sentence, config, strategy, filter)?;
            if let Some(c) = cache {
                c.put(&key, &CacheEntry { candidates: set.clone(), features: None });
            }
            set
        }
    };
    record.substitutes = set.surfaces().into_iter().map(String::from).collect();
    record.scores = Some(set.candidates().iter().map(|c| c.decode_score).collect());
    Ok(record)
}
