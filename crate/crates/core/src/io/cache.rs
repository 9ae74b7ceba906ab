use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{CandidateSet, FeatureVector, Strategy};
use crate::scalar::Scalar;

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Identifies one cached decode. Entries whose config hash differs are simply not found.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub model_id: String,
    pub instance_id: String,
    pub strategy: Strategy,
    pub config_hash: String,
}

impl CacheKey {
    fn encode(&self) -> String {
        format!("{}\u{1f}{}\u{1f}{}\u{1f}{}", self.model_id, self.instance_id, self.strategy, self.config_hash)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + DeserializeOwned")]
pub struct CacheEntry<S = f64> {
    pub candidates: CandidateSet<S>,
    #[serde(default)]
    pub features: Option<Vec<FeatureVector<S>>>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    model_id: String,
    dataset: String,
    entries: BTreeMap<String, Value>,
}

/// Persistent cache of candidate sets and features, one file per (model, dataset).
///
/// Concurrent readers, one writer; [`ScoreCache::flush`] replaces the file atomically.
/// Unreadable files and entries are treated as absent.
pub struct ScoreCache {
    path: PathBuf,
    model_id: String,
    dataset: String,
    entries: RwLock<BTreeMap<String, Value>>,
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

impl ScoreCache {
    pub fn open(dir: impl AsRef<Path>, model_id: &str, dataset: &str) -> Self {
        let path = dir.as_ref().join(format!("{}__{}.json", file_stem(model_id), file_stem(dataset)));
        let entries = match std::fs::read_to_string(&path) {
            Ok(text) => match serde_json::from_str::<CacheFile>(&text) {
                Ok(f) if f.format_version == CACHE_FORMAT_VERSION && f.model_id == model_id && f.dataset == dataset => {
                    f.entries
                }
                Ok(f) => {
                    log::warn!(
                        "cache {} has version {} for {:?}; ignoring",
                        path.display(),
                        f.format_version,
                        f.model_id
                    );
                    BTreeMap::new()
                }
                Err(e) => {
                    log::warn!("cache {} is corrupt ({e}); ignoring", path.display());
                    BTreeMap::new()
                }
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => {
                log::warn!("cache {} unreadable ({e}); ignoring", path.display());
                BTreeMap::new()
            }
        };
        Self { path, model_id: model_id.to_string(), dataset: dataset.to_string(), entries: RwLock::new(entries) }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get<S>(&self, key: &CacheKey) -> Option<CacheEntry<S>>
    where
        S: Scalar + Serialize + DeserializeOwned,
    {
        let entries = self.entries.read().unwrap_or_else(|e| e.into_inner());
        let value = entries.get(&key.encode())?;
        match serde_json::from_value(value.clone()) {
            Ok(entry) => Some(entry),
            Err(e) => {
                log::warn!("cache entry for {} is corrupt ({e}); recomputing", key.instance_id);
                None
            }
        }
    }

    pub fn put<S>(&self, key: &CacheKey, entry: &CacheEntry<S>)
    where
        S: Scalar + Serialize + DeserializeOwned,
    {
        let value = serde_json::to_value(entry).expect("cache entry serializes");
        self.entries.write().unwrap_or_else(|e| e.into_inner()).insert(key.encode(), value);
    }

    /// Writes all entries to a temporary file and renames it over the cache file.
    pub fn flush(&self) -> std::io::Result<()> {
        let dir = self.path.parent().unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let file = CacheFile {
            format_version: CACHE_FORMAT_VERSION,
            model_id: self.model_id.clone(),
            dataset: self.dataset.clone(),
            entries: self.entries.read().unwrap_or_else(|e| e.into_inner()).clone(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer(&mut tmp, &file)?;
        tmp.flush()?;
        tmp.persist(&self.path).map_err(|e| e.error)?;
        Ok(())
    }
}
