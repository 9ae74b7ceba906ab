use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use parals_core::RunConfig;
use serde::{Deserialize, Serialize};

use crate::{absolute, read_text, sha256_hex, write_text, CliError, Command};

pub const MANIFEST_VERSION: u32 = 1;

/// Wall-clock timings, kept apart so the rest of the manifest is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub per_instance_ms: BTreeMap<String, f64>,
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool_version: String,
    /// The invocation, with absolute paths and no config-file reference.
    pub invocation: Command,
    /// Effective configuration after file and flag overrides.
    pub config: Option<RunConfig>,
    #[serde(default)]
    pub backend_id: Option<String>,
    #[serde(default)]
    pub model_id: Option<String>,
    /// sha256 of every input file, keyed by absolute path.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub timing: Option<Timing>,
}

impl Manifest {
    pub fn new(invocation: Command, config: Option<RunConfig>) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            invocation,
            config,
            backend_id: None,
            model_id: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timing: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(absolute(path).display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.insert(absolute(path).display().to_string(), sha256_hex(bytes));
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path, "manifest")?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_text(path, &text)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fail unless the regenerated outputs hash to the recorded values.
    #[arg(long)]
    pub check: bool,
}

pub fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let manifest = Manifest::load(&args.manifest)?;
    for (path, digest) in &manifest.inputs {
        match std::fs::read(path) {
            Ok(bytes) if sha256_hex(&bytes) == *digest => {}
            Ok(_) => log::warn!("input {path} changed since the manifest was written"),
            Err(e) => return Err(CliError::Data(format!("cannot read recorded input {path}: {e}"))),
        }
    }
    match &manifest.invocation {
        Command::Generate(a) => {
            let config = manifest.config.clone().ok_or_else(|| CliError::Data("manifest has no config".into()))?;
            crate::generate::execute(a, &config)?
        }
        Command::Rank(a) => {
            let config = manifest.config.clone().ok_or_else(|| CliError::Data("manifest has no config".into()))?;
            crate::rank::execute(a, &config)?
        }
        Command::Evaluate(a) => crate::evaluate::run(a)?,
        Command::Replay(_) => return Err(CliError::Data("a manifest cannot record a replay".into())),
    }
    if args.check {
        let mut mismatched = Vec::new();
        for (path, digest) in &manifest.outputs {
            let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {path}: {e}")))?;
            if sha256_hex(&bytes) != *digest {
                mismatched.push(path.clone());
            }
        }
        if !mismatched.is_empty() {
            return Err(CliError::Data(format!("replayed outputs differ: {}", mismatched.join(", "))));
        }
    }
    Ok(())
}
