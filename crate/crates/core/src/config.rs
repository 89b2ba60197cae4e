//! TOML run configuration. Every section and field has a default, so a
//! config file only needs the keys it wants to change; unknown keys are
//! rejected to catch typos. Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable consulted for the config file path.
pub const CONFIG_ENV_VAR: &str = "CORPUS_FORGE_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Base seed for every randomized step.
    pub seed: u64,
    pub io: IoConfig,
    pub clean: CleanConfig,
    pub sample: SampleConfig,
    pub vocab: VocabConfig,
    pub pretrain: PretrainConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Corpus format: "jsonl" or "text".
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleanConfig {
    /// Stage names in execution order.
    pub stages: Vec<String>,
    pub script_threshold: f64,
    pub min_words: u64,
    pub lid_model: Option<PathBuf>,
    /// Overrides the margin stored in the model when set.
    pub lid_margin: Option<f64>,
    /// Directory scanned for `<lang>.txt` blacklist files.
    pub blacklist_dir: Option<PathBuf>,
    /// Explicit per-language blacklist files; wins over the directory.
    pub blacklists: BTreeMap<String, PathBuf>,
    pub offensive_doc_level: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            stages: crate::filter::Stage::DEFAULT_ORDER
                .iter()
                .map(|s| s.name().to_string())
                .collect(),
            script_threshold: crate::filter::DEFAULT_SCRIPT_THRESHOLD,
            min_words: crate::filter::DEFAULT_MIN_WORDS,
            lid_model: None,
            lid_margin: None,
            blacklist_dir: None,
            blacklists: BTreeMap::new(),
            offensive_doc_level: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub alpha: f64,
    pub target_tokens: u64,
    pub shards: u32,
    pub prepend_lang_token: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            alpha: crate::sampling::DEFAULT_ALPHA,
            target_tokens: 1_000_000,
            shards: 1,
            prepend_lang_token: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VocabConfig {
    pub size: usize,
    pub min_pair_freq: u64,
    /// Share of input lines used for training.
    pub fraction: f64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            size: 8000,
            min_pair_freq: 2,
            fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainConfig {
    pub max_len: usize,
    pub mask_prob: f64,
    /// Reserve the first slot of every packed sequence for `[CLS]`.
    pub add_cls: bool,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            max_len: crate::pretrain::DEFAULT_MAX_LEN,
            mask_prob: crate::pretrain::DEFAULT_MASK_PROB,
            add_cls: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&content).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Load the file when given, otherwise return defaults.
    pub fn load_optional(path: Option<&Path>) -> Result<PipelineConfig> {
        match path {
            Some(p) => PipelineConfig::load(p),
            None => Ok(PipelineConfig::default()),
        }
    }
}
