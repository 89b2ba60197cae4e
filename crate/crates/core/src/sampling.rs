//! Temperature-based upsampling: turn per-language token counts into
//! sampling probabilities `p_l = q_l^alpha / sum_j q_j^alpha`, and
//! materialize a sampled corpus into shard files with a seeded generator.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::doc::CleanDocument;
use crate::error::{Error, Result};
use crate::lang::LanguageTable;

pub const DEFAULT_ALPHA: f64 = 0.3;

/// Per-language row of a sampling plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// Observed token count for the language.
    pub count: u64,
    /// Share of the corpus, `count / total`.
    pub fraction: f64,
    /// Temperature-adjusted sampling probability.
    pub probability: f64,
    /// Expected replication factor, `probability / fraction`.
    pub replication: f64,
}

/// A full temperature-sampling plan over a set of languages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub alpha: f64,
    pub total_tokens: u64,
    pub per_lang: BTreeMap<String, PlanEntry>,
    /// Languages present in the input with zero tokens; they get
    /// probability zero and are never sampled.
    pub zero_count_langs: Vec<String>,
}

impl SamplingPlan {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SamplingPlan> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&content)?)
    }
}

/// Compute the temperature-sampling plan for the given per-language token
/// counts. `alpha = 1` reproduces the corpus distribution exactly;
/// `alpha < 1` shifts probability mass toward low-resource languages.
pub fn temperature_plan(counts: &BTreeMap<String, u64>, alpha: f64) -> Result<SamplingPlan> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config(format!(
            "sampling temperature must be a positive number, got {alpha}"
        )));
    }
    if counts.is_empty() {
        return Err(Error::InvalidInput("no languages to plan over".into()));
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::InvalidInput(
            "all languages have zero tokens".into(),
        ));
    }

    let mut zero_count_langs = Vec::new();
    let mut per_lang = BTreeMap::new();
    // Weights accumulate in key order so the normalizer is deterministic.
    let mut denom = 0.0f64;
    let mut weights: Vec<(&String, f64, f64)> = Vec::with_capacity(counts.len());
    for (lang, &n) in counts {
        let q = n as f64 / total as f64;
        let w = if n == 0 {
            zero_count_langs.push(lang.clone());
            0.0
        } else if alpha == 1.0 {
            q
        } else {
            q.powf(alpha)
        };
        denom += w;
        weights.push((lang, q, w));
    }
    for (lang, q, w) in weights {
        // With alpha = 1 the plan is the identity: p equals q bit for bit.
        let p = if alpha == 1.0 { q } else { w / denom };
        let r = if q > 0.0 { p / q } else { 0.0 };
        per_lang.insert(
            lang.clone(),
            PlanEntry {
                count: counts[lang],
                fraction: q,
                probability: p,
                replication: r,
            },
        );
    }
    debug_assert!(
        (per_lang.values().map(|e| e.probability).sum::<f64>() - 1.0).abs() < 1e-9,
        "plan probabilities must sum to one"
    );
    Ok(SamplingPlan {
        alpha,
        total_tokens: total,
        per_lang,
        zero_count_langs,
    })
}

/// The language-marker token written in front of sampled documents.
pub fn lang_marker(code: &str) -> Result<String> {
    Ok(LanguageTable::require(code)?.lang_token())
}

/// Materialization settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterializeConfig {
    pub seed: u64,
    /// Total token budget across all shards; the language marker, when
    /// prepended, is not counted against it.
    pub target_tokens: u64,
    pub shards: u32,
    pub prepend_lang_token: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShardSummary {
    pub file: String,
    pub documents: u64,
    pub tokens: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterializeReport {
    pub shards: Vec<ShardSummary>,
    pub docs_per_lang: BTreeMap<String, u64>,
    pub tokens_per_lang: BTreeMap<String, u64>,
    pub total_documents: u64,
    pub total_tokens: u64,
    pub warnings: Vec<String>,
}

/// A document flattened to a single output line.
fn doc_line(doc: &CleanDocument) -> String {
    doc.text()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sample documents according to `plan` and write one shard file per
/// shard index under `out_dir` (`shard-00000.txt`, one document per
/// line). Each shard draws from its own generator stream, so shard
/// contents depend only on (seed, shard index) and shards can be written
/// in any order or in parallel.
pub fn materialize(
    corpus: &BTreeMap<String, Vec<CleanDocument>>,
    plan: &SamplingPlan,
    config: &MaterializeConfig,
    out_dir: &Path,
) -> Result<MaterializeReport> {
    if config.shards == 0 {
        return Err(Error::Config("shard count must be at least 1".into()));
    }
    if config.target_tokens == 0 {
        return Err(Error::Config("token target must be positive".into()));
    }

    // Cumulative distribution over languages with positive probability,
    // in key order.
    let mut cumulative: Vec<(&str, f64)> = Vec::new();
    let mut acc = 0.0f64;
    for (lang, entry) in &plan.per_lang {
        if entry.probability > 0.0 {
            let docs = corpus.get(lang).map_or(0, Vec::len);
            if docs == 0 {
                return Err(Error::Config(format!(
                    "plan assigns probability to {lang:?} but the corpus has no documents for it"
                )));
            }
            acc += entry.probability;
            cumulative.push((lang, acc));
        }
    }
    if cumulative.is_empty() {
        return Err(Error::InvalidInput(
            "plan has no language with positive probability".into(),
        ));
    }

    let mut warnings = Vec::new();
    let max_doc_tokens = corpus
        .values()
        .flatten()
        .map(CleanDocument::token_count)
        .max()
        .unwrap_or(0);
    let base_budget = config.target_tokens / config.shards as u64;
    if base_budget < max_doc_tokens {
        warnings.push(format!(
            "per-shard token budget {base_budget} is below the largest document \
             ({max_doc_tokens} tokens); budgets may overshoot"
        ));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = MaterializeReport {
        shards: Vec::new(),
        docs_per_lang: BTreeMap::new(),
        tokens_per_lang: BTreeMap::new(),
        total_documents: 0,
        total_tokens: 0,
        warnings,
    };

    let remainder = config.target_tokens % config.shards as u64;
    for shard in 0..config.shards {
        // The first shards absorb the division remainder one token each.
        let budget = base_budget + u64::from((shard as u64) < remainder);
        let path: PathBuf = out_dir.join(format!("shard-{shard:05}.txt"));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(shard as u64);

        let mut shard_docs = 0u64;
        let mut shard_tokens = 0u64;
        while shard_tokens < budget {
            let u: f64 = rng.random();
            let lang = cumulative
                .iter()
                .find(|(_, c)| u < *c)
                .map(|(l, _)| *l)
                .unwrap_or(cumulative.last().expect("non-empty").0);
            let docs = &corpus[lang];
            let doc = &docs[rng.random_range(0..docs.len())];

            let tokens = doc.token_count();
            let line = doc_line(doc);
            if config.prepend_lang_token {
                let marker = lang_marker(&doc.lang)?;
                writeln!(out, "{marker} {line}").map_err(|e| Error::io(&path, e))?;
            } else {
                writeln!(out, "{line}").map_err(|e| Error::io(&path, e))?;
            }
            shard_docs += 1;
            shard_tokens += tokens;
            *report.docs_per_lang.entry(lang.to_string()).or_default() += 1;
            *report.tokens_per_lang.entry(lang.to_string()).or_default() += tokens;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;

        report.total_documents += shard_docs;
        report.total_tokens += shard_tokens;
        report.shards.push(ShardSummary {
            file: path.to_string_lossy().into_owned(),
            documents: shard_docs,
            tokens: shard_tokens,
        });
    }
    Ok(report)
}
