//! Pretraining example builders: sequence packing, masked-language-model
//! corruption, and translation-pair examples.
//!
//! Masking selects each maskable position independently with probability
//! `mask_prob`; a selected position becomes `[MASK]` 80% of the time, a
//! random non-special piece 10%, and stays unchanged 10%. Labels carry the
//! original id at selected positions and -100 everywhere else.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::VocabModel;

pub const DEFAULT_MAX_LEN: usize = 512;
pub const DEFAULT_MASK_PROB: f64 = 0.15;
/// Label value for positions the loss must ignore.
pub const IGNORE_LABEL: i64 = -100;

/// One serialized pretraining example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainExample {
    pub input_ids: Vec<u32>,
    /// Original ids at masked positions, -100 elsewhere.
    pub labels: Vec<i64>,
    /// For translation pairs: the separator position (= source length).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<usize>,
}

impl PretrainExample {
    pub fn len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_ids.is_empty()
    }
}

/// Greedily pack tokenized documents into sequences of at most `max_len`.
/// A document longer than the capacity is split at the capacity; full
/// chunks are emitted and the tail stays open for further packing. With
/// `cls` set, one slot is reserved and the id is prepended to every
/// emitted sequence.
pub fn pack_sequences(
    docs: impl IntoIterator<Item = Vec<u32>>,
    max_len: usize,
    cls: Option<u32>,
) -> Result<Vec<Vec<u32>>> {
    let capacity = max_len - usize::from(cls.is_some());
    if capacity == 0 {
        return Err(Error::Config(format!(
            "sequence length {max_len} leaves no room for content"
        )));
    }
    let emit = |seq: Vec<u32>, out: &mut Vec<Vec<u32>>| {
        let mut full = Vec::with_capacity(seq.len() + 1);
        if let Some(id) = cls {
            full.push(id);
        }
        full.extend(seq);
        out.push(full);
    };

    let mut out = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    for doc in docs {
        if doc.is_empty() {
            continue;
        }
        if current.len() + doc.len() <= capacity {
            current.extend(doc);
            continue;
        }
        if !current.is_empty() {
            emit(std::mem::take(&mut current), &mut out);
        }
        let mut rest = doc.as_slice();
        while rest.len() > capacity {
            emit(rest[..capacity].to_vec(), &mut out);
            rest = &rest[capacity..];
        }
        current = rest.to_vec();
    }
    if !current.is_empty() {
        emit(current, &mut out);
    }
    Ok(out)
}

/// Builds masked examples against a fixed vocabulary. Randomness is keyed
/// by (seed, sequence index), so example `i` is reproducible in isolation.
pub struct MlmBuilder<'a> {
    model: &'a VocabModel,
    /// Non-special piece ids eligible as random replacements.
    replacement_pool: Vec<u32>,
    pub mask_prob: f64,
    pub seed: u64,
}

impl<'a> MlmBuilder<'a> {
    pub fn new(model: &'a VocabModel, mask_prob: f64, seed: u64) -> Result<MlmBuilder<'a>> {
        if !(0.0..=1.0).contains(&mask_prob) {
            return Err(Error::Config(format!(
                "mask probability must be in [0, 1], got {mask_prob}"
            )));
        }
        let replacement_pool: Vec<u32> = (0..model.len() as u32)
            .filter(|id| !model.is_special(*id))
            .collect();
        if mask_prob > 0.0 && replacement_pool.is_empty() {
            return Err(Error::Config(
                "vocabulary has no non-special pieces to draw replacements from".into(),
            ));
        }
        Ok(MlmBuilder {
            model,
            replacement_pool,
            mask_prob,
            seed,
        })
    }

    pub fn build(&self, sequence: &[u32], seq_index: u64) -> PretrainExample {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(seq_index);
        let mask_id = self.model.mask_id();
        let mut input_ids = sequence.to_vec();
        let mut labels = vec![IGNORE_LABEL; sequence.len()];
        for (i, &id) in sequence.iter().enumerate() {
            if self.model.is_special(id) {
                continue;
            }
            if rng.random::<f64>() >= self.mask_prob {
                continue;
            }
            labels[i] = i64::from(id);
            let r: f64 = rng.random();
            if r < 0.8 {
                input_ids[i] = mask_id;
            } else if r < 0.9 {
                let j = rng.random_range(0..self.replacement_pool.len());
                input_ids[i] = self.replacement_pool[j];
            }
            // else: keep the original id, label still set
        }
        PretrainExample {
            input_ids,
            labels,
            boundary: None,
        }
    }

    /// Build a translation-pair example: `source [SEP] target`, masked the
    /// same way, with the pair truncated proportionally to fit `max_len`.
    /// The separator is a special piece and is never masked.
    pub fn build_pair(
        &self,
        source: &[u32],
        target: &[u32],
        max_len: usize,
        seq_index: u64,
    ) -> Result<PretrainExample> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidInput(
                "translation pair has an empty side".into(),
            ));
        }
        if max_len < 3 {
            return Err(Error::Config(format!(
                "pair sequences need length for two tokens and a separator, got {max_len}"
            )));
        }
        let budget = max_len - 1;
        let (src_len, tgt_len) = if source.len() + target.len() <= budget {
            (source.len(), target.len())
        } else {
            // Proportional truncation, each side keeping at least one token.
            let mut s = budget * source.len() / (source.len() + target.len());
            s = s.clamp(1, budget - 1);
            (s, budget - s)
        };
        let mut seq = Vec::with_capacity(src_len + 1 + tgt_len);
        seq.extend_from_slice(&source[..src_len]);
        seq.push(self.model.sep_id());
        seq.extend_from_slice(&target[..tgt_len]);
        let mut example = self.build(&seq, seq_index);
        example.boundary = Some(src_len);
        Ok(example)
    }
}

/// Write examples as JSON lines. Returns the number written.
pub fn write_examples<'a>(
    path: &Path,
    examples: impl IntoIterator<Item = &'a PretrainExample>,
) -> Result<u64> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut written = 0u64;
    for example in examples {
        let line = serde_json::to_string(example)?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        written += 1;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(written)
}

pub fn read_examples(path: &Path) -> Result<Vec<PretrainExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let example: PretrainExample = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, i as u64 + 1, e.to_string()))?;
        out.push(example);
    }
    Ok(out)
}
