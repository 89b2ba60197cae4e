//! Benchmark scoring: exact-match accuracy, chunk-level micro F1 over
//! IOB2 tags, token-bag span F1, cosine retrieval accuracy, and the
//! cross-task aggregation table.
//!
//! All file-level scores are percentages in [0, 100]. Rounding happens
//! only when a table is rendered; stored and aggregated values keep full
//! precision.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unicode::strip_punctuation;

// ==== prediction record formats ====

/// One classification prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub gold: String,
    pub pred: String,
}

/// One tagged sequence (gold and predicted IOB2 tags, position-aligned).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub gold: Vec<String>,
    pub pred: Vec<String>,
}

/// One extracted-span prediction with its reference answers. An empty
/// reference list or all-empty references marks an unanswerable question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub golds: Vec<String>,
    pub pred: String,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, i as u64 + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_label_records(path: &Path) -> Result<Vec<LabelRecord>> {
    read_jsonl(path)
}

pub fn read_seq_records(path: &Path) -> Result<Vec<SeqRecord>> {
    read_jsonl(path)
}

pub fn read_span_records(path: &Path) -> Result<Vec<SpanRecord>> {
    read_jsonl(path)
}

// ==== accuracy ====

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Percentage of exact matches.
    pub accuracy: f64,
    pub correct: u64,
    pub total: u64,
}

pub fn accuracy(records: &[LabelRecord]) -> Result<AccuracyReport> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to score".into()));
    }
    let correct = records.iter().filter(|r| r.gold == r.pred).count() as u64;
    let total = records.len() as u64;
    Ok(AccuracyReport {
        accuracy: correct as f64 / total as f64 * 100.0,
        correct,
        total,
    })
}

// ==== chunk F1 ====

/// A chunk is (start, end-exclusive, type).
pub type Chunk = (usize, usize, String);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

fn parse_tag(tag: &str) -> Option<Tag> {
    if tag == "O" {
        return Some(Tag::Outside);
    }
    let (prefix, ty) = tag.split_once('-')?;
    if ty.is_empty() {
        return None;
    }
    match prefix {
        "B" => Some(Tag::Begin(ty.to_string())),
        "I" => Some(Tag::Inside(ty.to_string())),
        _ => None,
    }
}

/// Extract chunks from an IOB2 tag sequence. An `I-X` that does not
/// continue a chunk of type `X` is repaired to a chunk start; the repair
/// count is returned alongside. `None` means a malformed tag.
pub fn extract_chunks(tags: &[String]) -> Option<(Vec<Chunk>, u64)> {
    let mut chunks = Vec::new();
    let mut repairs = 0u64;
    let mut open: Option<(usize, String)> = None;
    for (i, raw) in tags.iter().enumerate() {
        let tag = parse_tag(raw)?;
        match tag {
            Tag::Outside => {
                if let Some((start, ty)) = open.take() {
                    chunks.push((start, i, ty));
                }
            }
            Tag::Begin(ty) => {
                if let Some((start, old)) = open.take() {
                    chunks.push((start, i, old));
                }
                open = Some((i, ty));
            }
            Tag::Inside(ty) => match &open {
                Some((_, old)) if *old == ty => {}
                _ => {
                    // Dangling continuation: repair to a chunk start.
                    repairs += 1;
                    if let Some((start, old)) = open.take() {
                        chunks.push((start, i, old));
                    }
                    open = Some((i, ty));
                }
            },
        }
    }
    if let Some((start, ty)) = open {
        chunks.push((start, tags.len(), ty));
    }
    Some((chunks, repairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkF1Report {
    /// Micro precision, recall, and F1 as percentages.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_chunks: u64,
    pub pred_chunks: u64,
    pub matched: u64,
    /// Dangling `I-` tags repaired to chunk starts, both sides combined.
    pub repairs: u64,
    /// Records excluded for length mismatch or malformed tags.
    pub skipped_records: u64,
    pub scored_records: u64,
}

pub fn chunk_f1(records: &[SeqRecord]) -> Result<ChunkF1Report> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to score".into()));
    }
    let mut gold_total = 0u64;
    let mut pred_total = 0u64;
    let mut matched = 0u64;
    let mut repairs = 0u64;
    let mut skipped = 0u64;
    let mut scored = 0u64;
    for record in records {
        if record.gold.len() != record.pred.len() {
            skipped += 1;
            continue;
        }
        let (Some((gold, gr)), Some((pred, pr))) =
            (extract_chunks(&record.gold), extract_chunks(&record.pred))
        else {
            skipped += 1;
            continue;
        };
        scored += 1;
        repairs += gr + pr;
        gold_total += gold.len() as u64;
        pred_total += pred.len() as u64;
        let gold_set: std::collections::HashSet<&Chunk> = gold.iter().collect();
        matched += pred.iter().filter(|c| gold_set.contains(c)).count() as u64;
    }
    if scored == 0 {
        return Err(Error::InvalidInput(
            "every record was skipped; nothing to score".into(),
        ));
    }
    let precision = if pred_total > 0 {
        matched as f64 / pred_total as f64
    } else {
        f64::from(u8::from(gold_total == 0))
    };
    let recall = if gold_total > 0 {
        matched as f64 / gold_total as f64
    } else {
        f64::from(u8::from(pred_total == 0))
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ChunkF1Report {
        precision: precision * 100.0,
        recall: recall * 100.0,
        f1: f1 * 100.0,
        gold_chunks: gold_total,
        pred_chunks: pred_total,
        matched,
        repairs,
        skipped_records: skipped,
        scored_records: scored,
    })
}

// ==== span F1 ====

/// Lowercase, strip punctuation, collapse whitespace runs.
pub fn normalize_answer(text: &str) -> String {
    let stripped = strip_punctuation(&text.to_lowercase());
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn token_bag(text: &str) -> BTreeMap<&str, u64> {
    let mut bag = BTreeMap::new();
    for token in text.split_whitespace() {
        *bag.entry(token).or_insert(0u64) += 1;
    }
    bag
}

/// Token-bag F1 between one reference and one prediction, in [0, 1].
/// Both empty scores 1; exactly one empty scores 0.
pub fn span_f1_pair(gold: &str, pred: &str, normalize: bool) -> f64 {
    let (gold, pred) = if normalize {
        (normalize_answer(gold), normalize_answer(pred))
    } else {
        (gold.to_string(), pred.to_string())
    };
    let gold_bag = token_bag(&gold);
    let pred_bag = token_bag(&pred);
    let gold_n: u64 = gold_bag.values().sum();
    let pred_n: u64 = pred_bag.values().sum();
    if gold_n == 0 && pred_n == 0 {
        return 1.0;
    }
    if gold_n == 0 || pred_n == 0 {
        return 0.0;
    }
    let common: u64 = gold_bag
        .iter()
        .filter_map(|(t, c)| pred_bag.get(t).map(|p| (*c).min(*p)))
        .sum();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred_n as f64;
    let recall = common as f64 / gold_n as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-bag F1 over the references, in [0, 1]. When every reference
/// is empty the question is unanswerable: exactly an empty prediction
/// scores 1.
pub fn span_f1_record(golds: &[String], pred: &str, normalize: bool) -> f64 {
    let norm = |s: &str| {
        if normalize {
            normalize_answer(s)
        } else {
            s.to_string()
        }
    };
    let unanswerable = golds.iter().all(|g| norm(g).is_empty());
    if unanswerable {
        return f64::from(u8::from(norm(pred).is_empty()));
    }
    golds
        .iter()
        .map(|g| span_f1_pair(g, pred, normalize))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanF1Report {
    /// Mean per-record F1 as a percentage.
    pub f1: f64,
    pub records: u64,
    pub unanswerable: u64,
}

pub fn span_f1(records: &[SpanRecord], normalize: bool) -> Result<SpanF1Report> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to score".into()));
    }
    let norm = |s: &str| {
        if normalize {
            normalize_answer(s)
        } else {
            s.to_string()
        }
    };
    let mut sum = 0.0f64;
    let mut unanswerable = 0u64;
    for record in records {
        if record.golds.iter().all(|g| norm(g).is_empty()) {
            unanswerable += 1;
        }
        sum += span_f1_record(&record.golds, &record.pred, normalize);
    }
    Ok(SpanF1Report {
        f1: sum / records.len() as f64 * 100.0,
        records: records.len() as u64,
        unanswerable,
    })
}

// ==== retrieval ====

/// A row-major dense matrix of sentence embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Matrix> {
        if rows * dim != data.len() {
            return Err(Error::InvalidInput(format!(
                "matrix shape {rows}x{dim} does not match {} values",
                data.len()
            )));
        }
        Ok(Matrix { rows, dim, data })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Binary layout: two little-endian u32 (rows, dim), then row-major
    /// little-endian f32 values.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        out.write_all(&(self.rows as u32).to_le_bytes()).map_err(io)?;
        out.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read_binary(path: &Path) -> Result<Matrix> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let io = |e| Error::io(path, e);
        let mut header = [0u8; 8];
        reader.read_exact(&mut header).map_err(io)?;
        let rows = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes).map_err(io)?;
        if bytes.len() != rows * dim * 4 {
            return Err(Error::InvalidInput(format!(
                "embedding file {}: header says {rows}x{dim} but body has {} bytes",
                path.display(),
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Matrix::new(rows, dim, data)
    }

    /// One JSON array of numbers per line.
    pub fn read_jsonl(path: &Path) -> Result<Matrix> {
        let rows: Vec<Vec<f32>> = read_jsonl(path)?;
        if rows.is_empty() {
            return Err(Error::InvalidInput(format!(
                "embedding file {} is empty",
                path.display()
            )));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("zero-dimensional embeddings".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "embedding row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
        }
        let n = rows.len();
        Matrix::new(n, dim, rows.into_iter().flatten().collect())
    }
}

/// Average the unmasked rows of a matrix. Errors when every row is masked.
pub fn mean_pool(matrix: &Matrix, mask: &[bool]) -> Result<Vec<f32>> {
    if mask.len() != matrix.rows {
        return Err(Error::InvalidInput(format!(
            "mask length {} does not match {} rows",
            mask.len(),
            matrix.rows
        )));
    }
    let kept = mask.iter().filter(|m| **m).count();
    if kept == 0 {
        return Err(Error::InvalidInput("every position is masked out".into()));
    }
    let mut acc = vec![0.0f64; matrix.dim];
    for (i, keep) in mask.iter().enumerate() {
        if *keep {
            for (a, v) in acc.iter_mut().zip(matrix.row(i)) {
                *a += f64::from(*v);
            }
        }
    }
    Ok(acc.iter().map(|a| (*a / kept as f64) as f32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    /// Percentage of source rows whose nearest target is the same index.
    pub accuracy: f64,
    pub pairs: u64,
    pub correct: u64,
    /// Rows (either side) with zero norm; they can never be retrieved.
    pub zero_norm_rows: u64,
}

/// Nearest-neighbor retrieval by cosine similarity, computed in f64.
/// Ties resolve to the lowest index; zero-norm rows score minus infinity.
pub fn retrieval_accuracy(src: &Matrix, tgt: &Matrix) -> Result<RetrievalReport> {
    if src.rows != tgt.rows {
        return Err(Error::InvalidInput(format!(
            "source has {} rows but target has {}",
            src.rows, tgt.rows
        )));
    }
    if src.dim != tgt.dim {
        return Err(Error::InvalidInput(format!(
            "source dim {} does not match target dim {}",
            src.dim, tgt.dim
        )));
    }
    if src.rows == 0 {
        return Err(Error::InvalidInput("no pairs to score".into()));
    }

    let norms = |m: &Matrix| -> Vec<f64> {
        (0..m.rows)
            .map(|i| m.row(i).iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt())
            .collect()
    };
    let src_norms = norms(src);
    let tgt_norms = norms(tgt);
    let zero_norm_rows = src_norms.iter().chain(&tgt_norms).filter(|n| **n == 0.0).count() as u64;

    let mut correct = 0u64;
    for (i, &src_norm) in src_norms.iter().enumerate() {
        let mut best_j = 0usize;
        let mut best = f64::NEG_INFINITY;
        for (j, &tgt_norm) in tgt_norms.iter().enumerate() {
            let sim = if src_norm == 0.0 || tgt_norm == 0.0 {
                f64::NEG_INFINITY
            } else {
                let dot: f64 = src
                    .row(i)
                    .iter()
                    .zip(tgt.row(j))
                    .map(|(a, b)| f64::from(*a) * f64::from(*b))
                    .sum();
                dot / (src_norm * tgt_norm)
            };
            if sim > best {
                best = sim;
                best_j = j;
            }
        }
        // A row with no finite similarity anywhere retrieves nothing.
        if best > f64::NEG_INFINITY && best_j == i {
            correct += 1;
        }
    }
    Ok(RetrievalReport {
        accuracy: correct as f64 / src.rows as f64 * 100.0,
        pairs: src.rows as u64,
        correct,
        zero_norm_rows,
    })
}

// ==== aggregation ====

/// Scores for several tasks over several languages, with per-task and
/// per-language means over the cells that exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub tasks: BTreeMap<String, BTreeMap<String, f64>>,
    pub task_means: BTreeMap<String, f64>,
    pub lang_means: BTreeMap<String, f64>,
}

pub fn aggregate(tasks: BTreeMap<String, BTreeMap<String, f64>>) -> Result<BenchmarkReport> {
    if tasks.is_empty() || tasks.values().all(BTreeMap::is_empty) {
        return Err(Error::InvalidInput("no scores to aggregate".into()));
    }
    let mut task_means = BTreeMap::new();
    for (task, scores) in &tasks {
        if scores.is_empty() {
            continue;
        }
        let mean = scores.values().sum::<f64>() / scores.len() as f64;
        task_means.insert(task.clone(), mean);
    }
    let mut per_lang: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for scores in tasks.values() {
        for (lang, score) in scores {
            per_lang.entry(lang.clone()).or_default().push(*score);
        }
    }
    let lang_means = per_lang
        .into_iter()
        .map(|(lang, v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (lang, mean)
        })
        .collect();
    Ok(BenchmarkReport {
        tasks,
        task_means,
        lang_means,
    })
}

/// Plain-text score table: one row per language, one column per task,
/// means along both margins. Scores print with one decimal; full
/// precision stays in the report itself.
pub fn render_table(report: &BenchmarkReport) -> String {
    let tasks: Vec<&String> = report.tasks.keys().collect();
    let langs: Vec<&String> = report.lang_means.keys().collect();
    let mut width = 4usize;
    for t in &tasks {
        width = width.max(t.chars().count());
    }
    let cell = |v: Option<f64>| match v {
        Some(v) => format!("{v:>width$.1}"),
        None => format!("{:>width$}", "-"),
    };

    let mut out = String::new();
    out.push_str(&format!("{:<6}", "lang"));
    for t in &tasks {
        out.push_str(&format!(" {t:>width$}"));
    }
    out.push_str(&format!(" {:>width$}\n", "mean"));
    for lang in &langs {
        out.push_str(&format!("{lang:<6}"));
        for t in &tasks {
            out.push(' ');
            out.push_str(&cell(report.tasks[*t].get(*lang).copied()));
        }
        out.push(' ');
        out.push_str(&cell(report.lang_means.get(*lang).copied()));
        out.push('\n');
    }
    out.push_str(&format!("{:<6}", "mean"));
    for t in &tasks {
        out.push(' ');
        out.push_str(&cell(report.task_means.get(*t).copied()));
    }
    out.push_str(&format!(" {:>width$}\n", "-"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    // ==== accuracy ====

    #[test]
    fn accuracy_counts_exact_matches() {
        let records = vec![
            LabelRecord { id: None, gold: "pos".into(), pred: "pos".into() },
            LabelRecord { id: None, gold: "neg".into(), pred: "pos".into() },
            LabelRecord { id: None, gold: "neg".into(), pred: "neg".into() },
            LabelRecord { id: None, gold: "pos".into(), pred: "pos".into() },
        ];
        let report = accuracy(&records).unwrap();
        assert_eq!(report.correct, 3);
        assert!((report.accuracy - 75.0).abs() < 1e-12);
        assert!(accuracy(&[]).is_err());
    }

    // ==== chunks ====

    #[test]
    fn chunks_extract_from_well_formed_tags() {
        let (chunks, repairs) =
            extract_chunks(&tags(&["B-PER", "I-PER", "O", "B-LOC", "B-ORG", "I-ORG"])).unwrap();
        assert_eq!(repairs, 0);
        assert_eq!(chunks, vec![
            (0, 2, "PER".to_string()),
            (3, 4, "LOC".to_string()),
            (4, 6, "ORG".to_string()),
        ]);
    }

    #[test]
    fn dangling_inside_tags_are_repaired() {
        // I-PER after O and I-LOC after a PER chunk both start new chunks.
        let (chunks, repairs) =
            extract_chunks(&tags(&["O", "I-PER", "I-PER", "I-LOC"])).unwrap();
        assert_eq!(repairs, 2);
        assert_eq!(chunks, vec![(1, 3, "PER".to_string()), (3, 4, "LOC".to_string())]);
    }

    #[test]
    fn malformed_tags_are_detected() {
        assert!(extract_chunks(&tags(&["B-PER", "X-LOC"])).is_none());
        assert!(extract_chunks(&tags(&["B-"])).is_none());
        assert!(extract_chunks(&tags(&["banana"])).is_none());
    }

    #[test]
    fn perfect_prediction_scores_hundred() {
        let records = vec![SeqRecord {
            id: None,
            gold: tags(&["B-PER", "I-PER", "O", "B-LOC"]),
            pred: tags(&["B-PER", "I-PER", "O", "B-LOC"]),
        }];
        let report = chunk_f1(&records).unwrap();
        assert!((report.f1 - 100.0).abs() < 1e-12);
        assert_eq!(report.repairs, 0);
    }

    #[test]
    fn repaired_prediction_can_still_match() {
        let records = vec![SeqRecord {
            id: None,
            gold: tags(&["B-PER", "I-PER", "O", "O"]),
            pred: tags(&["I-PER", "I-PER", "O", "O"]),
        }];
        let report = chunk_f1(&records).unwrap();
        assert!((report.f1 - 100.0).abs() < 1e-12);
        assert_eq!(report.repairs, 1);
    }

    #[test]
    fn mismatched_lengths_are_skipped_and_reported() {
        let records = vec![
            SeqRecord {
                id: None,
                gold: tags(&["B-PER", "O"]),
                pred: tags(&["B-PER"]),
            },
            SeqRecord {
                id: None,
                gold: tags(&["B-LOC"]),
                pred: tags(&["B-LOC"]),
            },
        ];
        let report = chunk_f1(&records).unwrap();
        assert_eq!(report.skipped_records, 1);
        assert_eq!(report.scored_records, 1);
        assert!((report.f1 - 100.0).abs() < 1e-12);
    }

    #[test]
    fn partial_overlap_scores_micro_f1() {
        // gold: PER(0,2) LOC(3,4); pred: PER(0,2) ORG(2,3)
        let records = vec![SeqRecord {
            id: None,
            gold: tags(&["B-PER", "I-PER", "O", "B-LOC"]),
            pred: tags(&["B-PER", "I-PER", "B-ORG", "O"]),
        }];
        let report = chunk_f1(&records).unwrap();
        assert!((report.precision - 50.0).abs() < 1e-12);
        assert!((report.recall - 50.0).abs() < 1e-12);
        assert!((report.f1 - 50.0).abs() < 1e-12);
    }

    /// Second route: repair the tag sequence to valid IOB2 first, then
    /// extract chunks by boundary grouping.
    fn oracle_chunks(raw: &[String]) -> Option<Vec<Chunk>> {
        let mut repaired: Vec<Tag> = Vec::with_capacity(raw.len());
        for t in raw {
            let tag = parse_tag(t)?;
            let fixed = match (&tag, repaired.last()) {
                (Tag::Inside(ty), Some(Tag::Begin(p)) | Some(Tag::Inside(p))) if p == ty => tag,
                (Tag::Inside(ty), _) => Tag::Begin(ty.clone()),
                _ => tag,
            };
            repaired.push(fixed);
        }
        let mut chunks = Vec::new();
        let mut i = 0;
        while i < repaired.len() {
            if let Tag::Begin(ty) = &repaired[i] {
                let mut j = i + 1;
                while j < repaired.len() {
                    match &repaired[j] {
                        Tag::Inside(t2) if t2 == ty => j += 1,
                        _ => break,
                    }
                }
                chunks.push((i, j, ty.clone()));
                i = j;
            } else {
                i += 1;
            }
        }
        Some(chunks)
    }

    proptest! {
        #[test]
        fn extraction_agrees_with_repair_then_group(
            raw in proptest::collection::vec(
                prop_oneof![
                    Just("O".to_string()),
                    Just("B-A".to_string()),
                    Just("I-A".to_string()),
                    Just("B-B".to_string()),
                    Just("I-B".to_string()),
                ],
                0..30,
            ),
        ) {
            let direct = extract_chunks(&raw).unwrap().0;
            let oracle = oracle_chunks(&raw).unwrap();
            prop_assert_eq!(direct, oracle);
        }
    }

    // ==== span F1 ====

    #[test]
    fn token_overlap_gives_two_thirds() {
        let f1 = span_f1_pair("New Delhi", "Delhi", true);
        assert!((f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_ignores_case_and_punctuation() {
        assert_eq!(span_f1_pair("The answer!", "the answer", true), 1.0);
        assert!(span_f1_pair("The answer!", "the answer", false) < 1.0);
        assert_eq!(normalize_answer("  The,  ANSWER!  "), "the answer");
    }

    #[test]
    fn best_reference_wins() {
        let golds = vec!["wrong thing".to_string(), "right answer".to_string()];
        let f1 = span_f1_record(&golds, "right answer", true);
        assert_eq!(f1, 1.0);
    }

    #[test]
    fn unanswerable_scores_only_empty_predictions() {
        let golds = vec!["".to_string(), "".to_string()];
        assert_eq!(span_f1_record(&golds, "", true), 1.0);
        assert_eq!(span_f1_record(&golds, "something", true), 0.0);
        // Punctuation-only references normalize to empty.
        let golds = vec!["...".to_string()];
        assert_eq!(span_f1_record(&golds, "!", true), 1.0);
    }

    #[test]
    fn span_file_scores_mean_times_hundred() {
        let records = vec![
            SpanRecord { id: None, golds: vec!["a b".into()], pred: "a b".into() },
            SpanRecord { id: None, golds: vec!["a b".into()], pred: "c".into() },
        ];
        let report = span_f1(&records, true).unwrap();
        assert!((report.f1 - 50.0).abs() < 1e-12);
        assert_eq!(report.unanswerable, 0);
    }

    proptest! {
        /// Pair F1 is symmetric and bounded.
        #[test]
        fn span_pair_symmetric_and_bounded(a in "[ab ]{0,12}", b in "[ab ]{0,12}") {
            let ab = span_f1_pair(&a, &b, true);
            let ba = span_f1_pair(&b, &a, true);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            let aa = span_f1_pair(&a, &a, true);
            prop_assert_eq!(aa, 1.0);
        }
    }

    // ==== retrieval ====

    fn matrix(rows: &[&[f32]]) -> Matrix {
        let dim = rows[0].len();
        Matrix::new(rows.len(), dim, rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn aligned_embeddings_retrieve_perfectly() {
        let m = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[0.7, 0.7]]);
        let report = retrieval_accuracy(&m, &m).unwrap();
        assert!((report.accuracy - 100.0).abs() < 1e-12);
        assert_eq!(report.zero_norm_rows, 0);
    }

    #[test]
    fn cosine_ignores_magnitude() {
        let src = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let tgt = matrix(&[&[100.0, 0.0], &[0.0, 0.001]]);
        let report = retrieval_accuracy(&src, &tgt).unwrap();
        assert!((report.accuracy - 100.0).abs() < 1e-12);
    }

    #[test]
    fn ties_resolve_to_the_lowest_index() {
        // Both targets identical: row 0 wins the tie, row 1 loses.
        let src = matrix(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let tgt = matrix(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let report = retrieval_accuracy(&src, &tgt).unwrap();
        assert_eq!(report.correct, 1);
    }

    #[test]
    fn zero_norm_rows_are_reported_and_lose() {
        let src = matrix(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let tgt = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let report = retrieval_accuracy(&src, &tgt).unwrap();
        assert_eq!(report.zero_norm_rows, 1);
        // Row 0 has no finite similarity anywhere and cannot be correct.
        assert_eq!(report.correct, 1);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let a = matrix(&[&[1.0, 0.0]]);
        let b = matrix(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(retrieval_accuracy(&a, &b).is_err());
        let c = matrix(&[&[1.0]]);
        assert!(retrieval_accuracy(&a, &c).is_err());
        assert!(Matrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn binary_matrix_roundtrips() {
        let m = matrix(&[&[1.5, -2.25], &[0.0, 3.75]]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        m.write_binary(&path).unwrap();
        assert_eq!(Matrix::read_binary(&path).unwrap(), m);
    }

    #[test]
    fn jsonl_matrix_parses_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        std::fs::write(&path, "[1.0, 2.0]\n[3.0, 4.0]\n").unwrap();
        let m = Matrix::read_jsonl(&path).unwrap();
        assert_eq!(m.rows, 2);
        assert_eq!(m.row(1), &[3.0, 4.0]);
        std::fs::write(&path, "[1.0, 2.0]\n[3.0]\n").unwrap();
        assert!(Matrix::read_jsonl(&path).is_err());
    }

    #[test]
    fn mean_pool_averages_unmasked_rows() {
        let m = matrix(&[&[2.0, 4.0], &[4.0, 8.0], &[100.0, 100.0]]);
        let pooled = mean_pool(&m, &[true, true, false]).unwrap();
        assert_eq!(pooled, vec![3.0, 6.0]);
        assert!(mean_pool(&m, &[false, false, false]).is_err());
        assert!(mean_pool(&m, &[true, true]).is_err());
    }

    proptest! {
        /// Full scan agrees with a from-scratch per-pair oracle.
        #[test]
        fn retrieval_agrees_with_naive_oracle(
            vals in proptest::collection::vec(-8i8..8, 2 * 3..=2 * 3 * 6),
        ) {
            let dim = 3;
            let rows = vals.len() / (2 * dim);
            prop_assume!(rows >= 1);
            let data: Vec<f32> = vals.iter().map(|v| f32::from(*v)).collect();
            let src = Matrix::new(rows, dim, data[..rows * dim].to_vec()).unwrap();
            let tgt = Matrix::new(rows, dim, data[rows * dim..2 * rows * dim].to_vec()).unwrap();
            let report = retrieval_accuracy(&src, &tgt).unwrap();

            let mut correct = 0u64;
            for i in 0..rows {
                let mut best_j = 0;
                let mut best = f64::NEG_INFINITY;
                for j in 0..rows {
                    let mut dot = 0.0f64;
                    let mut na = 0.0f64;
                    let mut nb = 0.0f64;
                    for d in 0..dim {
                        let a = f64::from(src.row(i)[d]);
                        let b = f64::from(tgt.row(j)[d]);
                        dot += a * b;
                        na += a * a;
                        nb += b * b;
                    }
                    let sim = if na == 0.0 || nb == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        dot / (na.sqrt() * nb.sqrt())
                    };
                    if sim > best {
                        best = sim;
                        best_j = j;
                    }
                }
                if best > f64::NEG_INFINITY && best_j == i {
                    correct += 1;
                }
            }
            prop_assert_eq!(report.correct, correct);
        }
    }

    // ==== aggregation ====

    #[test]
    fn means_cover_only_present_cells() {
        let mut tasks = BTreeMap::new();
        tasks.insert(
            "sentiment".to_string(),
            BTreeMap::from([("hi".to_string(), 80.0), ("ta".to_string(), 60.0)]),
        );
        tasks.insert(
            "nli".to_string(),
            BTreeMap::from([("hi".to_string(), 70.0)]),
        );
        let report = aggregate(tasks).unwrap();
        assert!((report.task_means["sentiment"] - 70.0).abs() < 1e-12);
        assert!((report.task_means["nli"] - 70.0).abs() < 1e-12);
        assert!((report.lang_means["hi"] - 75.0).abs() < 1e-12);
        assert!((report.lang_means["ta"] - 60.0).abs() < 1e-12);
        assert!(aggregate(BTreeMap::new()).is_err());
    }

    #[test]
    fn table_renders_missing_cells_and_rounds_once() {
        let mut tasks = BTreeMap::new();
        tasks.insert(
            "ner".to_string(),
            BTreeMap::from([("hi".to_string(), 64.37), ("ta".to_string(), 55.52)]),
        );
        tasks.insert(
            "qa".to_string(),
            BTreeMap::from([("hi".to_string(), 41.06)]),
        );
        let report = aggregate(tasks).unwrap();
        let table = render_table(&report);
        assert!(table.contains("64.4"), "table:\n{table}");
        assert!(table.contains("55.5"));
        assert!(table.contains("41.1"));
        // ta has no qa cell.
        assert!(table.lines().any(|l| l.starts_with("ta") && l.contains('-')));
        // The stored mean keeps full precision even though cells rounded.
        assert!((report.lang_means["hi"] - (64.37 + 41.06) / 2.0).abs() < 1e-12);
    }
}
