//! The corpus cleaning chain: script-ratio filter, punctuation-length
//! filter, offensive-blacklist filter, and exact deduplication, with
//! per-rule accounting.
//!
//! Default stage order: LID paragraph filter, script ratio, offensive,
//! punctuation length, dedup. Sentence-level filters re-join surviving
//! sentences with a newline; the newline is itself a segmentation boundary,
//! which keeps every filter idempotent under re-segmentation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use aho_corasick::AhoCorasick;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::doc::CleanDocument;
use crate::error::{Error, Result};
use crate::lang::LanguageTable;
use crate::lid::{self, LidScorer};
use crate::script::native_ratio;
use crate::segment::segment_to_strings;
use crate::unicode::strip_punctuation;

pub const DEFAULT_SCRIPT_THRESHOLD: f64 = 0.75;
pub const DEFAULT_MIN_WORDS: u64 = 10;

/// Per-language offensive word and phrase list.
///
/// File format: UTF-8, one entry per line; lines with internal whitespace
/// are phrases; '#' starts a comment line; blanks ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blacklist {
    pub lang: String,
    /// Single-token entries, matched as whole whitespace-delimited tokens.
    pub words: BTreeSet<String>,
    /// Multi-token entries, matched as contiguous whole-token subsequences.
    pub phrases: Vec<String>,
    /// Fold case before matching (set for scripts with case).
    pub fold_case: bool,
}

fn normalize_match_text(text: &str, fold_case: bool) -> String {
    let nfc: String = text.nfc().collect();
    if fold_case {
        nfc.to_lowercase()
    } else {
        nfc
    }
}

/// Single-space-joined tokens with one pad space each side, so that token
/// boundaries are explicit for substring matching.
fn padded_tokens(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(' ');
    for tok in text.split_whitespace() {
        out.push_str(tok);
        out.push(' ');
    }
    out
}

impl Blacklist {
    pub fn parse(content: &str, lang: &str) -> Result<Blacklist> {
        let entry = LanguageTable::require(lang)?;
        let fold_case = entry.script.has_case();
        let mut words = BTreeSet::new();
        let mut phrases = Vec::new();
        for line in content.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let normalized = normalize_match_text(line, fold_case);
            let tokens: Vec<&str> = normalized.split_whitespace().collect();
            match tokens.len() {
                0 => {}
                1 => {
                    words.insert(tokens[0].to_string());
                }
                _ => phrases.push(tokens.join(" ")),
            }
        }
        if words.is_empty() && phrases.is_empty() {
            return Err(Error::InvalidInput(format!(
                "blacklist for {lang:?} has no entries"
            )));
        }
        Ok(Blacklist {
            lang: lang.to_string(),
            words,
            phrases,
            fold_case,
        })
    }

    pub fn load(path: &Path, lang: &str) -> Result<Blacklist> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Blacklist::parse(&content, lang)
    }

    /// Build the multi-pattern automaton used for sentence matching.
    pub fn compile(self) -> Result<CompiledBlacklist> {
        let patterns: Vec<String> = self
            .words
            .iter()
            .map(|w| format!(" {w} "))
            .chain(self.phrases.iter().map(|p| format!(" {p} ")))
            .collect();
        let automaton = AhoCorasick::new(&patterns)
            .map_err(|e| Error::InvalidInput(format!("blacklist automaton: {e}")))?;
        Ok(CompiledBlacklist {
            list: self,
            automaton,
        })
    }
}

/// A blacklist with its matching automaton built once.
#[derive(Debug, Clone)]
pub struct CompiledBlacklist {
    pub list: Blacklist,
    automaton: AhoCorasick,
}

impl CompiledBlacklist {
    /// Whether a sentence contains any blacklisted word as a whole token or
    /// any blacklisted phrase as a contiguous whole-token subsequence.
    pub fn matches_sentence(&self, sentence: &str) -> bool {
        let normalized = normalize_match_text(sentence, self.list.fold_case);
        let haystack = padded_tokens(&normalized);
        self.automaton.is_match(&haystack)
    }
}

/// Remove sentences whose native-script ratio falls below `threshold`.
/// Returns the number of sentences removed. A ratio exactly at the
/// threshold is kept.
pub fn script_ratio_filter(doc: &mut CleanDocument, threshold: f64) -> Result<u64> {
    let script = LanguageTable::require(&doc.lang)?.script;
    let mut removed = 0u64;
    for p in &mut doc.paragraphs {
        let sentences = segment_to_strings(p);
        let before = sentences.len();
        let kept: Vec<String> = sentences
            .into_iter()
            .filter(|s| native_ratio(s, script).ratio >= threshold)
            .collect();
        // Untouched paragraphs keep their original spacing byte for byte.
        if kept.len() < before {
            removed += (before - kept.len()) as u64;
            *p = kept.join("\n");
        }
    }
    doc.paragraphs.retain(|p| !p.is_empty());
    if removed > 0 {
        doc.tag("script-ratio");
    }
    Ok(removed)
}

/// Keep/drop decision by word count after stripping all punctuation.
/// A document with exactly `min_words` stripped words is kept.
pub fn punctuation_length_keep(doc: &CleanDocument, min_words: u64) -> bool {
    let stripped = strip_punctuation(&doc.text());
    let words = stripped.split_whitespace().count() as u64;
    words >= min_words
}

/// Remove sentences matching the blacklist. Returns sentences removed.
pub fn offensive_filter(doc: &mut CleanDocument, blacklist: &CompiledBlacklist) -> u64 {
    debug_assert_eq!(doc.lang, blacklist.list.lang);
    let mut removed = 0u64;
    for p in &mut doc.paragraphs {
        let sentences = segment_to_strings(p);
        let before = sentences.len();
        let kept: Vec<String> = sentences
            .into_iter()
            .filter(|s| !blacklist.matches_sentence(s))
            .collect();
        if kept.len() < before {
            removed += (before - kept.len()) as u64;
            *p = kept.join("\n");
        }
    }
    doc.paragraphs.retain(|p| !p.is_empty());
    if removed > 0 {
        doc.tag("offensive");
    }
    removed
}

/// Exact-duplicate detection on a normalized key: NFC, whitespace runs
/// collapsed, case folded. First occurrence survives.
#[derive(Debug, Default)]
pub struct Deduper {
    seen: HashSet<String>,
}

impl Deduper {
    pub fn new() -> Self {
        Deduper::default()
    }

    pub fn normalized_key(text: &str) -> String {
        let nfc: String = text.nfc().collect();
        nfc.split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase()
    }

    /// True when the document is the first with its key and should be kept.
    pub fn insert(&mut self, doc: &CleanDocument) -> bool {
        self.seen.insert(Self::normalized_key(&doc.text()))
    }
}

/// One stage of the cleaning pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Lid,
    ScriptRatio,
    Offensive,
    PunctLength,
    Dedup,
}

impl Stage {
    pub const DEFAULT_ORDER: [Stage; 5] = [
        Stage::Lid,
        Stage::ScriptRatio,
        Stage::Offensive,
        Stage::PunctLength,
        Stage::Dedup,
    ];

    pub fn parse(s: &str) -> Result<Stage> {
        match s {
            "lid" => Ok(Stage::Lid),
            "script-ratio" => Ok(Stage::ScriptRatio),
            "offensive" => Ok(Stage::Offensive),
            "punct-length" => Ok(Stage::PunctLength),
            "dedup" => Ok(Stage::Dedup),
            other => Err(Error::Config(format!("unknown pipeline stage {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Lid => "lid",
            Stage::ScriptRatio => "script-ratio",
            Stage::Offensive => "offensive",
            Stage::PunctLength => "punct-length",
            Stage::Dedup => "dedup",
        }
    }
}

/// Per-rule removal accounting for one pipeline run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub docs_in: u64,
    pub docs_out: u64,
    pub paragraphs_removed_lid: u64,
    pub docs_skipped_lid: u64,
    pub sentences_removed_script: u64,
    pub sentences_removed_offensive: u64,
    pub docs_removed_offensive: u64,
    pub docs_removed_punct_length: u64,
    pub docs_removed_dedup: u64,
    pub docs_removed_emptied: u64,
    pub tokens_before: u64,
    pub tokens_after: u64,
}

impl FilterReport {
    fn absorb(&mut self, o: &DocOutcome) {
        self.paragraphs_removed_lid += o.paragraphs_removed_lid;
        self.docs_skipped_lid += o.skipped_lid as u64;
        self.sentences_removed_script += o.sentences_removed_script;
        self.sentences_removed_offensive += o.sentences_removed_offensive;
        self.docs_removed_offensive += o.removed_offensive_doc as u64;
        self.docs_removed_punct_length += o.removed_punct as u64;
        self.docs_removed_emptied += o.emptied as u64;
    }
}

#[derive(Debug, Default)]
struct DocOutcome {
    doc: Option<CleanDocument>,
    paragraphs_removed_lid: u64,
    skipped_lid: bool,
    sentences_removed_script: u64,
    sentences_removed_offensive: u64,
    removed_offensive_doc: bool,
    removed_punct: bool,
    emptied: bool,
}

/// The configured cleaning pipeline. Per-document stages are pure; dedup
/// holds the only cross-document state.
pub struct Pipeline<'a> {
    pub stages: Vec<Stage>,
    pub threshold: f64,
    pub min_words: u64,
    /// When set, a blacklist match drops the whole document instead of the
    /// sentence.
    pub offensive_doc_level: bool,
    pub lid: Option<LidScorer<'a>>,
    pub blacklists: BTreeMap<String, CompiledBlacklist>,
}

impl<'a> Pipeline<'a> {
    pub fn new(stages: Vec<Stage>) -> Self {
        Pipeline {
            stages,
            threshold: DEFAULT_SCRIPT_THRESHOLD,
            min_words: DEFAULT_MIN_WORDS,
            offensive_doc_level: false,
            lid: None,
            blacklists: BTreeMap::new(),
        }
    }

    /// Check that every configured stage has what it needs. Fails before
    /// any document is processed.
    pub fn validate(&self) -> Result<()> {
        for stage in &self.stages {
            match stage {
                Stage::Lid if self.lid.is_none() => {
                    return Err(Error::Config(
                        "lid stage enabled but no model was provided".into(),
                    ));
                }
                Stage::Offensive if self.blacklists.is_empty() => {
                    return Err(Error::Config(
                        "offensive stage enabled but no blacklist was provided".into(),
                    ));
                }
                _ => {}
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "script threshold must be in [0,1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Apply the per-document stages (everything except dedup) in order.
    fn process_doc(&self, mut doc: CleanDocument) -> DocOutcome {
        let mut out = DocOutcome::default();
        for stage in &self.stages {
            match stage {
                Stage::Lid => {
                    let scorer = self.lid.as_ref().expect("validated");
                    let target = doc.lang.clone();
                    let r = lid::filter_paragraphs(scorer, &mut doc, &target);
                    out.paragraphs_removed_lid += r.paragraphs_dropped;
                    out.skipped_lid |= r.skipped;
                }
                Stage::ScriptRatio => {
                    if LanguageTable::is_known(&doc.lang) {
                        out.sentences_removed_script +=
                            script_ratio_filter(&mut doc, self.threshold).expect("lang checked");
                    }
                }
                Stage::Offensive => {
                    if let Some(bl) = self.blacklists.get(&doc.lang) {
                        let removed = offensive_filter(&mut doc, bl);
                        if self.offensive_doc_level && removed > 0 {
                            out.removed_offensive_doc = true;
                            return out;
                        }
                        out.sentences_removed_offensive += removed;
                    }
                }
                Stage::PunctLength => {
                    if !punctuation_length_keep(&doc, self.min_words) {
                        out.removed_punct = true;
                        return out;
                    }
                }
                Stage::Dedup => {
                    // cross-document; handled by the driver
                }
            }
            if doc.is_empty() {
                out.emptied = true;
                return out;
            }
        }
        out.doc = Some(doc);
        out
    }

    /// Run the pipeline over a document stream, feeding survivors to `sink`
    /// in input order. Documents are processed in parallel batches; dedup
    /// stays sequential.
    pub fn run<I>(
        &self,
        docs: I,
        mut sink: impl FnMut(CleanDocument) -> Result<()>,
    ) -> Result<FilterReport>
    where
        I: IntoIterator<Item = CleanDocument>,
    {
        use rayon::prelude::*;

        self.validate()?;
        let dedup_enabled = self.stages.contains(&Stage::Dedup);
        let mut deduper = Deduper::new();
        let mut report = FilterReport::default();

        const BATCH: usize = 512;
        let mut iter = docs.into_iter();
        loop {
            let batch: Vec<CleanDocument> = iter.by_ref().take(BATCH).collect();
            if batch.is_empty() {
                break;
            }
            report.docs_in += batch.len() as u64;
            report.tokens_before += batch.iter().map(|d| d.token_count()).sum::<u64>();

            let outcomes: Vec<DocOutcome> =
                batch.into_par_iter().map(|d| self.process_doc(d)).collect();

            for outcome in outcomes {
                report.absorb(&outcome);
                let Some(doc) = outcome.doc else { continue };
                if dedup_enabled && !deduper.insert(&doc) {
                    report.docs_removed_dedup += 1;
                    continue;
                }
                report.docs_out += 1;
                report.tokens_after += doc.token_count();
                sink(doc)?;
            }
        }
        Ok(report)
    }
}
