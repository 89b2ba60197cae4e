//! WordPiece vocabulary training, tokenization, and fertility measurement.
//!
//! The trainer merges the symbol pair maximizing the pairwise likelihood
//! score `count(ab) / (count(a) * count(b))`, not raw pair frequency. The
//! merge sequence depends only on the training data, never on the budget,
//! so a smaller vocabulary is always a prefix of a larger one trained on
//! the same corpus.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::lang::LanguageTable;

pub const CONTINUATION: &str = "##";
pub const MAX_PIECES_PER_WORD: usize = 100;
pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";
pub const MARKERS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

/// The reserved pieces every vocabulary starts with: the five markers,
/// then one `<xx>` language token per supported language in code order.
pub fn special_pieces() -> Vec<String> {
    let mut out: Vec<String> = MARKERS.iter().map(|s| s.to_string()).collect();
    out.extend(LanguageTable::entries().iter().map(|l| l.lang_token()));
    out
}

/// A trained vocabulary: piece strings, where the piece id is its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabModel {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
    special: HashSet<u32>,
}

impl VocabModel {
    pub fn from_pieces(pieces: Vec<String>) -> Result<VocabModel> {
        let mut index = HashMap::with_capacity(pieces.len());
        for (i, piece) in pieces.iter().enumerate() {
            if piece.is_empty() || piece.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInput(format!(
                    "piece {i} is empty or contains whitespace: {piece:?}"
                )));
            }
            if index.insert(piece.clone(), i as u32).is_some() {
                return Err(Error::InvalidInput(format!("duplicate piece {piece:?}")));
            }
        }
        for marker in MARKERS {
            if !index.contains_key(marker) {
                return Err(Error::InvalidInput(format!(
                    "vocabulary is missing the {marker} marker"
                )));
            }
        }
        let lang_tokens: HashSet<String> =
            LanguageTable::entries().iter().map(|l| l.lang_token()).collect();
        let special = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| MARKERS.contains(&p.as_str()) || lang_tokens.contains(*p))
            .map(|(i, _)| i as u32)
            .collect();
        Ok(VocabModel {
            pieces,
            index,
            special,
        })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn id_of(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    pub fn is_special(&self, id: u32) -> bool {
        self.special.contains(&id)
    }

    pub fn special_ids(&self) -> &HashSet<u32> {
        &self.special
    }

    pub fn pad_id(&self) -> u32 {
        self.index[PAD]
    }

    pub fn unk_id(&self) -> u32 {
        self.index[UNK]
    }

    pub fn cls_id(&self) -> u32 {
        self.index[CLS]
    }

    pub fn sep_id(&self) -> u32 {
        self.index[SEP]
    }

    pub fn mask_id(&self) -> u32 {
        self.index[MASK]
    }

    /// One piece per line, id = line number.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.pieces.len() * 8);
        for piece in &self.pieces {
            out.push_str(piece);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<VocabModel> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        VocabModel::from_pieces(content.lines().map(str::to_string).collect())
    }
}

// ==== training ====

/// Whitespace-split word counts over NFC-normalized text.
pub fn word_counts<'a>(texts: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for text in texts {
        let nfc: String = text.nfc().collect();
        for word in nfc.split_whitespace() {
            *counts.entry(word.to_string()).or_insert(0u64) += 1;
        }
    }
    counts
}

/// Keep each line independently with probability `fraction` (seeded).
pub fn sample_lines(lines: Vec<String>, fraction: f64, seed: u64) -> Result<Vec<String>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "sampling fraction must be in (0, 1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok(lines);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(lines
        .into_iter()
        .filter(|_| rng.random::<f64>() < fraction)
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct TrainerConfig {
    /// Total piece budget including specials and the alphabet.
    pub vocab_size: usize,
    /// Merges stop when no pair occurs at least this often.
    pub min_pair_freq: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            vocab_size: 8000,
            min_pair_freq: 2,
        }
    }
}

type SymId = u32;

struct Symbols {
    by_name: HashMap<String, SymId>,
    names: Vec<String>,
}

impl Symbols {
    fn new() -> Self {
        Symbols {
            by_name: HashMap::new(),
            names: Vec::new(),
        }
    }

    fn intern(&mut self, name: &str) -> SymId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = self.names.len() as SymId;
        self.by_name.insert(name.to_string(), id);
        self.names.push(name.to_string());
        id
    }
}

struct Word {
    symbols: Vec<SymId>,
    count: u64,
}

/// Pair statistics plus an inverted index from pair to containing words.
#[derive(Default)]
struct PairTable {
    counts: HashMap<(SymId, SymId), u64>,
    words: HashMap<(SymId, SymId), BTreeSet<usize>>,
}

impl PairTable {
    fn add_word(&mut self, word_id: usize, word: &Word, symbol_counts: &mut [u64]) {
        for &s in &word.symbols {
            symbol_counts[s as usize] += word.count;
        }
        for pair in word.symbols.windows(2) {
            let key = (pair[0], pair[1]);
            *self.counts.entry(key).or_insert(0) += word.count;
            self.words.entry(key).or_default().insert(word_id);
        }
    }

    fn remove_word(&mut self, word_id: usize, word: &Word, symbol_counts: &mut [u64]) {
        for &s in &word.symbols {
            symbol_counts[s as usize] -= word.count;
        }
        for pair in word.symbols.windows(2) {
            let key = (pair[0], pair[1]);
            let c = self.counts.get_mut(&key).expect("pair tracked");
            *c -= word.count;
            if *c == 0 {
                self.counts.remove(&key);
            }
            if let Some(set) = self.words.get_mut(&key) {
                set.remove(&word_id);
                if set.is_empty() {
                    self.words.remove(&key);
                }
            }
        }
    }
}

/// Pair statistics fed to the merge scorer: the pair's own count and the
/// standalone counts of its two symbols.
type PairStats = (u64, u64, u64);

/// `count(ab) / (count(a) * count(b))` compared exactly by
/// cross-multiplication in u128. Counts are bounded by corpus size, far
/// below the 2^42 each that could overflow the product.
fn score_gt((c1, a1, b1): PairStats, (c2, a2, b2): PairStats) -> std::cmp::Ordering {
    let left = c1 as u128 * (a2 as u128 * b2 as u128);
    let right = c2 as u128 * (a1 as u128 * b1 as u128);
    left.cmp(&right)
}

/// Train a WordPiece vocabulary from word counts.
pub fn train_wordpiece(
    counts: &BTreeMap<String, u64>,
    config: &TrainerConfig,
) -> Result<VocabModel> {
    if counts.is_empty() {
        return Err(Error::InvalidInput("no words to train on".into()));
    }

    let mut symbols = Symbols::new();
    let mut words: Vec<Word> = Vec::with_capacity(counts.len());
    let mut alphabet: BTreeSet<String> = BTreeSet::new();
    for (word, &count) in counts {
        let mut syms = Vec::new();
        for (i, ch) in word.chars().enumerate() {
            let name = if i == 0 {
                ch.to_string()
            } else {
                format!("{CONTINUATION}{ch}")
            };
            alphabet.insert(name.clone());
            syms.push(symbols.intern(&name));
        }
        if !syms.is_empty() {
            words.push(Word {
                symbols: syms,
                count,
            });
        }
    }

    let mut pieces = special_pieces();
    let floor = pieces.len() + alphabet.len();
    if config.vocab_size < floor {
        return Err(Error::Config(format!(
            "vocab size {} cannot hold {} specials plus an alphabet of {}",
            config.vocab_size,
            pieces.len(),
            alphabet.len()
        )));
    }
    pieces.extend(alphabet.iter().cloned());
    let mut piece_set: HashSet<String> = pieces.iter().cloned().collect();

    let mut symbol_counts = vec![0u64; symbols.names.len()];
    let mut pairs = PairTable::default();
    for (word_id, word) in words.iter().enumerate() {
        pairs.add_word(word_id, word, &mut symbol_counts);
    }

    while pieces.len() < config.vocab_size {
        // The comparison key (score, pair count, reverse lexicographic
        // pair) is a strict total order over distinct pairs, so the
        // winner is unique and map iteration order cannot matter.
        let mut best: Option<((SymId, SymId), PairStats)> = None;
        for (&(a, b), &c) in &pairs.counts {
            if c < config.min_pair_freq {
                continue;
            }
            let stats = (c, symbol_counts[a as usize], symbol_counts[b as usize]);
            let better = match &best {
                None => true,
                Some((bp, bs)) => match score_gt(stats, *bs) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => match stats.0.cmp(&bs.0) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => {
                            let cand = (&symbols.names[a as usize], &symbols.names[b as usize]);
                            let cur = (&symbols.names[bp.0 as usize], &symbols.names[bp.1 as usize]);
                            cand < cur
                        }
                    },
                },
            };
            if better {
                best = Some(((a, b), stats));
            }
        }
        let Some(((a, b), _)) = best else { break };

        let merged_name = {
            let a_name = &symbols.names[a as usize];
            let b_name = &symbols.names[b as usize];
            format!("{a_name}{}", b_name.strip_prefix(CONTINUATION).unwrap_or(b_name))
        };
        let merged = symbols.intern(&merged_name);
        if merged as usize >= symbol_counts.len() {
            symbol_counts.push(0);
        }

        let affected: Vec<usize> = pairs
            .words
            .get(&(a, b))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        for word_id in affected {
            let word = &words[word_id];
            pairs.remove_word(word_id, word, &mut symbol_counts);
            let old = std::mem::take(&mut words[word_id].symbols);
            let mut new_syms = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if old[i] == a && i + 1 < old.len() && old[i + 1] == b {
                    new_syms.push(merged);
                    i += 2;
                } else {
                    new_syms.push(old[i]);
                    i += 1;
                }
            }
            words[word_id].symbols = new_syms;
            let word = &words[word_id];
            pairs.add_word(word_id, word, &mut symbol_counts);
        }

        // Two different merge paths can assemble the same piece string;
        // the piece list stays a set while the merge still applies.
        if piece_set.insert(merged_name.clone()) {
            pieces.push(merged_name);
        }
    }

    VocabModel::from_pieces(pieces)
}

// ==== tokenization ====

/// Greedy longest-match segmentation of a single word. `None` means the
/// word cannot be covered (or exceeds the piece cap) and maps to `[UNK]`.
pub fn tokenize_word(model: &VocabModel, word: &str) -> Option<Vec<u32>> {
    let mut ids = Vec::new();
    let chars: Vec<char> = word.chars().collect();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while end > start {
            let slice: String = chars[start..end].iter().collect();
            let candidate = if start == 0 {
                slice
            } else {
                format!("{CONTINUATION}{slice}")
            };
            if let Some(id) = model.id_of(&candidate) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        let id = found?;
        ids.push(id);
        if ids.len() > MAX_PIECES_PER_WORD {
            return None;
        }
        start = end;
    }
    Some(ids)
}

/// Tokenize whitespace-split text to piece ids. A word equal to a special
/// piece's surface form maps to that piece directly.
pub fn tokenize(model: &VocabModel, text: &str) -> Vec<u32> {
    let nfc: String = text.nfc().collect();
    let mut out = Vec::new();
    for word in nfc.split_whitespace() {
        if let Some(id) = model.id_of(word).filter(|id| model.is_special(*id)) {
            out.push(id);
            continue;
        }
        match tokenize_word(model, word) {
            Some(ids) => out.extend(ids),
            None => out.push(model.unk_id()),
        }
    }
    out
}

pub fn tokenize_to_pieces(model: &VocabModel, text: &str) -> Vec<String> {
    tokenize(model, text)
        .into_iter()
        .map(|id| model.piece(id).expect("id from this model").to_string())
        .collect()
}

// ==== fertility ====

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FertilityEntry {
    pub words: u64,
    pub pieces: u64,
    /// Average pieces per word.
    pub fertility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityReport {
    pub per_lang: BTreeMap<String, FertilityEntry>,
    pub overall: FertilityEntry,
    /// Languages seen with zero words, excluded from the averages.
    pub skipped_langs: Vec<String>,
}

/// Measure pieces-per-word over `(lang, text)` records. A word mapped to
/// `[UNK]` counts as one piece.
pub fn fertility<'a>(
    model: &VocabModel,
    records: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<FertilityReport> {
    let mut per_lang: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (lang, text) in records {
        let entry = per_lang.entry(lang.to_string()).or_insert((0, 0));
        let nfc: String = text.nfc().collect();
        for word in nfc.split_whitespace() {
            entry.0 += 1;
            entry.1 += match tokenize_word(model, word) {
                Some(ids) if ids.len() <= MAX_PIECES_PER_WORD => ids.len() as u64,
                _ => 1,
            };
        }
    }
    if per_lang.is_empty() {
        return Err(Error::InvalidInput("no records to measure".into()));
    }
    let mut skipped = Vec::new();
    let mut report_langs = BTreeMap::new();
    let mut total = (0u64, 0u64);
    for (lang, (w, p)) in per_lang {
        if w == 0 {
            skipped.push(lang);
            continue;
        }
        total.0 += w;
        total.1 += p;
        report_langs.insert(
            lang,
            FertilityEntry {
                words: w,
                pieces: p,
                fertility: p as f64 / w as f64,
            },
        );
    }
    if total.0 == 0 {
        return Err(Error::InvalidInput("no words in any record".into()));
    }
    Ok(FertilityReport {
        per_lang: report_langs,
        overall: FertilityEntry {
            words: total.0,
            pieces: total.1,
            fertility: total.1 as f64 / total.0 as f64,
        },
        skipped_langs: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn train_on(texts: &[&str], vocab_size: usize) -> VocabModel {
        let counts = word_counts(texts.iter().copied());
        train_wordpiece(
            &counts,
            &TrainerConfig {
                vocab_size,
                min_pair_freq: 2,
            },
        )
        .unwrap()
    }

    fn merges(model: &VocabModel) -> Vec<&str> {
        let specials = special_pieces().len();
        model.pieces()[specials..]
            .iter()
            .map(String::as_str)
            .filter(|p| {
                let bare = p.strip_prefix(CONTINUATION).unwrap_or(p);
                bare.chars().count() > 1
            })
            .collect()
    }

    #[test]
    fn repeated_word_learns_its_merge() {
        let model = train_on(&["aa aa aa"], 40);
        assert!(model.id_of("aa").is_some());
        assert_eq!(tokenize_to_pieces(&model, "aa"), vec!["aa"]);
        assert_eq!(tokenize_to_pieces(&model, "aaa"), vec!["aa", "##a"]);
    }

    #[test]
    fn specials_occupy_the_first_ids() {
        let model = train_on(&["ab ab"], 40);
        assert_eq!(model.piece(model.pad_id()), Some(PAD));
        assert_eq!(model.pad_id(), 0);
        assert_eq!(model.unk_id(), 1);
        assert_eq!(model.cls_id(), 2);
        assert_eq!(model.sep_id(), 3);
        assert_eq!(model.mask_id(), 4);
        // 24 language tokens follow the markers, in code order.
        assert_eq!(model.piece(5), Some("<as>"));
        assert_eq!(model.piece(28), Some("<ur>"));
        assert!(model.is_special(5) && model.is_special(28));
        assert!(!model.is_special(29));
    }

    #[test]
    fn likelihood_beats_raw_frequency() {
        // (a,##b) occurs 100 times but its parts are everywhere;
        // (c,##d) occurs 50 times with parts nowhere else.
        let mut texts = vec!["ab"; 100];
        texts.extend(vec!["a"; 1000]);
        texts.extend(vec!["b"; 1000]);
        texts.extend(vec!["cd"; 50]);
        let model = train_on(&texts, 200);
        let m = merges(&model);
        let cd = m.iter().position(|p| *p == "cd").expect("cd merged");
        let ab = m.iter().position(|p| *p == "ab").expect("ab merged");
        assert!(cd < ab, "cd must merge before ab: {m:?}");
    }

    #[test]
    fn score_ties_break_by_pair_count_then_lexicographic() {
        // Same score, same count: (a,##b) and (a,##c) tie fully except
        // lexicographic order.
        let mut texts = vec!["ab"; 10];
        texts.extend(vec!["ac"; 10]);
        let model = train_on(&texts, 200);
        let m = merges(&model);
        let ab = m.iter().position(|p| *p == "ab").expect("ab merged");
        let ac = m.iter().position(|p| *p == "ac").expect("ac merged");
        assert!(ab < ac, "lexicographic tie-break failed: {m:?}");
    }

    #[test]
    fn smaller_budget_is_a_prefix_of_larger() {
        let texts = ["the cat sat on the mat", "the cat ran", "a cat sat"].repeat(5);
        let refs = texts.to_vec();
        let counts = word_counts(refs.iter().copied());
        let small = train_wordpiece(&counts, &TrainerConfig { vocab_size: 45, min_pair_freq: 2 }).unwrap();
        let large = train_wordpiece(&counts, &TrainerConfig { vocab_size: 60, min_pair_freq: 2 }).unwrap();
        assert!(small.len() <= large.len());
        assert_eq!(
            large.pieces()[..small.len()],
            *small.pieces(),
            "smaller vocabulary must be a prefix of the larger one"
        );
    }

    #[test]
    fn min_pair_freq_stops_merging() {
        // Every pair occurs once; with the threshold at 2 nothing merges.
        let model = train_on(&["abc def"], 100);
        assert!(merges(&model).is_empty());
        // Tokenization falls back to the alphabet.
        assert_eq!(tokenize_to_pieces(&model, "abc"), vec!["a", "##b", "##c"]);
    }

    #[test]
    fn budget_below_alphabet_floor_is_rejected() {
        let counts = word_counts(["abcdefgh"]);
        let err = train_wordpiece(&counts, &TrainerConfig { vocab_size: 30, min_pair_freq: 2 });
        assert!(err.is_err());
    }

    #[test]
    fn unseen_character_maps_to_unk() {
        let model = train_on(&["ab ab"], 40);
        assert_eq!(tokenize(&model, "xyz"), vec![model.unk_id()]);
        assert_eq!(tokenize(&model, "ab xyz ab"), vec![
            model.id_of("ab").unwrap(),
            model.unk_id(),
            model.id_of("ab").unwrap(),
        ]);
    }

    #[test]
    fn piece_cap_maps_long_word_to_unk() {
        // Vocabulary: "a", "##a", and the merge "aa". A run of N 'a's
        // segments as ["aa", "##a" x (N-2)], so N pieces = N - 1.
        let model = train_on(&["aa aa"], 40);
        let at_cap: String = "a".repeat(101);
        assert_eq!(tokenize(&model, &at_cap).len(), 100);
        let over_cap: String = "a".repeat(102);
        assert_eq!(tokenize(&model, &over_cap), vec![model.unk_id()]);
    }

    #[test]
    fn special_surfaces_tokenize_to_their_ids() {
        let model = train_on(&["ab ab"], 40);
        assert_eq!(tokenize(&model, "[MASK]"), vec![model.mask_id()]);
        assert_eq!(tokenize(&model, "<hi> ab"), vec![
            model.id_of("<hi>").unwrap(),
            model.id_of("ab").unwrap(),
        ]);
    }

    #[test]
    fn save_load_roundtrip_is_identical() {
        let model = train_on(&["the cat sat on the mat the cat sat"], 80);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        model.save(&path).unwrap();
        let loaded = VocabModel::load(&path).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn training_is_deterministic() {
        let texts = ["नमस्ते दुनिया नमस्ते", "दुनिया बड़ी है", "नमस्ते फिर"].repeat(3);
        let refs = texts.to_vec();
        let counts = word_counts(refs.iter().copied());
        let cfg = TrainerConfig { vocab_size: 120, min_pair_freq: 2 };
        let m1 = train_wordpiece(&counts, &cfg).unwrap();
        let m2 = train_wordpiece(&counts, &cfg).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn fertility_counts_pieces_per_word() {
        let model = train_on(&["aa aa aa"], 40);
        // "aa" = 1 piece; "aaa" = 2 pieces; "xyz" = [UNK] = 1 piece.
        let report = fertility(&model, [("hi", "aa aaa xyz")]).unwrap();
        let hi = report.per_lang["hi"];
        assert_eq!(hi.words, 3);
        assert_eq!(hi.pieces, 4);
        assert!((hi.fertility - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.overall, hi);
    }

    #[test]
    fn fertility_skips_wordless_languages() {
        let model = train_on(&["aa aa aa"], 40);
        let report = fertility(&model, [("hi", "aa aa"), ("ta", "   ")]).unwrap();
        assert_eq!(report.skipped_langs, vec!["ta"]);
        assert!(!report.per_lang.contains_key("ta"));
    }

    #[test]
    fn sample_lines_is_seeded_and_validates_fraction() {
        let lines: Vec<String> = (0..1000).map(|i| i.to_string()).collect();
        let a = sample_lines(lines.clone(), 0.3, 9).unwrap();
        let b = sample_lines(lines.clone(), 0.3, 9).unwrap();
        assert_eq!(a, b);
        let n = a.len() as f64;
        assert!((n / 1000.0 - 0.3).abs() < 0.08, "kept {n} of 1000");
        assert_eq!(sample_lines(lines.clone(), 1.0, 9).unwrap().len(), 1000);
        assert!(sample_lines(lines.clone(), 0.0, 9).is_err());
        assert!(sample_lines(lines, 1.5, 9).is_err());
    }

    proptest! {
        /// Pieces of a covered word concatenate back to the word.
        #[test]
        fn pieces_reassemble_the_word(words in proptest::collection::vec("[ab]{1,8}", 1..20)) {
            let text = words.join(" ");
            let model = train_on(&[text.as_str(), text.as_str()], 200);
            for word in &words {
                let pieces = tokenize_to_pieces(&model, word);
                prop_assert!(!pieces.is_empty());
                if pieces != vec![UNK.to_string()] {
                    let rebuilt: String = pieces
                        .iter()
                        .map(|p| p.strip_prefix(CONTINUATION).unwrap_or(p))
                        .collect();
                    prop_assert_eq!(&rebuilt, word);
                }
            }
        }

        /// The prefix property holds for arbitrary small corpora.
        #[test]
        fn budget_prefix_property(words in proptest::collection::vec("[abc]{1,6}", 2..15)) {
            let text = words.join(" ");
            let counts = word_counts([text.as_str(), text.as_str()]);
            let floor = special_pieces().len()
                + counts
                    .keys()
                    .flat_map(|w| w.chars().enumerate().map(|(i, c)| (i == 0, c)))
                    .collect::<std::collections::HashSet<_>>()
                    .len();
            let small = train_wordpiece(&counts, &TrainerConfig { vocab_size: floor + 3, min_pair_freq: 2 }).unwrap();
            let large = train_wordpiece(&counts, &TrainerConfig { vocab_size: floor + 9, min_pair_freq: 2 }).unwrap();
            prop_assert_eq!(&large.pieces()[..small.len()], small.pieces());
        }
    }
}
