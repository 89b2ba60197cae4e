//! Corpus statistics and frequency-based search-query generation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::doc::CleanDocument;
use crate::error::{Error, Result};
use crate::lang::LanguageTable;
use crate::segment::segment_sentences;

/// Bucket used for documents whose language code is not in the table.
pub const OTHER_BUCKET: &str = "other";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangStats {
    pub tokens: u64,
    pub sentences: u64,
    pub documents: u64,
}

impl LangStats {
    pub fn merge(&mut self, other: &LangStats) {
        self.tokens += other.tokens;
        self.sentences += other.sentences;
        self.documents += other.documents;
    }
}

/// Per-language and total corpus statistics. Totals always equal the sum of
/// the per-language entries (including the "other" bucket).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_lang: BTreeMap<String, LangStats>,
    pub total: LangStats,
}

impl CorpusStats {
    pub fn add_doc(&mut self, doc: &CleanDocument) {
        let key = if LanguageTable::is_known(&doc.lang) {
            doc.lang.clone()
        } else {
            OTHER_BUCKET.to_string()
        };
        let mut s = LangStats {
            tokens: 0,
            sentences: 0,
            documents: 1,
        };
        for p in &doc.paragraphs {
            s.tokens += p.split_whitespace().count() as u64;
            s.sentences += segment_sentences(p).len() as u64;
        }
        self.per_lang.entry(key).or_default().merge(&s);
        self.total.merge(&s);
    }

    /// Associative, commutative merge of partial statistics.
    pub fn merge(&mut self, other: &CorpusStats) {
        for (lang, s) in &other.per_lang {
            self.per_lang.entry(lang.clone()).or_default().merge(s);
        }
        self.total.merge(&other.total);
    }

    /// Count of documents that fell into the "other" bucket.
    pub fn other_documents(&self) -> u64 {
        self.per_lang
            .get(OTHER_BUCKET)
            .map(|s| s.documents)
            .unwrap_or(0)
    }
}

/// Compute statistics over a cleaned corpus stream.
pub fn compute_stats<'a>(docs: impl IntoIterator<Item = &'a CleanDocument>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for doc in docs {
        stats.add_doc(doc);
    }
    stats
}

/// Most frequent tokens of one language, for use as web-search queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryList {
    pub lang: String,
    pub requested: usize,
    pub queries: Vec<String>,
    /// Set when the corpus held fewer distinct tokens than requested.
    pub short: bool,
}

/// Return the `k` most frequent whitespace tokens of `lang` documents.
/// Tokens are lowercased when the language's script has case. Ties break
/// lexicographically. No stopword handling is applied.
pub fn generate_search_queries<'a>(
    docs: impl IntoIterator<Item = &'a CleanDocument>,
    lang: &str,
    k: usize,
) -> Result<QueryList> {
    let entry = LanguageTable::require(lang)?;
    let fold_case = entry.script.has_case();
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut saw_any = false;
    for doc in docs {
        if doc.lang != lang {
            continue;
        }
        saw_any = true;
        for p in &doc.paragraphs {
            for tok in p.split_whitespace() {
                let key = if fold_case {
                    tok.to_lowercase()
                } else {
                    tok.to_string()
                };
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    if !saw_any {
        return Err(Error::InvalidInput(format!(
            "no documents for language {lang:?}"
        )));
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let short = ranked.len() < k;
    let queries = ranked.into_iter().take(k).map(|(t, _)| t).collect();
    Ok(QueryList {
        lang: lang.to_string(),
        requested: k,
        queries,
        short,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, lang: &str, text: &str) -> CleanDocument {
        CleanDocument {
            id: id.into(),
            lang: lang.into(),
            paragraphs: crate::doc::split_paragraphs(text),
            provenance: vec![],
        }
    }

    #[test]
    fn single_doc_counts() {
        let d = doc("1", "hi", "a b c");
        let s = compute_stats([&d]);
        assert_eq!(s.total.tokens, 3);
        assert_eq!(s.total.documents, 1);
        assert_eq!(s.per_lang["hi"].tokens, 3);
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let s = compute_stats([]);
        assert_eq!(s, CorpusStats::default());
    }

    #[test]
    fn per_language_entries_sum_to_total() {
        let a = doc("1", "hi", "एक दो तीन।");
        let b = doc("2", "ta", "ஒன்று இரண்டு.");
        let s = compute_stats([&a, &b]);
        let summed: u64 = s.per_lang.values().map(|l| l.tokens).sum();
        assert_eq!(summed, s.total.tokens);
        assert_eq!(s.total.documents, 2);
        assert_eq!(s.per_lang["hi"].sentences, 1);
    }

    #[test]
    fn unknown_lang_goes_to_other_bucket() {
        let d = doc("1", "zz", "w x y z");
        let s = compute_stats([&d]);
        assert_eq!(s.per_lang[OTHER_BUCKET].tokens, 4);
        assert_eq!(s.other_documents(), 1);
    }

    #[test]
    fn queries_frequency_then_lexicographic() {
        let d = doc("1", "hi", "a a b");
        let q = generate_search_queries([&d], "hi", 1).unwrap();
        assert_eq!(q.queries, ["a"]);
        assert!(!q.short);

        let tie = doc("2", "hi", "b a");
        let q = generate_search_queries([&tie], "hi", 1).unwrap();
        assert_eq!(q.queries, ["a"]);
    }

    #[test]
    fn queries_brute_force_order() {
        let d = doc("1", "hi", "x x y y z");
        let q = generate_search_queries([&d], "hi", 3).unwrap();
        assert_eq!(q.queries, ["x", "y", "z"]);
    }

    #[test]
    fn fewer_distinct_tokens_flags_short() {
        let d = doc("1", "hi", "a b");
        let q = generate_search_queries([&d], "hi", 5).unwrap();
        assert_eq!(q.queries, ["a", "b"]);
        assert!(q.short);
    }

    #[test]
    fn queries_fold_case_for_latin_scripts() {
        let d = doc("1", "en", "The the THE word");
        let q = generate_search_queries([&d], "en", 1).unwrap();
        assert_eq!(q.queries, ["the"]);
    }

    #[test]
    fn queries_error_on_missing_language() {
        let d = doc("1", "hi", "a");
        assert!(generate_search_queries([&d], "ta", 1).is_err());
        assert!(generate_search_queries([&d], "zz", 1).is_err());
    }

    proptest! {
        /// Stats are order-independent and additive.
        #[test]
        fn stats_order_independent(texts in proptest::collection::vec("[a-zह-ॿ ।.]{0,40}", 0..12)) {
            let docs: Vec<CleanDocument> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| doc(&i.to_string(), if i % 2 == 0 { "hi" } else { "ta" }, t))
                .collect();
            let forward = compute_stats(docs.iter());
            let mut rev: Vec<&CleanDocument> = docs.iter().collect();
            rev.reverse();
            let backward = compute_stats(rev);
            prop_assert_eq!(&forward, &backward);

            // merging partial stats equals whole-stream stats
            let (a, b) = docs.split_at(docs.len() / 2);
            let mut merged = compute_stats(a.iter());
            merged.merge(&compute_stats(b.iter()));
            prop_assert_eq!(&forward, &merged);
        }

        /// Removing a document never increases any count.
        #[test]
        fn stats_monotone_under_removal(texts in proptest::collection::vec("[a-z ]{1,20}", 1..8)) {
            let docs: Vec<CleanDocument> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| doc(&i.to_string(), "en", t))
                .collect();
            let full = compute_stats(docs.iter());
            for skip in 0..docs.len() {
                let partial = compute_stats(
                    docs.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, d)| d),
                );
                prop_assert!(partial.total.tokens <= full.total.tokens);
                prop_assert!(partial.total.documents < full.total.documents);
                for (lang, s) in &partial.per_lang {
                    prop_assert!(s.tokens <= full.per_lang[lang].tokens);
                }
            }
        }
    }
}
