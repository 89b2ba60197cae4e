//! Trainable character n-gram language identification with script priors.
//!
//! The classifier scores a paragraph under each supported language as the
//! sum of two log-likelihood terms: add-k smoothed character n-gram
//! probabilities (over a gram vocabulary shared by all languages, so scores
//! are comparable), and per-letter script probabilities estimated from the
//! same training data. Texts with fewer letters than the minimum, or whose
//! best-vs-second margin falls below the configured threshold, classify as
//! Unknown. Paragraph filtering keeps Unknown paragraphs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::doc::CleanDocument;
use crate::error::{Error, Result};
use crate::lang::{LanguageTable, Script};
use crate::script::script_of;
use crate::unicode::is_letterish;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_SMOOTHING: f64 = 0.5;
pub const DEFAULT_MIN_LETTERS: u64 = 20;
pub const DEFAULT_MARGIN: f64 = 0.0;

/// Provenance tag applied when a document's language is outside the model.
pub const LID_SKIPPED_TAG: &str = "lid-skipped";
/// Provenance tag applied when the filter dropped at least one paragraph.
pub const LID_FILTERED_TAG: &str = "lid";

/// Raw per-language counts. Counts rather than probabilities are stored so
/// that training merges stay associative and serialization is exact.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LangCounts {
    pub grams: BTreeMap<String, u64>,
    pub total_grams: u64,
    pub letters_by_script: BTreeMap<Script, u64>,
    pub total_letters: u64,
}

/// A trained language identification model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidModel {
    pub version: u32,
    /// n-gram order, one of 2, 3, 4.
    pub order: usize,
    /// Add-k smoothing constant, k > 0.
    pub smoothing: f64,
    /// Texts with fewer letters than this classify as Unknown.
    pub min_letters: u64,
    /// Unknown when the best minus second-best log score is below this.
    pub margin: f64,
    pub langs: BTreeMap<String, LangCounts>,
}

/// Outcome of a single prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Identified { lang: String, score: f64 },
    Unknown { reason: UnknownReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownReason {
    TooShort,
    Margin,
}

impl Prediction {
    pub fn lang(&self) -> Option<&str> {
        match self {
            Prediction::Identified { lang, .. } => Some(lang),
            Prediction::Unknown { .. } => None,
        }
    }
}

/// Map text to the character stream grams are drawn from: NFC, non-letters
/// collapsed to single spaces, case folded, padded with one space each side.
fn gram_stream(text: &str) -> Vec<char> {
    use unicode_normalization::UnicodeNormalization;
    let mut out = vec![' '];
    let mut pending_space = false;
    for c in text.nfc() {
        if is_letterish(c) {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            for lc in c.to_lowercase() {
                out.push(lc);
            }
        } else {
            pending_space = true;
        }
    }
    out.push(' ');
    out
}

fn count_grams(text: &str, order: usize, into: &mut HashMap<String, u64>) {
    let stream = gram_stream(text);
    if stream.len() < order {
        return;
    }
    for w in stream.windows(order) {
        // skip all-space grams contributed by padding
        if w.iter().all(|&c| c == ' ') {
            continue;
        }
        *into.entry(w.iter().collect()).or_insert(0) += 1;
    }
}

fn count_letters(text: &str, into: &mut BTreeMap<Script, u64>) -> u64 {
    let mut total = 0;
    for c in text.chars() {
        if is_letterish(c) {
            *into.entry(script_of(c)).or_insert(0) += 1;
            total += 1;
        }
    }
    total
}

/// Train a model from labeled samples. Multiple samples per language
/// accumulate; the result is independent of sample order.
pub fn train_lid<I, S>(samples: I, order: usize, smoothing: f64) -> Result<LidModel>
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    if !(2..=4).contains(&order) {
        return Err(Error::Config(format!(
            "n-gram order must be 2, 3, or 4, got {order}"
        )));
    }
    if smoothing.is_nan() || smoothing <= 0.0 {
        return Err(Error::Config(format!(
            "smoothing constant must be positive, got {smoothing}"
        )));
    }
    let mut langs: BTreeMap<String, LangCounts> = BTreeMap::new();
    for (lang, text) in samples {
        let code = lang.as_ref();
        LanguageTable::require(code)?;
        let entry = langs.entry(code.to_string()).or_default();
        let mut grams = HashMap::new();
        count_grams(text.as_ref(), order, &mut grams);
        for (g, c) in grams {
            *entry.grams.entry(g).or_insert(0) += c;
            entry.total_grams += c;
        }
        entry.total_letters += count_letters(text.as_ref(), &mut entry.letters_by_script);
    }
    if langs.is_empty() {
        return Err(Error::InvalidInput("no training samples".into()));
    }
    let empty: Vec<&str> = langs
        .iter()
        .filter(|(_, c)| c.total_letters == 0)
        .map(|(l, _)| l.as_str())
        .collect();
    if !empty.is_empty() {
        return Err(Error::InvalidInput(format!(
            "languages with zero training letters: {}",
            empty.join(", ")
        )));
    }
    Ok(LidModel {
        version: 1,
        order,
        smoothing,
        min_letters: DEFAULT_MIN_LETTERS,
        margin: DEFAULT_MARGIN,
        langs,
    })
}

impl LidModel {
    pub fn supports(&self, lang: &str) -> bool {
        self.langs.contains_key(lang)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LidModel> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let model: LidModel = serde_json::from_slice(&bytes)?;
        if model.langs.is_empty() {
            return Err(Error::InvalidInput("model has no languages".into()));
        }
        Ok(model)
    }

    /// Build the scoring structure. Cheap relative to training; call once
    /// per batch of predictions.
    pub fn scorer(&self) -> LidScorer<'_> {
        LidScorer::new(self)
    }
}

/// Precomputed log-probability tables for fast batch prediction.
pub struct LidScorer<'m> {
    model: &'m LidModel,
    codes: Vec<&'m str>,
    /// gram -> per-language log P(gram | lang), indexed like `codes`.
    gram_logp: HashMap<&'m str, Vec<f64>>,
    /// per-language log-probability of a gram never seen in that language.
    unseen_logp: Vec<f64>,
    /// per-language, per-script letter log-probabilities.
    script_logp: Vec<BTreeMap<Script, f64>>,
}

impl<'m> LidScorer<'m> {
    fn new(model: &'m LidModel) -> Self {
        let codes: Vec<&str> = model.langs.keys().map(|s| s.as_str()).collect();
        // shared gram vocabulary: the union over languages
        let mut vocab: HashMap<&str, usize> = HashMap::new();
        for counts in model.langs.values() {
            for gram in counts.grams.keys() {
                let next = vocab.len();
                vocab.entry(gram.as_str()).or_insert(next);
            }
        }
        let v = vocab.len() as f64;
        let k = model.smoothing;

        let mut gram_logp: HashMap<&str, Vec<f64>> = HashMap::with_capacity(vocab.len());
        let mut unseen_logp = Vec::with_capacity(codes.len());
        for gram in vocab.keys() {
            gram_logp.insert(gram, Vec::with_capacity(codes.len()));
        }
        for (li, code) in codes.iter().enumerate() {
            let counts = &model.langs[*code];
            let denom = counts.total_grams as f64 + k * v;
            unseen_logp.push((k / denom).ln());
            for (gram, col) in gram_logp.iter_mut() {
                let c = counts.grams.get(*gram).copied().unwrap_or(0);
                col.push(((c as f64 + k) / denom).ln());
            }
            debug_assert_eq!(unseen_logp.len(), li + 1);
        }

        let script_logp = codes
            .iter()
            .map(|code| {
                let counts = &model.langs[*code];
                let denom = counts.total_letters as f64 + k * Script::ALL.len() as f64;
                Script::ALL
                    .iter()
                    .map(|&s| {
                        let c = counts.letters_by_script.get(&s).copied().unwrap_or(0);
                        (s, ((c as f64 + k) / denom).ln())
                    })
                    .collect()
            })
            .collect();

        LidScorer {
            model,
            codes,
            gram_logp,
            unseen_logp,
            script_logp,
        }
    }

    /// Per-language log scores for a text, in `codes` order.
    fn scores(&self, text: &str) -> Vec<f64> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        count_grams(text, self.model.order, &mut counts);
        // fix the summation order: float addition is not associative
        let mut text_grams: Vec<(String, u64)> = counts.into_iter().collect();
        text_grams.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut scripts = BTreeMap::new();
        count_letters(text, &mut scripts);

        let mut scores = vec![0.0f64; self.codes.len()];
        for (gram, c) in &text_grams {
            let c = *c as f64;
            match self.gram_logp.get(gram.as_str()) {
                Some(col) => {
                    for (s, lp) in scores.iter_mut().zip(col) {
                        *s += c * lp;
                    }
                }
                None => {
                    for (s, lp) in scores.iter_mut().zip(&self.unseen_logp) {
                        *s += c * lp;
                    }
                }
            }
        }
        for (script, c) in &scripts {
            let c = *c as f64;
            for (s, table) in scores.iter_mut().zip(&self.script_logp) {
                *s += c * table[script];
            }
        }
        scores
    }

    /// Classify a text. Unknown when it has fewer letters than the model
    /// minimum or when the decision margin is not met.
    pub fn predict(&self, text: &str) -> Prediction {
        let letters = text.chars().filter(|&c| is_letterish(c)).count() as u64;
        if letters < self.model.min_letters {
            return Prediction::Unknown {
                reason: UnknownReason::TooShort,
            };
        }
        let scores = self.scores(text);
        let mut best = 0usize;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        if scores.len() > 1 && self.model.margin > 0.0 {
            let second = scores
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != best)
                .map(|(_, s)| *s)
                .fold(f64::NEG_INFINITY, f64::max);
            if scores[best] - second < self.model.margin {
                return Prediction::Unknown {
                    reason: UnknownReason::Margin,
                };
            }
        }
        Prediction::Identified {
            lang: self.codes[best].to_string(),
            score: scores[best],
        }
    }
}

/// Outcome of filtering one document's paragraphs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LidFilterOutcome {
    pub paragraphs_dropped: u64,
    /// The document's language was not in the model; nothing was filtered.
    pub skipped: bool,
}

/// Drop paragraphs whose predicted language differs from the document
/// language. Unknown predictions are kept. Documents in languages the model
/// does not support pass through unchanged with a "lid-skipped" tag.
pub fn filter_paragraphs(
    scorer: &LidScorer<'_>,
    doc: &mut CleanDocument,
    target: &str,
) -> LidFilterOutcome {
    if !scorer.model.supports(target) {
        doc.tag(LID_SKIPPED_TAG);
        return LidFilterOutcome {
            paragraphs_dropped: 0,
            skipped: true,
        };
    }
    let before = doc.paragraphs.len();
    doc.paragraphs.retain(|p| match scorer.predict(p) {
        Prediction::Identified { ref lang, .. } => lang == target,
        Prediction::Unknown { .. } => true,
    });
    let dropped = (before - doc.paragraphs.len()) as u64;
    if dropped > 0 {
        doc.tag(LID_FILTERED_TAG);
    }
    LidFilterOutcome {
        paragraphs_dropped: dropped,
        skipped: false,
    }
}

/// Per-language accuracy plus confusion counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LidReport {
    pub per_lang: BTreeMap<String, LangAccuracy>,
    /// gold language -> predicted label (or "unknown") -> count.
    pub confusion: BTreeMap<String, BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LangAccuracy {
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

/// Evaluate top-1 accuracy per language over a labeled test stream.
/// Languages absent from the test set simply have no report entry.
pub fn evaluate_lid<I, S>(model: &LidModel, test: I) -> Result<LidReport>
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    let scorer = model.scorer();
    let mut report = LidReport::default();
    for (gold, text) in test {
        let gold = gold.as_ref();
        if !model.supports(gold) {
            return Err(Error::InvalidInput(format!(
                "test label {gold:?} is not in the model's supported set"
            )));
        }
        let predicted = scorer.predict(text.as_ref());
        let label = predicted.lang().unwrap_or("unknown").to_string();
        let entry = report.per_lang.entry(gold.to_string()).or_default();
        entry.total += 1;
        if predicted.lang() == Some(gold) {
            entry.correct += 1;
        }
        *report
            .confusion
            .entry(gold.to_string())
            .or_default()
            .entry(label)
            .or_insert(0) += 1;
    }
    for acc in report.per_lang.values_mut() {
        acc.accuracy = acc.correct as f64 / acc.total as f64;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HI: &str = "राम घर गया। वह सो गया। आज मौसम अच्छा है और सब लोग बाहर खेल रहे हैं।";
    const TA: &str = "அவன் வீட்டுக்கு சென்றான். இன்று வானிலை மிகவும் நன்றாக உள்ளது.";
    const BN: &str = "সে বাড়ি গেল। আজ আবহাওয়া খুব ভালো এবং সবাই বাইরে খেলছে।";

    fn model() -> LidModel {
        train_lid(
            [("hi", HI), ("ta", TA), ("bn", BN)],
            DEFAULT_ORDER,
            DEFAULT_SMOOTHING,
        )
        .unwrap()
    }

    #[test]
    fn single_language_model_always_predicts_it() {
        let m = train_lid([("hi", HI)], 3, 0.5).unwrap();
        let s = m.scorer();
        assert_eq!(s.predict("कोई भी हिंदी वाक्य यहाँ चलेगा").lang(), Some("hi"));
    }

    #[test]
    fn disjoint_scripts_classify_perfectly() {
        let m = model();
        let s = m.scorer();
        assert_eq!(s.predict(HI).lang(), Some("hi"));
        assert_eq!(s.predict(TA).lang(), Some("ta"));
        assert_eq!(s.predict(BN).lang(), Some("bn"));
    }

    #[test]
    fn short_or_letterless_text_is_unknown() {
        let m = model();
        let s = m.scorer();
        assert_eq!(
            s.predict("घर"),
            Prediction::Unknown {
                reason: UnknownReason::TooShort
            }
        );
        assert_eq!(
            s.predict("123 456 !!! ॥"),
            Prediction::Unknown {
                reason: UnknownReason::TooShort
            }
        );
    }

    #[test]
    fn duplicate_samples_keep_the_argmax() {
        let doubled = train_lid(
            [("hi", HI), ("hi", HI), ("ta", TA), ("ta", TA), ("bn", BN), ("bn", BN)],
            3,
            0.5,
        )
        .unwrap();
        let single = model();
        let sd = doubled.scorer();
        let ss = single.scorer();
        for text in [HI, TA, BN, "வானிலை நன்றாக உள்ளது இன்று மிக"] {
            assert_eq!(sd.predict(text).lang(), ss.predict(text).lang());
        }
    }

    #[test]
    fn margin_turns_close_calls_unknown() {
        let mut m = model();
        m.margin = f64::INFINITY;
        let s = m.scorer();
        assert_eq!(
            s.predict(HI),
            Prediction::Unknown {
                reason: UnknownReason::Margin
            }
        );
    }

    #[test]
    fn training_validates_parameters() {
        assert!(train_lid([("hi", HI)], 5, 0.5).is_err());
        assert!(train_lid([("hi", HI)], 3, 0.0).is_err());
        assert!(train_lid([("zz", "text")], 3, 0.5).is_err());
        assert!(train_lid::<[(&str, &str); 0], &str>([], 3, 0.5).is_err());
        let err = train_lid([("hi", HI), ("ta", "1234 !!!")], 3, 0.5).unwrap_err();
        assert!(err.to_string().contains("ta"), "{err}");
    }

    #[test]
    fn save_load_roundtrip_is_bitwise_identical() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        m.save(&p1).unwrap();
        let loaded = LidModel::load(&p1).unwrap();
        loaded.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        let s1 = m.scorer();
        let s2 = loaded.scorer();
        for text in [HI, TA, BN] {
            let (a, b) = (s1.predict(text), s2.predict(text));
            match (a, b) {
                (
                    Prediction::Identified { lang: la, score: sa },
                    Prediction::Identified { lang: lb, score: sb },
                ) => {
                    assert_eq!(la, lb);
                    assert_eq!(sa.to_bits(), sb.to_bits(), "scores must match bitwise");
                }
                other => panic!("unexpected predictions: {other:?}"),
            }
        }
    }

    #[test]
    fn filter_drops_foreign_paragraphs_keeps_unknown() {
        let m = model();
        let s = m.scorer();
        let mut doc = CleanDocument {
            id: "d".into(),
            lang: "hi".into(),
            paragraphs: vec![
                HI.to_string(),
                TA.to_string(),
                "छोटा".to_string(), // too short: Unknown, kept
            ],
            provenance: vec![],
        };
        let outcome = filter_paragraphs(&s, &mut doc, "hi");
        assert_eq!(outcome.paragraphs_dropped, 1);
        assert!(!outcome.skipped);
        assert_eq!(doc.paragraphs.len(), 2);
        assert!(doc.provenance.contains(&LID_FILTERED_TAG.to_string()));
    }

    #[test]
    fn unsupported_language_passes_untouched() {
        let m = model();
        let s = m.scorer();
        let mut doc = CleanDocument {
            id: "d".into(),
            lang: "brx".into(),
            paragraphs: vec![TA.to_string()],
            provenance: vec![],
        };
        let outcome = filter_paragraphs(&s, &mut doc, "brx");
        assert!(outcome.skipped);
        assert_eq!(doc.paragraphs.len(), 1);
        assert!(doc.provenance.contains(&LID_SKIPPED_TAG.to_string()));
    }

    #[test]
    fn all_foreign_paragraphs_empty_the_document() {
        let m = model();
        let s = m.scorer();
        let mut doc = CleanDocument {
            id: "d".into(),
            lang: "hi".into(),
            paragraphs: vec![TA.to_string(), BN.to_string()],
            provenance: vec![],
        };
        let outcome = filter_paragraphs(&s, &mut doc, "hi");
        assert_eq!(outcome.paragraphs_dropped, 2);
        assert!(doc.is_empty());
    }

    #[test]
    fn evaluation_reports_accuracy_and_confusion() {
        let m = model();
        let report = evaluate_lid(&m, [("hi", HI), ("ta", TA), ("bn", BN)]).unwrap();
        for lang in ["hi", "ta", "bn"] {
            assert_eq!(report.per_lang[lang].accuracy, 1.0, "{lang}");
        }

        // a deliberately mislabeled item zeroes its language, leaves others
        let report = evaluate_lid(&m, [("hi", TA), ("ta", TA), ("bn", BN)]).unwrap();
        assert_eq!(report.per_lang["hi"].accuracy, 0.0);
        assert_eq!(report.per_lang["ta"].accuracy, 1.0);
        assert_eq!(report.confusion["hi"]["ta"], 1);

        // labels outside the supported set are an error
        assert!(evaluate_lid(&m, [("mr", HI)]).is_err());
        // a language with no test items has no entry rather than zero
        let report = evaluate_lid(&m, [("hi", HI)]).unwrap();
        assert!(!report.per_lang.contains_key("ta"));
    }

    #[test]
    fn gram_stream_collapses_nonletters() {
        let s: String = gram_stream("Ab,  cd!9").into_iter().collect();
        assert_eq!(s, " ab cd ");
    }
}
