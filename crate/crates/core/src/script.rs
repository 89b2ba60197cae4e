//! Unicode script classification, native-script ratios, and unification of
//! Brahmi-derived scripts into Devanagari.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Script;
use crate::unicode::is_letterish;

/// Codepoint ranges of the 13 scripts, sorted by start for binary search.
/// Anything unmapped classifies as `Script::Other`.
const SCRIPT_RANGES: [(u32, u32, Script); 22] = [
    (0x0041, 0x005A, Script::Latin),
    (0x0061, 0x007A, Script::Latin),
    (0x00C0, 0x024F, Script::Latin),
    (0x0600, 0x06FF, Script::Arabic),
    (0x0750, 0x077F, Script::Arabic),
    (0x08A0, 0x08FF, Script::Arabic),
    (0x0900, 0x097F, Script::Devanagari),
    (0x0980, 0x09FF, Script::Bengali),
    (0x0A00, 0x0A7F, Script::Gurmukhi),
    (0x0A80, 0x0AFF, Script::Gujarati),
    (0x0B00, 0x0B7F, Script::Odia),
    (0x0B80, 0x0BFF, Script::Tamil),
    (0x0C00, 0x0C7F, Script::Telugu),
    (0x0C80, 0x0CFF, Script::Kannada),
    (0x0D00, 0x0D7F, Script::Malayalam),
    (0x1C50, 0x1C7F, Script::OlChiki),
    (0x1E00, 0x1EFF, Script::Latin),
    (0xA8E0, 0xA8FF, Script::Devanagari),
    (0xAAE0, 0xAAFF, Script::Meitei),
    (0xABC0, 0xABFF, Script::Meitei),
    (0xFB50, 0xFDFF, Script::Arabic),
    (0xFE70, 0xFEFF, Script::Arabic),
];

/// Classify one codepoint.
pub fn script_of(c: char) -> Script {
    let cp = c as u32;
    let mut lo = 0usize;
    let mut hi = SCRIPT_RANGES.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (a, b, s) = SCRIPT_RANGES[mid];
        if cp < a {
            hi = mid;
        } else if cp > b {
            lo = mid + 1;
        } else {
            return s;
        }
    }
    Script::Other
}

/// Per-script letter counts for a piece of text. Only letters count:
/// whitespace, digits, punctuation, and symbols are excluded; combining
/// marks (matras, viramas) are letters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptProfile {
    pub per_script: BTreeMap<Script, u64>,
    pub total: u64,
}

impl ScriptProfile {
    pub fn count(&self, script: Script) -> u64 {
        self.per_script.get(&script).copied().unwrap_or(0)
    }

    /// Script with the most letters, if any letters were seen.
    pub fn dominant(&self) -> Option<Script> {
        self.per_script
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(s, _)| *s)
    }
}

/// Count the letters of `text` by script.
pub fn script_profile(text: &str) -> ScriptProfile {
    let mut profile = ScriptProfile::default();
    for c in text.chars() {
        if !is_letterish(c) {
            continue;
        }
        *profile.per_script.entry(script_of(c)).or_insert(0) += 1;
        profile.total += 1;
    }
    profile
}

/// Result of a native-script ratio computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NativeRatio {
    pub ratio: f64,
    pub total_letters: u64,
}

impl NativeRatio {
    /// Text without a single letter; the ratio is reported as 0.
    pub fn is_empty(&self) -> bool {
        self.total_letters == 0
    }
}

/// Fraction of letters written in `expected`, out of all letters.
pub fn native_ratio(text: &str, expected: Script) -> NativeRatio {
    let profile = script_profile(text);
    if profile.total == 0 {
        return NativeRatio {
            ratio: 0.0,
            total_letters: 0,
        };
    }
    NativeRatio {
        ratio: profile.count(expected) as f64 / profile.total as f64,
        total_letters: profile.total,
    }
}

/// First codepoint of the aligned block for each Brahmi-derived script.
/// Offsets 0x00..=0x6F correspond position-for-position across these
/// blocks; 0x70..=0x7F hold script-specific signs with no counterpart.
fn block_base(script: Script) -> Option<u32> {
    match script {
        Script::Devanagari => Some(0x0900),
        Script::Bengali => Some(0x0980),
        Script::Gurmukhi => Some(0x0A00),
        Script::Gujarati => Some(0x0A80),
        Script::Odia => Some(0x0B00),
        Script::Tamil => Some(0x0B80),
        Script::Telugu => Some(0x0C00),
        Script::Kannada => Some(0x0C80),
        Script::Malayalam => Some(0x0D00),
        _ => None,
    }
}

const ALIGNED_SPAN: u32 = 0x70;
const BLOCK_SPAN: u32 = 0x80;

/// Codepoints that could not be converted, with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub passed_through: BTreeMap<char, u64>,
    pub total_passed: u64,
    pub converted: u64,
}

/// Rewrite `text` from `source` script into Devanagari using the fixed
/// block offset. Script-specific signs (block offsets 0x70..=0x7F) and
/// characters outside the source block pass through unchanged; the former
/// are counted in the report. Devanagari input comes back untouched.
pub fn to_devanagari(text: &str, source: Script) -> Result<(String, ConversionReport)> {
    let base = block_base(source).ok_or(Error::UnsupportedConversion(source))?;
    let mut out = String::with_capacity(text.len());
    let mut report = ConversionReport::default();
    for c in text.chars() {
        let cp = c as u32;
        if (base..base + ALIGNED_SPAN).contains(&cp) {
            let mapped = 0x0900 + (cp - base);
            out.push(char::from_u32(mapped).expect("offset stays in the Devanagari block"));
            report.converted += 1;
        } else {
            if (base + ALIGNED_SPAN..base + BLOCK_SPAN).contains(&cp) {
                *report.passed_through.entry(c).or_insert(0) += 1;
                report.total_passed += 1;
            }
            out.push(c);
        }
    }
    Ok((out, report))
}
