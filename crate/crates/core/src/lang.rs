//! The 24-language table: codes, primary scripts, families, and resource
//! classes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Writing systems covered by the language table, plus a catch-all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Script {
    Arabic,
    Bengali,
    Devanagari,
    Gujarati,
    Gurmukhi,
    Kannada,
    Latin,
    Malayalam,
    Meitei,
    Odia,
    OlChiki,
    Tamil,
    Telugu,
    Other,
}

impl Script {
    pub const ALL: [Script; 14] = [
        Script::Arabic,
        Script::Bengali,
        Script::Devanagari,
        Script::Gujarati,
        Script::Gurmukhi,
        Script::Kannada,
        Script::Latin,
        Script::Malayalam,
        Script::Meitei,
        Script::Odia,
        Script::OlChiki,
        Script::Tamil,
        Script::Telugu,
        Script::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Script::Arabic => "Arabic",
            Script::Bengali => "Bengali",
            Script::Devanagari => "Devanagari",
            Script::Gujarati => "Gujarati",
            Script::Gurmukhi => "Gurmukhi",
            Script::Kannada => "Kannada",
            Script::Latin => "Latin",
            Script::Malayalam => "Malayalam",
            Script::Meitei => "Meitei",
            Script::Odia => "Odia",
            Script::OlChiki => "Ol Chiki",
            Script::Tamil => "Tamil",
            Script::Telugu => "Telugu",
            Script::Other => "Other",
        }
    }

    /// Parse a script name as used in config files and CLI flags.
    /// Case-insensitive; accepts "ol-chiki"/"olchiki" and "oriya" aliases.
    pub fn parse(name: &str) -> Result<Script> {
        let key = name.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        let script = match key.as_str() {
            "arabic" => Script::Arabic,
            "bengali" => Script::Bengali,
            "devanagari" => Script::Devanagari,
            "gujarati" => Script::Gujarati,
            "gurmukhi" => Script::Gurmukhi,
            "kannada" => Script::Kannada,
            "latin" => Script::Latin,
            "malayalam" => Script::Malayalam,
            "meitei" | "meeteimayek" => Script::Meitei,
            "odia" | "oriya" => Script::Odia,
            "olchiki" => Script::OlChiki,
            "tamil" => Script::Tamil,
            "telugu" => Script::Telugu,
            "other" => Script::Other,
            _ => return Err(Error::UnknownScript(name.to_string())),
        };
        Ok(script)
    }

    /// Whether the script distinguishes letter case.
    pub fn has_case(self) -> bool {
        matches!(self, Script::Latin)
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Language family labels as carried by the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    IndoEuropean,
    Dravidian,
    SinoTibetan,
    Austroasiatic,
    Germanic,
}

/// One entry of the language table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Language {
    /// ISO-like code used everywhere in corpus files and reports.
    pub code: &'static str,
    pub name: &'static str,
    pub script: Script,
    pub family: Family,
    /// Resource class on the 1 (lowest) to 5 (highest) taxonomy.
    pub class: u8,
}

impl Language {
    /// Surface form of the language token prepended to pretraining documents.
    pub fn lang_token(&self) -> String {
        format!("<{}>", self.code)
    }
}

const LANGUAGES: [Language; 24] = [
    lang("as", "Assamese", Script::Bengali, Family::IndoEuropean, 2),
    lang("bn", "Bengali", Script::Bengali, Family::IndoEuropean, 5),
    lang("brx", "Bodo", Script::Devanagari, Family::SinoTibetan, 1),
    lang("doi", "Dogri", Script::Devanagari, Family::IndoEuropean, 1),
    lang("en", "English", Script::Latin, Family::Germanic, 5),
    lang("gom", "Konkani", Script::Devanagari, Family::IndoEuropean, 1),
    lang("gu", "Gujarati", Script::Gujarati, Family::IndoEuropean, 4),
    lang("hi", "Hindi", Script::Devanagari, Family::IndoEuropean, 5),
    lang("kha", "Khasi", Script::Latin, Family::Austroasiatic, 1),
    lang("kn", "Kannada", Script::Kannada, Family::Dravidian, 4),
    lang("ks", "Kashmiri", Script::Arabic, Family::IndoEuropean, 1),
    lang("mai", "Maithili", Script::Devanagari, Family::IndoEuropean, 1),
    lang("ml", "Malayalam", Script::Malayalam, Family::Dravidian, 4),
    lang("mni", "Manipuri", Script::Meitei, Family::SinoTibetan, 1),
    lang("mr", "Marathi", Script::Devanagari, Family::IndoEuropean, 4),
    lang("ne", "Nepali", Script::Devanagari, Family::IndoEuropean, 2),
    lang("or", "Odia", Script::Odia, Family::IndoEuropean, 3),
    lang("pa", "Punjabi", Script::Gurmukhi, Family::IndoEuropean, 3),
    lang("sa", "Sanskrit", Script::Devanagari, Family::IndoEuropean, 2),
    lang("sat", "Santali", Script::OlChiki, Family::Austroasiatic, 1),
    lang("sd", "Sindhi", Script::Arabic, Family::IndoEuropean, 1),
    lang("ta", "Tamil", Script::Tamil, Family::Dravidian, 4),
    lang("te", "Telugu", Script::Telugu, Family::Dravidian, 4),
    lang("ur", "Urdu", Script::Arabic, Family::IndoEuropean, 5),
];

const fn lang(
    code: &'static str,
    name: &'static str,
    script: Script,
    family: Family,
    class: u8,
) -> Language {
    Language {
        code,
        name,
        script,
        family,
        class,
    }
}

/// Lookup over the fixed 24-language inventory.
#[derive(Debug, Clone, Copy, Default)]
pub struct LanguageTable;

impl LanguageTable {
    pub fn entries() -> &'static [Language] {
        &LANGUAGES
    }

    pub fn get(code: &str) -> Option<&'static Language> {
        LANGUAGES.iter().find(|l| l.code == code)
    }

    pub fn require(code: &str) -> Result<&'static Language> {
        Self::get(code).ok_or_else(|| Error::UnknownLanguage(code.to_string()))
    }

    pub fn is_known(code: &str) -> bool {
        Self::get(code).is_some()
    }

    pub fn codes() -> impl Iterator<Item = &'static str> {
        LANGUAGES.iter().map(|l| l.code)
    }

    /// Languages whose primary script is claimed by no other table entry.
    pub fn unique_script_codes() -> Vec<&'static str> {
        LANGUAGES
            .iter()
            .filter(|l| {
                LANGUAGES
                    .iter()
                    .filter(|o| o.script == l.script)
                    .count()
                    == 1
            })
            .map(|l| l.code)
            .collect()
    }
}
