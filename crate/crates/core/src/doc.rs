//! Document model and corpus I/O.
//!
//! Raw corpora arrive either as JSONL ({"id", "url"?, "lang"?, "text"}, one
//! object per line) or as plain text with one document per line. Cleaned
//! corpora are JSONL with an explicit paragraph array and the provenance
//! tags of the filters applied. The streaming reader accepts both JSONL
//! shapes, so every command that reads a corpus also accepts the output of
//! a previous stage.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::LanguageTable;

/// A crawled text unit prior to cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    pub text: String,
}

/// A cleaned document: resolved language, paragraph structure, and the tags
/// of every filter that touched it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub id: String,
    pub lang: String,
    pub paragraphs: Vec<String>,
    #[serde(default)]
    pub provenance: Vec<String>,
}

impl RawDocument {
    /// Resolve the document language: the per-document hint wins, then the
    /// caller-supplied default.
    pub fn resolve_lang(&self, default: Option<&str>) -> Result<String> {
        let code = self
            .lang
            .as_deref()
            .or(default)
            .ok_or_else(|| Error::InvalidInput(format!("document {}: no language", self.id)))?;
        Ok(code.to_string())
    }

    /// Convert to a clean document, splitting paragraphs on blank lines.
    pub fn into_clean(self, lang: String) -> CleanDocument {
        let paragraphs = split_paragraphs(&self.text);
        CleanDocument {
            id: self.id,
            lang,
            paragraphs,
            provenance: Vec::new(),
        }
    }
}

/// Split text into paragraphs on blank lines, trimming each and dropping
/// empties.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    text.split("\n\n")
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .map(|p| p.to_string())
        .collect()
}

impl CleanDocument {
    /// Full document text with paragraphs separated by blank lines.
    pub fn text(&self) -> String {
        self.paragraphs.join("\n\n")
    }

    /// Whitespace token count over all paragraphs.
    pub fn token_count(&self) -> u64 {
        self.paragraphs
            .iter()
            .map(|p| p.split_whitespace().count() as u64)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn tag(&mut self, tag: &str) {
        if !self.provenance.iter().any(|t| t == tag) {
            self.provenance.push(tag.to_string());
        }
    }

    /// True when the resolved language is in the 24-language table.
    pub fn lang_known(&self) -> bool {
        LanguageTable::is_known(&self.lang)
    }
}

/// One record of a corpus stream: the raw crawl shape (carries `text`) or
/// the cleaned shape (carries `paragraphs`). JSONL inputs may mix both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusRecord {
    Raw(RawDocument),
    Clean(CleanDocument),
}

impl CorpusRecord {
    pub fn id(&self) -> &str {
        match self {
            CorpusRecord::Raw(d) => &d.id,
            CorpusRecord::Clean(d) => &d.id,
        }
    }

    /// Resolve to a clean document. Raw records split paragraphs on blank
    /// lines and take the per-record language hint over the caller default;
    /// clean records pass through with their language and provenance intact.
    pub fn into_clean(self, default_lang: Option<&str>) -> Result<CleanDocument> {
        match self {
            CorpusRecord::Raw(raw) => {
                let lang = raw.resolve_lang(default_lang)?;
                Ok(raw.into_clean(lang))
            }
            CorpusRecord::Clean(doc) => Ok(doc),
        }
    }
}

/// Input corpus format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    TextPerLine,
}

impl CorpusFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "text-per-line" | "text" => Ok(CorpusFormat::TextPerLine),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Streaming reader over corpus records. Yields one result per record so
/// malformed lines surface as record errors without stopping the stream.
#[derive(Debug)]
pub struct CorpusReader {
    path: PathBuf,
    format: CorpusFormat,
    lines: std::io::Lines<BufReader<File>>,
    line_no: u64,
    seen_ids: std::collections::HashSet<String>,
}

/// Open a corpus for streaming. Unreadable files fail here; malformed
/// records are reported per item by the iterator.
pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<CorpusReader> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CorpusReader {
        path: path.to_path_buf(),
        format,
        lines: BufReader::new(file).lines(),
        line_no: 0,
        seen_ids: std::collections::HashSet::new(),
    })
}

/// Parse one JSONL line as a corpus record. The `paragraphs` key selects the
/// cleaned shape; everything else must carry `text`. Dispatching on the key
/// (rather than trying both shapes) keeps serde's field-level messages in
/// the record error.
fn parse_record(line: &str) -> std::result::Result<CorpusRecord, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(line)?;
    if value.get("paragraphs").is_some() {
        serde_json::from_value::<CleanDocument>(value).map(CorpusRecord::Clean)
    } else {
        serde_json::from_value::<RawDocument>(value).map(CorpusRecord::Raw)
    }
}

impl Iterator for CorpusReader {
    type Item = Result<CorpusRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.line_no += 1;
                    return Some(Err(Error::io(&self.path, e)));
                }
            };
            self.line_no += 1;
            match self.format {
                CorpusFormat::Jsonl => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let doc = match parse_record(&line) {
                        Ok(d) => d,
                        Err(e) => {
                            return Some(Err(Error::record(
                                &self.path,
                                self.line_no,
                                format!("malformed record: {e}"),
                            )))
                        }
                    };
                    if doc.id().is_empty() {
                        return Some(Err(Error::record(&self.path, self.line_no, "empty id")));
                    }
                    if !self.seen_ids.insert(doc.id().to_string()) {
                        return Some(Err(Error::record(
                            &self.path,
                            self.line_no,
                            format!("duplicate id {:?}", doc.id()),
                        )));
                    }
                    return Some(Ok(doc));
                }
                CorpusFormat::TextPerLine => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(Ok(CorpusRecord::Raw(RawDocument {
                        id: format!("{}:{}", self.path.display(), self.line_no),
                        url: String::new(),
                        lang: None,
                        text: line,
                    })));
                }
            }
        }
    }
}

/// Streaming reader over cleaned documents (JSONL).
pub struct CleanReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: u64,
}

pub fn read_clean_corpus(path: &Path) -> Result<CleanReader> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(CleanReader {
        path: path.to_path_buf(),
        lines: BufReader::new(file).lines(),
        line_no: 0,
    })
}

impl Iterator for CleanReader {
    type Item = Result<CleanDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.line_no += 1;
                    return Some(Err(Error::io(&self.path, e)));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(match serde_json::from_str::<CleanDocument>(&line) {
                Ok(d) => Ok(d),
                Err(e) => Err(Error::record(
                    &self.path,
                    self.line_no,
                    format!("malformed record: {e}"),
                )),
            });
        }
    }
}

/// Writer for cleaned corpora (JSONL, one document per line, LF-terminated).
pub struct CleanWriter {
    path: PathBuf,
    out: BufWriter<File>,
    pub written: u64,
}

impl CleanWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CleanWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            written: 0,
        })
    }

    pub fn write_doc(&mut self, doc: &CleanDocument) -> Result<()> {
        let line = serde_json::to_string(doc)?;
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn jsonl_line_maps_to_document() {
        let f = write_temp("{\"id\":\"a\",\"text\":\"नमस्ते\"}\n");
        let docs: Vec<_> = read_corpus(f.path(), CorpusFormat::Jsonl)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(docs.len(), 1);
        let CorpusRecord::Raw(raw) = &docs[0] else {
            panic!("expected raw record, got {:?}", docs[0]);
        };
        assert_eq!(raw.id, "a");
        assert_eq!(raw.text, "नमस्ते");
        assert_eq!(raw.url, "");
        assert_eq!(raw.lang, None);
    }

    #[test]
    fn reader_accepts_clean_shape_and_keeps_provenance() {
        let f = write_temp(concat!(
            "{\"id\":\"r\",\"lang\":\"hi\",\"text\":\"कच्चा पाठ\"}\n",
            "{\"id\":\"c\",\"lang\":\"ta\",\"paragraphs\":[\"ஒன்று\",\"இரண்டு\"],",
            "\"provenance\":[\"script-ratio\"]}\n",
        ));
        let docs: Vec<CleanDocument> = read_corpus(f.path(), CorpusFormat::Jsonl)
            .unwrap()
            .map(|r| r.and_then(|rec| rec.into_clean(Some("und"))))
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].lang, "hi");
        assert_eq!(docs[0].paragraphs, ["कच्चा पाठ"]);
        assert!(docs[0].provenance.is_empty());
        assert_eq!(docs[1].lang, "ta", "clean record keeps its own language");
        assert_eq!(docs[1].paragraphs, ["ஒன்று", "இரண்டு"]);
        assert_eq!(docs[1].provenance, ["script-ratio"]);
    }

    #[test]
    fn duplicate_id_across_shapes_is_a_record_error() {
        let f = write_temp(concat!(
            "{\"id\":\"a\",\"text\":\"x\"}\n",
            "{\"id\":\"a\",\"lang\":\"hi\",\"paragraphs\":[\"y\"]}\n",
        ));
        let items: Vec<_> = read_corpus(f.path(), CorpusFormat::Jsonl).unwrap().collect();
        assert!(items[0].is_ok());
        let err = items[1].as_ref().unwrap_err();
        assert!(err.is_record_error());
        assert!(err.to_string().contains("duplicate id"), "{err}");
    }

    #[test]
    fn empty_file_is_empty_stream() {
        let f = write_temp("");
        let items: Vec<_> = read_corpus(f.path(), CorpusFormat::Jsonl).unwrap().collect();
        assert!(items.is_empty());
    }

    #[test]
    fn malformed_line_is_one_record_error() {
        let f = write_temp("{\"id\":\"a\",\"text\":\"ok\"}\n{broken\n{\"id\":\"b\",\"text\":\"ok\"}\n");
        let items: Vec<_> = read_corpus(f.path(), CorpusFormat::Jsonl).unwrap().collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        let err = items[1].as_ref().unwrap_err();
        assert!(err.is_record_error(), "expected record error, got {err}");
        assert!(err.to_string().contains(":2:"), "line number in {err}");
        assert!(items[2].is_ok());
    }

    #[test]
    fn duplicate_and_empty_ids_are_record_errors() {
        let f = write_temp(
            "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n{\"id\":\"\",\"text\":\"z\"}\n",
        );
        let items: Vec<_> = read_corpus(f.path(), CorpusFormat::Jsonl).unwrap().collect();
        assert!(items[0].is_ok());
        assert!(items[1].as_ref().unwrap_err().is_record_error());
        assert!(items[2].as_ref().unwrap_err().is_record_error());
    }

    #[test]
    fn text_per_line_gets_synthetic_ids() {
        let f = write_temp("पहला वाक्य\n\nदूसरा वाक्य\n");
        let docs: Vec<_> = read_corpus(f.path(), CorpusFormat::TextPerLine)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(docs.len(), 2);
        assert!(docs[0].id().ends_with(":1"));
        assert!(
            docs[1].id().ends_with(":3"),
            "blank lines keep numbering: {}",
            docs[1].id()
        );
        let clean = docs[1].clone().into_clean(Some("hi")).unwrap();
        assert_eq!(clean.paragraphs, ["दूसरा वाक्य"]);
        assert_eq!(clean.lang, "hi", "text lines take the caller default");
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = read_corpus(Path::new("/nonexistent/p.jsonl"), CorpusFormat::Jsonl).unwrap_err();
        assert!(!err.is_record_error());
    }

    #[test]
    fn paragraphs_split_on_blank_lines() {
        assert_eq!(split_paragraphs("a b\nc\n\nd\n\n\n  \n"), ["a b\nc", "d"]);
        assert!(split_paragraphs("  \n ").is_empty());
    }

    #[test]
    fn clean_roundtrip_through_writer_and_reader() {
        let doc = CleanDocument {
            id: "d1".into(),
            lang: "hi".into(),
            paragraphs: vec!["एक।".into(), "दो।".into()],
            provenance: vec!["lid-skipped".into()],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clean.jsonl");
        let mut w = CleanWriter::create(&path).unwrap();
        w.write_doc(&doc).unwrap();
        assert_eq!(w.finish().unwrap(), 1);
        let back: Vec<_> = read_clean_corpus(&path)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(back, vec![doc]);
    }

    #[test]
    fn token_count_sums_paragraphs() {
        let doc = CleanDocument {
            id: "d".into(),
            lang: "hi".into(),
            paragraphs: vec!["a b c".into(), "d  e".into()],
            provenance: vec![],
        };
        assert_eq!(doc.token_count(), 5);
        assert_eq!(doc.text(), "a b c\n\nd  e");
    }
}
