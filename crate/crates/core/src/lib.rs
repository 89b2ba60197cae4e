//! Corpus curation and benchmark scoring for 24 Indic languages.
//!
//! The library covers the batch-processing path from raw crawled text to
//! pretraining-ready examples, plus the scoring side of the benchmark:
//!
//! - [`doc`]: document model and JSONL / text corpus I/O
//! - [`segment`]: sentence segmentation with Indic delimiters
//! - [`stats`]: corpus statistics and search-query generation
//! - [`script`]: Unicode script profiles, native-script ratio, Devanagari
//!   unification of Brahmi scripts
//! - [`lid`]: trainable character n-gram language identification
//! - [`filter`]: the cleaning chain (script ratio, punctuation length,
//!   offensive blacklist, exact dedup) with per-rule accounting
//! - [`sampling`]: temperature-based upsampling plans and deterministic
//!   shard materialization
//! - [`vocab`]: WordPiece vocabulary training, tokenization, fertility
//! - [`pretrain`]: MLM / TLM pretraining example builders
//! - [`metrics`]: classification, span, chunk, and retrieval metrics with
//!   cross-task aggregation
//!
//! All randomized operations take explicit seeds and are deterministic:
//! rerunning any pipeline stage with the same inputs, parameters, and seed
//! produces byte-identical outputs.

pub mod config;
pub mod doc;
pub mod error;
pub mod filter;
pub mod lang;
pub mod lid;
pub mod metrics;
pub mod pretrain;
pub mod report;
pub mod sampling;
pub mod script;
pub mod segment;
pub mod stats;
pub mod unicode;
pub mod vocab;

pub use error::{Error, Result};
pub use lang::{Language, LanguageTable, Script};
