//! Batch command-line interface over the corpus curation and benchmark
//! scoring library.
//!
//! Exit codes: 0 on success, 1 on fatal errors (bad configuration, I/O,
//! invalid inputs), 2 when malformed input records exceed the tolerance
//! set by `--max-record-errors`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use corpus_forge::config::{PipelineConfig, CONFIG_ENV_VAR};
use corpus_forge::doc::{read_corpus, CleanDocument, CleanWriter, CorpusFormat, CorpusReader};
use corpus_forge::filter::{Blacklist, Pipeline, Stage};
use corpus_forge::lang::LanguageTable;
use corpus_forge::lid::{evaluate_lid, train_lid, LidModel};
use corpus_forge::metrics;
use corpus_forge::pretrain::{pack_sequences, write_examples, MlmBuilder};
use corpus_forge::report::RunReport;
use corpus_forge::sampling::{materialize, temperature_plan, MaterializeConfig, SamplingPlan};
use corpus_forge::script::{to_devanagari, ConversionReport};
use corpus_forge::stats::{generate_search_queries, CorpusStats, OTHER_BUCKET};
use corpus_forge::vocab::{
    fertility, sample_lines, tokenize, tokenize_to_pieces, train_wordpiece, word_counts,
    TrainerConfig, VocabModel,
};

// ==== argument surface ====

#[derive(Parser)]
#[command(
    name = "corpus-forge",
    version,
    about = "Corpus curation and benchmark scoring toolkit",
    propagate_version = true
)]
struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, env = CONFIG_ENV_VAR, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Base seed for every randomized step
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel stages (never changes output bytes)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write a JSON run report here
    #[arg(long, global = true, value_name = "FILE")]
    report: Option<PathBuf>,

    /// Tolerated malformed input records before aborting with exit code 2
    #[arg(long, global = true, default_value_t = 0)]
    max_record_errors: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a corpus through the configured filter stages
    Clean(CleanArgs),
    /// Remove exact duplicates (a single-stage clean)
    Dedup(SingleStageArgs),
    /// Drop paragraphs whose identified language mismatches the document
    LidFilter(LidFilterArgs),
    /// Per-language token, sentence, and document counts
    Stats(StatsArgs),
    /// Most frequent tokens of one language, as search queries
    Queries(QueriesArgs),
    /// Train the character n-gram language identifier
    LidTrain(LidTrainArgs),
    /// Evaluate a language identifier on labeled documents
    LidEval(LidEvalArgs),
    /// Transliterate aligned Brahmi-script text to Devanagari
    ToDeva(ToDevaArgs),
    /// Compute a temperature sampling plan from a cleaned corpus
    Plan(PlanArgs),
    /// Materialize sampled shards from a corpus and a plan
    Sample(SampleArgs),
    /// Train a WordPiece vocabulary from text shards
    VocabTrain(VocabTrainArgs),
    /// Tokenize text lines with a trained vocabulary
    Tokenize(TokenizeArgs),
    /// Pieces-per-word statistics of a vocabulary over a corpus
    Fertility(FertilityArgs),
    /// Build masked-language-model pretraining examples
    MlmBuild(MlmBuildArgs),
    /// Build translation-pair pretraining examples
    TlmBuild(TlmBuildArgs),
    /// Score prediction files
    #[command(subcommand)]
    Score(ScoreCommand),
    /// Merge per-task per-language scores into one table
    Aggregate(AggregateArgs),
}

#[derive(Args)]
struct CorpusInput {
    /// Input corpus file
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Corpus format: "jsonl" or "text"
    #[arg(long)]
    format: Option<String>,

    /// Language assumed for documents that carry none
    #[arg(long, default_value = "und")]
    default_lang: String,
}

#[derive(Args)]
struct CleanArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Cleaned corpus destination (JSON lines)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Comma-separated stage list, in execution order
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<String>>,

    /// Minimum native-script letter ratio a sentence must reach
    #[arg(long)]
    threshold: Option<f64>,

    /// Minimum words (after punctuation stripping) a document must keep
    #[arg(long)]
    min_words: Option<u64>,

    /// Trained language identification model
    #[arg(long, value_name = "FILE")]
    lid_model: Option<PathBuf>,

    /// Margin override for the identifier
    #[arg(long)]
    lid_margin: Option<f64>,

    /// Per-language blacklist, as lang=path (repeatable)
    #[arg(long, value_name = "LANG=FILE")]
    blacklist: Vec<String>,

    /// Directory scanned for <lang>.txt blacklist files
    #[arg(long, value_name = "DIR")]
    blacklist_dir: Option<PathBuf>,

    /// Drop the whole document on a blacklist match
    #[arg(long)]
    offensive_doc_level: bool,
}

#[derive(Args)]
struct SingleStageArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LidFilterArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Trained language identification model
    #[arg(long, value_name = "FILE")]
    lid_model: Option<PathBuf>,

    /// Margin override for the identifier
    #[arg(long)]
    lid_margin: Option<f64>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusInput,
}

#[derive(Args)]
struct QueriesArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Language to generate queries for
    #[arg(long)]
    lang: String,

    /// How many queries
    #[arg(long, default_value_t = 20)]
    count: usize,
}

#[derive(Args)]
struct LidTrainArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Where to write the trained model
    #[arg(long, value_name = "FILE")]
    output: PathBuf,

    /// n-gram order (2, 3, or 4)
    #[arg(long, default_value_t = corpus_forge::lid::DEFAULT_ORDER)]
    order: usize,

    /// Add-k smoothing constant
    #[arg(long, default_value_t = corpus_forge::lid::DEFAULT_SMOOTHING)]
    smoothing: f64,

    /// Texts with fewer letters classify as unknown
    #[arg(long, default_value_t = corpus_forge::lid::DEFAULT_MIN_LETTERS)]
    min_letters: u64,

    /// Unknown when best minus second-best log score is below this
    #[arg(long, default_value_t = corpus_forge::lid::DEFAULT_MARGIN)]
    margin: f64,
}

#[derive(Args)]
struct LidEvalArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Trained model to evaluate
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
}

#[derive(Args)]
struct ToDevaArgs {
    /// Text file, one passage per line
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Transliterated destination
    #[arg(long, value_name = "FILE")]
    output: PathBuf,

    /// Language whose script the input is written in
    #[arg(long)]
    lang: String,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Where to write the plan (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Sampling temperature exponent
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Sampling plan produced by `plan`
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,

    /// Directory for the shard files
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,

    /// Total token budget across shards
    #[arg(long)]
    target_tokens: Option<u64>,

    /// Number of shard files
    #[arg(long)]
    shards: Option<u32>,

    /// Prefix each sampled document with its <lang> marker
    #[arg(long)]
    prepend_lang: bool,
}

#[derive(Args)]
struct VocabTrainArgs {
    /// Text files, one document per line (repeatable)
    #[arg(long, value_name = "FILE", required = true)]
    input: Vec<PathBuf>,

    /// Where to write the vocabulary
    #[arg(long, value_name = "FILE")]
    output: PathBuf,

    /// Total piece budget
    #[arg(long)]
    size: Option<usize>,

    /// Merges stop when no pair occurs at least this often
    #[arg(long)]
    min_pair_freq: Option<u64>,

    /// Share of input lines used for training
    #[arg(long)]
    fraction: Option<f64>,
}

#[derive(Args)]
struct TokenizeArgs {
    /// Trained vocabulary
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,

    /// Text file, one passage per line
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// JSON lines destination
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
}

#[derive(Args)]
struct FertilityArgs {
    #[command(flatten)]
    corpus: CorpusInput,

    /// Trained vocabulary
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,
}

#[derive(Args)]
struct MlmBuildArgs {
    /// Trained vocabulary
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,

    /// Text file, one document per line
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Examples destination (JSON lines)
    #[arg(long, value_name = "FILE")]
    output: PathBuf,

    /// Sequence length ceiling
    #[arg(long)]
    max_len: Option<usize>,

    /// Per-position masking probability
    #[arg(long)]
    mask_prob: Option<f64>,

    /// Reserve the first slot of each sequence for [CLS]
    #[arg(long)]
    add_cls: bool,
}

#[derive(Args)]
struct TlmBuildArgs {
    /// Trained vocabulary
    #[arg(long, value_name = "FILE")]
    vocab: PathBuf,

    /// JSON lines with {"source": ..., "target": ...} records
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Examples destination (JSON lines)
    #[arg(long, value_name = "FILE")]
    output: PathBuf,

    /// Sequence length ceiling
    #[arg(long)]
    max_len: Option<usize>,

    /// Per-position masking probability
    #[arg(long)]
    mask_prob: Option<f64>,
}

#[derive(Subcommand)]
enum ScoreCommand {
    /// Exact-match accuracy over {"gold", "pred"} records
    Accuracy(PredArgs),
    /// Chunk-level micro F1 over IOB2 tag sequences
    Chunk(PredArgs),
    /// Token-bag span F1 over {"golds", "pred"} records
    Span(SpanArgs),
    /// Cosine nearest-neighbor retrieval accuracy over embeddings
    Retrieval(RetrievalArgs),
}

#[derive(Args)]
struct PredArgs {
    /// Prediction file (JSON lines)
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
}

#[derive(Args)]
struct SpanArgs {
    /// Prediction file (JSON lines)
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,

    /// Compare answers exactly as written
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct RetrievalArgs {
    /// Source-side embeddings
    #[arg(long, value_name = "FILE")]
    source: PathBuf,

    /// Target-side embeddings
    #[arg(long, value_name = "FILE")]
    target: PathBuf,

    /// Embedding file format: "binary" or "jsonl"
    #[arg(long, default_value = "binary")]
    format: String,
}

#[derive(Args)]
struct AggregateArgs {
    /// JSON object mapping task name to {lang: score}
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Write the full report here as JSON
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

// ==== corpus streaming with a record-error budget ====

/// Raised when malformed records exceed the tolerance; maps to exit 2.
#[derive(Debug)]
struct RecordBudgetExceeded {
    seen: u64,
    max: u64,
}

impl std::fmt::Display for RecordBudgetExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} malformed records exceed the tolerance of {}",
            self.seen, self.max
        )
    }
}

impl std::error::Error for RecordBudgetExceeded {}

/// Streams clean documents off a corpus reader, counting malformed records
/// against the budget instead of failing on the first one.
struct DocStream {
    inner: CorpusReader,
    default_lang: String,
    max_errors: u64,
    record_errors: u64,
    over_budget: bool,
    fatal: Option<corpus_forge::Error>,
}

impl DocStream {
    fn open(path: &Path, format: CorpusFormat, default_lang: &str, max_errors: u64) -> Result<Self> {
        Ok(DocStream {
            inner: read_corpus(path, format)?,
            default_lang: default_lang.to_string(),
            max_errors,
            record_errors: 0,
            over_budget: false,
            fatal: None,
        })
    }

    /// Propagate the stream's terminal condition after iteration ends.
    fn close(self) -> Result<u64> {
        if let Some(err) = self.fatal {
            return Err(err.into());
        }
        if self.over_budget {
            bail!(RecordBudgetExceeded {
                seen: self.record_errors,
                max: self.max_errors,
            });
        }
        Ok(self.record_errors)
    }
}

impl Iterator for DocStream {
    type Item = CleanDocument;

    fn next(&mut self) -> Option<CleanDocument> {
        loop {
            match self.inner.next()? {
                Ok(record) => {
                    let doc = record
                        .into_clean(Some(&self.default_lang))
                        .expect("default language always present");
                    return Some(doc);
                }
                Err(e) if e.is_record_error() => {
                    self.record_errors += 1;
                    eprintln!("warning: skipping record: {e}");
                    if self.record_errors > self.max_errors {
                        self.over_budget = true;
                        return None;
                    }
                }
                Err(e) => {
                    self.fatal = Some(e);
                    return None;
                }
            }
        }
    }
}

// ==== shared plumbing ====

struct Ctx {
    config: PipelineConfig,
    seed: u64,
    max_record_errors: u64,
    report: RunReport,
}

fn required_path(flag: Option<PathBuf>, fallback: Option<&Path>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.map(Path::to_path_buf))
        .with_context(|| format!("no {what} given (flag or config)"))
}

fn corpus_format(flag: Option<&str>, config: &PipelineConfig) -> Result<CorpusFormat> {
    let name = flag
        .or(config.io.format.as_deref())
        .unwrap_or("jsonl");
    Ok(CorpusFormat::parse(name)?)
}

fn open_stream(ctx: &Ctx, corpus: &CorpusInput) -> Result<DocStream> {
    let input = required_path(
        corpus.input.clone(),
        ctx.config.io.input.as_deref(),
        "input corpus",
    )?;
    let format = corpus_format(corpus.format.as_deref(), &ctx.config)?;
    DocStream::open(&input, format, &corpus.default_lang, ctx.max_record_errors)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Labeled (lang, text) samples for identifier training and evaluation,
/// skipping documents with unknown language codes.
fn labeled_samples(stream: &mut DocStream) -> (Vec<(String, String)>, u64) {
    let mut samples = Vec::new();
    let mut skipped = 0u64;
    for doc in stream.by_ref() {
        if LanguageTable::is_known(&doc.lang) {
            samples.push((doc.lang.clone(), doc.text()));
        } else {
            skipped += 1;
        }
    }
    (samples, skipped)
}

// ==== commands ====

fn run_clean(ctx: &mut Ctx, args: CleanArgs) -> Result<()> {
    let cfg = ctx.config.clean.clone();
    let stage_names = args.stages.unwrap_or(cfg.stages);
    let stages = stage_names
        .iter()
        .map(|s| Stage::parse(s))
        .collect::<corpus_forge::Result<Vec<Stage>>>()?;

    // The identifier model must outlive the pipeline that borrows it.
    let lid_path = args.lid_model.or(cfg.lid_model);
    let lid_model: Option<LidModel> = match &lid_path {
        Some(path) if stages.contains(&Stage::Lid) => {
            let mut model = LidModel::load(path)?;
            if let Some(margin) = args.lid_margin.or(cfg.lid_margin) {
                model.margin = margin;
            }
            Some(model)
        }
        _ => None,
    };

    let mut pipeline = Pipeline::new(stages);
    pipeline.threshold = args.threshold.unwrap_or(cfg.script_threshold);
    pipeline.min_words = args.min_words.unwrap_or(cfg.min_words);
    pipeline.offensive_doc_level = args.offensive_doc_level || cfg.offensive_doc_level;
    if let Some(model) = &lid_model {
        pipeline.lid = Some(model.scorer());
    }

    let mut lists: BTreeMap<String, PathBuf> = cfg.blacklists;
    if let Some(dir) = args.blacklist_dir.or(cfg.blacklist_dir) {
        for entry in std::fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .context("unreadable blacklist file name")?;
            LanguageTable::require(stem)
                .with_context(|| format!("blacklist file {} names no known language", path.display()))?;
            lists.entry(stem.to_string()).or_insert(path);
        }
    }
    for spec in &args.blacklist {
        let (lang, path) = spec
            .split_once('=')
            .with_context(|| format!("expected lang=path, got {spec:?}"))?;
        lists.insert(lang.to_string(), PathBuf::from(path));
    }
    for (lang, path) in &lists {
        let list = Blacklist::load(path, lang)?;
        pipeline.blacklists.insert(lang.clone(), list.compile()?);
    }

    // Reject bad configurations before the writer truncates an existing
    // output file.
    pipeline.validate()?;

    let output = required_path(args.output, ctx.config.io.output.as_deref(), "output path")?;
    let mut stream = open_stream(ctx, &args.corpus)?;
    let mut writer = CleanWriter::create(&output)?;
    let filter_report = pipeline.run(&mut stream, |doc| writer.write_doc(&doc))?;
    let record_errors = stream.close()?;
    writer.finish()?;

    ctx.report
        .param("output", output.display())
        .counter("docs_in", filter_report.docs_in)
        .counter("docs_out", filter_report.docs_out)
        .counter("tokens_before", filter_report.tokens_before)
        .counter("tokens_after", filter_report.tokens_after)
        .counter("record_errors", record_errors);
    print_json(&filter_report)
}

fn single_stage_clean(ctx: &mut Ctx, args: SingleStageArgs, stage: Stage) -> Result<()> {
    run_clean(
        ctx,
        CleanArgs {
            corpus: args.corpus,
            output: args.output,
            stages: Some(vec![stage.name().to_string()]),
            threshold: None,
            min_words: None,
            lid_model: None,
            lid_margin: None,
            blacklist: Vec::new(),
            blacklist_dir: None,
            offensive_doc_level: false,
        },
    )
}

fn run_lid_filter(ctx: &mut Ctx, args: LidFilterArgs) -> Result<()> {
    run_clean(
        ctx,
        CleanArgs {
            corpus: args.corpus,
            output: args.output,
            stages: Some(vec![Stage::Lid.name().to_string()]),
            threshold: None,
            min_words: None,
            lid_model: args.lid_model,
            lid_margin: args.lid_margin,
            blacklist: Vec::new(),
            blacklist_dir: None,
            offensive_doc_level: false,
        },
    )
}

fn run_stats(ctx: &mut Ctx, args: StatsArgs) -> Result<()> {
    let mut stream = open_stream(ctx, &args.corpus)?;
    let mut stats = CorpusStats::default();
    for doc in stream.by_ref() {
        stats.add_doc(&doc);
    }
    let record_errors = stream.close()?;
    ctx.report
        .counter("documents", stats.total.documents)
        .counter("tokens", stats.total.tokens)
        .counter("record_errors", record_errors);
    print_json(&stats)
}

fn run_queries(ctx: &mut Ctx, args: QueriesArgs) -> Result<()> {
    let mut stream = open_stream(ctx, &args.corpus)?;
    let docs: Vec<CleanDocument> = stream.by_ref().collect();
    stream.close()?;
    let queries = generate_search_queries(&docs, &args.lang, args.count)?;
    ctx.report.counter("queries", queries.queries.len() as u64);
    print_json(&queries)
}

fn run_lid_train(ctx: &mut Ctx, args: LidTrainArgs) -> Result<()> {
    let mut stream = open_stream(ctx, &args.corpus)?;
    let (samples, skipped) = labeled_samples(&mut stream);
    stream.close()?;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} documents with unknown language");
        ctx.report.warn(format!("{skipped} documents had unknown language"));
    }
    let mut model = train_lid(samples, args.order, args.smoothing)?;
    model.min_letters = args.min_letters;
    model.margin = args.margin;
    model.save(&args.output)?;
    ctx.report
        .param("output", args.output.display())
        .counter("languages", model.langs.len() as u64);
    print_json(&serde_json::json!({
        "languages": model.langs.len(),
        "order": model.order,
        "model": args.output.display().to_string(),
    }))
}

fn run_lid_eval(ctx: &mut Ctx, args: LidEvalArgs) -> Result<()> {
    let model = LidModel::load(&args.model)?;
    let mut stream = open_stream(ctx, &args.corpus)?;
    let (samples, skipped) = labeled_samples(&mut stream);
    stream.close()?;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} documents with unknown language");
    }
    let report = evaluate_lid(&model, samples)?;
    let correct: u64 = report.per_lang.values().map(|a| a.correct).sum();
    let total: u64 = report.per_lang.values().map(|a| a.total).sum();
    ctx.report.counter("correct", correct).counter("total", total);
    print_json(&report)
}

fn run_to_deva(ctx: &mut Ctx, args: ToDevaArgs) -> Result<()> {
    let script = LanguageTable::require(&args.lang)?.script;
    let content = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut out = String::with_capacity(content.len());
    let mut combined = ConversionReport::default();
    for line in content.lines() {
        let (converted, report) = to_devanagari(line, script)?;
        out.push_str(&converted);
        out.push('\n');
        combined.converted += report.converted;
        combined.total_passed += report.total_passed;
        for (c, n) in report.passed_through {
            *combined.passed_through.entry(c).or_insert(0) += n;
        }
    }
    std::fs::write(&args.output, out)
        .with_context(|| format!("writing {}", args.output.display()))?;
    ctx.report
        .counter("converted", combined.converted)
        .counter("passed_through", combined.total_passed);
    print_json(&combined)
}

fn run_plan(ctx: &mut Ctx, args: PlanArgs) -> Result<()> {
    let mut stream = open_stream(ctx, &args.corpus)?;
    let mut stats = CorpusStats::default();
    for doc in stream.by_ref() {
        stats.add_doc(&doc);
    }
    let record_errors = stream.close()?;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (lang, s) in &stats.per_lang {
        if lang != OTHER_BUCKET {
            counts.insert(lang.clone(), s.tokens);
        }
    }
    if stats.other_documents() > 0 {
        eprintln!(
            "warning: {} documents with unknown language are excluded from the plan",
            stats.other_documents()
        );
    }
    let alpha = args.alpha.unwrap_or(ctx.config.sample.alpha);
    let plan = temperature_plan(&counts, alpha)?;
    ctx.report
        .param("alpha", alpha)
        .counter("languages", plan.per_lang.len() as u64)
        .counter("record_errors", record_errors);
    match &args.output {
        Some(path) => {
            plan.save(path)?;
            print_json(&serde_json::json!({
                "plan": path.display().to_string(),
                "languages": plan.per_lang.len(),
            }))
        }
        None => print_json(&plan),
    }
}

fn run_sample(ctx: &mut Ctx, args: SampleArgs) -> Result<()> {
    let plan = SamplingPlan::load(&args.plan)?;
    let mut stream = open_stream(ctx, &args.corpus)?;
    let mut corpus: BTreeMap<String, Vec<CleanDocument>> = BTreeMap::new();
    for doc in stream.by_ref() {
        corpus.entry(doc.lang.clone()).or_default().push(doc);
    }
    stream.close()?;
    let mc = MaterializeConfig {
        seed: ctx.seed,
        target_tokens: args.target_tokens.unwrap_or(ctx.config.sample.target_tokens),
        shards: args.shards.unwrap_or(ctx.config.sample.shards),
        prepend_lang_token: args.prepend_lang || ctx.config.sample.prepend_lang_token,
    };
    let report = materialize(&corpus, &plan, &mc, &args.out_dir)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
        ctx.report.warn(warning.clone());
    }
    ctx.report
        .param("seed", mc.seed)
        .counter("documents", report.total_documents)
        .counter("tokens", report.total_tokens);
    print_json(&report)
}

fn run_vocab_train(ctx: &mut Ctx, args: VocabTrainArgs) -> Result<()> {
    let mut lines: Vec<String> = Vec::new();
    for path in &args.input {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        lines.extend(content.lines().map(str::to_string));
    }
    let fraction = args.fraction.unwrap_or(ctx.config.vocab.fraction);
    let lines = sample_lines(lines, fraction, ctx.seed)?;
    let counts = word_counts(lines.iter().map(String::as_str));
    let trainer = TrainerConfig {
        vocab_size: args.size.unwrap_or(ctx.config.vocab.size),
        min_pair_freq: args.min_pair_freq.unwrap_or(ctx.config.vocab.min_pair_freq),
    };
    let model = train_wordpiece(&counts, &trainer)?;
    model.save(&args.output)?;
    ctx.report
        .param("output", args.output.display())
        .counter("pieces", model.len() as u64)
        .counter("training_lines", lines.len() as u64);
    print_json(&serde_json::json!({
        "pieces": model.len(),
        "training_lines": lines.len(),
        "vocab": args.output.display().to_string(),
    }))
}

fn run_tokenize(ctx: &mut Ctx, args: TokenizeArgs) -> Result<()> {
    let model = VocabModel::load(&args.vocab)?;
    let content = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let file = std::fs::File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    let mut out = std::io::BufWriter::new(file);
    let mut lines = 0u64;
    for line in content.lines() {
        let ids = tokenize(&model, line);
        let pieces = tokenize_to_pieces(&model, line);
        use std::io::Write;
        writeln!(
            out,
            "{}",
            serde_json::json!({ "ids": ids, "pieces": pieces })
        )?;
        lines += 1;
    }
    use std::io::Write;
    out.flush()?;
    ctx.report.counter("lines", lines);
    print_json(&serde_json::json!({ "lines": lines }))
}

fn run_fertility(ctx: &mut Ctx, args: FertilityArgs) -> Result<()> {
    let model = VocabModel::load(&args.vocab)?;
    let mut stream = open_stream(ctx, &args.corpus)?;
    let docs: Vec<(String, String)> = stream.by_ref().map(|d| {
        let text = d.text();
        (d.lang, text)
    }).collect();
    stream.close()?;
    let report = fertility(&model, docs.iter().map(|(l, t)| (l.as_str(), t.as_str())))?;
    for lang in &report.skipped_langs {
        eprintln!("warning: language {lang} has no words; skipped");
    }
    ctx.report
        .counter("words", report.overall.words)
        .counter("pieces", report.overall.pieces);
    print_json(&report)
}

fn run_mlm_build(ctx: &mut Ctx, args: MlmBuildArgs) -> Result<()> {
    let model = VocabModel::load(&args.vocab)?;
    let max_len = args.max_len.unwrap_or(ctx.config.pretrain.max_len);
    let mask_prob = args.mask_prob.unwrap_or(ctx.config.pretrain.mask_prob);
    let add_cls = args.add_cls || ctx.config.pretrain.add_cls;

    let content = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let docs = content.lines().map(|line| tokenize(&model, line));
    let cls = add_cls.then(|| model.cls_id());
    let sequences = pack_sequences(docs, max_len, cls)?;

    let builder = MlmBuilder::new(&model, mask_prob, ctx.seed)?;
    let examples: Vec<_> = sequences
        .iter()
        .enumerate()
        .map(|(i, seq)| builder.build(seq, i as u64))
        .collect();
    let written = write_examples(&args.output, &examples)?;
    let masked: u64 = examples
        .iter()
        .flat_map(|e| &e.labels)
        .filter(|&&l| l != corpus_forge::pretrain::IGNORE_LABEL)
        .count() as u64;
    let tokens: u64 = examples.iter().map(|e| e.len() as u64).sum();
    ctx.report
        .param("seed", ctx.seed)
        .counter("sequences", written)
        .counter("tokens", tokens)
        .counter("masked_positions", masked);
    print_json(&serde_json::json!({
        "sequences": written,
        "tokens": tokens,
        "masked_positions": masked,
    }))
}

#[derive(serde::Deserialize)]
struct PairRecord {
    source: String,
    target: String,
}

fn run_tlm_build(ctx: &mut Ctx, args: TlmBuildArgs) -> Result<()> {
    let model = VocabModel::load(&args.vocab)?;
    let max_len = args.max_len.unwrap_or(ctx.config.pretrain.max_len);
    let mask_prob = args.mask_prob.unwrap_or(ctx.config.pretrain.mask_prob);
    let builder = MlmBuilder::new(&model, mask_prob, ctx.seed)?;

    let content = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut examples = Vec::new();
    let mut record_errors = 0u64;
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let build = serde_json::from_str::<PairRecord>(line)
            .map_err(|e| corpus_forge::Error::record(&args.input, i as u64 + 1, e.to_string()))
            .and_then(|pair| {
                let src = tokenize(&model, &pair.source);
                let tgt = tokenize(&model, &pair.target);
                builder
                    .build_pair(&src, &tgt, max_len, examples.len() as u64)
                    .map_err(|e| {
                        corpus_forge::Error::record(&args.input, i as u64 + 1, e.to_string())
                    })
            });
        match build {
            Ok(example) => examples.push(example),
            Err(e) => {
                record_errors += 1;
                eprintln!("warning: skipping record: {e}");
                if record_errors > ctx.max_record_errors {
                    bail!(RecordBudgetExceeded {
                        seen: record_errors,
                        max: ctx.max_record_errors,
                    });
                }
            }
        }
    }
    let written = write_examples(&args.output, &examples)?;
    ctx.report
        .param("seed", ctx.seed)
        .counter("pairs", written)
        .counter("record_errors", record_errors);
    print_json(&serde_json::json!({ "pairs": written }))
}

fn load_matrix(path: &Path, format: &str) -> Result<metrics::Matrix> {
    match format {
        "binary" => Ok(metrics::Matrix::read_binary(path)?),
        "jsonl" => Ok(metrics::Matrix::read_jsonl(path)?),
        other => bail!("unknown embedding format {other:?} (binary, jsonl)"),
    }
}

fn run_score(ctx: &mut Ctx, command: ScoreCommand) -> Result<()> {
    match command {
        ScoreCommand::Accuracy(args) => {
            let records = metrics::read_label_records(&args.pred)?;
            let report = metrics::accuracy(&records)?;
            ctx.report.counter("records", report.total);
            print_json(&report)
        }
        ScoreCommand::Chunk(args) => {
            let records = metrics::read_seq_records(&args.pred)?;
            let report = metrics::chunk_f1(&records)?;
            ctx.report
                .counter("records", report.scored_records)
                .counter("skipped_records", report.skipped_records);
            if report.skipped_records > 0 {
                eprintln!("warning: skipped {} malformed records", report.skipped_records);
            }
            print_json(&report)
        }
        ScoreCommand::Span(args) => {
            let records = metrics::read_span_records(&args.pred)?;
            let report = metrics::span_f1(&records, !args.no_normalize)?;
            ctx.report.counter("records", report.records);
            print_json(&report)
        }
        ScoreCommand::Retrieval(args) => {
            let source = load_matrix(&args.source, &args.format)?;
            let target = load_matrix(&args.target, &args.format)?;
            let report = metrics::retrieval_accuracy(&source, &target)?;
            if report.zero_norm_rows > 0 {
                eprintln!("warning: {} zero-norm embedding rows", report.zero_norm_rows);
            }
            ctx.report.counter("pairs", report.pairs);
            print_json(&report)
        }
    }
}

fn run_aggregate(ctx: &mut Ctx, args: AggregateArgs) -> Result<()> {
    let content = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let tasks: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_str(&content)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let report = metrics::aggregate(tasks)?;
    print!("{}", metrics::render_table(&report));
    if let Some(path) = &args.output {
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    ctx.report
        .counter("tasks", report.tasks.len() as u64)
        .counter("languages", report.lang_means.len() as u64);
    Ok(())
}

// ==== entry point ====

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Clean(_) => "clean",
        Command::Dedup(_) => "dedup",
        Command::LidFilter(_) => "lid-filter",
        Command::Stats(_) => "stats",
        Command::Queries(_) => "queries",
        Command::LidTrain(_) => "lid-train",
        Command::LidEval(_) => "lid-eval",
        Command::ToDeva(_) => "to-deva",
        Command::Plan(_) => "plan",
        Command::Sample(_) => "sample",
        Command::VocabTrain(_) => "vocab-train",
        Command::Tokenize(_) => "tokenize",
        Command::Fertility(_) => "fertility",
        Command::MlmBuild(_) => "mlm-build",
        Command::TlmBuild(_) => "tlm-build",
        Command::Score(_) => "score",
        Command::Aggregate(_) => "aggregate",
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("building the worker pool")?;
    }
    let config = PipelineConfig::load_optional(cli.config.as_deref())?;
    let started = Instant::now();
    let mut ctx = Ctx {
        seed: cli.seed.unwrap_or(config.seed),
        config,
        max_record_errors: cli.max_record_errors,
        report: RunReport::new(command_name(&cli.command)),
    };

    let result = match cli.command {
        Command::Clean(args) => run_clean(&mut ctx, args),
        Command::Dedup(args) => single_stage_clean(&mut ctx, args, Stage::Dedup),
        Command::LidFilter(args) => run_lid_filter(&mut ctx, args),
        Command::Stats(args) => run_stats(&mut ctx, args),
        Command::Queries(args) => run_queries(&mut ctx, args),
        Command::LidTrain(args) => run_lid_train(&mut ctx, args),
        Command::LidEval(args) => run_lid_eval(&mut ctx, args),
        Command::ToDeva(args) => run_to_deva(&mut ctx, args),
        Command::Plan(args) => run_plan(&mut ctx, args),
        Command::Sample(args) => run_sample(&mut ctx, args),
        Command::VocabTrain(args) => run_vocab_train(&mut ctx, args),
        Command::Tokenize(args) => run_tokenize(&mut ctx, args),
        Command::Fertility(args) => run_fertility(&mut ctx, args),
        Command::MlmBuild(args) => run_mlm_build(&mut ctx, args),
        Command::TlmBuild(args) => run_tlm_build(&mut ctx, args),
        Command::Score(command) => run_score(&mut ctx, command),
        Command::Aggregate(args) => run_aggregate(&mut ctx, args),
    };

    if let Some(path) = &cli.report {
        ctx.report.finish(started);
        ctx.report.save(path)?;
    }
    result
}

fn main() {
    // Usage errors exit 1 (help/version exit 0) so that exit code 2 always
    // means the malformed-record budget was exceeded.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<RecordBudgetExceeded>().is_some() {
                2
            } else {
                1
            };
            std::process::exit(code);
        }
    }
}
