//! Command-line front end. Data goes to files or standard output, logs to
//! standard error. Exit codes: 0 success, 1 runtime failure, 2 usage error
//! (including missing input files).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::attention::{dump_attention, sentence_attention, AttentionConfig, AttentionProvider, FixtureAttention};
use crate::constraints::ThresholdPolicy;
use crate::corpus::{filter_corpus, parse_corpus, write_jsonl, CorpusFilter, CorpusFormat};
use crate::eval::{self, MatchMode, TermBenchmark};
use crate::kgstore::{KnowledgeGraph, Triple};
use crate::matcher::MatchConfig;
use crate::pipeline::Extractor;
use crate::preprocess::{preprocess_sentence, split_sentences, FixtureParser, ParseProvider, RuleParser};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Serializable run configuration; `--config` loads one from JSON.
/// Precedence: command-line flags, then the file, then these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model_id: String,
    pub layer: usize,
    pub beam_size: usize,
    pub threshold_mode: ThresholdPolicy,
    pub jobs: usize,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub kg: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub fixture_attn: Option<PathBuf>,
    pub fixture_parse: Option<PathBuf>,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let attn = AttentionConfig::default();
        Self {
            model_id: attn.model_id,
            layer: attn.layer,
            beam_size: MatchConfig::default().beam_size,
            threshold_mode: ThresholdPolicy::Median,
            jobs: 1,
            corpus: None,
            out: None,
            kg: None,
            benchmark: None,
            fixture_attn: None,
            fixture_parse: None,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        if self.beam_size == 0 {
            return Err(CliError::Usage("--beam-size must be at least 1".into()));
        }
        if self.layer == 0 {
            return Err(CliError::Usage("--layer is 1-based".into()));
        }
        Ok(())
    }

    pub fn attention_config(&self) -> AttentionConfig {
        AttentionConfig {
            layer: self.layer,
            model_id: self.model_id.clone(),
            ..AttentionConfig::default()
        }
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig::default().with_beam_size(self.beam_size)
    }
}

#[derive(Debug, Parser)]
#[command(name = "patent-kg", version, about = "Patent knowledge-graph extraction from encoder attention")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Encoder directory or id resolved under $PATENT_KG_CACHE
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// 1-based encoder layer whose head-mean attention is used
    #[arg(long, global = true)]
    pub layer: Option<usize>,
    #[arg(long, global = true)]
    pub beam_size: Option<usize>,
    /// Worker threads
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub kg: Option<PathBuf>,
    #[arg(long, global = true)]
    pub benchmark: Option<PathBuf>,
    /// Recorded attention matrices instead of a live encoder
    #[arg(long, global = true)]
    pub fixture_attn: Option<PathBuf>,
    /// Recorded parses instead of the built-in rule parser
    #[arg(long, global = true)]
    pub fixture_parse: Option<PathBuf>,
    /// Fail on the first malformed corpus record
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and filter a corpus, writing the kept records as JSONL
    Ingest {
        /// jsonl or csv; defaults to the file extension
        #[arg(long)]
        format: Option<CorpusFormat>,
        #[arg(long)]
        cpc_prefix: Option<String>,
        #[arg(long)]
        year_min: Option<i32>,
        #[arg(long)]
        year_max: Option<i32>,
        /// Keep every family member, not only the earliest filing
        #[arg(long)]
        all_family_members: bool,
    },
    /// Extract triples from every abstract of a corpus
    Extract {
        #[arg(long)]
        format: Option<CorpusFormat>,
    },
    /// Build a graph from triple files and save it to --kg
    BuildKg {
        /// Triple JSONL inputs
        #[arg(long = "triples", required = true)]
        triples: Vec<PathBuf>,
    },
    /// Print triples within --depth hops of an entity
    Query {
        entity: String,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Entity recall against a term benchmark
    EvalEntities {
        /// Entity list (one per line) instead of --kg
        #[arg(long)]
        entities: Option<PathBuf>,
        #[command(flatten)]
        output: EvalOutput,
    },
    /// Relation recall against a relation benchmark
    EvalRelations {
        /// Relation list (one per line) instead of --kg
        #[arg(long)]
        relations: Option<PathBuf>,
        #[command(flatten)]
        output: EvalOutput,
    },
    /// Print the word-level attention matrix of each sentence as TSV
    DumpAttention {
        /// Text to analyse; may hold several sentences
        #[arg(long)]
        sentence: String,
    },
}

#[derive(Debug, Args)]
pub struct EvalOutput {
    /// Emit JSON instead of a text table
    #[arg(long)]
    pub json: bool,
    /// Also match after stripping plural endings
    #[arg(long)]
    pub lemma: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::File { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn merge_config(global: &GlobalArgs) -> CliResult<RunConfig> {
    let mut cfg = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &global.model {
        cfg.model_id = v.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = &global.$field {
                cfg.$field = v.clone();
            }
        )*};
    }
    take!(layer, beam_size, jobs);
    macro_rules! take_path {
        ($($field:ident),*) => {$(
            if global.$field.is_some() {
                cfg.$field = global.$field.clone();
            }
        )*};
    }
    take_path!(corpus, out, kg, benchmark, fixture_attn, fixture_parse);
    cfg.strict |= global.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    let p = path.as_deref().ok_or_else(|| CliError::Usage(format!("{flag} is required")))?;
    if !p.exists() {
        return Err(CliError::Usage(format!("{}: no such file", p.display())));
    }
    Ok(p)
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(CliError::Usage(format!("{}: no such file", path.display())))
        }
        Err(e) => Err(Error::file(path, e).into()),
    }
}

/// Writes to `--out` when given, else to `stdout`.
fn with_sink(out: &Option<PathBuf>, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> CliResult) -> CliResult {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::file(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

pub fn parse_provider(cfg: &RunConfig) -> CliResult<Box<dyn ParseProvider>> {
    Ok(match &cfg.fixture_parse {
        Some(p) => {
            require(&cfg.fixture_parse, "--fixture-parse")?;
            Box::new(FixtureParser::from_path(p)?)
        }
        None => Box::new(RuleParser::new()),
    })
}

pub fn attention_provider(cfg: &RunConfig) -> CliResult<Box<dyn AttentionProvider>> {
    if let Some(p) = &cfg.fixture_attn {
        require(&cfg.fixture_attn, "--fixture-attn")?;
        return Ok(Box::new(FixtureAttention::from_path(p)?));
    }
    live_encoder(cfg)
}

#[cfg(feature = "encoder")]
fn live_encoder(cfg: &RunConfig) -> CliResult<Box<dyn AttentionProvider>> {
    let dir = crate::attention::BertAttention::resolve_model_dir(&cfg.model_id);
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "model directory {} not found; pass --model, set PATENT_KG_CACHE, or use --fixture-attn",
            dir.display()
        )));
    }
    let bert = crate::attention::BertAttention::load(&dir)?;
    cfg.attention_config().validate(Some(bert.config().num_hidden_layers))?;
    Ok(Box::new(bert))
}

#[cfg(not(feature = "encoder"))]
fn live_encoder(_cfg: &RunConfig) -> CliResult<Box<dyn AttentionProvider>> {
    Err(CliError::Usage(
        "built without the `encoder` feature; use --fixture-attn".into(),
    ))
}

fn read_corpus(cfg: &RunConfig, format: Option<CorpusFormat>) -> CliResult<Vec<crate::corpus::PatentRecord>> {
    let path = require(&cfg.corpus, "--corpus")?;
    let format = format.unwrap_or_else(|| CorpusFormat::from_path(path));
    let parsed = parse_corpus(open(path)?, format, cfg.strict)?;
    for w in &parsed.warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.message);
    }
    for e in &parsed.errors {
        log::error!("{}: skipping record: {e}", path.display());
    }
    Ok(parsed.records)
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn load_benchmark(cfg: &RunConfig, bundled: &str) -> CliResult<TermBenchmark> {
    match &cfg.benchmark {
        Some(p) => {
            require(&cfg.benchmark, "--benchmark")?;
            let text = std::fs::read_to_string(p).map_err(|e| Error::file(p, e))?;
            Ok(eval::load_benchmark(&text)?)
        }
        None => Ok(eval::load_benchmark(bundled)?),
    }
}

fn cmd_ingest(
    cfg: &RunConfig,
    stdout: &mut dyn Write,
    format: Option<CorpusFormat>,
    filter: CorpusFilter,
) -> CliResult {
    filter.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let records = read_corpus(cfg, format)?;
    let kept = filter_corpus(&records, &filter);
    let dropped = records.len() - kept.len();
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::file(path, e))?;
            write_jsonl(&kept, BufWriter::new(file))?;
            writeln!(stdout, "kept {} dropped {dropped}", kept.len())?;
        }
        None => {
            write_jsonl(&kept, &mut *stdout)?;
            eprintln!("kept {} dropped {dropped}", kept.len());
        }
    }
    Ok(())
}

fn write_triples(triples: &[Triple], w: &mut dyn Write) -> CliResult {
    for t in triples {
        serde_json::to_writer(&mut *w, t).map_err(Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn cmd_extract(cfg: &RunConfig, stdout: &mut dyn Write, format: Option<CorpusFormat>) -> CliResult {
    let records = read_corpus(cfg, format)?;
    let parser = parse_provider(cfg)?;
    let attention = attention_provider(cfg)?;
    let extractor = Extractor::new(&*parser, &*attention)
        .with_match_config(cfg.match_config())
        .with_attention_config(cfg.attention_config())
        .with_policy(cfg.threshold_mode);
    extractor.validate()?;
    let result = extractor.extract_corpus(&records, cfg.jobs)?;
    info!(
        "{} abstracts, {} triples, {} sentences skipped",
        records.len(),
        result.triples.len(),
        result.skipped.len()
    );
    with_sink(&cfg.out, stdout, |w| write_triples(&result.triples, w))
}

fn cmd_build_kg(cfg: &RunConfig, stdout: &mut dyn Write, inputs: &[PathBuf]) -> CliResult {
    let kg_path = cfg
        .kg
        .as_deref()
        .ok_or_else(|| CliError::Usage("--kg is required".into()))?;
    let mut kg = KnowledgeGraph::new();
    for path in inputs {
        let part = KnowledgeGraph::load(open(path)?).map_err(|e| match e {
            Error::Record { line, message } => Error::Record {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        kg = kg.merge(part);
    }
    kg.save_to_path(kg_path)?;
    writeln!(stdout, "{}", serde_json::to_string(&kg.stats()).map_err(Error::from)?)?;
    Ok(())
}

fn load_kg(cfg: &RunConfig) -> CliResult<KnowledgeGraph> {
    let path = require(&cfg.kg, "--kg")?;
    Ok(KnowledgeGraph::load(open(path)?)?)
}

fn cmd_query(cfg: &RunConfig, stdout: &mut dyn Write, entity: &str, depth: usize) -> CliResult {
    if depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let kg = load_kg(cfg)?;
    let sub = kg.query_neighbors(entity, depth);
    for t in sub.sorted_triples() {
        writeln!(
            stdout,
            "{}\t{}\t{}\t{}\t{:.4}",
            t.head, t.relation, t.tail, t.patent_id, t.score
        )?;
    }
    Ok(())
}

fn print_eval(stdout: &mut dyn Write, result: &eval::EvalResult, output: &EvalOutput) -> CliResult {
    if output.json {
        writeln!(stdout, "{}", result.to_json())?;
    } else {
        write!(stdout, "{}", result.to_table())?;
    }
    Ok(())
}

fn mode(output: &EvalOutput) -> MatchMode {
    if output.lemma {
        MatchMode::Lemma
    } else {
        MatchMode::Exact
    }
}

fn cmd_eval(
    cfg: &RunConfig,
    stdout: &mut dyn Write,
    list: &Option<PathBuf>,
    output: &EvalOutput,
    relations: bool,
) -> CliResult {
    let bench = load_benchmark(
        cfg,
        if relations {
            eval::BUNDLED_RELATIONS
        } else {
            eval::BUNDLED_TERMS
        },
    )?;
    let items: Vec<String> = match list {
        Some(p) => {
            require(list, "list")?;
            read_lines(p)?
        }
        None => {
            let kg = load_kg(cfg)?;
            if relations {
                kg.relation_stats().keys().cloned().collect()
            } else {
                kg.entities().keys().cloned().collect()
            }
        }
    };
    let result = eval::recall_with_mode(items.iter().map(String::as_str), &bench, mode(output));
    print_eval(stdout, &result, output)
}

fn cmd_dump_attention(cfg: &RunConfig, stdout: &mut dyn Write, text: &str) -> CliResult {
    let parser = parse_provider(cfg)?;
    let attention = attention_provider(cfg)?;
    let attn_cfg = cfg.attention_config();
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return Err(CliError::Usage("--sentence is empty".into()));
    }
    with_sink(&cfg.out, stdout, |w| {
        for (i, s) in sentences.iter().enumerate() {
            let processed = preprocess_sentence(s, &*parser, "cli", i)?;
            let attn = sentence_attention(&processed, &attn_cfg, &*attention)?;
            if i > 0 {
                writeln!(w)?;
            }
            dump_attention(&attn, &mut *w)?;
        }
        Ok(())
    })
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult {
    let cfg = merge_config(&cli.global)?;
    match &cli.command {
        Command::Ingest {
            format,
            cpc_prefix,
            year_min,
            year_max,
            all_family_members,
        } => {
            let mut filter = CorpusFilter::default();
            if let Some(p) = cpc_prefix {
                filter.cpc_prefix = p.clone();
            }
            if let Some(y) = year_min {
                filter.year_min = *y;
            }
            if let Some(y) = year_max {
                filter.year_max = *y;
            }
            filter.require_earliest_in_family = !all_family_members;
            cmd_ingest(&cfg, stdout, *format, filter)
        }
        Command::Extract { format } => cmd_extract(&cfg, stdout, *format),
        Command::BuildKg { triples } => cmd_build_kg(&cfg, stdout, triples),
        Command::Query { entity, depth } => cmd_query(&cfg, stdout, entity, *depth),
        Command::EvalEntities { entities, output } => cmd_eval(&cfg, stdout, entities, output, false),
        Command::EvalRelations { relations, output } => cmd_eval(&cfg, stdout, relations, output, true),
        Command::DumpAttention { sentence } => cmd_dump_attention(&cfg, stdout, sentence),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                e.print()
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let outcome = dispatch(cli, stdout).and_then(|()| stdout.flush().map_err(CliError::from));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
