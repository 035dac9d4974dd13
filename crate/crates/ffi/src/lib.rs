//! C ABI over the patent-kg extractor and knowledge graph.
//!
//! Handles are opaque; every fallible call returns a [`PkgStatus`] and
//! stores a message retrievable with [`pkg_last_error`] on the calling
//! thread. Strings handed out by the library are freed with
//! [`pkg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use patent_kg::attention::{AttentionConfig, AttentionProvider};
use patent_kg::cli::{attention_provider, parse_provider, CliError, RunConfig};
use patent_kg::constraints::ThresholdPolicy;
use patent_kg::corpus::PatentRecord;
use patent_kg::eval::{bundled_terms, entity_recall, load_benchmark, MatchMode};
use patent_kg::kgstore::KnowledgeGraph;
use patent_kg::matcher::MatchConfig;
use patent_kg::pipeline::Extractor;
use patent_kg::preprocess::ParseProvider;
use patent_kg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Model = 6,
    Panic = 7,
}

/// Knowledge graph handle.
pub struct PkgGraph {
    inner: KnowledgeGraph,
}

/// Extraction pipeline handle owning its parse and attention providers.
pub struct PkgExtractor {
    parser: Box<dyn ParseProvider>,
    attention: Box<dyn AttentionProvider>,
    match_config: MatchConfig,
    attention_config: AttentionConfig,
    policy: ThresholdPolicy,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PkgStats {
    pub n_patents: usize,
    pub n_entities: usize,
    pub n_edges: usize,
    pub n_phrasal_verbs: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PkgStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PkgStatus {
    match e {
        Error::File { .. } | Error::Io(_) => PkgStatus::Io,
        Error::Model(_) => PkgStatus::Model,
        Error::Config(_) | Error::EmptyCanonical | Error::InvalidFilter(_) => PkgStatus::InvalidArgument,
        _ => PkgStatus::Parse,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        match e {
            CliError::Usage(m) => Failure(PkgStatus::InvalidArgument, m),
            CliError::Runtime(e) => e.into(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(PkgStatus::Parse, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> PkgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PkgStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside patent-kg".into());
            PkgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(PkgStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PkgStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(PkgStatus::NullPointer, format!("{name} is null")))
}

unsafe fn mut_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure(PkgStatus::NullPointer, format!("{name} is null")))
}

fn to_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(PkgStatus::Parse, "output contains a NUL byte".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pkg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pkg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pkg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn pkg_graph_new() -> *mut PkgGraph {
    Box::into_raw(Box::new(PkgGraph {
        inner: KnowledgeGraph::new(),
    }))
}

/// # Safety
/// `graph` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_free(graph: *mut PkgGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Loads a triple JSONL file into a new graph stored in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_load(path: *const c_char, out: *mut *mut PkgGraph) -> PkgStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = KnowledgeGraph::load_from_path(path)?;
        *out = Box::into_raw(Box::new(PkgGraph { inner }));
        Ok(())
    })
}

/// Writes the graph as triple JSONL plus its stats header.
///
/// # Safety
/// `graph` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_save(graph: *const PkgGraph, path: *const c_char) -> PkgStatus {
    guard(|| {
        let graph = ref_arg(graph, "graph")?;
        graph.inner.save_to_path(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Adds triples given as JSONL text.
///
/// # Safety
/// `graph` must be a live handle; `jsonl` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_add_triples(graph: *mut PkgGraph, jsonl: *const c_char) -> PkgStatus {
    guard(|| {
        let graph = mut_arg(graph, "graph")?;
        let extra = KnowledgeGraph::load(str_arg(jsonl, "jsonl")?.as_bytes())?;
        graph.inner.add_triples(extra.triples().iter().cloned());
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_stats(graph: *const PkgGraph, out: *mut PkgStats) -> PkgStatus {
    guard(|| {
        let s = ref_arg(graph, "graph")?.inner.stats();
        *mut_arg(out, "out")? = PkgStats {
            n_patents: s.n_patents,
            n_entities: s.n_entities,
            n_edges: s.n_edges,
            n_phrasal_verbs: s.n_phrasal_verbs,
        };
        Ok(())
    })
}

/// Triples within `depth` hops of `entity`, as JSONL in `*out`. Free the
/// result with [`pkg_string_free`].
///
/// # Safety
/// `graph` must be a live handle; `entity` a NUL-terminated string; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_query(
    graph: *const PkgGraph,
    entity: *const c_char,
    depth: usize,
    out: *mut *mut c_char,
) -> PkgStatus {
    guard(|| {
        let graph = ref_arg(graph, "graph")?;
        let out = mut_arg(out, "out")?;
        let sub = graph.inner.query_neighbors(str_arg(entity, "entity")?, depth);
        let mut buf = Vec::new();
        sub.save(&mut buf)?;
        *out = to_c_string(String::from_utf8(buf).expect("JSON is UTF-8"))?;
        Ok(())
    })
}

/// Entity recall of the graph against a benchmark text, or the bundled
/// mechanical term list when `benchmark` is NULL.
///
/// # Safety
/// `graph` must be a live handle; `benchmark` NULL or a NUL-terminated
/// string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pkg_graph_recall(graph: *const PkgGraph, benchmark: *const c_char, out: *mut f64) -> PkgStatus {
    guard(|| {
        let graph = ref_arg(graph, "graph")?;
        let out = mut_arg(out, "out")?;
        let bench = if benchmark.is_null() {
            bundled_terms()
        } else {
            load_benchmark(str_arg(benchmark, "benchmark")?)?
        };
        *out = entity_recall(&graph.inner, &bench, MatchMode::Exact).total.recall;
        Ok(())
    })
}

/// Builds an extractor from a JSON run configuration (the same keys as the
/// command-line config file); NULL uses the defaults.
///
/// # Safety
/// `config_json` must be NULL or a NUL-terminated string; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pkg_extractor_new(config_json: *const c_char, out: *mut *mut PkgExtractor) -> PkgStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let cfg: RunConfig = if config_json.is_null() {
            RunConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?)?
        };
        cfg.validate()?;
        let handle = PkgExtractor {
            parser: parse_provider(&cfg)?,
            attention: attention_provider(&cfg)?,
            match_config: cfg.match_config(),
            attention_config: cfg.attention_config(),
            policy: cfg.threshold_mode,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `extractor` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pkg_extractor_free(extractor: *mut PkgExtractor) {
    if !extractor.is_null() {
        drop(Box::from_raw(extractor));
    }
}

/// Extracts triples from one JSON patent record and adds them to `graph`.
/// `*n_added` (optional) receives the number of new triples.
///
/// # Safety
/// `extractor` and `graph` must be live handles; `record_json` a
/// NUL-terminated string; `n_added` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn pkg_extractor_extract(
    extractor: *const PkgExtractor,
    record_json: *const c_char,
    graph: *mut PkgGraph,
    n_added: *mut usize,
) -> PkgStatus {
    guard(|| {
        let ex = ref_arg(extractor, "extractor")?;
        let graph = mut_arg(graph, "graph")?;
        let record: PatentRecord = serde_json::from_str(str_arg(record_json, "record_json")?)?;
        let triples = Extractor::new(ex.parser.as_ref(), ex.attention.as_ref())
            .with_match_config(ex.match_config.clone())
            .with_attention_config(ex.attention_config.clone())
            .with_policy(ex.policy)
            .extract(&record)?;
        if let Some(n) = n_added.as_mut() {
            *n = triples.len();
        }
        graph.inner.add_triples(triples);
        Ok(())
    })
}
