//! Per-abstract extraction: sentences → units → attention → matched facts →
//! constraints → canonical triples, and a parallel driver over a corpus.

use std::sync::Mutex;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{sentence_attention, AttentionConfig, AttentionProvider, WordAttention};
use crate::constraints::{apply_constraints, AbstractCandidates, ThresholdPolicy};
use crate::corpus::PatentRecord;
use crate::kgstore::{KnowledgeGraph, Triple};
use crate::matcher::{match_sentence, CandidateFact, MatchConfig};
use crate::preprocess::{preprocess_sentence, split_sentences, ParseProvider, ProcessedSentence};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSentence {
    pub abstract_id: String,
    pub sentence_index: usize,
    pub reason: String,
}

/// Everything produced for one abstract.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbstractExtraction {
    pub sentences: Vec<ProcessedSentence>,
    /// Best fact per noun pair, before any constraint.
    pub candidates: Vec<CandidateFact>,
    /// Facts surviving the constraints.
    pub accepted: Vec<CandidateFact>,
    pub triples: Vec<Triple>,
    pub skipped: Vec<SkippedSentence>,
}

/// Bundles providers and configuration. Providers that do not allow
/// concurrent calls are serialized behind a lock.
pub struct Extractor<'a> {
    parser: &'a dyn ParseProvider,
    attention: &'a dyn AttentionProvider,
    pub match_config: MatchConfig,
    pub attention_config: AttentionConfig,
    pub policy: ThresholdPolicy,
    parse_lock: Mutex<()>,
    attention_lock: Mutex<()>,
}

fn guarded<T>(lock: &Mutex<()>, concurrent: bool, f: impl FnOnce() -> T) -> T {
    if concurrent {
        f()
    } else {
        let _g = lock.lock().unwrap_or_else(|e| e.into_inner());
        f()
    }
}

impl<'a> Extractor<'a> {
    pub fn new(parser: &'a dyn ParseProvider, attention: &'a dyn AttentionProvider) -> Self {
        Self {
            parser,
            attention,
            match_config: MatchConfig::default(),
            attention_config: AttentionConfig::default(),
            policy: ThresholdPolicy::default(),
            parse_lock: Mutex::new(()),
            attention_lock: Mutex::new(()),
        }
    }

    pub fn with_match_config(mut self, cfg: MatchConfig) -> Self {
        self.match_config = cfg;
        self
    }

    pub fn with_attention_config(mut self, cfg: AttentionConfig) -> Self {
        self.attention_config = cfg;
        self
    }

    pub fn with_policy(mut self, policy: ThresholdPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.match_config.validate()?;
        self.attention_config.validate(None)
    }

    fn sentence_facts(&self, sentence: &str, abstract_id: &str, index: usize) -> Result<(ProcessedSentence, Vec<CandidateFact>)> {
        let processed = guarded(&self.parse_lock, self.parser.is_concurrent(), || {
            preprocess_sentence(sentence, self.parser, abstract_id, index)
        })?;
        let attn: WordAttention = guarded(&self.attention_lock, self.attention.is_concurrent(), || {
            sentence_attention(&processed, &self.attention_config, self.attention)
        })?;
        let facts = match_sentence(&processed, &attn, &self.match_config)?;
        Ok((processed, facts))
    }

    /// Full extraction for one abstract. Sentence-level failures are
    /// recorded and skipped; anything else aborts the abstract.
    pub fn extract_detailed(&self, record: &PatentRecord) -> Result<AbstractExtraction> {
        let mut out = AbstractExtraction::default();
        if record.r#abstract.trim().is_empty() {
            return Ok(out);
        }
        for (i, sentence) in split_sentences(&record.r#abstract).iter().enumerate() {
            match self.sentence_facts(sentence, &record.patent_id, i) {
                Ok((processed, facts)) => {
                    out.sentences.push(processed);
                    out.candidates.extend(facts);
                }
                Err(e) if e.is_sentence_level() => {
                    warn!("{}: skipping sentence {i}: {e}", record.patent_id);
                    out.skipped.push(SkippedSentence {
                        abstract_id: record.patent_id.clone(),
                        sentence_index: i,
                        reason: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let kept = apply_constraints(
            AbstractCandidates {
                abstract_id: record.patent_id.clone(),
                facts: out.candidates.clone(),
            },
            self.policy,
        );
        out.triples = kept
            .facts
            .iter()
            .map(|f| Triple::from_fact(f, &record.patent_id))
            .collect::<Result<_>>()?;
        out.accepted = kept.facts;
        Ok(out)
    }

    pub fn extract(&self, record: &PatentRecord) -> Result<Vec<Triple>> {
        Ok(self.extract_detailed(record)?.triples)
    }

    /// Extracts every record on a pool of `jobs` threads. Output order
    /// follows the input order regardless of `jobs`.
    pub fn extract_corpus(&self, records: &[PatentRecord], jobs: usize) -> Result<CorpusExtraction> {
        if jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let results: Vec<Result<AbstractExtraction>> =
            pool.install(|| records.par_iter().map(|r| self.extract_detailed(r)).collect());
        let mut out = CorpusExtraction::default();
        for r in results {
            let r = r?;
            out.triples.extend(r.triples);
            out.skipped.extend(r.skipped);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusExtraction {
    pub triples: Vec<Triple>,
    pub skipped: Vec<SkippedSentence>,
}

impl CorpusExtraction {
    pub fn into_graph(self) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(self.triples)
    }
}

/// One-shot form of [`Extractor::extract`].
pub fn extract_from_abstract(
    record: &PatentRecord,
    parser: &dyn ParseProvider,
    attention: &dyn AttentionProvider,
    match_cfg: &MatchConfig,
    attn_cfg: &AttentionConfig,
    policy: ThresholdPolicy,
) -> Result<Vec<Triple>> {
    let ex = Extractor::new(parser, attention)
        .with_match_config(match_cfg.clone())
        .with_attention_config(attn_cfg.clone())
        .with_policy(policy);
    ex.validate()?;
    ex.extract(record)
}
