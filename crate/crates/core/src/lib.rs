//! Unsupervised knowledge-graph extraction from patent abstracts.
//!
//! Abstracts are split into sentences, tokenized and merged into word
//! units (noun phrases, phrasal verbs, single words). A pretrained
//! bidirectional encoder supplies a token-to-token attention matrix which is
//! aggregated to word units; for every pair of noun units a backward beam
//! search picks the relation unit with the highest combined attention
//! `A[tail][rel] + A[rel][head]`. Per-abstract median thresholding and
//! head/tail uniqueness rules then select the facts that enter the graph.
//!
//! The stages map onto modules:
//!
//! - [`corpus`]: patent record ingestion and family deduplication
//! - [`preprocess`]: sentence splitting, tokenization, unit merging
//! - [`attention`]: attention providers and word-level aggregation
//! - [`matcher`]: candidate pairs and the backward beam search
//! - [`constraints`]: median threshold and relation resolution
//! - [`pipeline`]: per-abstract composition of the above
//! - [`kgstore`]: canonical entities, triple store, persistence
//! - [`eval`]: recall rate against benchmark term lists

pub mod attention;
pub mod cli;
pub mod constraints;
pub mod corpus;
mod error;
pub mod eval;
pub mod kgstore;
pub mod matcher;
pub mod pipeline;
pub mod preprocess;

pub use error::{Error, Result};
