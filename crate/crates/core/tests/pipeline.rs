mod common;

use std::collections::BTreeMap;

use common::*;
use patent_kg::attention::{AttentionConfig, FixtureAttention};
use patent_kg::constraints::{extract_from_abstract, ThresholdPolicy};
use patent_kg::corpus::PatentRecord;
use patent_kg::kgstore::KnowledgeGraph;
use patent_kg::matcher::MatchConfig;
use patent_kg::pipeline::Extractor;
use patent_kg::preprocess::{FixtureParser, RuleParser};

fn keys(kg: &KnowledgeGraph) -> Vec<(String, String, String)> {
    kg.sorted_triples()
        .iter()
        .map(|t| (t.head.clone(), t.relation.clone(), t.tail.clone()))
        .collect()
}

#[test]
fn hub_abstract_yields_two_triples() {
    let parser = FixtureParser::from_path(fixture("hub.parse.json")).unwrap();
    let attn = FixtureAttention::from_path(fixture("hub.attn.json")).unwrap();
    let record = &read_corpus("hub.corpus.jsonl")[0];
    let triples = extract_from_abstract(
        record,
        &parser,
        &attn,
        &MatchConfig::default(),
        &AttentionConfig::default(),
        ThresholdPolicy::Median,
    )
    .unwrap();
    let got: Vec<_> = triples
        .iter()
        .map(|t| (t.head.as_str(), t.relation.as_str(), t.tail.as_str()))
        .collect();
    assert_eq!(
        got,
        vec![
            ("bearingless hub assembly", "comprises", "rim"),
            ("rim", "to receive", "tube magnet")
        ]
    );
    assert_eq!(triples[0].head_surface, "a bearingless hub assembly");
    assert_eq!(triples[1].patent_id, "US-F35");
    let kg = KnowledgeGraph::from_triples(triples);
    assert_eq!((kg.stats().n_entities, kg.stats().n_edges), (3, 2));
}

#[test]
fn detailed_extraction_exposes_candidates() {
    let parser = FixtureParser::from_path(fixture("hub.parse.json")).unwrap();
    let attn = FixtureAttention::from_path(fixture("hub.attn.json")).unwrap();
    let record = &read_corpus("hub.corpus.jsonl")[0];
    let out = Extractor::new(&parser, &attn).extract_detailed(record).unwrap();
    let scores: Vec<f64> = out.candidates.iter().map(|f| f.score).collect();
    assert_eq!(scores.len(), 3);
    for (got, want) in scores.iter().zip([1.0776, 0.6760, 0.9499]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert_eq!(out.accepted.len(), 2);
    assert!(out.skipped.is_empty());
}

#[test]
fn empty_and_nounless_abstracts() {
    let rule = RuleParser::new();
    let attn = FixtureAttention::default();
    let ex = Extractor::new(&rule, &attn);
    let mut r: PatentRecord = read_corpus("hub.corpus.jsonl")[0].clone();
    r.r#abstract = "   ".into();
    assert!(ex.extract(&r).unwrap().is_empty());
    // no attention recorded: each sentence is skipped, not fatal
    r.r#abstract = "It works quickly. Then it stops.".into();
    let out = ex.extract_detailed(&r).unwrap();
    assert!(out.triples.is_empty());
    assert_eq!(out.skipped.len(), 2);
}

#[test]
fn over_length_sentence_is_skipped() {
    let (parses, attns) = record_fixtures(&read_corpus("hub.corpus.jsonl"), 1);
    let mut parser = FixtureParser::default();
    for p in parses {
        parser.insert(&p.sentence, p.parse);
    }
    let long = vec!["word"; 600].join(" ");
    let mut rule_parses = record_fixtures(
        &[PatentRecord {
            r#abstract: long.clone(),
            ..read_corpus("hub.corpus.jsonl")[0].clone()
        }],
        2,
    )
    .0;
    let p = rule_parses.pop().unwrap();
    parser.insert(&p.sentence, p.parse);
    let attn = FixtureAttention::from_entries(attns).unwrap();
    let mut record = read_corpus("hub.corpus.jsonl")[0].clone();
    record.r#abstract = format!("{long}; {}", record.r#abstract);
    let out = Extractor::new(&parser, &attn).extract_detailed(&record).unwrap();
    assert_eq!(out.skipped.len(), 1);
    assert!(out.skipped[0].reason.contains("at most 510"), "{}", out.skipped[0].reason);
}

#[test]
fn smoke_corpus_parallel_equals_serial() {
    let records = read_corpus("smoke.corpus.jsonl");
    assert_eq!(records.len(), 20);
    let (parses, attns) = record_fixtures(&records, 7);
    let mut parser = FixtureParser::default();
    for p in parses {
        parser.insert(&p.sentence, p.parse);
    }
    let attn = FixtureAttention::from_entries(attns).unwrap();
    let ex = Extractor::new(&parser, &attn);
    let serial = ex.extract_corpus(&records, 1).unwrap();
    let parallel = ex.extract_corpus(&records, 4).unwrap();
    assert!(serial.skipped.is_empty());
    assert!(!serial.triples.is_empty());
    assert_eq!(serial, parallel);
    let kg = serial.into_graph();
    let mut per_patent: BTreeMap<&str, usize> = BTreeMap::new();
    for t in kg.triples() {
        *per_patent.entry(t.patent_id.as_str()).or_default() += 1;
    }
    assert_eq!(kg.stats().n_patents, per_patent.len());
    assert!(!keys(&kg).is_empty());
}

#[test]
fn serialized_provider_matches_concurrent_one() {
    struct Exclusive(FixtureAttention);
    impl patent_kg::attention::AttentionProvider for Exclusive {
        fn token_attention(
            &self,
            tokens: &[patent_kg::preprocess::Token],
            config: &AttentionConfig,
        ) -> patent_kg::Result<patent_kg::attention::TokenAttention> {
            self.0.token_attention(tokens, config)
        }
        fn word_attention(
            &self,
            sentence: &patent_kg::preprocess::ProcessedSentence,
            config: &AttentionConfig,
        ) -> Option<patent_kg::Result<patent_kg::attention::WordAttention>> {
            self.0.word_attention(sentence, config)
        }
    }
    let records = read_corpus("smoke.corpus.jsonl");
    let (parses, attns) = record_fixtures(&records, 7);
    let mut parser = FixtureParser::default();
    for p in parses {
        parser.insert(&p.sentence, p.parse);
    }
    let shared = FixtureAttention::from_entries(attns).unwrap();
    let exclusive = Exclusive(shared.clone());
    let a = Extractor::new(&parser, &shared).extract_corpus(&records, 4).unwrap();
    let b = Extractor::new(&parser, &exclusive).extract_corpus(&records, 4).unwrap();
    assert_eq!(a, b);
}
