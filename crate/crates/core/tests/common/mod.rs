#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use patent_kg::attention::{AttentionFixtureEntry, FixtureAttention, WordAttention};
use patent_kg::corpus::{parse_corpus, CorpusFormat, PatentRecord};
use patent_kg::preprocess::{
    preprocess_sentence, split_sentences, FixtureParseEntry, FixtureParser, ParseProvider, ProcessedSentence,
    RuleParser,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_corpus(name: &str) -> Vec<PatentRecord> {
    let file = std::fs::File::open(fixture(name)).unwrap();
    parse_corpus(file, CorpusFormat::Jsonl, true).unwrap().records
}

pub fn hub_sentence() -> ProcessedSentence {
    let parser = FixtureParser::from_path(fixture("hub.parse.json")).unwrap();
    preprocess_sentence(
        "a bearingless hub assembly comprises a rim to receive a tube magnet",
        &parser,
        "US-F35",
        0,
    )
    .unwrap()
}

pub fn levitation_sentence() -> ProcessedSentence {
    let parser = FixtureParser::from_path(fixture("levitation.parse.json")).unwrap();
    preprocess_sentence("the magnetic force provided levitates the shaft", &parser, "levitation", 0).unwrap()
}

pub fn word_attention(provider: &FixtureAttention, sentence: &ProcessedSentence) -> WordAttention {
    let cfg = patent_kg::attention::AttentionConfig::default();
    patent_kg::attention::sentence_attention(sentence, &cfg, provider).unwrap()
}

/// Row-stochastic matrix with strictly positive entries.
pub fn random_stochastic(rng: &mut impl Rng, n: usize) -> Array2<f64> {
    let mut m = Array2::<f64>::zeros((n, n));
    for mut row in m.rows_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(0.01..1.0);
        }
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    m
}

/// Recorded parses and seeded unit-level attention for every sentence of
/// `records`, as fixture providers.
pub fn record_fixtures(records: &[PatentRecord], seed: u64) -> (Vec<FixtureParseEntry>, Vec<AttentionFixtureEntry>) {
    let rule = RuleParser::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parses = Vec::new();
    let mut attns = Vec::new();
    for r in records {
        for (i, s) in split_sentences(&r.r#abstract).iter().enumerate() {
            let parse = rule.parse(s).unwrap();
            let processed = preprocess_sentence(s, &rule, &r.patent_id, i).unwrap();
            let labels = processed.unit_texts();
            let m = random_stochastic(&mut rng, labels.len());
            attns.push(AttentionFixtureEntry::new(labels, &m));
            parses.push(FixtureParseEntry {
                sentence: s.clone(),
                parse,
            });
        }
    }
    (parses, attns)
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for item in items {
        serde_json::to_writer(&mut f, item).unwrap();
        f.write_all(b"\n").unwrap();
    }
    f.flush().unwrap();
}

/// Writes the smoke fixtures into `dir`, returning (parse, attention) paths.
pub fn write_smoke_fixtures(dir: &Path) -> (PathBuf, PathBuf) {
    let (parses, attns) = record_fixtures(&read_corpus("smoke.corpus.jsonl"), 7);
    let p = dir.join("smoke.parse.jsonl");
    let a = dir.join("smoke.attn.jsonl");
    write_jsonl(&p, &parses);
    write_jsonl(&a, &attns);
    (p, a)
}
