//! Relation search between noun-unit pairs over a word-level attention graph.
//!
//! For a head `h` and tail `t` the score of a relation unit `r` is
//! `A[t][r] + A[r][h]`: the search walks backwards from the tail to the
//! relation and on to the head. Only the `beam_size` relation units with the
//! strongest first hop `A[t][r]` are expanded.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::attention::WordAttention;
use crate::preprocess::{Pos, ProcessedSentence, UnitKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidatePair {
    pub head_unit: usize,
    pub tail_unit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub beam_size: usize,
    pub relation_pos_allow: BTreeSet<Pos>,
    pub relation_pos_deny: BTreeSet<Pos>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            beam_size: 2,
            relation_pos_allow: [Pos::Verb, Pos::Aux, Pos::Adp, Pos::Part].into_iter().collect(),
            relation_pos_deny: [
                Pos::Adv,
                Pos::Noun,
                Pos::Propn,
                Pos::Det,
                Pos::Punct,
                Pos::Num,
                Pos::Adj,
            ]
            .into_iter()
            .collect(),
        }
    }
}

impl MatchConfig {
    pub fn with_beam_size(mut self, beam_size: usize) -> Self {
        self.beam_size = beam_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if let Some(p) = self.relation_pos_allow.intersection(&self.relation_pos_deny).next() {
            return Err(Error::Config(format!("tag {p} is both allowed and denied as a relation")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFact {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub score: f64,
    pub head_idx: usize,
    pub rel_idx: usize,
    pub tail_idx: usize,
    pub abstract_id: String,
    pub sentence_index: usize,
    pub relation_is_phrasal: bool,
}

/// Whether unit `idx` may act as a relation under `config`.
pub fn is_relation_unit(sentence: &ProcessedSentence, idx: usize, config: &MatchConfig) -> bool {
    let unit = &sentence.units[idx];
    if unit.kind == UnitKind::PhrasalVerb || sentence.unit_is_negation(idx) {
        return true;
    }
    unit.kind != UnitKind::NounPhrase
        && config.relation_pos_allow.contains(&unit.unit_pos)
        && !config.relation_pos_deny.contains(&unit.unit_pos)
}

/// Relation units strictly between the pair, in sentence order.
pub fn candidate_relations(pair: CandidatePair, sentence: &ProcessedSentence, config: &MatchConfig) -> Vec<usize> {
    (pair.head_unit + 1..pair.tail_unit)
        .filter(|&i| is_relation_unit(sentence, i, config))
        .collect()
}

/// All noun-unit pairs `(i, j)`, `i < j`, with at least one relation
/// candidate between them, in lexicographic order.
pub fn enumerate_pairs(sentence: &ProcessedSentence, config: &MatchConfig) -> Vec<CandidatePair> {
    let nouns: Vec<usize> = sentence
        .units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.kind == UnitKind::NounPhrase)
        .map(|(i, _)| i)
        .collect();
    let relational: Vec<bool> = (0..sentence.units.len())
        .map(|i| is_relation_unit(sentence, i, config))
        .collect();
    let mut pairs = Vec::new();
    for (a, &h) in nouns.iter().enumerate() {
        for &t in &nouns[a + 1..] {
            if relational[h + 1..t].iter().any(|&r| r) {
                pairs.push(CandidatePair {
                    head_unit: h,
                    tail_unit: t,
                });
            }
        }
    }
    pairs
}

fn check_dims(attn: &WordAttention, sentence: &ProcessedSentence, pair: CandidatePair) -> Result<()> {
    let n = sentence.units.len();
    if attn.matrix.dim() != (n, n) {
        return Err(Error::Shape(format!(
            "attention is {:?} but the sentence has {n} units",
            attn.matrix.dim()
        )));
    }
    if pair.head_unit >= pair.tail_unit || pair.tail_unit >= n {
        return Err(Error::Shape(format!("invalid pair {pair:?} for {n} units")));
    }
    Ok(())
}

/// Orders relation choices: larger value first, then the unit nearer the
/// tail (higher index).
fn rank(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(b.1.cmp(&a.1))
}

fn score(attn: &WordAttention, pair: CandidatePair, rel: usize) -> f64 {
    attn.get(pair.tail_unit, rel) + attn.get(rel, pair.head_unit)
}

fn make_fact(sentence: &ProcessedSentence, pair: CandidatePair, rel: usize, score: f64) -> CandidateFact {
    let u = &sentence.units;
    CandidateFact {
        head: u[pair.head_unit].text.clone(),
        relation: u[rel].text.clone(),
        tail: u[pair.tail_unit].text.clone(),
        score,
        head_idx: pair.head_unit,
        rel_idx: rel,
        tail_idx: pair.tail_unit,
        abstract_id: sentence.abstract_id.clone(),
        sentence_index: sentence.sentence_index,
        relation_is_phrasal: u[rel].kind == UnitKind::PhrasalVerb,
    }
}

/// The expanded beam: up to `beam_size` candidates with their full scores,
/// in expansion order (strongest first hop first).
pub fn beam_candidates(
    pair: CandidatePair,
    attn: &WordAttention,
    sentence: &ProcessedSentence,
    config: &MatchConfig,
) -> Result<Vec<CandidateFact>> {
    check_dims(attn, sentence, pair)?;
    let mut frontier: Vec<(f64, usize)> = candidate_relations(pair, sentence, config)
        .into_iter()
        .map(|r| (attn.get(pair.tail_unit, r), r))
        .collect();
    frontier.sort_by(|&a, &b| rank(a, b));
    frontier.truncate(config.beam_size);
    Ok(frontier
        .into_iter()
        .map(|(_, r)| make_fact(sentence, pair, r, score(attn, pair, r)))
        .collect())
}

/// Best relation for the pair under beam pruning, or `None` when nothing
/// lies between head and tail.
pub fn beam_match(
    pair: CandidatePair,
    attn: &WordAttention,
    sentence: &ProcessedSentence,
    config: &MatchConfig,
) -> Result<Option<CandidateFact>> {
    let beam = beam_candidates(pair, attn, sentence, config)?;
    Ok(beam
        .into_iter()
        .min_by(|a, b| rank((a.score, a.rel_idx), (b.score, b.rel_idx))))
}

/// Exhaustive reference search over every candidate relation.
pub fn brute_force_match(
    pair: CandidatePair,
    attn: &WordAttention,
    sentence: &ProcessedSentence,
    config: &MatchConfig,
) -> Result<Option<CandidateFact>> {
    check_dims(attn, sentence, pair)?;
    let mut best: Option<(f64, usize)> = None;
    for r in pair.head_unit + 1..pair.tail_unit {
        if !is_relation_unit(sentence, r, config) {
            continue;
        }
        let s = attn.get(pair.tail_unit, r) + attn.get(r, pair.head_unit);
        best = match best {
            Some((bs, br)) if bs > s || (bs == s && br > r) => Some((bs, br)),
            _ => Some((s, r)),
        };
    }
    Ok(best.map(|(s, r)| make_fact(sentence, pair, r, s)))
}

/// Best fact for every pair of the sentence.
pub fn match_sentence(
    sentence: &ProcessedSentence,
    attn: &WordAttention,
    config: &MatchConfig,
) -> Result<Vec<CandidateFact>> {
    let mut out = Vec::new();
    for pair in enumerate_pairs(sentence, config) {
        if let Some(f) = beam_match(pair, attn, sentence, config)? {
            out.push(f);
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::preprocess::{Pos, ProcessedSentence, Token, UnitKind, WordUnit};

    /// A sentence built directly from `(text, kind, pos)` units, one token each.
    pub fn sentence_of(units: &[(&str, UnitKind, Pos)]) -> ProcessedSentence {
        let tokens = units
            .iter()
            .map(|&(text, _, pos)| Token {
                text: text.into(),
                pos,
                dep: String::new(),
                head_index: 0,
                char_span: (0, 0),
            })
            .collect();
        let units = units
            .iter()
            .enumerate()
            .map(|(i, &(text, kind, pos))| WordUnit {
                text: text.into(),
                kind,
                token_span: (i, i + 1),
                unit_pos: pos,
            })
            .collect();
        ProcessedSentence {
            text: String::new(),
            tokens,
            units,
            abstract_id: "t".into(),
            sentence_index: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::sentence_of;
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    const NP: UnitKind = UnitKind::NounPhrase;
    const W: UnitKind = UnitKind::Word;

    fn levitation() -> (ProcessedSentence, WordAttention) {
        let s = sentence_of(&[
            ("the magnetic force", NP, Pos::Noun),
            ("provided", W, Pos::Verb),
            ("levitates", W, Pos::Verb),
            ("the shaft", NP, Pos::Noun),
        ]);
        let m = array![
            [0.40, 0.20, 0.30, 0.10],
            [0.5684, 0.2000, 0.1316, 0.1000],
            [0.2496, 0.1504, 0.3000, 0.3000],
            [0.1085, 0.0154, 0.7761, 0.1000],
        ];
        (s.clone(), WordAttention { units: s.unit_texts(), matrix: m })
    }

    #[test]
    fn levitation_levitates_wins() {
        let (s, a) = levitation();
        let cfg = MatchConfig::default();
        let pairs = enumerate_pairs(&s, &cfg);
        assert_eq!(pairs, vec![CandidatePair { head_unit: 0, tail_unit: 3 }]);
        assert_eq!(candidate_relations(pairs[0], &s, &cfg), vec![1, 2]);
        let beam = beam_candidates(pairs[0], &a, &s, &cfg).unwrap();
        assert_eq!(beam[0].relation, "levitates");
        assert!((beam[0].score - 1.0257).abs() < 1e-9);
        assert_eq!(beam[1].relation, "provided");
        assert!((beam[1].score - 0.5838).abs() < 1e-9);
        let best = beam_match(pairs[0], &a, &s, &cfg).unwrap().unwrap();
        assert_eq!((best.head.as_str(), best.relation.as_str(), best.tail.as_str()), ("the magnetic force", "levitates", "the shaft"));
        assert_eq!(best.score, 0.7761 + 0.2496);
        assert_eq!(brute_force_match(pairs[0], &a, &s, &cfg).unwrap(), Some(best));
    }

    #[test]
    fn adverbs_excluded_prepositions_included() {
        let s = sentence_of(&[
            ("the rotor", NP, Pos::Noun),
            ("quickly", W, Pos::Adv),
            ("in", W, Pos::Adp),
            ("the casing", NP, Pos::Noun),
        ]);
        let cfg = MatchConfig::default();
        assert_eq!(candidate_relations(CandidatePair { head_unit: 0, tail_unit: 3 }, &s, &cfg), vec![2]);
    }

    #[test]
    fn negation_and_phrasal_verbs_always_eligible() {
        let mut s = sentence_of(&[
            ("the valve", NP, Pos::Noun),
            ("not", W, Pos::Part),
            ("connect to", UnitKind::PhrasalVerb, Pos::Verb),
            ("the pipe", NP, Pos::Noun),
        ]);
        s.tokens[1].dep = "neg".into();
        let mut cfg = MatchConfig::default();
        cfg.relation_pos_allow.clear();
        cfg.relation_pos_deny.insert(Pos::Verb);
        cfg.relation_pos_deny.insert(Pos::Part);
        assert_eq!(candidate_relations(CandidatePair { head_unit: 0, tail_unit: 3 }, &s, &cfg), vec![1, 2]);
    }

    #[test]
    fn no_pairs_without_candidates() {
        let cfg = MatchConfig::default();
        let one = sentence_of(&[("a rim", NP, Pos::Noun), ("rotates", W, Pos::Verb)]);
        assert!(enumerate_pairs(&one, &cfg).is_empty());
        let adjacent = sentence_of(&[("a rim", NP, Pos::Noun), ("a hub", NP, Pos::Noun)]);
        assert!(enumerate_pairs(&adjacent, &cfg).is_empty());
        let attn = WordAttention {
            units: adjacent.unit_texts(),
            matrix: Array2::from_elem((2, 2), 0.5),
        };
        let pair = CandidatePair { head_unit: 0, tail_unit: 1 };
        assert_eq!(beam_match(pair, &attn, &adjacent, &cfg).unwrap(), None);
        assert_eq!(brute_force_match(pair, &attn, &adjacent, &cfg).unwrap(), None);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (s, mut a) = levitation();
        a.matrix = Array2::zeros((3, 3));
        let pair = CandidatePair { head_unit: 0, tail_unit: 3 };
        assert!(beam_match(pair, &a, &s, &MatchConfig::default()).is_err());
    }

    #[test]
    fn ties_prefer_relation_nearer_tail() {
        let s = sentence_of(&[
            ("a", NP, Pos::Noun),
            ("x", W, Pos::Verb),
            ("y", W, Pos::Verb),
            ("b", NP, Pos::Noun),
        ]);
        let a = WordAttention {
            units: s.unit_texts(),
            matrix: Array2::from_elem((4, 4), 0.25),
        };
        let pair = CandidatePair { head_unit: 0, tail_unit: 3 };
        let cfg = MatchConfig::default().with_beam_size(1);
        assert_eq!(beam_match(pair, &a, &s, &cfg).unwrap().unwrap().rel_idx, 2);
        assert_eq!(brute_force_match(pair, &a, &s, &cfg).unwrap().unwrap().rel_idx, 2);
    }

    #[test]
    fn config_validation() {
        assert!(MatchConfig::default().validate().is_ok());
        assert!(MatchConfig::default().with_beam_size(0).validate().is_err());
        let mut cfg = MatchConfig::default();
        cfg.relation_pos_allow.insert(Pos::Adv);
        assert!(cfg.validate().is_err());
    }

    fn arb_case() -> impl Strategy<Value = (ProcessedSentence, WordAttention)> {
        let tags = prop_oneof![
            Just((NP, Pos::Noun)),
            Just((W, Pos::Verb)),
            Just((W, Pos::Adp)),
            Just((W, Pos::Adv)),
            Just((W, Pos::Det)),
            Just((UnitKind::PhrasalVerb, Pos::Verb)),
        ];
        prop::collection::vec(tags, 2..10).prop_flat_map(|layout| {
            let n = layout.len();
            prop::collection::vec(prop::collection::vec(0u32..1000, n), n).prop_map(move |raw| {
                let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
                let spec: Vec<(&str, UnitKind, Pos)> = layout
                    .iter()
                    .zip(&names)
                    .map(|(&(k, p), name)| (name.as_str(), k, p))
                    .collect();
                let s = sentence_of(&spec);
                let mut m = Array2::zeros((n, n));
                for (i, row) in raw.iter().enumerate() {
                    let total: f64 = row.iter().map(|&v| f64::from(v) + 1.0).sum();
                    for (j, &v) in row.iter().enumerate() {
                        m[[i, j]] = (f64::from(v) + 1.0) / total;
                    }
                }
                (s.clone(), WordAttention { units: s.unit_texts(), matrix: m })
            })
        })
    }

    proptest! {
        #[test]
        fn wide_beam_equals_brute_force((s, a) in arb_case()) {
            let cfg = MatchConfig::default().with_beam_size(s.units.len());
            for pair in enumerate_pairs(&s, &cfg) {
                let beam = beam_match(pair, &a, &s, &cfg).unwrap().unwrap();
                let brute = brute_force_match(pair, &a, &s, &cfg).unwrap().unwrap();
                prop_assert_eq!(&beam, &brute);
                prop_assert!(beam.rel_idx > pair.head_unit && beam.rel_idx < pair.tail_unit);
                prop_assert_eq!(beam.score, a.get(pair.tail_unit, beam.rel_idx) + a.get(beam.rel_idx, pair.head_unit));
            }
        }

        #[test]
        fn score_monotone_in_beam((s, a) in arb_case()) {
            let base = MatchConfig::default();
            for pair in enumerate_pairs(&s, &base) {
                let mut last = f64::NEG_INFINITY;
                for k in 1..=s.units.len() {
                    let f = beam_match(pair, &a, &s, &base.clone().with_beam_size(k)).unwrap().unwrap();
                    prop_assert!(f.score >= last);
                    last = f.score;
                }
            }
        }
    }
}
