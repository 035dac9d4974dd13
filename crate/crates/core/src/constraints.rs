//! Filters applied to the per-pair best facts of one abstract.
//!
//! Order is fixed: the median threshold over the whole abstract first, then
//! per sentence a head pass (one relation per head, any number of tails)
//! and a tail pass (one fact per tail).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::matcher::CandidateFact;

pub use crate::pipeline::extract_from_abstract;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AbstractCandidates {
    pub abstract_id: String,
    pub facts: Vec<CandidateFact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdPolicy {
    /// Keep facts scoring at least the abstract's median.
    #[default]
    Median,
}

/// Median of the scores; the mean of the two middle values for even counts.
pub fn median(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn filter_by_median(cands: AbstractCandidates, policy: ThresholdPolicy) -> AbstractCandidates {
    match policy {
        ThresholdPolicy::Median => {
            let scores: Vec<f64> = cands.facts.iter().map(|f| f.score).collect();
            let Some(threshold) = median(&scores) else {
                return cands;
            };
            AbstractCandidates {
                abstract_id: cands.abstract_id,
                facts: cands.facts.into_iter().filter(|f| f.score >= threshold).collect(),
            }
        }
    }
}

/// Preference between two facts: higher score, then the relation nearer its
/// tail, then the lower relation index, then the lower head index.
fn better(a: &CandidateFact, b: &CandidateFact) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then((a.tail_idx - a.rel_idx).cmp(&(b.tail_idx - b.rel_idx)))
        .then(a.rel_idx.cmp(&b.rel_idx))
        .then(a.head_idx.cmp(&b.head_idx))
}

fn relation_key(f: &CandidateFact) -> String {
    f.relation.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn resolve_sentence(facts: Vec<CandidateFact>) -> Vec<CandidateFact> {
    let mut head_rel: BTreeMap<usize, &CandidateFact> = BTreeMap::new();
    for f in &facts {
        head_rel
            .entry(f.head_idx)
            .and_modify(|cur| {
                if better(f, cur) == Ordering::Less {
                    *cur = f;
                }
            })
            .or_insert(f);
    }
    let head_rel: BTreeMap<usize, String> = head_rel.into_iter().map(|(h, f)| (h, relation_key(f))).collect();
    let after_head: Vec<CandidateFact> = facts
        .into_iter()
        .filter(|f| head_rel[&f.head_idx] == relation_key(f))
        .collect();

    let mut tail_best: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, f) in after_head.iter().enumerate() {
        tail_best
            .entry(f.tail_idx)
            .and_modify(|cur| {
                if better(f, &after_head[*cur]) == Ordering::Less {
                    *cur = i;
                }
            })
            .or_insert(i);
    }
    after_head
        .into_iter()
        .enumerate()
        .filter(|(i, f)| tail_best[&f.tail_idx] == *i)
        .map(|(_, f)| f)
        .collect()
}

/// Head pass then tail pass, applied independently to each sentence.
/// Surviving facts keep their input order.
pub fn resolve_relations(cands: AbstractCandidates) -> AbstractCandidates {
    let mut by_sentence: BTreeMap<usize, Vec<(usize, CandidateFact)>> = BTreeMap::new();
    for (i, f) in cands.facts.into_iter().enumerate() {
        by_sentence.entry(f.sentence_index).or_default().push((i, f));
    }
    let mut kept: Vec<(usize, CandidateFact)> = Vec::new();
    for (_, group) in by_sentence {
        let (order, facts): (Vec<usize>, Vec<CandidateFact>) = group.into_iter().unzip();
        let survivors = resolve_sentence(facts.clone());
        // recover original positions
        let mut used = vec![false; facts.len()];
        for s in survivors {
            let pos = (0..facts.len())
                .find(|&j| !used[j] && facts[j] == s)
                .expect("survivor comes from the input");
            used[pos] = true;
            kept.push((order[pos], s));
        }
    }
    kept.sort_by_key(|(i, _)| *i);
    AbstractCandidates {
        abstract_id: cands.abstract_id,
        facts: kept.into_iter().map(|(_, f)| f).collect(),
    }
}

/// Median threshold followed by relation resolution.
pub fn apply_constraints(cands: AbstractCandidates, policy: ThresholdPolicy) -> AbstractCandidates {
    resolve_relations(filter_by_median(cands, policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn fact(h: usize, r: usize, t: usize, score: f64) -> CandidateFact {
        CandidateFact {
            head: format!("h{h}"),
            relation: format!("r{r}"),
            tail: format!("t{t}"),
            score,
            head_idx: h,
            rel_idx: r,
            tail_idx: t,
            abstract_id: "a".into(),
            sentence_index: 0,
            relation_is_phrasal: false,
        }
    }

    fn cands(facts: Vec<CandidateFact>) -> AbstractCandidates {
        AbstractCandidates {
            abstract_id: "a".into(),
            facts,
        }
    }

    fn scores(c: &AbstractCandidates) -> Vec<f64> {
        c.facts.iter().map(|f| f.score).collect()
    }

    #[test]
    fn median_examples() {
        let c = cands(vec![fact(0, 1, 2, 0.9), fact(0, 1, 3, 0.5), fact(0, 1, 4, 0.1)]);
        assert_eq!(scores(&filter_by_median(c, ThresholdPolicy::Median)), vec![0.9, 0.5]);
        let c = cands(vec![fact(0, 1, 2, 1.0257)]);
        assert_eq!(filter_by_median(c, ThresholdPolicy::Median).facts.len(), 1);
        let c = cands(vec![fact(0, 1, 2, 0.8), fact(0, 1, 3, 0.2)]);
        assert_eq!(scores(&filter_by_median(c, ThresholdPolicy::Median)), vec![0.8]);
        assert!(filter_by_median(cands(vec![]), ThresholdPolicy::Median).facts.is_empty());
    }

    #[test]
    fn hub_resolution() {
        // units: 0 assembly, 1 comprises, 2 rim, 3 to receive, 4 magnet
        let all = cands(vec![
            fact(0, 1, 2, 0.4030 + 0.6746),
            fact(0, 3, 4, 0.0392 + 0.6368),
            fact(2, 3, 4, 0.3131 + 0.6368),
        ]);
        let out = apply_constraints(all, ThresholdPolicy::Median);
        let got: Vec<(usize, usize, usize)> = out.facts.iter().map(|f| (f.head_idx, f.rel_idx, f.tail_idx)).collect();
        assert_eq!(got, vec![(0, 1, 2), (2, 3, 4)]);
    }

    #[test]
    fn hub_all_four_candidates_resolve() {
        // resolution alone over the four listed candidates
        let out = resolve_relations(cands(vec![
            fact(0, 1, 2, 1.0776),
            fact(0, 1, 4, 0.4280),
            fact(0, 3, 4, 0.6760),
            fact(2, 3, 4, 0.9499),
        ]));
        let got: Vec<(usize, usize, usize)> = out.facts.iter().map(|f| (f.head_idx, f.rel_idx, f.tail_idx)).collect();
        assert_eq!(got, vec![(0, 1, 2), (2, 3, 4)]);
    }

    #[test]
    fn multi_tail_survives() {
        let out = resolve_relations(cands(vec![fact(0, 1, 2, 0.9), fact(0, 1, 3, 0.4)]));
        assert_eq!(out.facts.len(), 2);
        let single = resolve_relations(cands(vec![fact(0, 1, 2, 0.3)]));
        assert_eq!(single.facts.len(), 1);
    }

    #[test]
    fn sentences_resolve_independently() {
        let mut b = fact(0, 1, 2, 0.1);
        b.sentence_index = 1;
        b.relation = "other".into();
        let out = resolve_relations(cands(vec![fact(0, 1, 2, 0.9), b]));
        assert_eq!(out.facts.len(), 2);
    }

    fn arb_facts() -> impl Strategy<Value = Vec<CandidateFact>> {
        // (sentence, head, gap, relation offset, relation word, score)
        let one = (0usize..2, 0usize..5, 1usize..5, 0usize..4, 0usize..3, 0u32..8);
        prop::collection::vec(one, 0..15).prop_map(|raw| {
            let mut seen = BTreeSet::new();
            raw.into_iter()
                .filter_map(|(sent, h, gap, off, word, s)| {
                    let t = h + gap + 1;
                    // one best fact per pair, as the matcher produces
                    if !seen.insert((sent, h, t)) {
                        return None;
                    }
                    let mut f = fact(h, h + 1 + off % gap, t, f64::from(s) / 4.0);
                    f.relation = format!("rel{word}");
                    f.sentence_index = sent;
                    Some(f)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn median_keeps_at_least_half(facts in arb_facts()) {
            let n = facts.len();
            let out = filter_by_median(cands(facts.clone()), ThresholdPolicy::Median);
            prop_assert!(out.facts.len() >= n.div_ceil(2));
            // order preserved: output is a subsequence
            let mut it = facts.iter();
            for f in &out.facts {
                prop_assert!(it.any(|g| g == f));
            }
        }

        #[test]
        fn resolution_matches_brute_force(facts in arb_facts()) {
            let out = resolve_relations(cands(facts.clone()));
            // independent recount: per sentence, best fact per head by preference,
            // then best per tail among facts sharing the head's relation
            let mut expected = Vec::new();
            for sent in 0..2 {
                let fs: Vec<&CandidateFact> = facts.iter().filter(|f| f.sentence_index == sent).collect();
                let stage1: Vec<&CandidateFact> = fs
                    .iter()
                    .copied()
                    .filter(|f| {
                        let best = fs.iter().filter(|g| g.head_idx == f.head_idx).min_by(|a, b| better(a, b)).unwrap();
                        best.relation == f.relation
                    })
                    .collect();
                for f in &stage1 {
                    let best = stage1.iter().filter(|g| g.tail_idx == f.tail_idx).min_by(|a, b| better(a, b)).unwrap();
                    if std::ptr::eq(*best, *f) {
                        expected.push((*f).clone());
                    }
                }
            }
            let key = |f: &CandidateFact| (f.sentence_index, f.head_idx, f.rel_idx, f.tail_idx);
            let mut got: Vec<_> = out.facts.iter().map(key).collect();
            let mut want: Vec<_> = expected.iter().map(key).collect();
            got.sort();
            want.sort();
            prop_assert_eq!(&got, &want);
            for sent in 0..2 {
                let fs: Vec<&CandidateFact> = out.facts.iter().filter(|f| f.sentence_index == sent).collect();
                let tails: BTreeSet<usize> = fs.iter().map(|f| f.tail_idx).collect();
                prop_assert_eq!(tails.len(), fs.len());
                for f in &fs {
                    for g in &fs {
                        if f.head_idx == g.head_idx {
                            prop_assert_eq!(&f.relation, &g.relation);
                        }
                    }
                }
            }
        }
    }
}
