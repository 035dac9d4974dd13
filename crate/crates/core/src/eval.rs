//! Recall of benchmark term lists against graph entities or relations.
//!
//! Benchmark file format, UTF-8:
//!
//! ```text
//! % comment
//! # Category
//! ## Subcategory
//! term one
//! term two
//! ```
//!
//! Blank lines are ignored. Terms listed under a category before any
//! subcategory heading belong to an unnamed subcategory.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::kgstore::{canonicalize, KnowledgeGraph};
use crate::{Error, Result};

/// Mechanical-engineering terms from the published benchmark table (a
/// printed subset of the full list).
pub const BUNDLED_TERMS: &str = include_str!("../data/mechanical_terms.txt");
/// Mechanical-engineering relations from the published benchmark table.
pub const BUNDLED_RELATIONS: &str = include_str!("../data/mechanical_relations.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subcategory {
    pub name: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub subcategories: Vec<Subcategory>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TermBenchmark {
    pub categories: Vec<Category>,
}

impl TermBenchmark {
    pub fn term_count(&self) -> usize {
        self.terms().count()
    }

    /// `(category, term)` in file order.
    pub fn terms(&self) -> impl Iterator<Item = (&str, &str)> {
        self.categories.iter().flat_map(|c| {
            c.subcategories
                .iter()
                .flat_map(move |s| s.terms.iter().map(move |t| (c.name.as_str(), t.as_str())))
        })
    }
}

pub fn load_benchmark(source: &str) -> Result<TermBenchmark> {
    let mut bench = TermBenchmark::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Benchmark { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(name) = line.strip_prefix("##") {
            let cat = bench
                .categories
                .last_mut()
                .ok_or_else(|| err("subcategory before any category".into()))?;
            cat.subcategories.push(Subcategory {
                name: name.trim().to_string(),
                terms: Vec::new(),
            });
            seen.clear();
        } else if let Some(name) = line.strip_prefix('#') {
            let name = name.trim();
            if name.is_empty() {
                return Err(err("empty category name".into()));
            }
            bench.categories.push(Category {
                name: name.to_string(),
                subcategories: Vec::new(),
            });
            seen.clear();
        } else {
            if line.contains(';') {
                return Err(err(format!("term {line:?} contains ';'")));
            }
            let cat = bench
                .categories
                .last_mut()
                .ok_or_else(|| err(format!("term {line:?} before any category")))?;
            if cat.subcategories.is_empty() {
                cat.subcategories.push(Subcategory {
                    name: String::new(),
                    terms: Vec::new(),
                });
            }
            let canonical = canonicalize(line)?;
            if !seen.insert(canonical.clone()) {
                return Err(err(format!("duplicate term {canonical:?} in subcategory")));
            }
            cat.subcategories.last_mut().unwrap().terms.push(line.to_string());
        }
    }
    if bench.term_count() == 0 {
        return Err(Error::Benchmark {
            line: source.lines().count(),
            message: "benchmark contains no terms".into(),
        });
    }
    Ok(bench)
}

pub fn bundled_terms() -> TermBenchmark {
    load_benchmark(BUNDLED_TERMS).expect("bundled term list parses")
}

pub fn bundled_relations() -> TermBenchmark {
    load_benchmark(BUNDLED_RELATIONS).expect("bundled relation list parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Canonical string equality.
    #[default]
    Exact,
    /// Canonical equality after stripping plural endings from each word.
    Lemma,
}

/// Crude per-word plural stripping for [`MatchMode::Lemma`].
fn rough_lemma(canonical: &str) -> String {
    canonical
        .split(' ')
        .map(|w| {
            if w.len() > 4 && w.ends_with("ies") {
                format!("{}y", &w[..w.len() - 3])
            } else if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
                w[..w.len() - 1].to_string()
            } else {
                w.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recall {
    pub n: usize,
    #[serde(rename = "N")]
    pub total: usize,
    pub recall: f64,
}

impl Recall {
    fn new(n: usize, total: usize) -> Self {
        Self {
            n,
            total,
            recall: if total == 0 { 0.0 } else { n as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecall {
    pub category: String,
    #[serde(flatten)]
    pub recall: Recall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub total: Recall,
    pub per_category: Vec<CategoryRecall>,
    pub missing: Vec<String>,
}

impl EvalResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("eval result serializes")
    }

    /// Aligned text table with three-decimal recall values.
    pub fn to_table(&self) -> String {
        let rows: Vec<(&str, &Recall)> = self
            .per_category
            .iter()
            .map(|c| (c.category.as_str(), &c.recall))
            .chain(std::iter::once(("Total", &self.total)))
            .collect();
        let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6}", "category", "n", "N", "recall");
        for (name, r) in rows {
            let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>6.3}", name, r.n, r.total, r.recall);
        }
        out
    }
}

fn evaluate<'a>(items: impl IntoIterator<Item = &'a str>, benchmark: &TermBenchmark, mode: MatchMode) -> EvalResult {
    let norm = |s: &str| {
        canonicalize(s).ok().map(|c| match mode {
            MatchMode::Exact => c,
            MatchMode::Lemma => rough_lemma(&c),
        })
    };
    let have: BTreeSet<String> = items.into_iter().filter_map(norm).collect();
    let mut per_category = Vec::new();
    let mut missing = Vec::new();
    let (mut n_all, mut total_all) = (0, 0);
    for cat in &benchmark.categories {
        let (mut n, mut total) = (0, 0);
        for term in cat.subcategories.iter().flat_map(|s| &s.terms) {
            total += 1;
            if norm(term).is_some_and(|t| have.contains(&t)) {
                n += 1;
            } else {
                missing.push(term.clone());
            }
        }
        n_all += n;
        total_all += total;
        per_category.push(CategoryRecall {
            category: cat.name.clone(),
            recall: Recall::new(n, total),
        });
    }
    EvalResult {
        total: Recall::new(n_all, total_all),
        per_category,
        missing,
    }
}

/// Share of benchmark terms present among `entities` (Eq. F = n / N).
pub fn recall_rate<'a>(entities: impl IntoIterator<Item = &'a str>, benchmark: &TermBenchmark) -> EvalResult {
    evaluate(entities, benchmark, MatchMode::Exact)
}

/// Same matching applied to relation strings; phrasal verbs match whole.
pub fn relation_recall<'a>(relations: impl IntoIterator<Item = &'a str>, benchmark: &TermBenchmark) -> EvalResult {
    evaluate(relations, benchmark, MatchMode::Exact)
}

pub fn recall_with_mode<'a>(
    items: impl IntoIterator<Item = &'a str>,
    benchmark: &TermBenchmark,
    mode: MatchMode,
) -> EvalResult {
    evaluate(items, benchmark, mode)
}

pub fn entity_recall(kg: &KnowledgeGraph, benchmark: &TermBenchmark, mode: MatchMode) -> EvalResult {
    evaluate(kg.entities().keys().map(String::as_str), benchmark, mode)
}

pub fn kg_relation_recall(kg: &KnowledgeGraph, benchmark: &TermBenchmark, mode: MatchMode) -> EvalResult {
    evaluate(kg.relation_stats().keys().map(String::as_str), benchmark, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(n: usize) -> (String, Vec<String>) {
        let mut text = String::from("# Alpha\n## one\n");
        let terms: Vec<String> = (0..n).map(|i| format!("term {i}")).collect();
        for (i, t) in terms.iter().enumerate() {
            if i == n / 2 {
                text.push_str("# Beta\n");
            }
            text.push_str(t);
            text.push('\n');
        }
        (text, terms)
    }

    #[test]
    fn bundled_lists_parse() {
        let terms = bundled_terms();
        assert_eq!(terms.categories.len(), 3);
        let all: Vec<&str> = terms.terms().map(|(_, t)| t).collect();
        for t in ["heat engine", "pelton wheels", "magnetic bearing"] {
            assert!(all.contains(&t), "{t}");
        }
        let rels = bundled_relations();
        let all: Vec<&str> = rels.terms().map(|(_, t)| t).collect();
        assert!(all.contains(&"connect to") && all.contains(&"connect through"));
    }

    #[test]
    fn format_errors() {
        assert!(matches!(load_benchmark(""), Err(Error::Benchmark { .. })));
        assert!(matches!(load_benchmark("# A\n"), Err(Error::Benchmark { .. })));
        assert!(matches!(
            load_benchmark("# A\n## s\nrotor\nThe Rotor\n"),
            Err(Error::Benchmark { line: 4, .. })
        ));
        assert!(matches!(load_benchmark("rotor\n"), Err(Error::Benchmark { line: 1, .. })));
        assert!(matches!(load_benchmark("## s\nrotor\n"), Err(Error::Benchmark { line: 1, .. })));
        // same term in different subcategories is fine
        assert!(load_benchmark("# A\n## s\nrotor\n## t\nrotor\n").is_ok());
    }

    #[test]
    fn nine_tenths() {
        let (text, terms) = synthetic(180);
        let b = load_benchmark(&text).unwrap();
        let covered: Vec<&str> = terms[..162].iter().map(String::as_str).collect();
        let r = recall_rate(covered, &b);
        assert_eq!((r.total.n, r.total.total), (162, 180));
        assert_eq!(format!("{:.3}", r.total.recall), "0.900");
        assert_eq!(r.missing.len(), 18);
        assert_eq!(r.per_category.iter().map(|c| c.recall.n).sum::<usize>(), 162);
        assert!(r.to_table().contains("0.900"));
    }

    #[test]
    fn edge_cases() {
        let b = load_benchmark("# R\naccelerate\nconnect to\nhold\n").unwrap();
        let r = relation_recall(["accelerate", "Connect  to"], &b);
        assert!((r.total.recall - 2.0 / 3.0).abs() < 1e-9);
        let r = relation_recall(["connect"], &b);
        assert_eq!(r.total.n, 0);
        let r = recall_rate(std::iter::empty(), &b);
        assert_eq!(r.total.recall, 0.0);
        assert_eq!(r.missing.len(), 3);
        let r = recall_rate(["accelerate", "connect to", "hold", "extra"], &b);
        assert_eq!(r.total.recall, 1.0);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["total"]["N"], 3);
    }

    #[test]
    fn lemma_mode_is_opt_in() {
        let b = load_benchmark("# T\npistons\nturbine blades\n").unwrap();
        assert_eq!(recall_rate(["piston", "turbine blade"], &b).total.n, 0);
        assert_eq!(recall_with_mode(["piston", "turbine blade"], &b, MatchMode::Lemma).total.n, 2);
    }

    proptest! {
        #[test]
        fn monotone_and_symmetric(order in Just((0..40usize).collect::<Vec<_>>()).prop_shuffle(), steps in 1usize..40) {
            let (text, terms) = synthetic(40);
            let b = load_benchmark(&text).unwrap();
            let mut have: Vec<String> = Vec::new();
            let mut last = recall_rate(std::iter::empty(), &b);
            for &i in order.iter().take(steps) {
                have.push(if i % 2 == 0 { terms[i].to_uppercase() } else { format!("the {}", terms[i]) });
                let r = recall_rate(have.iter().map(String::as_str), &b);
                prop_assert!(r.total.recall >= last.total.recall);
                for (a, c) in r.per_category.iter().zip(&last.per_category) {
                    prop_assert!(a.recall.recall >= c.recall.recall);
                }
                prop_assert_eq!(r.total.n + r.missing.len(), r.total.total);
                let canon: Vec<String> = have.iter().map(|h| canonicalize(h).unwrap()).collect();
                prop_assert_eq!(&recall_rate(canon.iter().map(String::as_str), &b), &r);
                last = r;
            }
        }
    }
}
