//! Triple store with canonical entities, statistics and JSONL persistence.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::matcher::CandidateFact;
use crate::{Error, Result};

const DETERMINERS: [&str; 3] = ["the", "a", "an"];

/// Lower-cases, collapses whitespace and strips one leading determiner
/// unless that would leave nothing.
pub fn canonicalize(surface: &str) -> Result<String> {
    let words: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        return Err(Error::EmptyCanonical);
    }
    let rest = if words.len() > 1 && DETERMINERS.contains(&words[0].as_str()) {
        &words[1..]
    } else {
        &words[..]
    };
    Ok(rest.join(" "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub patent_id: String,
    pub sentence_index: usize,
    pub head: String,
    pub head_surface: String,
    pub relation: String,
    pub relation_surface: String,
    pub tail: String,
    pub tail_surface: String,
    pub score: f64,
    #[serde(default)]
    pub relation_is_phrasal: bool,
}

impl Triple {
    pub fn from_fact(fact: &CandidateFact, patent_id: &str) -> Result<Triple> {
        Ok(Triple {
            patent_id: patent_id.to_string(),
            sentence_index: fact.sentence_index,
            head: canonicalize(&fact.head)?,
            head_surface: fact.head.clone(),
            relation: canonicalize(&fact.relation)?,
            relation_surface: fact.relation.clone(),
            tail: canonicalize(&fact.tail)?,
            tail_surface: fact.tail.clone(),
            score: fact.score,
            relation_is_phrasal: fact.relation_is_phrasal,
        })
    }

    /// `(head, relation, tail)` in canonical form.
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.head, &self.relation, &self.tail)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [("head", &self.head), ("relation", &self.relation), ("tail", &self.tail)] {
            if v.trim().is_empty() {
                return Err(format!("empty {name}"));
            }
        }
        if !(self.score >= 0.0) {
            return Err(format!("score {} is negative or NaN", self.score));
        }
        Ok(())
    }

    fn order(&self, other: &Triple) -> std::cmp::Ordering {
        self.key()
            .cmp(&other.key())
            .then_with(|| self.patent_id.cmp(&other.patent_id))
            .then(self.sentence_index.cmp(&other.sentence_index))
            .then(self.score.total_cmp(&other.score))
            .then_with(|| {
                (&self.head_surface, &self.relation_surface, &self.tail_surface).cmp(&(
                    &other.head_surface,
                    &other.relation_surface,
                    &other.tail_surface,
                ))
            })
            .then(self.relation_is_phrasal.cmp(&other.relation_is_phrasal))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub surfaces: BTreeSet<String>,
    /// Triple endpoints referring to this entity.
    pub frequency: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationStat {
    pub count: u64,
    pub phrasal: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgStats {
    pub n_patents: usize,
    pub n_entities: usize,
    pub n_edges: usize,
    pub n_phrasal_verbs: usize,
}

/// Multiset of triples plus the entity and relation indexes derived from
/// them. Equality ignores triple storage order.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: BTreeMap<String, EntityInfo>,
    triples: Vec<Triple>,
    relation_stats: BTreeMap<String, RelationStat>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.relation_stats == other.relation_stats
            && self.sorted_triples() == other.sorted_triples()
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut kg = Self::new();
        kg.add_triples(triples);
        kg
    }

    pub fn entities(&self) -> &BTreeMap<String, EntityInfo> {
        &self.entities
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn relation_stats(&self) -> &BTreeMap<String, RelationStat> {
        &self.relation_stats
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples in canonical order.
    pub fn sorted_triples(&self) -> Vec<&Triple> {
        let mut v: Vec<&Triple> = self.triples.iter().collect();
        v.sort_by(|a, b| a.order(b));
        v
    }

    fn touch(&mut self, canonical: &str, surface: &str) {
        let e = self.entities.entry(canonical.to_string()).or_default();
        e.surfaces.insert(surface.to_string());
        e.frequency += 1;
    }

    pub fn add_triple(&mut self, t: Triple) {
        self.touch(&t.head, &t.head_surface);
        self.touch(&t.tail, &t.tail_surface);
        let rel = self.relation_stats.entry(t.relation.clone()).or_default();
        rel.count += 1;
        rel.phrasal |= t.relation_is_phrasal;
        self.triples.push(t);
    }

    pub fn add_triples(&mut self, triples: impl IntoIterator<Item = Triple>) {
        for t in triples {
            self.add_triple(t);
        }
    }

    pub fn merge(mut self, other: KnowledgeGraph) -> KnowledgeGraph {
        for (k, info) in other.entities {
            let e = self.entities.entry(k).or_default();
            e.surfaces.extend(info.surfaces);
            e.frequency += info.frequency;
        }
        for (k, stat) in other.relation_stats {
            let r = self.relation_stats.entry(k).or_default();
            r.count += stat.count;
            r.phrasal |= stat.phrasal;
        }
        self.triples.extend(other.triples);
        self
    }

    pub fn stats(&self) -> KgStats {
        KgStats {
            n_patents: self
                .triples
                .iter()
                .map(|t| t.patent_id.as_str())
                .collect::<BTreeSet<_>>()
                .len(),
            n_entities: self.entities.len(),
            n_edges: self.triples.len(),
            n_phrasal_verbs: self.triples.iter().filter(|t| t.relation_is_phrasal).count(),
        }
    }

    /// Triples within `depth` undirected hops of `entity`.
    pub fn query_neighbors(&self, entity: &str, depth: usize) -> KnowledgeGraph {
        let Ok(start) = canonicalize(entity) else {
            return KnowledgeGraph::new();
        };
        if !self.entities.contains_key(&start) || depth == 0 {
            return KnowledgeGraph::new();
        }
        let mut adjacency: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, t) in self.triples.iter().enumerate() {
            adjacency.entry(t.head.as_str()).or_default().push(i);
            adjacency.entry(t.tail.as_str()).or_default().push(i);
        }
        let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
        let mut taken = vec![false; self.triples.len()];
        let mut queue = VecDeque::new();
        dist.insert(self.entities.get_key_value(&start).unwrap().0.as_str(), 0);
        queue.push_back((start.as_str().to_owned(), 0usize));
        while let Some((node, d)) = queue.pop_front() {
            if d >= depth {
                continue;
            }
            for &i in adjacency.get(node.as_str()).into_iter().flatten() {
                taken[i] = true;
                let t = &self.triples[i];
                for next in [t.head.as_str(), t.tail.as_str()] {
                    if !dist.contains_key(next) {
                        dist.insert(next, d + 1);
                        queue.push_back((next.to_owned(), d + 1));
                    }
                }
            }
        }
        KnowledgeGraph::from_triples(
            self.triples
                .iter()
                .zip(taken)
                .filter(|(_, k)| *k)
                .map(|(t, _)| t.clone()),
        )
    }

    /// One triple per line, in canonical order.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        for t in self.sorted_triples() {
            serde_json::to_writer(&mut sink, t)?;
            sink.write_all(b"\n")?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(source: R) -> Result<KnowledgeGraph> {
        let mut kg = KnowledgeGraph::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: Triple = serde_json::from_str(&line).map_err(|e| Error::Record {
                line: i + 1,
                message: e.to_string(),
            })?;
            t.validate().map_err(|message| Error::Record { line: i + 1, message })?;
            kg.add_triple(t);
        }
        Ok(kg)
    }

    /// Writes `path` (triples JSONL) and the stats header next to it.
    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.save(std::io::BufWriter::new(file))?;
        let stats_path = stats_path(path);
        let file = std::fs::File::create(&stats_path).map_err(|e| Error::file(&stats_path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.stats())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<KnowledgeGraph> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::load(std::io::BufReader::new(file))
    }
}

/// Location of the stats header written alongside a saved graph.
pub fn stats_path(kg_path: &Path) -> PathBuf {
    let mut name = kg_path.file_name().unwrap_or_default().to_os_string();
    name.push(".stats.json");
    kg_path.with_file_name(name)
}
