use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParseProvider, SentenceParse};
use crate::{Error, Result};

/// On-disk fixture entry:
/// `{"sentence": str, "tokens": [{"text","pos","dep","head_index"}...], "noun_chunks": [[start,end)...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureParseEntry {
    pub sentence: String,
    #[serde(flatten)]
    pub parse: SentenceParse,
}

/// Replays recorded parses, keyed by trimmed sentence text.
#[derive(Debug, Clone, Default)]
pub struct FixtureParser {
    entries: HashMap<String, SentenceParse>,
}

impl FixtureParser {
    pub fn insert(&mut self, sentence: &str, parse: SentenceParse) {
        self.entries.insert(sentence.trim().to_string(), parse);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Accepts a single object, a JSON array of objects, or JSONL.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let entries = parse_fixture_entries::<FixtureParseEntry>(text)?;
        let mut out = FixtureParser::default();
        for e in entries {
            out.insert(&e.sentence, e.parse);
        }
        Ok(out)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json_str(&text)
    }
}

impl ParseProvider for FixtureParser {
    fn parse(&self, sentence: &str) -> Result<SentenceParse> {
        self.entries
            .get(sentence.trim())
            .cloned()
            .ok_or_else(|| Error::Parse {
                sentence: sentence.to_string(),
                message: "no fixture parse recorded for this sentence".into(),
            })
    }
}

/// Shared loader for fixture files: a JSON object, an array of objects, or
/// one object per line.
pub(crate) fn parse_fixture_entries<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(trimmed)?);
    }
    if let Ok(single) = serde_json::from_str::<T>(trimmed) {
        return Ok(vec![single]);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Pos;

    #[test]
    fn loads_all_layouts() {
        let obj = r#"{"sentence":"a rim","tokens":[{"text":"a","pos":"DET","dep":"det","head_index":1},{"text":"rim","pos":"NOUN","dep":"ROOT","head_index":1}],"noun_chunks":[[0,2]]}"#;
        let single = FixtureParser::from_json_str(obj).unwrap();
        let array = FixtureParser::from_json_str(&format!("[{obj}]")).unwrap();
        let jsonl = FixtureParser::from_json_str(&format!("{obj}\n\n{}", obj.replace("a rim\"", "a rim \""))).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(array.len(), 1);
        assert_eq!(jsonl.len(), 1);
        let p = single.parse(" a rim ").unwrap();
        assert_eq!(p.tokens[1].pos, Pos::Noun);
        assert_eq!(p.noun_chunks, vec![(0, 2)]);
        assert!(single.parse("a tube").is_err());
    }

    #[test]
    fn unknown_tags_collapse_to_other() {
        let obj = r#"{"sentence":"and","tokens":[{"text":"and","pos":"CCONJ","dep":"cc","head_index":0}],"noun_chunks":[]}"#;
        let p = FixtureParser::from_json_str(obj).unwrap().parse("and").unwrap();
        assert_eq!(p.tokens[0].pos, Pos::Other);
    }

    #[test]
    fn bad_jsonl_line_is_reported() {
        let err = FixtureParser::from_json_str("{\"sentence\":\"x\",\"tokens\":[]}\n{oops").unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, .. }));
    }
}
