use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_square, AttentionConfig, AttentionProvider, TokenAttention, WordAttention, DEFAULT_MAX_TOKENS};
use crate::preprocess::{ProcessedSentence, Token};
use crate::{Error, Result};

/// On-disk fixture entry: `{"units_or_tokens": [str...], "matrix": [[float...]...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttentionFixtureEntry {
    pub units_or_tokens: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl AttentionFixtureEntry {
    pub fn new(labels: Vec<String>, matrix: &Array2<f64>) -> Self {
        Self {
            units_or_tokens: labels,
            matrix: matrix.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    fn to_array(&self) -> Result<Array2<f64>> {
        let n = self.units_or_tokens.len();
        if self.matrix.len() != n || self.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "fixture for {:?} is not {n}x{n}",
                self.units_or_tokens
            )));
        }
        let flat: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        let m = Array2::from_shape_vec((n, n), flat).map_err(|e| Error::Shape(e.to_string()))?;
        check_square(&m, n, "fixture")?;
        Ok(m)
    }
}

/// Replays recorded attention matrices keyed by their label sequence.
///
/// A recording whose labels equal a sentence's unit texts is served as
/// word-level attention unchanged; one whose labels equal the token texts is
/// served as token attention and aggregated by the pipeline.
#[derive(Debug, Clone)]
pub struct FixtureAttention {
    entries: HashMap<Vec<String>, Array2<f64>>,
    max_tokens: Option<usize>,
}

impl Default for FixtureAttention {
    fn default() -> Self {
        Self {
            entries: HashMap::new(),
            max_tokens: Some(DEFAULT_MAX_TOKENS),
        }
    }
}

impl FixtureAttention {
    pub fn insert(&mut self, labels: Vec<String>, matrix: Array2<f64>) -> Result<()> {
        check_square(&matrix, labels.len(), "fixture")?;
        self.entries.insert(labels, matrix);
        Ok(())
    }

    pub fn with_max_tokens(mut self, max: Option<usize>) -> Self {
        self.max_tokens = max;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = AttentionFixtureEntry>) -> Result<Self> {
        let mut out = FixtureAttention::default();
        for e in entries {
            let m = e.to_array()?;
            out.entries.insert(e.units_or_tokens, m);
        }
        Ok(out)
    }

    /// Accepts a single object, a JSON array of objects, or JSONL.
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_entries(crate::preprocess::fixture_entries::<AttentionFixtureEntry>(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn lookup(&self, labels: &[String]) -> Option<&Array2<f64>> {
        self.entries.get(labels)
    }
}

impl AttentionProvider for FixtureAttention {
    fn token_attention(&self, tokens: &[Token], _config: &AttentionConfig) -> Result<TokenAttention> {
        let labels: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
        let matrix = self
            .lookup(&labels)
            .cloned()
            .ok_or_else(|| Error::MissingAttention(labels.join(" ")))?;
        Ok(TokenAttention {
            tokens: labels,
            matrix,
        })
    }

    fn word_attention(&self, sentence: &ProcessedSentence, _config: &AttentionConfig) -> Option<Result<WordAttention>> {
        let labels = sentence.unit_texts();
        self.lookup(&labels).map(|m| {
            Ok(WordAttention {
                units: labels,
                matrix: m.clone(),
            })
        })
    }

    fn max_input_tokens(&self) -> Option<usize> {
        self.max_tokens
    }

    fn is_concurrent(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::compute_token_attention;
    use crate::preprocess::Pos;

    fn tok(text: &str) -> Token {
        Token {
            text: text.into(),
            pos: Pos::Noun,
            dep: String::new(),
            head_index: 0,
            char_span: (0, 0),
        }
    }

    #[test]
    fn single_token_passthrough() {
        let f = FixtureAttention::from_json_str(r#"{"units_or_tokens":["rotor"],"matrix":[[1.0]]}"#).unwrap();
        let a = compute_token_attention(&[tok("rotor")], &AttentionConfig::default(), &f).unwrap();
        assert_eq!(a.matrix, ndarray::array![[1.0]]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(FixtureAttention::from_json_str(r#"{"units_or_tokens":["a","b"],"matrix":[[1.0]]}"#).is_err());
        assert!(FixtureAttention::from_json_str(r#"{"units_or_tokens":["a"],"matrix":[[-0.5]]}"#).is_err());
    }

    #[test]
    fn missing_and_over_length() {
        let f = FixtureAttention::default().with_max_tokens(Some(2));
        let cfg = AttentionConfig::default();
        assert!(matches!(
            compute_token_attention(&[tok("a")], &cfg, &f),
            Err(Error::MissingAttention(_))
        ));
        assert!(matches!(
            compute_token_attention(&[tok("a"), tok("b"), tok("c")], &cfg, &f),
            Err(Error::SentenceTooLong { tokens: 3, max: 2 })
        ));
    }
}
