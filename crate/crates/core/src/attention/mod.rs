//! Attention matrices at token and word-unit granularity.
//!
//! Orientation everywhere: `matrix[[i, j]]` is the attention *from* row
//! item `i` *to* column item `j`, so each row of an encoder head is a
//! probability distribution. Going from tokens to units, rows of a unit are
//! averaged (attention from a phrase) and columns are summed (attention to a
//! phrase), which keeps every row's total mass.

#[cfg(feature = "encoder")]
mod bert;
mod fixture;

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::preprocess::{ProcessedSentence, Token, WordUnit};
use crate::{Error, Result};

#[cfg(feature = "encoder")]
pub use bert::{BertAttention, BertConfig};
pub use fixture::{AttentionFixtureEntry, FixtureAttention};

/// Encoders in this family accept 512 positions, two of which go to the
/// sequence start/end markers.
pub const DEFAULT_MAX_TOKENS: usize = 510;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadAggregation {
    #[default]
    Mean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionConfig {
    /// 1-based layer index; layer 9 of a 12-layer stack is index 8 internally.
    pub layer: usize,
    pub head_aggregation: HeadAggregation,
    pub model_id: String,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            layer: 9,
            head_aggregation: HeadAggregation::Mean,
            model_id: "bert-base-uncased".to_string(),
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self, layer_count: Option<usize>) -> Result<()> {
        if self.layer == 0 {
            return Err(Error::Config("attention layer is 1-based; got 0".into()));
        }
        if let Some(n) = layer_count {
            if self.layer > n {
                return Err(Error::Config(format!(
                    "attention layer {} exceeds encoder depth {n}",
                    self.layer
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenAttention {
    pub tokens: Vec<String>,
    pub matrix: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordAttention {
    pub units: Vec<String>,
    pub matrix: Array2<f64>,
}

impl WordAttention {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Attention from unit `from` to unit `to`.
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[[from, to]]
    }
}

/// Source of encoder attention for pipeline tokens.
pub trait AttentionProvider: Send + Sync {
    /// Token-level attention aligned one-to-one with `tokens`, special
    /// markers removed.
    fn token_attention(&self, tokens: &[Token], config: &AttentionConfig) -> Result<TokenAttention>;

    /// Providers that already hold unit-level matrices (recorded matrices)
    /// return them here; the default defers to token attention.
    fn word_attention(
        &self,
        _sentence: &ProcessedSentence,
        _config: &AttentionConfig,
    ) -> Option<Result<WordAttention>> {
        None
    }

    /// Longest pipeline-token sequence accepted, if bounded.
    fn max_input_tokens(&self) -> Option<usize> {
        None
    }

    /// Whether concurrent calls are allowed. Encoders holding device state
    /// say no and the pipeline serializes them.
    fn is_concurrent(&self) -> bool {
        false
    }
}

impl<P: AttentionProvider + ?Sized> AttentionProvider for Box<P> {
    fn token_attention(&self, tokens: &[Token], config: &AttentionConfig) -> Result<TokenAttention> {
        (**self).token_attention(tokens, config)
    }

    fn word_attention(&self, sentence: &ProcessedSentence, config: &AttentionConfig) -> Option<Result<WordAttention>> {
        (**self).word_attention(sentence, config)
    }

    fn max_input_tokens(&self) -> Option<usize> {
        (**self).max_input_tokens()
    }

    fn is_concurrent(&self) -> bool {
        (**self).is_concurrent()
    }
}

pub(crate) fn check_square(matrix: &Array2<f64>, n: usize, what: &str) -> Result<()> {
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::Shape(format!(
            "{what} matrix is {}x{}, expected {n}x{n}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if let Some(bad) = matrix.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Shape(format!("{what} matrix holds invalid weight {bad}")));
    }
    Ok(())
}

pub fn compute_token_attention(
    tokens: &[Token],
    config: &AttentionConfig,
    provider: &dyn AttentionProvider,
) -> Result<TokenAttention> {
    config.validate(None)?;
    if let Some(max) = provider.max_input_tokens() {
        if tokens.len() > max {
            return Err(Error::SentenceTooLong {
                tokens: tokens.len(),
                max,
            });
        }
    }
    let attn = provider.token_attention(tokens, config)?;
    check_square(&attn.matrix, tokens.len(), "token attention")?;
    Ok(attn)
}

/// Collapses a matrix over contiguous spans: rows are averaged over each
/// span, columns summed. `spans` must tile `0..matrix.nrows()`.
pub fn aggregate_spans(matrix: &Array2<f64>, spans: &[(usize, usize)]) -> Result<Array2<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Shape(format!("matrix is {}x{}, not square", n, matrix.ncols())));
    }
    let mut next = 0;
    for &(s, e) in spans {
        if s != next || e <= s {
            return Err(Error::Shape(format!("span [{s}, {e}) breaks the tiling at {next}")));
        }
        next = e;
    }
    if next != n {
        return Err(Error::Shape(format!("spans cover {next} of {n} tokens")));
    }
    let m = spans.len();
    let mut out = Array2::<f64>::zeros((m, m));
    for (u, &(rs, re)) in spans.iter().enumerate() {
        for (v, &(cs, ce)) in spans.iter().enumerate() {
            let mut total = 0.0;
            for i in rs..re {
                let mut row = 0.0;
                for j in cs..ce {
                    row += matrix[[i, j]];
                }
                total += row;
            }
            out[[u, v]] = total / (re - rs) as f64;
        }
    }
    Ok(out)
}

pub fn aggregate_to_words(token_attn: &TokenAttention, units: &[WordUnit]) -> Result<WordAttention> {
    let spans: Vec<(usize, usize)> = units.iter().map(|u| u.token_span).collect();
    let matrix = aggregate_spans(&token_attn.matrix, &spans)?;
    Ok(WordAttention {
        units: units.iter().map(|u| u.text.clone()).collect(),
        matrix,
    })
}

/// Word-unit attention for a sentence: provider-supplied unit matrices when
/// available, otherwise token attention aggregated over the units.
pub fn sentence_attention(
    sentence: &ProcessedSentence,
    config: &AttentionConfig,
    provider: &dyn AttentionProvider,
) -> Result<WordAttention> {
    if let Some(direct) = provider.word_attention(sentence, config) {
        let attn = direct?;
        check_square(&attn.matrix, sentence.units.len(), "word attention")?;
        return Ok(attn);
    }
    let tokens = compute_token_attention(&sentence.tokens, config, provider)?;
    aggregate_to_words(&tokens, &sentence.units)
}

/// Writes the matrix as TSV: a header row of unit texts (after an empty
/// corner cell), then one row per unit with 4-decimal cells.
pub fn dump_attention<W: Write>(word_attn: &WordAttention, mut sink: W) -> Result<()> {
    let mut header = String::new();
    for u in &word_attn.units {
        header.push('\t');
        header.push_str(u);
    }
    writeln!(sink, "{header}")?;
    for (i, u) in word_attn.units.iter().enumerate() {
        let mut line = u.clone();
        for j in 0..word_attn.units.len() {
            line.push_str(&format!("\t{:.4}", word_attn.matrix[[i, j]]));
        }
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}
