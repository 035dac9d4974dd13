//! BERT-family encoder run on CPU to read out self-attention weights.
//!
//! A model directory holds `config.json`, `model.safetensors` (f32) and
//! either `tokenizer.json` or a WordPiece `vocab.txt`. Only the layers up to
//! the requested one are evaluated. Pipeline tokens are fed pre-split so
//! every token owns a contiguous run of word pieces; piece rows are averaged
//! and piece columns summed back onto pipeline tokens, the same rule used for
//! word units.

use std::path::{Path, PathBuf};

use ndarray::{s, Array1, Array2, Axis};
use safetensors::{Dtype, SafeTensors};
use serde::Deserialize;
use tokenizers::models::wordpiece::WordPiece;
use tokenizers::normalizers::BertNormalizer;
use tokenizers::pre_tokenizers::bert::BertPreTokenizer;
use tokenizers::processors::bert::BertProcessing;
use tokenizers::Tokenizer;

use super::{aggregate_spans, AttentionConfig, AttentionProvider, TokenAttention};
use crate::preprocess::Token;
use crate::{Error, Result};

/// Environment variable naming the directory that holds model folders.
pub const CACHE_ENV: &str = "PATENT_KG_CACHE";

#[derive(Debug, Clone, Deserialize)]
pub struct BertConfig {
    pub hidden_size: usize,
    pub num_attention_heads: usize,
    pub num_hidden_layers: usize,
    pub intermediate_size: usize,
    #[serde(default = "default_max_positions")]
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_act")]
    pub hidden_act: String,
}

fn default_max_positions() -> usize {
    512
}
fn default_type_vocab() -> usize {
    2
}
fn default_eps() -> f64 {
    1e-12
}
fn default_act() -> String {
    "gelu".into()
}

struct Linear {
    weight_t: Array2<f32>, // (in, out)
    bias: Array1<f32>,
}

impl Linear {
    fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        x.dot(&self.weight_t) + &self.bias
    }
}

struct LayerNorm {
    gamma: Array1<f32>,
    beta: Array1<f32>,
    eps: f32,
}

impl LayerNorm {
    fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            let n = row.len() as f32;
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
            let denom = (var + self.eps).sqrt();
            row.mapv_inplace(|v| (v - mean) / denom);
        }
        out * &self.gamma + &self.beta
    }
}

struct EncoderLayer {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
}

struct Weights {
    word: Array2<f32>,
    position: Array2<f32>,
    token_type: Array2<f32>,
    embed_norm: LayerNorm,
    layers: Vec<EncoderLayer>,
}

struct TensorStore<'a> {
    tensors: SafeTensors<'a>,
    prefix: &'static str,
}

impl TensorStore<'_> {
    fn raw(&self, name: &str) -> Result<(Vec<usize>, Vec<f32>)> {
        let full = format!("{}{}", self.prefix, name);
        let view = self
            .tensors
            .tensor(&full)
            .map_err(|e| Error::Model(format!("tensor {full}: {e}")))?;
        if view.dtype() != Dtype::F32 {
            return Err(Error::Model(format!("tensor {full} has dtype {:?}; only F32 is supported", view.dtype())));
        }
        let data = view
            .data()
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok((view.shape().to_vec(), data))
    }

    fn matrix(&self, name: &str) -> Result<Array2<f32>> {
        let (shape, data) = self.raw(name)?;
        if shape.len() != 2 {
            return Err(Error::Model(format!("tensor {name} has rank {}", shape.len())));
        }
        Array2::from_shape_vec((shape[0], shape[1]), data).map_err(|e| Error::Model(e.to_string()))
    }

    fn vector(&self, name: &str) -> Result<Array1<f32>> {
        let (shape, data) = self.raw(name)?;
        if shape.len() != 1 {
            return Err(Error::Model(format!("tensor {name} has rank {}", shape.len())));
        }
        Ok(Array1::from(data))
    }

    fn linear(&self, name: &str) -> Result<Linear> {
        Ok(Linear {
            weight_t: self.matrix(&format!("{name}.weight"))?.reversed_axes(),
            bias: self.vector(&format!("{name}.bias"))?,
        })
    }

    fn layer_norm(&self, name: &str, eps: f64) -> Result<LayerNorm> {
        let (gamma, beta) = match self.vector(&format!("{name}.weight")) {
            Ok(g) => (g, self.vector(&format!("{name}.bias"))?),
            Err(_) => (
                self.vector(&format!("{name}.gamma"))?,
                self.vector(&format!("{name}.beta"))?,
            ),
        };
        Ok(LayerNorm {
            gamma,
            beta,
            eps: eps as f32,
        })
    }
}

fn gelu(x: f32) -> f32 {
    0.5 * x * (1.0 + libm::erff(x / std::f32::consts::SQRT_2))
}

fn gelu_tanh(x: f32) -> f32 {
    let c = (2.0 / std::f32::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
}

fn softmax_rows(m: &mut Array2<f32>) {
    for mut row in m.rows_mut() {
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// CPU attention provider backed by a local BERT checkpoint.
pub struct BertAttention {
    config: BertConfig,
    weights: Weights,
    tokenizer: Tokenizer,
    model_dir: PathBuf,
}

impl std::fmt::Debug for BertAttention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BertAttention")
            .field("model_dir", &self.model_dir)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl BertAttention {
    /// `model_id` as given if it is an existing directory, otherwise
    /// `$PATENT_KG_CACHE/<model_id>`.
    pub fn resolve_model_dir(model_id: &str) -> PathBuf {
        let direct = PathBuf::from(model_id);
        if direct.is_dir() {
            return direct;
        }
        match std::env::var_os(CACHE_ENV) {
            Some(cache) => PathBuf::from(cache).join(model_id),
            None => direct,
        }
    }

    pub fn from_model_id(model_id: &str) -> Result<Self> {
        Self::load(Self::resolve_model_dir(model_id))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| Error::Model(format!("{}: {e}", dir.join(name).display())));

        let config: BertConfig = serde_json::from_slice(&read("config.json")?)
            .map_err(|e| Error::Model(format!("config.json: {e}")))?;
        if config.num_attention_heads == 0 || config.hidden_size % config.num_attention_heads != 0 {
            return Err(Error::Model(format!(
                "hidden size {} is not divisible by {} heads",
                config.hidden_size, config.num_attention_heads
            )));
        }

        let bytes = read("model.safetensors")?;
        let tensors = SafeTensors::deserialize(&bytes).map_err(|e| Error::Model(format!("model.safetensors: {e}")))?;
        let prefix = if tensors.names().iter().any(|n| n.starts_with("bert.")) { "bert." } else { "" };
        let store = TensorStore { tensors, prefix };
        let weights = Self::load_weights(&store, &config)?;
        let tokenizer = Self::load_tokenizer(dir)?;

        Ok(Self {
            config,
            weights,
            tokenizer,
            model_dir: dir.to_path_buf(),
        })
    }

    fn load_weights(store: &TensorStore<'_>, config: &BertConfig) -> Result<Weights> {
        let eps = config.layer_norm_eps;
        let mut layers = Vec::with_capacity(config.num_hidden_layers);
        for i in 0..config.num_hidden_layers {
            let p = format!("encoder.layer.{i}");
            layers.push(EncoderLayer {
                query: store.linear(&format!("{p}.attention.self.query"))?,
                key: store.linear(&format!("{p}.attention.self.key"))?,
                value: store.linear(&format!("{p}.attention.self.value"))?,
                attn_out: store.linear(&format!("{p}.attention.output.dense"))?,
                attn_norm: store.layer_norm(&format!("{p}.attention.output.LayerNorm"), eps)?,
                intermediate: store.linear(&format!("{p}.intermediate.dense"))?,
                output: store.linear(&format!("{p}.output.dense"))?,
                out_norm: store.layer_norm(&format!("{p}.output.LayerNorm"), eps)?,
            });
        }
        Ok(Weights {
            word: store.matrix("embeddings.word_embeddings.weight")?,
            position: store.matrix("embeddings.position_embeddings.weight")?,
            token_type: store.matrix("embeddings.token_type_embeddings.weight")?,
            embed_norm: store.layer_norm("embeddings.LayerNorm", eps)?,
            layers,
        })
    }

    fn load_tokenizer(dir: &Path) -> Result<Tokenizer> {
        let json = dir.join("tokenizer.json");
        let mut tokenizer = if json.is_file() {
            Tokenizer::from_file(&json).map_err(|e| Error::Model(format!("{}: {e}", json.display())))?
        } else {
            let vocab = dir.join("vocab.txt");
            let vocab_str = vocab.to_str().ok_or_else(|| Error::Model("non UTF-8 model path".into()))?;
            let model = WordPiece::from_file(vocab_str)
                .unk_token("[UNK]".into())
                .build()
                .map_err(|e| Error::Model(format!("{}: {e}", vocab.display())))?;
            let id = |t: &str| {
                model_token_id(&model, t).ok_or_else(|| Error::Model(format!("vocab.txt lacks {t}")))
            };
            let (cls, sep) = (id("[CLS]")?, id("[SEP]")?);
            let mut tk = Tokenizer::new(model);
            tk.with_normalizer(Some(BertNormalizer::default()));
            tk.with_pre_tokenizer(Some(BertPreTokenizer));
            tk.with_post_processor(Some(BertProcessing::new(("[SEP]".into(), sep), ("[CLS]".into(), cls))));
            tk
        };
        tokenizer
            .with_truncation(None)
            .map_err(|e| Error::Model(e.to_string()))?;
        tokenizer.with_padding(None);
        Ok(tokenizer)
    }

    pub fn config(&self) -> &BertConfig {
        &self.config
    }

    pub fn model_dir(&self) -> &Path {
        &self.model_dir
    }

    /// Head-mean attention of `layer` (1-based) over the full piece sequence
    /// including markers, with the piece strings and the pipeline word each
    /// piece belongs to (`None` for markers).
    pub fn piece_attention(&self, words: &[&str], layer: usize) -> Result<(Vec<String>, Vec<Option<u32>>, Array2<f32>)> {
        if layer == 0 || layer > self.config.num_hidden_layers {
            return Err(Error::Config(format!(
                "attention layer {layer} outside 1..={}",
                self.config.num_hidden_layers
            )));
        }
        let encoding = self
            .tokenizer
            .encode(words, true)
            .map_err(|e| Error::Model(format!("tokenizer: {e}")))?;
        let ids = encoding.get_ids();
        let max = self.config.max_position_embeddings;
        if ids.len() > max {
            return Err(Error::SentenceTooLong {
                tokens: ids.len(),
                max,
            });
        }
        let types = encoding.get_type_ids();
        let attn = self.forward(ids, types, layer)?;
        Ok((encoding.get_tokens().to_vec(), encoding.get_word_ids().to_vec(), attn))
    }

    fn forward(&self, ids: &[u32], type_ids: &[u32], layer: usize) -> Result<Array2<f32>> {
        let w = &self.weights;
        let n = ids.len();
        let hidden = self.config.hidden_size;
        let heads = self.config.num_attention_heads;
        let head_dim = hidden / heads;
        let scale = 1.0 / (head_dim as f32).sqrt();

        let mut h = Array2::<f32>::zeros((n, hidden));
        for (pos, (&id, &ty)) in ids.iter().zip(type_ids).enumerate() {
            let (id, ty) = (id as usize, ty as usize);
            if id >= w.word.nrows() || ty >= w.token_type.nrows() {
                return Err(Error::Model(format!("token id {id} / type {ty} outside embedding tables")));
            }
            let mut row = h.row_mut(pos);
            row += &w.word.row(id);
            row += &w.position.row(pos);
            row += &w.token_type.row(ty);
        }
        let mut h = w.embed_norm.forward(&h);

        for (li, l) in w.layers.iter().take(layer).enumerate() {
            let q = l.query.forward(&h);
            let k = l.key.forward(&h);
            let v = l.value.forward(&h);
            let last = li + 1 == layer;
            let mut mean = Array2::<f32>::zeros((n, n));
            let mut context = Array2::<f32>::zeros((n, hidden));
            for head in 0..heads {
                let cols = s![.., head * head_dim..(head + 1) * head_dim];
                let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
                softmax_rows(&mut scores);
                if last {
                    mean += &scores;
                } else {
                    context.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
                }
            }
            if last {
                return Ok(mean / heads as f32);
            }
            let attn = l.attn_out.forward(&context) + &h;
            let h1 = l.attn_norm.forward(&attn);
            let act: fn(f32) -> f32 = if self.config.hidden_act == "gelu_new" { gelu_tanh } else { gelu };
            let inter = l.intermediate.forward(&h1).mapv(act);
            h = l.out_norm.forward(&(l.output.forward(&inter) + &h1));
        }
        Err(Error::Config(format!("attention layer {layer} was not reached")))
    }
}

fn model_token_id(model: &WordPiece, token: &str) -> Option<u32> {
    use tokenizers::Model;
    model.token_to_id(token)
}

impl AttentionProvider for BertAttention {
    fn token_attention(&self, tokens: &[Token], config: &AttentionConfig) -> Result<TokenAttention> {
        config.validate(Some(self.config.num_hidden_layers))?;
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        let (_, word_ids, attn) = self.piece_attention(&words, config.layer)?;

        // drop marker rows/columns, no renormalization
        let keep: Vec<usize> = word_ids
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.map(|_| i))
            .collect();
        let mut spans = Vec::with_capacity(tokens.len());
        let mut start = 0usize;
        for (word, _) in tokens.iter().enumerate() {
            let count = keep
                .iter()
                .filter(|&&i| word_ids[i] == Some(word as u32))
                .count();
            let contiguous = keep
                .iter()
                .skip(start)
                .take(count)
                .all(|&i| word_ids[i] == Some(word as u32));
            if count == 0 || !contiguous {
                return Err(Error::Shape(format!(
                    "token {word} {:?} has no contiguous word pieces",
                    tokens[word].text
                )));
            }
            spans.push((start, start + count));
            start += count;
        }
        if start != keep.len() {
            return Err(Error::Shape("word pieces left unassigned".into()));
        }
        let pieces = attn
            .select(Axis(0), &keep)
            .select(Axis(1), &keep)
            .mapv(f64::from);
        let matrix = aggregate_spans(&pieces, &spans)?;
        Ok(TokenAttention {
            tokens: words.iter().map(|w| w.to_string()).collect(),
            matrix,
        })
    }

    fn max_input_tokens(&self) -> Option<usize> {
        Some(self.config.max_position_embeddings.saturating_sub(2))
    }
}
