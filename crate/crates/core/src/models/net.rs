//! The full classifier: word embeddings (optionally joined with
//! character-level word vectors), a CNN or GRU encoder, a sentiment head,
//! and an optional rule head sharing the same encoder output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cnn::{cnn_encode, CnnEncoderParams};
use super::dropout::{check_rate, dropout_on_tape, Mode};
use super::gru::{gru_run, GruParams};
use super::linear::Linear;
use crate::chars::{combine_word_char, CharEncoder, CharEncoderConfig, CharVocabulary};
use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::text::{pad_truncate, tokenize};
use crate::vocab::{EmbeddingMatrix, Vocabulary, PAD};

pub const DEFAULT_GRU_HIDDEN: usize = 200;
pub const DEFAULT_FILTERS: usize = 64;
pub const DEFAULT_FILTER_WIDTH: usize = 3;
pub const DEFAULT_POOL: usize = 2;
/// Read as a keep probability of 0.7.
pub const DEFAULT_DROP_RATE: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EncoderConfig {
    Cnn { filters: usize, width: usize, pool: usize },
    Gru { hidden: usize, bias: bool },
}

impl EncoderConfig {
    pub fn default_cnn() -> Self {
        EncoderConfig::Cnn {
            filters: DEFAULT_FILTERS,
            width: DEFAULT_FILTER_WIDTH,
            pool: DEFAULT_POOL,
        }
    }

    pub fn default_gru() -> Self {
        EncoderConfig::Gru {
            hidden: DEFAULT_GRU_HIDDEN,
            bias: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub seq_len: usize,
    /// Ignored when a pretrained embedding is supplied.
    pub word_dim: usize,
    pub char_encoder: Option<CharEncoderConfig>,
    pub encoder: EncoderConfig,
    pub rule_head: bool,
    pub drop_rate: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            seq_len: crate::text::DEFAULT_SEQ_LEN,
            word_dim: crate::vocab::DEFAULT_DIM,
            char_encoder: Some(CharEncoderConfig::default()),
            encoder: EncoderConfig::default_gru(),
            rule_head: true,
            drop_rate: DEFAULT_DROP_RATE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Encoder {
    Cnn(CnnEncoderParams),
    Gru(GruParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentimentNet {
    pub config: NetConfig,
    pub store: ParamStore,
    pub vocab: Vocabulary,
    pub word_embedding: ParamId,
    pub char_encoder: Option<CharEncoder>,
    pub encoder: Encoder,
    pub sentiment_head: Linear,
    pub rule_head: Option<Linear>,
}

/// Output nodes of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct NetOutput {
    pub features: Var,
    pub sentiment: Var,
    pub rule: Option<Var>,
}

/// Class probabilities for one message.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub sentiment: [f64; 3],
    pub rule: Option<[f64; 4]>,
}

impl SentimentNet {
    /// Builds a network over `vocab`. A supplied `embedding` must have one
    /// row per vocabulary token; its frozen flag is kept.
    pub fn new(
        config: NetConfig,
        vocab: Vocabulary,
        char_vocab: Option<CharVocabulary>,
        embedding: Option<EmbeddingMatrix>,
        seed: u64,
    ) -> Result<Self> {
        check_rate(config.drop_rate)?;
        if config.seq_len == 0 {
            return Err(Error::Config("sequence length must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();

        let (word_embedding, word_dim) = match embedding {
            Some(m) => {
                if m.rows() != vocab.len() {
                    return Err(Error::Config(format!(
                        "embedding has {} rows but vocabulary has {} tokens",
                        m.rows(),
                        vocab.len()
                    )));
                }
                let frozen = m.is_frozen();
                let dim = m.dim();
                let id = store.add("word_embedding", m.into_weights());
                store.get_mut(id).set_requires_grad(!frozen);
                (id, dim)
            }
            None => {
                let k = config.word_dim;
                let mut vals: Vec<f64> = (0..vocab.len() * k).map(|_| rng.gen_range(-0.1..0.1)).collect();
                vals[PAD * k..(PAD + 1) * k].iter_mut().for_each(|v| *v = 0.0);
                let id = store.add("word_embedding", Tensor::new(vec![vocab.len(), k], vals)?);
                (id, k)
            }
        };
        let mut config = config;
        config.word_dim = word_dim;

        let char_encoder = match config.char_encoder {
            Some(cc) => {
                let cv = char_vocab.ok_or_else(|| {
                    Error::Config("character encoder enabled but no character vocabulary given".into())
                })?;
                Some(CharEncoder::new(&mut store, cv, cc, &mut rng))
            }
            None => None,
        };
        let input_dim = word_dim + char_encoder.as_ref().map_or(0, CharEncoder::output_dim);

        let (encoder, feature_dim) = match config.encoder {
            EncoderConfig::Cnn { filters, width, pool } => {
                if pool == 0 || !config.seq_len.is_multiple_of(pool) {
                    return Err(Error::Config(format!(
                        "pooling window {pool} does not divide sequence length {}",
                        config.seq_len
                    )));
                }
                if width == 0 || width > config.seq_len {
                    return Err(Error::Config(format!(
                        "filter width {width} must be in 1..={}",
                        config.seq_len
                    )));
                }
                let p = CnnEncoderParams::new(&mut store, "cnn", input_dim, filters, width, pool, &mut rng);
                let d = p.output_dim(config.seq_len);
                (Encoder::Cnn(p), d)
            }
            EncoderConfig::Gru { hidden, bias } => {
                let p = GruParams::new(&mut store, "gru", input_dim, hidden, bias, &mut rng);
                (Encoder::Gru(p), hidden)
            }
        };
        let sentiment_head = Linear::new(&mut store, "sentiment_head", feature_dim, 3, &mut rng);
        let rule_head = config
            .rule_head
            .then(|| Linear::new(&mut store, "rule_head", feature_dim, 4, &mut rng));

        Ok(SentimentNet {
            config,
            store,
            vocab,
            word_embedding,
            char_encoder,
            encoder,
            sentiment_head,
            rule_head,
        })
    }

    pub fn is_embedding_frozen(&self) -> bool {
        !self.store.get(self.word_embedding).requires_grad()
    }

    pub fn set_embedding_frozen(&mut self, frozen: bool) {
        self.store.get_mut(self.word_embedding).set_requires_grad(!frozen);
    }

    pub fn embedding_checksum(&self) -> u64 {
        self.store.get(self.word_embedding).checksum()
    }

    /// Width of one embedded row: word dimension plus character width.
    pub fn input_dim(&self) -> usize {
        self.config.word_dim + self.char_encoder.as_ref().map_or(0, CharEncoder::output_dim)
    }

    /// Embedded message `[seq_len × input_dim]`, before any dropout.
    pub fn embed<S: AsRef<str>>(&self, tape: &mut Tape, tokens: &[S], mode: Mode, rng: &mut impl Rng) -> Result<Var> {
        let ids = pad_truncate(tokens, &self.vocab, self.config.seq_len);
        let table = tape.param(self.word_embedding);
        let words = tape.gather_rows(table, &ids, Some(PAD))?;
        match &self.char_encoder {
            Some(enc) => {
                let chars = enc.encode_padded(tape, tokens, self.config.seq_len, self.config.drop_rate, mode, rng)?;
                combine_word_char(tape, words, chars)
            }
            None => Ok(words),
        }
    }

    /// Shared stack: embedding, encoder, and the encoder output that both
    /// heads read.
    pub fn features<S: AsRef<str>>(&self, tape: &mut Tape, tokens: &[S], mode: Mode, rng: &mut impl Rng) -> Result<Var> {
        let x = self.embed(tape, tokens, mode, rng)?;
        let x = dropout_on_tape(tape, x, self.config.drop_rate, mode, rng)?;
        match &self.encoder {
            Encoder::Cnn(p) => cnn_encode(tape, x, p),
            Encoder::Gru(p) => Ok(gru_run(tape, x, None, p)?.1),
        }
    }

    pub fn forward<S: AsRef<str>>(&self, tape: &mut Tape, tokens: &[S], mode: Mode, rng: &mut impl Rng) -> Result<NetOutput> {
        let features = self.features(tape, tokens, mode, rng)?;
        let head_in = dropout_on_tape(tape, features, self.config.drop_rate, mode, rng)?;
        let logits = self.sentiment_head.forward(tape, head_in)?;
        let sentiment = tape.softmax(logits)?;
        let rule = match &self.rule_head {
            Some(h) => {
                let logits = h.forward(tape, head_in)?;
                Some(tape.softmax(logits)?)
            }
            None => None,
        };
        Ok(NetOutput {
            features,
            sentiment,
            rule,
        })
    }

    /// Inference on raw text.
    pub fn predict(&self, text: &str) -> Result<Prediction> {
        self.predict_tokens(&tokenize(text))
    }

    pub fn predict_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Prediction> {
        let mut tape = Tape::new(&self.store);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = self.forward(&mut tape, tokens, Mode::Infer, &mut rng)?;
        let mut sentiment = [0.0; 3];
        sentiment.copy_from_slice(tape.value(out.sentiment));
        let rule = out.rule.map(|r| {
            let mut v = [0.0; 4];
            v.copy_from_slice(tape.value(r));
            v
        });
        Ok(Prediction { sentiment, rule })
    }

    /// Both heads' probabilities. Train mode draws dropout masks from `seed`.
    pub fn forward_multitask(&self, text: &str, mode: Mode, seed: u64) -> Result<(Tensor, Tensor)> {
        if self.rule_head.is_none() {
            return Err(Error::Config("network has no rule head".into()));
        }
        let tokens = tokenize(text);
        let mut tape = Tape::new(&self.store);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = self.forward(&mut tape, &tokens, mode, &mut rng)?;
        let rule = out.rule.expect("rule head present");
        Ok((tape.tensor(out.sentiment), tape.tensor(rule)))
    }

    /// Parameters that belong to the shared stack (everything but the heads).
    pub fn shared_params(&self) -> Vec<ParamId> {
        let heads: Vec<ParamId> = self
            .sentiment_head
            .ids()
            .into_iter()
            .chain(self.rule_head.iter().flat_map(|h| h.ids()))
            .collect();
        self.store.ids().filter(|id| !heads.contains(id)).collect()
    }
}
