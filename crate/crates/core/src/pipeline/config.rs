//! Model variants and training configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::Averaging;
use crate::chars::CharEncoderConfig;
use crate::error::{Error, Result};
use crate::models::{EncoderConfig, NetConfig};

/// The model ladder, numbered 2 to 9. Each step keeps every enhancement of
/// the one before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// #2, CNN baseline.
    Cnn,
    /// #3, + term-swap augmentation.
    CnnAug,
    /// #4, + penalty matrix.
    CnnPenalty,
    /// #5, + negation augmentation.
    CnnNegation,
    /// #6, + transferred, frozen word embeddings.
    CnnTransfer,
    /// #7, + character-level word vectors.
    CnnChar,
    /// #8, GRU encoder.
    Gru,
    /// #9, + rule-classification head.
    GruMultitask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariantFlags {
    pub term_augmentation: bool,
    pub penalty: bool,
    pub negation_augmentation: bool,
    pub transfer: bool,
    pub char_embedding: bool,
    pub gru: bool,
    pub multitask: bool,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Cnn,
        Variant::CnnAug,
        Variant::CnnPenalty,
        Variant::CnnNegation,
        Variant::CnnTransfer,
        Variant::CnnChar,
        Variant::Gru,
        Variant::GruMultitask,
    ];

    pub fn id(self) -> u8 {
        self as u8 + 2
    }

    pub fn from_id(id: u8) -> Result<Self> {
        id.checked_sub(2)
            .and_then(|i| Self::ALL.get(i as usize).copied())
            .ok_or_else(|| Error::Config(format!("unknown model variant #{id}; expected 2..=9")))
    }

    pub fn flags(self) -> VariantFlags {
        let at_least = |v: Variant| self >= v;
        VariantFlags {
            term_augmentation: at_least(Variant::CnnAug),
            penalty: at_least(Variant::CnnPenalty),
            negation_augmentation: at_least(Variant::CnnNegation),
            transfer: at_least(Variant::CnnTransfer),
            char_embedding: at_least(Variant::CnnChar),
            gru: at_least(Variant::Gru),
            multitask: at_least(Variant::GruMultitask),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Variant::Cnn => "CNN",
            Variant::CnnAug => "CNN + term aug",
            Variant::CnnPenalty => "CNN + term aug + penalty",
            Variant::CnnNegation => "CNN + term/negation aug + penalty",
            Variant::CnnTransfer => "CNN + aug + penalty + transfer",
            Variant::CnnChar => "CNN + aug + penalty + transfer + chars",
            Variant::Gru => "GRU + aug + penalty + transfer + chars",
            Variant::GruMultitask => "GRU + all + multitask",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.id())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('#');
        let id: u8 = t
            .parse()
            .map_err(|_| Error::Config(format!("model variant must be a number 2..=9, got {s:?}")))?;
        Variant::from_id(id)
    }
}

/// Parses a comma-separated list such as `2,5,9` or `#3,#4`.
pub fn parse_variant_list(s: &str) -> Result<Vec<Variant>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub seq_len: usize,
    /// Used when no transferred embedding is loaded.
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub gru_hidden: usize,
    pub cnn_filters: usize,
    pub cnn_width: usize,
    pub cnn_pool: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub drop_rate: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub max_term_variants: usize,
    pub vocab_size: usize,
    pub split_ratios: [f64; 3],
    pub averaging: Averaging,
    pub seed: u64,
    pub dictionary: Option<PathBuf>,
    pub negations: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub penalty: Option<PathBuf>,
    pub rules: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let net = NetConfig::default();
        let cc = CharEncoderConfig::default();
        TrainConfig {
            variant: Variant::GruMultitask,
            seq_len: net.seq_len,
            word_dim: net.word_dim,
            char_dim: cc.char_dim,
            char_hidden: cc.hidden,
            gru_hidden: crate::models::net::DEFAULT_GRU_HIDDEN,
            cnn_filters: crate::models::net::DEFAULT_FILTERS,
            cnn_width: crate::models::net::DEFAULT_FILTER_WIDTH,
            cnn_pool: crate::models::net::DEFAULT_POOL,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.05,
            drop_rate: net.drop_rate,
            patience: 5,
            max_term_variants: 8,
            vocab_size: crate::vocab::DEFAULT_MAX_SIZE,
            split_ratios: super::dataset::DEFAULT_RATIOS,
            averaging: Averaging::Macro,
            seed: 0,
            dictionary: None,
            negations: None,
            embeddings: None,
            penalty: None,
            rules: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl TrainConfig {
    /// Sets one field by name. Keys use `snake_case` or `kebab-case`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('-', "_");
        let path = || Some(PathBuf::from(value.trim()));
        match k.as_str() {
            "variant" => self.variant = value.parse()?,
            "seq_len" => self.seq_len = parse_num(&k, value)?,
            "word_dim" => self.word_dim = parse_num(&k, value)?,
            "char_dim" => self.char_dim = parse_num(&k, value)?,
            "char_hidden" => self.char_hidden = parse_num(&k, value)?,
            "gru_hidden" => self.gru_hidden = parse_num(&k, value)?,
            "cnn_filters" => self.cnn_filters = parse_num(&k, value)?,
            "cnn_width" => self.cnn_width = parse_num(&k, value)?,
            "cnn_pool" => self.cnn_pool = parse_num(&k, value)?,
            "epochs" => self.epochs = parse_num(&k, value)?,
            "batch_size" => self.batch_size = parse_num(&k, value)?,
            "learning_rate" => self.learning_rate = parse_num(&k, value)?,
            "drop_rate" => self.drop_rate = parse_num(&k, value)?,
            "patience" => self.patience = parse_num(&k, value)?,
            "max_term_variants" => self.max_term_variants = parse_num(&k, value)?,
            "vocab_size" => self.vocab_size = parse_num(&k, value)?,
            "split_ratios" => {
                let parts: Vec<f64> = value.split(',').map(|p| parse_num(&k, p)).collect::<Result<_>>()?;
                self.split_ratios = parts
                    .try_into()
                    .map_err(|_| Error::Config("split_ratios needs three comma-separated values".into()))?;
            }
            "averaging" => self.averaging = value.parse()?,
            "seed" => self.seed = parse_num(&k, value)?,
            "dictionary" => self.dictionary = path(),
            "negations" => self.negations = path(),
            "embeddings" => self.embeddings = path(),
            "penalty" => self.penalty = path(),
            "rules" => self.rules = path(),
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; lines starting with `#` are comments.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn load_kv(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_kv(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.seq_len == 0 || self.word_dim == 0 {
            return Err(Error::Config("seq_len and word_dim must be positive".into()));
        }
        crate::models::dropout::check_rate(self.drop_rate)
    }

    /// Network shape for this configuration's variant.
    pub fn net_config(&self) -> NetConfig {
        let flags = self.variant.flags();
        NetConfig {
            seq_len: self.seq_len,
            word_dim: self.word_dim,
            char_encoder: flags.char_embedding.then_some(CharEncoderConfig {
                char_dim: self.char_dim,
                hidden: self.char_hidden,
            }),
            encoder: if flags.gru {
                EncoderConfig::Gru {
                    hidden: self.gru_hidden,
                    bias: false,
                }
            } else {
                EncoderConfig::Cnn {
                    filters: self.cnn_filters,
                    width: self.cnn_width,
                    pool: self.cnn_pool,
                }
            },
            rule_head: flags.multitask,
            drop_rate: self.drop_rate,
        }
    }
}
