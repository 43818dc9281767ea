//! Token vocabulary and the word-embedding matrix.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const TARGET: usize = 2;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
/// Masked opinion targets are written as `Target` and lowercase to this.
pub const TARGET_TOKEN: &str = "target";

const RESERVED: [&str; 3] = [PAD_TOKEN, UNK_TOKEN, TARGET_TOKEN];

pub const DEFAULT_MAX_SIZE: usize = 65_000;
pub const DEFAULT_DIM: usize = 320;

/// Bijective token ↔ index map. Indices 0, 1, 2 are PAD, UNK and TARGET.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    max_size: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    max_size: usize,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        Vocabulary::from_tokens_unchecked(r.tokens, r.max_size)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokens: v.tokens,
            max_size: v.max_size,
        }
    }
}

impl Vocabulary {
    fn from_tokens_unchecked(tokens: Vec<String>, max_size: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            tokens,
            index,
            max_size,
        }
    }

    /// Rebuilds a vocabulary from its row order, validating the reserved
    /// prefix and uniqueness.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len()
            || tokens.iter().zip(RESERVED).any(|(t, r)| t != r)
        {
            return Err(Error::Input(format!(
                "vocabulary must start with {RESERVED:?}"
            )));
        }
        let max_size = tokens.len();
        let v = Vocabulary::from_tokens_unchecked(tokens, max_size);
        if v.index.len() != v.tokens.len() {
            return Err(Error::Input("duplicate token in vocabulary".into()));
        }
        Ok(v)
    }

    /// Index of `token`, or [`UNK`] when it is not retained.
    pub fn index(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// True when at least one corpus token is retained besides the reserved slots.
    pub fn has_corpus_tokens(&self) -> bool {
        self.tokens.len() > RESERVED.len()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.index(t.as_ref())).collect()
    }
}

/// Ranks tokens by descending frequency (ties lexicographic) and keeps as
/// many as fit in `max_size` after the reserved slots.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[Vec<S>], max_size: usize) -> Result<Vocabulary> {
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::Input("cannot build a vocabulary from an empty corpus".into()));
    }
    if max_size < RESERVED.len() {
        return Err(Error::Config(format!(
            "max_size {max_size} leaves no room for the {} reserved tokens",
            RESERVED.len()
        )));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tok in corpus.iter().flatten() {
        *counts.entry(tok.as_ref()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, _)| !RESERVED.contains(t))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - RESERVED.len());

    let tokens = RESERVED
        .iter()
        .map(|s| s.to_string())
        .chain(ranked.into_iter().map(|(t, _)| t.to_string()))
        .collect();
    Ok(Vocabulary::from_tokens_unchecked(tokens, max_size))
}

/// The `M×K` word-embedding matrix. Frozen matrices receive no gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    weights: Tensor,
}

impl EmbeddingMatrix {
    /// Wraps `weights`, pinning row [`PAD`] to zero.
    pub fn new(mut weights: Tensor) -> Result<Self> {
        if weights.shape().len() != 2 {
            return Err(Error::Input(format!(
                "embedding weights must be a matrix, got {:?}",
                weights.shape()
            )));
        }
        let k = weights.cols();
        weights.values_mut()[..k].iter_mut().for_each(|v| *v = 0.0);
        weights.set_requires_grad(true);
        Ok(EmbeddingMatrix { weights })
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn into_weights(self) -> Tensor {
        self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.weights.row(i)
    }

    pub fn is_frozen(&self) -> bool {
        !self.weights.requires_grad()
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.weights.set_requires_grad(!frozen);
    }

    pub fn checksum(&self) -> u64 {
        self.weights.checksum()
    }

    /// Row lookup: `[N×K]` whose row `i` is the embedding of `tokens[i]`.
    /// Equivalent to the one-hot product `D × W`.
    pub fn embed_sequence(&self, tokens: &[usize]) -> Result<Tensor> {
        let (m, k) = (self.rows(), self.dim());
        let mut out = Vec::with_capacity(tokens.len() * k);
        for &t in tokens {
            if t >= m {
                return Err(Error::Input(format!(
                    "token index {t} out of range for {m} embedding rows"
                )));
            }
            out.extend_from_slice(self.row(t));
        }
        Tensor::new(vec![tokens.len(), k], out)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Writes `EMB <M> <K>` followed by one `token v1 … vK` line per row.
pub fn save_embeddings(matrix: &EmbeddingMatrix, vocab: &Vocabulary, path: &Path) -> Result<()> {
    if matrix.rows() != vocab.len() {
        return Err(Error::Input(format!(
            "embedding has {} rows but vocabulary has {} tokens",
            matrix.rows(),
            vocab.len()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "EMB {} {}", matrix.rows(), matrix.dim());
    for (i, tok) in vocab.tokens().iter().enumerate() {
        out.push_str(tok);
        for v in matrix.row(i) {
            let _ = write!(out, " {v:.16e}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_embeddings(path: &Path) -> Result<(EmbeddingMatrix, Vocabulary)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty embedding file"))?;
    let dims: Vec<&str> = header.split(' ').collect();
    let (m, k) = match dims.as_slice() {
        ["EMB", m, k] => (
            m.parse::<usize>()
                .map_err(|_| Error::format(path, format!("bad row count {m:?}")))?,
            k.parse::<usize>()
                .map_err(|_| Error::format(path, format!("bad dimension {k:?}")))?,
        ),
        _ => return Err(Error::format(path, format!("bad header {header:?}"))),
    };
    if m == 0 || k == 0 {
        return Err(Error::format(path, "header declares an empty matrix"));
    }

    let mut tokens = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m * k);
    for (row, line) in lines.by_ref().take(m).enumerate() {
        let mut fields = line.split(' ');
        let tok = fields
            .next()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::format(path, format!("row {row}: missing token")))?;
        tokens.push(tok.to_string());
        let before = values.len();
        for f in fields {
            let v = f
                .parse::<f64>()
                .map_err(|_| Error::format(path, format!("row {row}: bad value {f:?}")))?;
            values.push(v);
        }
        if values.len() - before != k {
            return Err(Error::format(
                path,
                format!("row {row}: expected {k} values, found {}", values.len() - before),
            ));
        }
    }
    if tokens.len() != m {
        return Err(Error::format(
            path,
            format!("expected {m} rows, found {}", tokens.len()),
        ));
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::format(path, "trailing data after the declared rows"));
    }
    let vocab = Vocabulary::from_tokens(tokens).map_err(|e| Error::format(path, e.to_string()))?;
    let weights = Tensor::new(vec![m, k], values).map_err(|e| Error::format(path, e.to_string()))?;
    if weights.row(PAD).iter().any(|&v| v != 0.0) {
        return Err(Error::format(path, "padding row must be zero"));
    }
    Ok((EmbeddingMatrix::new(weights)?, vocab))
}
