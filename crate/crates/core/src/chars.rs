//! Character-level word vectors.
//!
//! A bidirectional GRU reads the whole message one character at a time
//! (spaces included). The vector for word `i` is the concatenation of the
//! forward and backward states at the position of that word's last
//! character.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::dropout::{dropout_on_tape, Mode};
use crate::models::gru::{bigru_states, GruParams};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::text::tokenize;

pub const PAD_CHAR: usize = 0;
pub const UNK_CHAR: usize = 1;

pub const DEFAULT_CHAR_DIM: usize = 24;
pub const DEFAULT_CHAR_HIDDEN: usize = 50;

/// Corpus-derived character inventory, ordered by code point after the
/// PAD and UNK slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<char>", into = "Vec<char>")]
pub struct CharVocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl From<Vec<char>> for CharVocabulary {
    fn from(chars: Vec<char>) -> Self {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i + 2)).collect();
        CharVocabulary { chars, index }
    }
}

impl From<CharVocabulary> for Vec<char> {
    fn from(v: CharVocabulary) -> Self {
        v.chars
    }
}

impl CharVocabulary {
    pub fn build<S: AsRef<str>>(messages: &[S]) -> Self {
        let set: BTreeSet<char> = messages
            .iter()
            .flat_map(|m| char_tokenize(m.as_ref()).chars)
            .collect();
        CharVocabulary::from(set.into_iter().collect::<Vec<_>>())
    }

    /// Number of rows including PAD and UNK.
    pub fn len(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK_CHAR)
    }

    pub fn encode(&self, chars: &[char]) -> Vec<usize> {
        chars.iter().map(|&c| self.index(c)).collect()
    }
}

/// A message as one character sequence plus the last-character index of
/// every word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharSequence {
    pub chars: Vec<char>,
    pub end_positions: Vec<usize>,
}

/// Characters of the tokenized message joined by single spaces.
pub fn char_tokenize(message: &str) -> CharSequence {
    words_to_chars(&tokenize(message))
}

pub fn words_to_chars<S: AsRef<str>>(words: &[S]) -> CharSequence {
    let mut chars = Vec::new();
    let mut end_positions = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            chars.push(' ');
        }
        chars.extend(w.as_ref().chars());
        end_positions.push(chars.len() - 1);
    }
    CharSequence {
        chars,
        end_positions,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharEncoderConfig {
    pub char_dim: usize,
    /// Per direction; output width is twice this.
    pub hidden: usize,
}

impl Default for CharEncoderConfig {
    fn default() -> Self {
        CharEncoderConfig {
            char_dim: DEFAULT_CHAR_DIM,
            hidden: DEFAULT_CHAR_HIDDEN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharEncoder {
    pub vocab: CharVocabulary,
    pub table: ParamId,
    pub fwd: GruParams,
    pub bwd: GruParams,
    pub config: CharEncoderConfig,
}

impl CharEncoder {
    pub fn new(store: &mut ParamStore, vocab: CharVocabulary, config: CharEncoderConfig, rng: &mut impl Rng) -> Self {
        let d = config.char_dim;
        let mut vals: Vec<f64> = (0..vocab.len() * d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        vals[PAD_CHAR * d..(PAD_CHAR + 1) * d].iter_mut().for_each(|v| *v = 0.0);
        let table = store.add(
            "char.table",
            Tensor::new(vec![vocab.len(), d], vals).expect("shape matches"),
        );
        let fwd = GruParams::new(store, "char.fwd", d, config.hidden, false, rng);
        let bwd = GruParams::new(store, "char.bwd", d, config.hidden, false, rng);
        CharEncoder {
            vocab,
            table,
            fwd,
            bwd,
            config,
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.config.hidden
    }

    pub fn ids(&self) -> Vec<ParamId> {
        let mut v = vec![self.table];
        v.extend(self.fwd.ids());
        v.extend(self.bwd.ids());
        v
    }

    /// Forward and backward character states (input order) for `words`.
    pub fn char_states(
        &self,
        tape: &mut Tape,
        seq: &CharSequence,
        drop_rate: f64,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<(Vec<Var>, Vec<Var>)> {
        if seq.chars.is_empty() {
            return Err(Error::Input("character encoding of an empty message".into()));
        }
        let ids = self.vocab.encode(&seq.chars);
        let table = tape.param(self.table);
        let embedded = tape.gather_rows(table, &ids, Some(PAD_CHAR))?;
        let embedded = dropout_on_tape(tape, embedded, drop_rate, mode, rng)?;
        bigru_states(tape, embedded, &self.fwd, &self.bwd)
    }

    /// `[N_words × 2H]` character-level word vectors.
    pub fn encode_words<S: AsRef<str>>(
        &self,
        tape: &mut Tape,
        words: &[S],
        drop_rate: f64,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<Var> {
        let seq = words_to_chars(words);
        let (f, b) = self.char_states(tape, &seq, drop_rate, mode, rng)?;
        let mut rows = Vec::with_capacity(seq.end_positions.len());
        for &e in &seq.end_positions {
            rows.push(tape.concat(&[f[e], b[e]], 0)?);
        }
        tape.stack_rows(&rows)
    }

    /// Like [`CharEncoder::encode_words`] but with exactly `length` rows:
    /// words past `length` are dropped (they still feed the recurrence) and
    /// missing rows are zero.
    pub fn encode_padded<S: AsRef<str>>(
        &self,
        tape: &mut Tape,
        words: &[S],
        length: usize,
        drop_rate: f64,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<Var> {
        let width = self.output_dim();
        if words.is_empty() {
            return tape.constant(vec![length, width], vec![0.0; length * width]);
        }
        let seq = words_to_chars(words);
        let (f, b) = self.char_states(tape, &seq, drop_rate, mode, rng)?;
        let mut rows = Vec::with_capacity(length);
        for i in 0..length {
            let row = match seq.end_positions.get(i) {
                Some(&e) => tape.concat(&[f[e], b[e]], 0)?,
                None => tape.constant(vec![width], vec![0.0; width])?,
            };
            rows.push(row);
        }
        tape.stack_rows(&rows)
    }

    /// Inference-mode encoding of a raw message.
    pub fn encode_message(&self, store: &ParamStore, message: &str) -> Result<Tensor> {
        let words = tokenize(message);
        let mut tape = Tape::new(store);
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let out = self.encode_words(&mut tape, &words, 0.0, Mode::Infer, &mut rng)?;
        Ok(tape.tensor(out))
    }
}

/// Row-wise `[word | char]` concatenation.
pub fn combine_word_char(tape: &mut Tape, word_vecs: Var, char_vecs: Var) -> Result<Var> {
    let (ws, cs) = (tape.shape(word_vecs).to_vec(), tape.shape(char_vecs).to_vec());
    if ws.len() != 2 || cs.len() != 2 || ws[0] != cs[0] {
        return Err(Error::Dimension {
            op: "combine_word_char",
            left: ws,
            right: cs,
        });
    }
    tape.concat(&[word_vecs, char_vecs], 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn end_positions_index_last_chars() {
        let s = char_tokenize("ab cd");
        assert_eq!(s.chars, vec!['a', 'b', ' ', 'c', 'd']);
        assert_eq!(s.end_positions, vec![1, 4]);
        assert_eq!(char_tokenize("x").end_positions, vec![0]);
        assert!(char_tokenize("").end_positions.is_empty());
    }

    #[test]
    fn vocabulary_is_sorted_with_reserved_slots() {
        let v = CharVocabulary::build(&["ba", "thích"]);
        assert_eq!(v.index('a'), 2);
        assert_eq!(v.index('b'), 3);
        assert_ne!(v.index('í'), UNK_CHAR);
        assert_eq!(v.index('Z'), UNK_CHAR);
    }

    #[test]
    fn shape_and_determinism() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vocab = CharVocabulary::build(&["one two three four five six seven eight nine ten"]);
        let enc = CharEncoder::new(&mut store, vocab, CharEncoderConfig::default(), &mut rng);
        let msg = "one two three four five six seven eight nine ten";
        let a = enc.encode_message(&store, msg).unwrap();
        let b = enc.encode_message(&store, msg).unwrap();
        assert_eq!(a.shape(), &[10, 100]);
        assert_eq!(a, b);
        assert!(matches!(enc.encode_message(&store, "  "), Err(Error::Input(_))));
    }

    #[test]
    fn combine_rejects_row_mismatch() {
        let mut tape = Tape::detached();
        let w = tape.leaf(&Tensor::zeros(&[3, 4]));
        let c = tape.leaf(&Tensor::zeros(&[2, 2]));
        assert!(matches!(combine_word_char(&mut tape, w, c), Err(Error::Dimension { .. })));
    }
}
