//! Tokenization and fixed-length index sequences.

use crate::vocab::{Vocabulary, PAD};

pub const DEFAULT_SEQ_LEN: usize = 10;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Punct,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// A token with its byte range in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    /// Lowercased token text.
    pub text: String,
}

/// Tokens of `text` with byte offsets: maximal runs of word characters or
/// of punctuation inside each whitespace-separated chunk. An apostrophe
/// between two word characters stays inside the word.
pub fn token_spans(text: &str) -> Vec<TokenSpan> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut current: Option<(usize, Class)> = None;
    let close = |out: &mut Vec<TokenSpan>, start: usize, end: usize| {
        out.push(TokenSpan {
            start,
            end,
            text: text[start..end].to_lowercase(),
        });
    };
    for (i, &(pos, c)) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if let Some((start, _)) = current.take() {
                close(&mut out, start, pos);
            }
            continue;
        }
        let inner_apostrophe = c == '\''
            && i > 0
            && i + 1 < chars.len()
            && is_word_char(chars[i - 1].1)
            && is_word_char(chars[i + 1].1);
        let cls = if is_word_char(c) || inner_apostrophe {
            Class::Word
        } else {
            Class::Punct
        };
        match current {
            Some((start, k)) if k != cls => {
                close(&mut out, start, pos);
                current = Some((pos, cls));
            }
            Some(_) => {}
            None => current = Some((pos, cls)),
        }
    }
    if let Some((start, _)) = current {
        close(&mut out, start, text.len());
    }
    out
}

/// Lowercases, splits on whitespace, and detaches punctuation runs from
/// words. `"So sad :("` becomes `["so", "sad", ":("]`.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text).into_iter().map(|s| s.text).collect()
}

/// Indices of the first `length` tokens, right-padded with [`PAD`].
pub fn pad_truncate<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, length: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens.iter().take(length).map(|t| vocab.index(t.as_ref())).collect();
    ids.resize(length, PAD);
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::build_vocabulary;

    #[test]
    fn emoticon_stays_whole() {
        assert_eq!(tokenize("So sad :("), vec!["so", "sad", ":("]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn punctuation_detached() {
        assert_eq!(
            tokenize("Company A is better. Target is horrible!"),
            vec!["company", "a", "is", "better", ".", "target", "is", "horrible", "!"]
        );
        assert_eq!(tokenize("Ipad?"), vec!["ipad", "?"]);
        assert_eq!(tokenize("don't 'quote'"), vec!["don't", "'", "quote", "'"]);
        assert_eq!(tokenize("Thích quá"), vec!["thích", "quá"]);
    }

    #[test]
    fn pad_and_truncate() {
        let toks: Vec<String> = (0..15).map(|i| format!("w{i}")).collect();
        let vocab = build_vocabulary(std::slice::from_ref(&toks), 100).unwrap();
        let short = pad_truncate(&toks[..3], &vocab, 10);
        assert_eq!(short.len(), 10);
        assert!(short[3..].iter().all(|&i| i == PAD));
        assert!(short[..3].iter().all(|&i| i != PAD));
        let long = pad_truncate(&toks, &vocab, 10);
        assert_eq!(long, vocab.encode(&toks[..10]));
    }
}
