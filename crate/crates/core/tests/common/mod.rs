//! Shared helpers for the integration tests: a finite-difference gradient
//! checker, independent oracles, and seeded synthetic corpora.
#![allow(dead_code)]

pub mod suite;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentikit::labels::Sentiment;
use sentikit::pipeline::LabeledMessage;
use sentikit::tensor::{ParamStore, Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error, so gradients that are zero
/// (or nearly) are compared in absolute terms.
pub const FD_FLOOR: f64 = 1e-2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// `Σ wᵢ·vᵢ` with fixed random weights, turning any node into a scalar
/// whose gradient exercises every output element.
pub fn project(tape: &mut Tape, v: Var, seed: u64) -> Var {
    let shape = tape.shape(v).to_vec();
    let mut r = rng(seed);
    let w = uniform(&mut r, &shape, -1.0, 1.0);
    let w = tape.leaf(&w);
    let h = tape.hadamard(v, w).unwrap();
    tape.sum(h)
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
}

/// Central-difference check of every trainable parameter reachable from
/// `owner`'s store. `loss` must be deterministic.
pub fn grad_check<T>(
    owner: &mut T,
    store: impl Fn(&T) -> &ParamStore,
    store_mut: impl Fn(&mut T) -> &mut ParamStore,
    loss: impl Fn(&T, &mut Tape) -> Var,
) -> GradReport {
    let eval = |o: &T| {
        let mut tape = Tape::new(store(o));
        let l = loss(o, &mut tape);
        tape.scalar_value(l)
    };
    let analytic: Vec<(sentikit::tensor::ParamId, Vec<f64>)> = {
        let s = store(owner);
        let mut tape = Tape::new(s);
        let l = loss(owner, &mut tape);
        let g = tape.backward(l).unwrap();
        s.ids()
            .filter(|&id| s.get(id).requires_grad())
            .map(|id| {
                let n = s.get(id).numel();
                (id, g.param(id).map_or(vec![0.0; n], <[f64]>::to_vec))
            })
            .collect()
    };
    let mut report = GradReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for (id, ga) in analytic {
        for (i, &a) in ga.iter().enumerate() {
            let orig = store(owner).get(id).values()[i];
            store_mut(owner).get_mut(id).values_mut()[i] = orig + FD_STEP;
            let fp = eval(owner);
            store_mut(owner).get_mut(id).values_mut()[i] = orig - FD_STEP;
            let fm = eval(owner);
            store_mut(owner).get_mut(id).values_mut()[i] = orig;
            let num = (fp - fm) / (2.0 * FD_STEP);
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(FD_FLOOR);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = format!("{}[{i}]: analytic {a:e}, numeric {num:e}", store(owner).name(id));
            }
        }
    }
    report
}

/// Gradient check over a bare store.
pub fn grad_check_store(store: &mut ParamStore, loss: impl Fn(&mut Tape) -> Var) -> GradReport {
    grad_check(store, |s| s, |s| s, |_, t| loss(t))
}

/// Nested-loop CNN: valid sliding-window dot products (zero rows past
/// `n - width`), ReLU, non-overlapping max pool, row-major flatten.
#[allow(clippy::needless_range_loop)]
pub fn cnn_oracle(x: &[Vec<f64>], filters: &[Vec<f64>], bias: &[f64], width: usize, pool: usize) -> Vec<f64> {
    let n = x.len();
    let k = x[0].len();
    let f = filters.len();
    let mut fmap = vec![vec![0.0; f]; n];
    for j in 0..n {
        if j + width > n {
            continue;
        }
        for g in 0..f {
            let mut acc = 0.0;
            for t in 0..width {
                for c in 0..k {
                    acc += x[j + t][c] * filters[g][t * k + c];
                }
            }
            fmap[j][g] = acc + bias[g];
        }
    }
    for row in &mut fmap {
        for v in row.iter_mut() {
            if *v <= 0.0 {
                *v = 0.0;
            }
        }
    }
    let mut out = Vec::new();
    for b in 0..n / pool {
        for g in 0..f {
            let mut best = fmap[b * pool][g];
            for r in b * pool..(b + 1) * pool {
                if fmap[r][g] > best {
                    best = fmap[r][g];
                }
            }
            out.push(best);
        }
    }
    out
}

/// Word-boundary occurrences of `needle` in `hay`, compared case-insensitively
/// on ASCII. Returns byte offsets.
pub fn word_occurrences(hay: &str, needle: &str) -> Vec<usize> {
    let h = hay.to_ascii_lowercase();
    let n = needle.to_ascii_lowercase();
    let boundary = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(p) = h[from..].find(&n) {
        let s = from + p;
        let e = s + n.len();
        if boundary(h[..s].chars().next_back()) && boundary(h[e..].chars().next()) {
            out.push(s);
        }
        from = s + 1;
    }
    out
}

fn cap_like(original: &str, replacement: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut c = replacement.chars();
        c.next().map_or(String::new(), |f| f.to_uppercase().chain(c).collect())
    } else {
        replacement.to_string()
    }
}

/// Oracle dictionary entry: term, score, antonym.
pub type OracleEntry = (&'static str, i8, Option<&'static str>);

/// Brute-force term swaps over single-word dictionary terms: every
/// occurrence of every term, against every other term. Same score keeps
/// the label; opposite score flips it and maps every other polar term of
/// the message to its antonym (skipped when one is missing).
pub fn term_swap_oracle(text: &str, label: Sentiment, dict: &[OracleEntry]) -> Vec<(String, Sentiment)> {
    let mut out: Vec<(String, Sentiment)> = Vec::new();
    let hits: Vec<(usize, usize)> = dict
        .iter()
        .enumerate()
        .flat_map(|(ei, (t, _, _))| word_occurrences(text, t).into_iter().map(move |p| (ei, p)))
        .collect();
    for &(ei, pos) in &hits {
        let (term, score, _) = dict[ei];
        let orig = &text[pos..pos + term.len()];
        for (ri, &(rep, rscore, _)) in dict.iter().enumerate() {
            if ri == ei {
                continue;
            }
            let mut edits = vec![(pos, term.len(), cap_like(orig, rep))];
            let new_label = if rscore == score {
                label
            } else if score != 0 && rscore == -score && label != Sentiment::Neutral {
                let mut ok = true;
                for &(oi, opos) in &hits {
                    if opos == pos || dict[oi].1 == 0 {
                        continue;
                    }
                    match dict[oi].2 {
                        Some(a) => edits.push((opos, dict[oi].0.len(), cap_like(&text[opos..], a))),
                        None => ok = false,
                    }
                }
                if !ok {
                    continue;
                }
                if label == Sentiment::Positive {
                    Sentiment::Negative
                } else {
                    Sentiment::Positive
                }
            } else {
                continue;
            };
            edits.sort_by_key(|e| std::cmp::Reverse(e.0));
            let mut s = text.to_string();
            for (p, len, r) in edits {
                s.replace_range(p..p + len, &r);
            }
            if s != text && !out.iter().any(|(t, _)| t == &s) {
                out.push((s, new_label));
            }
        }
    }
    out
}

/// Brute-force negation: `(phrase, before_message)`. Message placement
/// prefixes the text (capitalizing the phrase when the text is
/// capitalized); term placement inserts before the first polar term.
pub fn negation_oracle(
    text: &str,
    label: Sentiment,
    lexicon: &[(&str, bool)],
    dict: &[OracleEntry],
) -> Vec<(String, Sentiment)> {
    if label == Sentiment::Neutral {
        return Vec::new();
    }
    let flipped = if label == Sentiment::Positive {
        Sentiment::Negative
    } else {
        Sentiment::Positive
    };
    let first_polar = dict
        .iter()
        .filter(|e| e.1 != 0)
        .flat_map(|e| word_occurrences(text, e.0))
        .min();
    let mut out = Vec::new();
    for &(phrase, before_message) in lexicon {
        let at = if before_message { Some(0) } else { first_polar };
        let Some(at) = at else { continue };
        let s = if at == 0 {
            format!("{} {}", cap_like(text, phrase), text)
        } else {
            format!("{}{} {}", &text[..at], phrase, &text[at..])
        };
        out.push((s, flipped));
    }
    out
}

const POS_WORDS: &[&str] = &["good", "great", "excellent", "lovely", "superb", "nice"];
const NEG_WORDS: &[&str] = &["bad", "awful", "terrible", "poor", "horrible", "nasty"];
const NEU_WORDS: &[&str] = &["blue", "square", "large", "wooden", "plastic", "new"];
const NOUNS: &[&str] = &["phone", "screen", "battery", "camera", "tablet", "laptop", "case", "charger"];
const FILLERS: &[&str] = &["the", "my", "this", "that", "our"];

/// `n` messages, classes balanced in round-robin order, each built as
/// `<filler> <noun> is <word>` with optional extra words.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<LabeledMessage> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let (label, words) = match i % 3 {
                0 => (Sentiment::Positive, POS_WORDS),
                1 => (Sentiment::Negative, NEG_WORDS),
                _ => (Sentiment::Neutral, NEU_WORDS),
            };
            let mut text = format!(
                "{} {} is {}",
                FILLERS[r.gen_range(0..FILLERS.len())],
                NOUNS[r.gen_range(0..NOUNS.len())],
                words[r.gen_range(0..words.len())]
            );
            if r.gen_bool(0.5) {
                text.push_str(" today");
            }
            LabeledMessage::new(text, label)
        })
        .collect()
}

pub fn polar_dictionary_lines() -> String {
    let mut s = String::new();
    for (p, n) in POS_WORDS.iter().zip(NEG_WORDS) {
        s.push_str(&format!("{p}\t1\t{n}\n{n}\t-1\t{p}\n"));
    }
    s
}

/// Training messages are plain `<noun> is <word>`; test messages are the
/// same shapes negated with `not`, labels flipped.
pub fn negation_corpus(seed: u64) -> (Vec<LabeledMessage>, Vec<LabeledMessage>) {
    let mut r = rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for noun in NOUNS {
        for (words, label) in [(POS_WORDS, Sentiment::Positive), (NEG_WORDS, Sentiment::Negative)] {
            for w in words.iter() {
                let text = format!("{noun} is {w}");
                if r.gen_bool(0.7) {
                    train.push(LabeledMessage::new(text, label));
                } else {
                    let flipped = if label == Sentiment::Positive {
                        Sentiment::Negative
                    } else {
                        Sentiment::Positive
                    };
                    test.push(LabeledMessage::new(format!("not {text}"), flipped));
                }
            }
        }
        let w = NEU_WORDS[r.gen_range(0..NEU_WORDS.len())];
        train.push(LabeledMessage::new(format!("{noun} is {w}"), Sentiment::Neutral));
    }
    (train, test)
}
