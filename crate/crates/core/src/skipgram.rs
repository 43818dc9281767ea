//! Skip-gram word embeddings with negative sampling (or a full softmax
//! output layer when `negative_samples == 0`).

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::vocab::{EmbeddingMatrix, Vocabulary, PAD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window_radius: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negative_samples: usize,
    pub rng_seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: crate::vocab::DEFAULT_DIM,
            window_radius: 4,
            epochs: 5,
            learning_rate: 0.025,
            negative_samples: 5,
            rng_seed: 0,
        }
    }
}

impl SkipGramConfig {
    /// Sets one field by name (`dim`, `window_radius`, `epochs`,
    /// `learning_rate`, `negative_samples`, `seed`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        match key.trim().replace('-', "_").as_str() {
            "dim" => self.dim = num(key, value)?,
            "window_radius" | "window" => self.window_radius = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "negative_samples" => self.negative_samples = num(key, value)?,
            "seed" => self.rng_seed = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown skip-gram key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_radius == 0 {
            return Err(Error::Config("window_radius must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// All `(center, context)` pairs with `0 < |i − j| ≤ radius`. Positions
/// holding [`PAD`] produce no pairs and never appear as context.
pub fn generate_skipgram_pairs(tokens: &[usize], window_radius: usize) -> Vec<(usize, usize)> {
    let n = tokens.len();
    let mut pairs = Vec::new();
    for (i, &center) in tokens.iter().enumerate() {
        if center == PAD {
            continue;
        }
        let lo = i.saturating_sub(window_radius);
        let hi = (i + window_radius).min(n.saturating_sub(1));
        for (j, &ctx) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i && ctx != PAD {
                pairs.push((center, ctx));
            }
        }
    }
    pairs
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Trains input vectors `W` (returned) against context output vectors.
///
/// `corpus` holds sentences already encoded with `vocab`. Deterministic for a
/// fixed `rng_seed`.
pub fn train_skipgram(corpus: &[Vec<usize>], vocab: &Vocabulary, config: &SkipGramConfig) -> Result<EmbeddingMatrix> {
    config.validate()?;
    if !vocab.has_corpus_tokens() {
        return Err(Error::State("vocabulary has no corpus tokens; build it first".into()));
    }
    let (m, k) = (vocab.len(), config.dim);
    if let Some(bad) = corpus.iter().flatten().find(|&&t| t >= m) {
        return Err(Error::Input(format!("token index {bad} outside vocabulary of {m}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let bound = 0.5 / k as f64;
    let mut input: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-bound..bound)).collect();
    input[PAD * k..(PAD + 1) * k].iter_mut().for_each(|v| *v = 0.0);
    let mut output = vec![0.0; m * k];

    let pairs_per_epoch: usize = corpus
        .iter()
        .map(|s| generate_skipgram_pairs(s, config.window_radius).len())
        .sum();
    let total_steps = (pairs_per_epoch * config.epochs).max(1);

    // unigram^0.75 noise distribution over non-PAD tokens
    let noise = if config.negative_samples > 0 {
        let mut counts = vec![0.0f64; m];
        for &t in corpus.iter().flatten() {
            counts[t] += 1.0;
        }
        counts[PAD] = 0.0;
        let weights: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
        Some(WeightedIndex::new(&weights).map_err(|_| Error::Input("corpus has no tokens".into()))?)
    } else {
        None
    };

    let mut grad_in = vec![0.0; k];
    let mut scores = vec![0.0; m];
    let mut step = 0usize;
    for _ in 0..config.epochs {
        for sentence in corpus {
            for (center, ctx) in generate_skipgram_pairs(sentence, config.window_radius) {
                let progress = step as f64 / total_steps as f64;
                let lr = config.learning_rate * (1.0 - progress).max(1e-4);
                step += 1;
                grad_in.iter_mut().for_each(|g| *g = 0.0);
                let vin = &input[center * k..(center + 1) * k];

                match &noise {
                    Some(dist) => {
                        for s in 0..=config.negative_samples {
                            let (target, label) = if s == 0 {
                                (ctx, 1.0)
                            } else {
                                let t = dist.sample(&mut rng);
                                if t == ctx {
                                    continue;
                                }
                                (t, 0.0)
                            };
                            let vout = &mut output[target * k..(target + 1) * k];
                            let dot: f64 = vin.iter().zip(vout.iter()).map(|(a, b)| a * b).sum();
                            let g = lr * (label - sigmoid(dot));
                            for ((gi, o), x) in grad_in.iter_mut().zip(vout.iter_mut()).zip(vin) {
                                *gi += g * *o;
                                *o += g * x;
                            }
                        }
                    }
                    None => {
                        let mut max = f64::NEG_INFINITY;
                        for (t, s) in scores.iter_mut().enumerate() {
                            let vout = &output[t * k..(t + 1) * k];
                            *s = vin.iter().zip(vout).map(|(a, b)| a * b).sum();
                            max = max.max(*s);
                        }
                        let mut total = 0.0;
                        for s in scores.iter_mut() {
                            *s = (*s - max).exp();
                            total += *s;
                        }
                        for (t, s) in scores.iter().enumerate() {
                            let label = if t == ctx { 1.0 } else { 0.0 };
                            let g = lr * (label - s / total);
                            let vout = &mut output[t * k..(t + 1) * k];
                            for ((gi, o), x) in grad_in.iter_mut().zip(vout.iter_mut()).zip(vin) {
                                *gi += g * *o;
                                *o += g * x;
                            }
                        }
                    }
                }
                for (w, g) in input[center * k..(center + 1) * k].iter_mut().zip(&grad_in) {
                    *w += g;
                }
            }
        }
    }
    EmbeddingMatrix::new(Tensor::new(vec![m, k], input)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn brute_force_count(n: usize, r: usize) -> usize {
        (0..n)
            .map(|i| (i + r).min(n - 1) - i.saturating_sub(r))
            .sum()
    }

    #[test]
    fn radius_one_enumeration() {
        let got: BTreeSet<_> = generate_skipgram_pairs(&[3, 4, 5], 1).into_iter().collect();
        let want: BTreeSet<_> = [(3, 4), (4, 3), (4, 5), (5, 4)].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn single_token_and_padding() {
        assert!(generate_skipgram_pairs(&[7], 3).is_empty());
        let pairs = generate_skipgram_pairs(&[3, PAD, 4, PAD], 3);
        assert!(pairs.iter().all(|&(c, x)| c != PAD && x != PAD));
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn pair_count_matches_closed_form() {
        assert_eq!(generate_skipgram_pairs(&[3, 4, 5, 6], 2).len(), 10);
        for n in 1..12 {
            for r in 1..6 {
                let toks: Vec<usize> = (3..3 + n).collect();
                assert_eq!(generate_skipgram_pairs(&toks, r).len(), brute_force_count(n, r));
            }
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let corpus = vec![vec!["a".to_string(), "b".to_string()]];
        let vocab = crate::vocab::build_vocabulary(&corpus, 10).unwrap();
        let enc = vec![vocab.encode(&corpus[0])];
        let cfg = SkipGramConfig {
            dim: 4,
            epochs: 0,
            ..SkipGramConfig::default()
        };
        let a = train_skipgram(&enc, &vocab, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let init: Vec<f64> = (0..vocab.len() * 4).map(|_| rng.gen_range(-0.125..0.125)).collect();
        assert_eq!(&a.weights().values()[4..], &init[4..]);
        assert_eq!(a.row(PAD), &[0.0; 4]);
    }

    #[test]
    fn reserved_only_vocabulary_is_a_state_error() {
        let vocab = Vocabulary::from_tokens(vec!["<pad>".into(), "<unk>".into(), "target".into()]).unwrap();
        let err = train_skipgram(&[vec![1, 2]], &vocab, &SkipGramConfig::default());
        assert!(matches!(err, Err(Error::State(_))));
    }
}
