//! Training loop, evaluation and inference for every model variant.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, Variant};
use super::corpus::LabeledMessage;
use super::dataset::{Dataset, Split};
use super::metrics::{Averaging, MetricsReport};
use crate::augment::{
    augment_dataset, mask_target, AugmentConfig, AugmentedSample, NegationLexicon, SentimentDictionary,
};
use crate::chars::CharVocabulary;
use crate::error::{Error, Result};
use crate::labels::{RuleLabel, Sentiment};
use crate::loss::{argmax, cross_entropy_on_tape, weighted_cross_entropy_on_tape, PenaltyMatrix};
use crate::models::{Mode, Prediction, SentimentNet};
use crate::rules::{tag_rule, RulePattern};
use crate::tensor::{sgd_step, Tape, Var};
use crate::text::tokenize;
use crate::vocab::{build_vocabulary, load_embeddings, EmbeddingMatrix, Vocabulary};

/// External inputs a training run may need, already loaded.
#[derive(Clone, Debug, Default)]
pub struct Resources {
    pub dictionary: SentimentDictionary,
    pub negations: Option<NegationLexicon>,
    /// Transferred embedding and the vocabulary it was trained over.
    pub embeddings: Option<(EmbeddingMatrix, Vocabulary)>,
    pub penalty: PenaltyMatrix,
    pub rules: RulePattern,
}

impl Resources {
    /// Loads every path set in `config`; unset paths give empty or default
    /// resources.
    pub fn load(config: &TrainConfig) -> Result<Self> {
        let dictionary = match &config.dictionary {
            Some(p) => SentimentDictionary::load(p)?,
            None => SentimentDictionary::default(),
        };
        let negations = config.negations.as_deref().map(NegationLexicon::load).transpose()?;
        let embeddings = config.embeddings.as_deref().map(load_embeddings).transpose()?;
        let penalty = PenaltyMatrix::load_or_default(config.penalty.as_deref())?;
        let rules = match &config.rules {
            Some(p) => RulePattern::load(p)?,
            None => RulePattern::default(),
        };
        Ok(Resources {
            dictionary,
            negations,
            embeddings,
            penalty,
            rules,
        })
    }
}

/// A trained classifier and the settings needed to reuse it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub variant: Variant,
    pub net: SentimentNet,
    pub penalty: PenaltyMatrix,
}

impl TrainedModel {
    pub fn predict(&self, text: &str) -> Result<Prediction> {
        self.net.predict(text)
    }

    /// Masks `target` (when given) before predicting.
    pub fn predict_targeted(&self, text: &str, target: Option<&str>) -> Result<Prediction> {
        match target {
            Some(t) => self.net.predict(&mask_target(text, t)?.0),
            None => self.net.predict(text),
        }
    }

    pub fn classify(&self, text: &str) -> Result<Sentiment> {
        Ok(to_label(&self.predict(text)?.sentiment))
    }
}

fn to_label(probs: &[f64; 3]) -> Sentiment {
    Sentiment::from_index(argmax(probs)).expect("three classes")
}

/// One training example after masking and augmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub tokens: Vec<String>,
    pub sentiment: Sentiment,
    pub rule: RuleLabel,
    pub origin: AugmentedSample,
}

/// Training split after masking and (per variant) augmentation. Every
/// sample's `origin.source` is the corpus index of a training message.
pub fn prepare_training_set(dataset: &Dataset, config: &TrainConfig, resources: &Resources) -> Result<Vec<TrainSample>> {
    let flags = config.variant.flags();
    let mut originals = Vec::new();
    for i in dataset.indices(Split::Train) {
        let m = &dataset.samples[i];
        originals.push(AugmentedSample::original(m.model_text()?, m.sentiment, i));
    }
    let aug = AugmentConfig {
        term_swaps: flags.term_augmentation,
        negations: flags.negation_augmentation,
        max_term_variants: config.max_term_variants,
        seed: config.seed,
    };
    if flags.term_augmentation && resources.dictionary.is_empty() {
        log::warn!("term augmentation enabled but the sentiment dictionary is empty");
    }
    let out = augment_dataset(&originals, &resources.dictionary, resources.negations.as_ref(), &aug)?;
    if !out.conflicts.is_empty() {
        log::warn!("{} augmented texts dropped for conflicting labels", out.conflicts.len());
    }
    Ok(out
        .samples
        .into_iter()
        .map(|s| {
            let rule = dataset.samples[s.source]
                .rule
                .unwrap_or_else(|| tag_rule(&s.text, &resources.rules, &resources.dictionary));
            TrainSample {
                tokens: tokenize(&s.text),
                sentiment: s.label,
                rule,
                origin: s,
            }
        })
        .collect())
}

/// Builds the untrained network for `config`'s variant over `train`.
pub fn build_model(train: &[TrainSample], config: &TrainConfig, resources: &Resources) -> Result<TrainedModel> {
    config.validate()?;
    let flags = config.variant.flags();
    let (vocab, embedding) = if flags.transfer {
        let (m, v) = resources.embeddings.clone().ok_or_else(|| {
            Error::Config(format!("variant {} needs a transferred embedding file", config.variant))
        })?;
        let mut m = m;
        m.set_frozen(true);
        (v, Some(m))
    } else {
        let corpus: Vec<Vec<String>> = train.iter().map(|s| s.tokens.clone()).collect();
        (build_vocabulary(&corpus, config.vocab_size)?, None)
    };
    let char_vocab = flags.char_embedding.then(|| {
        let texts: Vec<String> = train.iter().map(|s| s.tokens.join(" ")).collect();
        CharVocabulary::build(&texts)
    });
    let net = SentimentNet::new(config.net_config(), vocab, char_vocab, embedding, config.seed)?;
    Ok(TrainedModel {
        variant: config.variant,
        net,
        penalty: resources.penalty,
    })
}

/// Per-batch mean losses. `total` is read off the summed tape node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub epoch: usize,
    pub batch: usize,
    pub sentiment_loss: f64,
    pub rule_loss: f64,
    pub total_loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_f1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Validation metrics of the returned model; `None` with no validation split.
    pub validation: Option<MetricsReport>,
    /// Epoch whose parameters were kept (0 = untrained).
    pub best_epoch: usize,
    pub epochs: Vec<EpochRecord>,
    pub batches: Vec<BatchRecord>,
}

/// Sentiment loss, rule loss and their sum for one sample on `tape`.
pub fn sample_loss(
    model: &TrainedModel,
    tape: &mut Tape,
    sample: &TrainSample,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<(Var, Var, Option<Var>)> {
    let out = model.net.forward(tape, &sample.tokens, mode, rng)?;
    let s = if model.variant.flags().penalty {
        weighted_cross_entropy_on_tape(tape, out.sentiment, sample.sentiment, &model.penalty)?
    } else {
        cross_entropy_on_tape(tape, out.sentiment, sample.sentiment.index())?
    };
    match out.rule {
        Some(r) => {
            let r = cross_entropy_on_tape(tape, r, sample.rule.index())?;
            Ok((tape.add(s, r)?, s, Some(r)))
        }
        None => Ok((s, s, None)),
    }
}

/// One mini-batch SGD step on the mean loss. Returns the batch record.
pub fn train_batch(
    model: &mut TrainedModel,
    batch: &[&TrainSample],
    learning_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64)> {
    if batch.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let (grads, s_sum, r_sum, total) = {
        let mut tape = Tape::new(&model.net.store);
        let mut acc: Option<Var> = None;
        let (mut s_sum, mut r_sum) = (0.0, 0.0);
        for sample in batch {
            let (t, s, r) = sample_loss(model, &mut tape, sample, Mode::Train, rng)?;
            s_sum += tape.scalar_value(s);
            if let Some(r) = r {
                r_sum += tape.scalar_value(r);
            }
            acc = Some(match acc {
                Some(a) => tape.add(a, t)?,
                None => t,
            });
        }
        let loss = tape.scale(acc.expect("non-empty batch"), scale);
        let total = tape.scalar_value(loss);
        (tape.backward(loss)?, s_sum, r_sum, total)
    };
    model.net.store.zero_grad();
    model.net.store.accumulate(&grads);
    sgd_step(&mut model.net.store, learning_rate)?;
    Ok((s_sum * scale, r_sum * scale, total))
}

/// Mini-batch SGD with per-epoch validation and early stopping. The
/// parameters with the best validation F-measure are kept; without a
/// validation split the final parameters are kept.
pub fn train(dataset: &Dataset, config: &TrainConfig, resources: &Resources) -> Result<TrainOutcome> {
    let samples = prepare_training_set(dataset, config, resources)?;
    if samples.is_empty() {
        return Err(Error::Input("training split is empty".into()));
    }
    let mut model = build_model(&samples, config, resources)?;
    train_model(&mut model, &samples, dataset, config)
}

/// Training loop over prepared `samples`, starting from `model`.
pub fn train_model(
    model: &mut TrainedModel,
    samples: &[TrainSample],
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let validation = dataset.split(Split::Validation);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let score = |m: &TrainedModel| -> Result<Option<MetricsReport>> {
        if validation.is_empty() {
            Ok(None)
        } else {
            evaluate(m, validation.iter().copied(), config.averaging).map(Some)
        }
    };
    let mut best = score(model)?;
    let mut best_store = model.net.store.clone();
    let mut best_epoch = 0;
    let mut epochs = Vec::new();
    let mut batches = Vec::new();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&TrainSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let (s, r, total) = train_batch(model, &batch, config.learning_rate, &mut rng)?;
            epoch_loss += total * batch.len() as f64;
            batches.push(BatchRecord {
                epoch,
                batch: b,
                sentiment_loss: s,
                rule_loss: r,
                total_loss: total,
            });
        }
        let train_loss = epoch_loss / samples.len() as f64;
        let report = score(model)?;
        let validation_f1 = report.as_ref().map(|r| r.f1);
        log::info!(
            "epoch {epoch}: train loss {train_loss:.5}{}",
            validation_f1.map_or(String::new(), |f| format!(", validation F {f:.4}"))
        );
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_f1,
        });
        match (&best, report) {
            (Some(b), Some(r)) => {
                if r.f1 > b.f1 {
                    best = Some(r);
                    best_store = model.net.store.clone();
                    best_epoch = epoch;
                } else if config.patience > 0 && epoch - best_epoch >= config.patience {
                    log::info!("no validation improvement for {} epochs, stopping", config.patience);
                    break;
                }
            }
            _ => {
                best_store = model.net.store.clone();
                best_epoch = epoch;
            }
        }
    }
    model.net.store = best_store;
    model.net.store.zero_grad();
    Ok(TrainOutcome {
        model: model.clone(),
        validation: best,
        best_epoch,
        epochs,
        batches,
    })
}

/// Metrics of `model` on `samples`, targets masked. Empty input is an error.
pub fn evaluate<'a>(
    model: &TrainedModel,
    samples: impl IntoIterator<Item = &'a LabeledMessage>,
    averaging: Averaging,
) -> Result<MetricsReport> {
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for m in samples {
        truth.push(m.sentiment);
        predicted.push(to_label(&model.net.predict(&m.model_text()?)?.sentiment));
    }
    MetricsReport::from_predictions(&truth, &predicted, averaging)
}

/// Fraction of `samples` whose predicted sentiment matches.
pub fn accuracy(model: &TrainedModel, samples: &[TrainSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("cannot score an empty sample set".into()));
    }
    let mut hits = 0;
    for s in samples {
        if to_label(&model.net.predict_tokens(&s.tokens)?.sentiment) == s.sentiment {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}
