use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sentikit::augment::{augment_dataset, AugmentConfig, AugmentedSample, NegationLexicon, SentimentDictionary};
use sentikit::pipeline::{
    checkpoint_load, checkpoint_save, evaluate, load_corpus, parse_variant_list, run_ablation, split_dataset, train,
    write_corpus, Averaging, LabeledMessage, MetricsReport, Resources, Split, TrainConfig,
};
use sentikit::rules::{tag_rule, RulePattern};
use sentikit::skipgram::{train_skipgram, SkipGramConfig};
use sentikit::text::tokenize;
use sentikit::vocab::{build_vocabulary, save_embeddings};
use sentikit::{Error, Result};

/// Short-message sentiment classification.
#[derive(Parser)]
#[command(name = "sentikit", version)]
struct Cli {
    /// `key = value` settings file. Keys prefixed `skipgram.` configure
    /// `embed-train`; the rest are training keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (splits, init, dropout, augmentation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train Skip-gram word embeddings on a text corpus.
    EmbedTrain {
        /// One message per line; a tab-separated corpus uses its first field.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        negative_samples: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        vocab_size: Option<usize>,
    },
    /// Expand a labeled corpus with term swaps and negations.
    Augment {
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        negations: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        max_term_variants: usize,
        #[arg(long)]
        no_term_swaps: bool,
    },
    /// Fill in missing rule labels with the pattern tagger.
    TagRules {
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        dictionary: Option<PathBuf>,
    },
    /// Train one model variant and save a checkpoint.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Checkpoint path; without it the model is only evaluated.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Evaluate a checkpoint on a labeled corpus.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "macro")]
        averaging: String,
    },
    /// Train several variants with shared seeds and compare them.
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated variant ids, e.g. `2,3,4,9`.
        #[arg(long, default_value = "2,3,4,5,6,7,8,9")]
        variants: String,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Classify messages given as arguments, or one per stdin line.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        target: Option<String>,
        text: Vec<String>,
    },
}

/// Flags mirroring training configuration keys; they override `--config`.
#[derive(Args)]
struct TrainOpts {
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long)]
    word_dim: Option<usize>,
    #[arg(long)]
    char_dim: Option<usize>,
    #[arg(long)]
    char_hidden: Option<usize>,
    #[arg(long)]
    gru_hidden: Option<usize>,
    #[arg(long)]
    cnn_filters: Option<usize>,
    #[arg(long)]
    cnn_width: Option<usize>,
    #[arg(long)]
    cnn_pool: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    drop_rate: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_term_variants: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    split_ratios: Option<String>,
    #[arg(long)]
    averaging: Option<String>,
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long)]
    negations: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    penalty: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
}

impl TrainOpts {
    fn apply(&self, c: &mut TrainConfig) -> Result<()> {
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| c.set(k, &v));
        let s = |v: &Option<usize>| v.map(|x| x.to_string());
        let f = |v: &Option<f64>| v.map(|x| x.to_string());
        let p = |v: &Option<PathBuf>| v.as_ref().map(|x| x.display().to_string());
        set("variant", self.variant.clone())?;
        set("seq_len", s(&self.seq_len))?;
        set("word_dim", s(&self.word_dim))?;
        set("char_dim", s(&self.char_dim))?;
        set("char_hidden", s(&self.char_hidden))?;
        set("gru_hidden", s(&self.gru_hidden))?;
        set("cnn_filters", s(&self.cnn_filters))?;
        set("cnn_width", s(&self.cnn_width))?;
        set("cnn_pool", s(&self.cnn_pool))?;
        set("epochs", s(&self.epochs))?;
        set("batch_size", s(&self.batch_size))?;
        set("learning_rate", f(&self.learning_rate))?;
        set("drop_rate", f(&self.drop_rate))?;
        set("patience", s(&self.patience))?;
        set("max_term_variants", s(&self.max_term_variants))?;
        set("vocab_size", s(&self.vocab_size))?;
        set("split_ratios", self.split_ratios.clone())?;
        set("averaging", self.averaging.clone())?;
        set("dictionary", p(&self.dictionary))?;
        set("negations", p(&self.negations))?;
        set("embeddings", p(&self.embeddings))?;
        set("penalty", p(&self.penalty))?;
        set("rules", p(&self.rules))
    }
}

/// Settings file split into training keys and `skipgram.` keys.
struct Settings {
    train: TrainConfig,
    skipgram: SkipGramConfig,
}

fn load_settings(path: Option<&Path>, seed: Option<u64>) -> Result<Settings> {
    let mut train = TrainConfig::default();
    let mut skipgram = SkipGramConfig::default();
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
            let r = match k.trim().strip_prefix("skipgram.") {
                Some(k) => skipgram.set(k, v),
                None => train.set(k, v),
            };
            r.map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
    }
    if let Some(s) = seed {
        train.seed = s;
        skipgram.rng_seed = s;
    }
    Ok(Settings { train, skipgram })
}

fn emit_corpus(rows: &[LabeledMessage], output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => write_corpus(rows, path),
        None => {
            for r in rows {
                println!("{}", r.to_line());
            }
            Ok(())
        }
    }
}

fn print_metrics(name: &str, m: &MetricsReport) -> Result<()> {
    println!("== {name} ==");
    print!("{m}");
    let record = serde_json::json!({
        "split": name,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "accuracy": m.accuracy,
        "confusion": m.confusion,
    });
    println!("{record}");
    Ok(())
}

fn embed_train(corpus: &Path, output: &Path, cfg: SkipGramConfig, vocab_size: usize) -> Result<()> {
    let text = fs::read_to_string(corpus).map_err(|e| Error::Io {
        path: corpus.to_path_buf(),
        source: e,
    })?;
    let sentences: Vec<Vec<String>> = text
        .lines()
        .map(|l| tokenize(l.split('\t').next().unwrap_or("")))
        .filter(|t| !t.is_empty())
        .collect();
    let vocab = build_vocabulary(&sentences, vocab_size)?;
    let ids: Vec<Vec<usize>> = sentences.iter().map(|s| vocab.encode(s)).collect();
    cfg.validate()?;
    let m = train_skipgram(&ids, &vocab, &cfg)?;
    save_embeddings(&m, &vocab, output)?;
    println!("wrote {} x {} embeddings to {}", m.rows(), m.dim(), output.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let settings = load_settings(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::EmbedTrain {
            corpus,
            output,
            dim,
            window,
            epochs,
            negative_samples,
            learning_rate,
            vocab_size,
        } => {
            let mut cfg = settings.skipgram;
            cfg.dim = dim.unwrap_or(cfg.dim);
            cfg.window_radius = window.unwrap_or(cfg.window_radius);
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.negative_samples = negative_samples.unwrap_or(cfg.negative_samples);
            cfg.learning_rate = learning_rate.unwrap_or(cfg.learning_rate);
            embed_train(&corpus, &output, cfg, vocab_size.unwrap_or(settings.train.vocab_size))
        }
        Command::Augment {
            corpus,
            output,
            dictionary,
            negations,
            max_term_variants,
            no_term_swaps,
        } => {
            let messages = load_corpus(&corpus)?;
            let dict = SentimentDictionary::load(&dictionary)?;
            let lexicon = negations.as_deref().map(NegationLexicon::load).transpose()?;
            let originals = messages
                .iter()
                .enumerate()
                .map(|(i, m)| Ok(AugmentedSample::original(m.model_text()?, m.sentiment, i)))
                .collect::<Result<Vec<_>>>()?;
            let cfg = AugmentConfig {
                term_swaps: !no_term_swaps,
                negations: lexicon.is_some(),
                max_term_variants,
                seed: settings.train.seed,
            };
            let out = augment_dataset(&originals, &dict, lexicon.as_ref(), &cfg)?;
            for c in &out.conflicts {
                log::warn!("label conflict for {:?}: kept {}, dropped {}", c.text, c.kept, c.rejected);
            }
            let rows: Vec<LabeledMessage> = out
                .samples
                .iter()
                .map(|s| LabeledMessage {
                    text: s.text.clone(),
                    sentiment: s.label,
                    rule: messages[s.source].rule,
                    target: None,
                })
                .collect();
            emit_corpus(&rows, output.as_deref())?;
            log::info!(
                "{} originals -> {} samples ({} conflicts)",
                originals.len(),
                rows.len(),
                out.conflicts.len()
            );
            Ok(())
        }
        Command::TagRules {
            corpus,
            output,
            rules,
            dictionary,
        } => {
            let mut messages = load_corpus(&corpus)?;
            let patterns = rules.as_deref().map_or_else(|| Ok(RulePattern::default()), RulePattern::load)?;
            let dict = dictionary
                .as_deref()
                .map_or_else(|| Ok(SentimentDictionary::default()), SentimentDictionary::load)?;
            let mut tagged = 0;
            for m in &mut messages {
                if m.rule.is_none() {
                    m.rule = Some(tag_rule(&m.model_text()?, &patterns, &dict));
                    tagged += 1;
                }
            }
            emit_corpus(&messages, output.as_deref())?;
            log::info!("tagged {tagged} of {} messages", messages.len());
            Ok(())
        }
        Command::Train { corpus, output, opts } => {
            let mut cfg = settings.train;
            opts.apply(&mut cfg)?;
            let resources = Resources::load(&cfg)?;
            let dataset = split_dataset(load_corpus(&corpus)?, cfg.split_ratios, cfg.seed)?;
            let outcome = train(&dataset, &cfg, &resources)?;
            for e in &outcome.epochs {
                println!("{}", serde_json::to_string(e).expect("epoch records serialize"));
            }
            println!("kept parameters from epoch {}", outcome.best_epoch);
            if let Some(v) = &outcome.validation {
                print_metrics("validation", v)?;
            }
            let test = dataset.split(Split::Test);
            if !test.is_empty() {
                print_metrics("test", &evaluate(&outcome.model, test, cfg.averaging)?)?;
            }
            if let Some(path) = output {
                checkpoint_save(&outcome.model, &path)?;
                println!("saved {}", path.display());
            }
            Ok(())
        }
        Command::Eval {
            model,
            corpus,
            averaging,
        } => {
            let m = checkpoint_load(&model)?;
            let messages = load_corpus(&corpus)?;
            let avg: Averaging = averaging.parse()?;
            print_metrics("eval", &evaluate(&m, &messages, avg)?)
        }
        Command::Ablate { corpus, variants, opts } => {
            let mut cfg = settings.train;
            opts.apply(&mut cfg)?;
            let resources = Resources::load(&cfg)?;
            let dataset = split_dataset(load_corpus(&corpus)?, cfg.split_ratios, cfg.seed)?;
            let table = run_ablation(&dataset, &parse_variant_list(&variants)?, &cfg, &resources)?;
            print!("{}", table.to_table());
            print!("{}", table.to_jsonl());
            Ok(())
        }
        Command::Classify { model, target, text } => {
            let m = checkpoint_load(&model)?;
            let lines: Vec<String> = if text.is_empty() {
                io::stdin()
                    .lock()
                    .lines()
                    .collect::<io::Result<_>>()
                    .map_err(|e| Error::Input(format!("reading stdin: {e}")))?
            } else {
                text
            };
            let mut out = io::stdout().lock();
            for line in lines.iter().filter(|l| !l.trim().is_empty()) {
                let p = m.predict_targeted(line, target.as_deref())?;
                let label = sentikit::Sentiment::from_index(sentikit::loss::argmax(&p.sentiment)).expect("three classes");
                let record = serde_json::json!({
                    "text": line,
                    "sentiment": label.as_str(),
                    "probabilities": p.sentiment,
                    "rule_probabilities": p.rule,
                });
                writeln!(out, "{record}").map_err(|e| Error::Input(format!("writing stdout: {e}")))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
