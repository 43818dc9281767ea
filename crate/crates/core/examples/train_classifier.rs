//! Train the full multitask model on the bundled corpus, report test
//! metrics, save a checkpoint and classify new messages with it.

use std::path::Path;

use sentikit::pipeline::{
    checkpoint_load, checkpoint_save, evaluate, load_corpus, split_dataset, train, Resources, Split, TrainConfig,
    Variant,
};
use sentikit::skipgram::{train_skipgram, SkipGramConfig};
use sentikit::text::tokenize;
use sentikit::vocab::build_vocabulary;

fn main() -> sentikit::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let corpus = load_corpus(&data.join("corpus.tsv"))?;
    let mut config = TrainConfig {
        variant: Variant::GruMultitask,
        word_dim: 16,
        char_dim: 8,
        char_hidden: 12,
        gru_hidden: 32,
        epochs: 60,
        batch_size: 8,
        learning_rate: 0.2,
        drop_rate: 0.1,
        // Keep training through the early plateau; the best validation epoch is kept.
        patience: 0,
        split_ratios: [0.7, 0.15, 0.15],
        seed: 7,
        ..TrainConfig::default()
    };
    config.dictionary = Some(data.join("dictionary.tsv"));
    config.negations = Some(data.join("negations.tsv"));
    config.rules = Some(data.join("rules.txt"));
    let mut resources = Resources::load(&config)?;

    // Embeddings to transfer, trained on the same messages for brevity.
    let sentences: Vec<Vec<String>> = corpus.iter().map(|m| tokenize(&m.text)).collect();
    let vocab = build_vocabulary(&sentences, 5000)?;
    let ids: Vec<Vec<usize>> = sentences.iter().map(|s| vocab.encode(s)).collect();
    let sg = SkipGramConfig {
        dim: 16,
        epochs: 20,
        ..SkipGramConfig::default()
    };
    resources.embeddings = Some((train_skipgram(&ids, &vocab, &sg)?, vocab));

    let dataset = split_dataset(corpus, config.split_ratios, config.seed)?;
    let outcome = train(&dataset, &config, &resources)?;
    println!("kept epoch {} of {}", outcome.best_epoch, outcome.epochs.len());
    print!("{}", evaluate(&outcome.model, dataset.split(Split::Test), config.averaging)?);

    let dir = std::env::temp_dir().join("sentikit-example");
    std::fs::create_dir_all(&dir).map_err(|e| sentikit::Error::Input(e.to_string()))?;
    let path = dir.join("model.ckpt");
    checkpoint_save(&outcome.model, &path)?;
    let model = checkpoint_load(&path)?;
    for text in ["my new phone is excellent", "the battery is terrible", "Samsung S9 is fine"] {
        let p = model.predict_targeted(text, Some("Samsung S9"))?;
        println!("{text:<30} {:.3?}", p.sentiment);
    }
    Ok(())
}
