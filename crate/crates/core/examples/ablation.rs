//! Compare model variants on the bundled corpus with shared seeds.

use std::path::Path;

use sentikit::pipeline::{load_corpus, run_ablation, split_dataset, Resources, TrainConfig, Variant};

fn main() -> sentikit::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut base = TrainConfig {
        word_dim: 12,
        cnn_filters: 16,
        gru_hidden: 16,
        char_dim: 6,
        char_hidden: 8,
        epochs: 8,
        batch_size: 8,
        seed: 3,
        ..TrainConfig::default()
    };
    base.dictionary = Some(data.join("dictionary.tsv"));
    base.negations = Some(data.join("negations.tsv"));
    let resources = Resources::load(&base)?;
    let dataset = split_dataset(load_corpus(&data.join("corpus.tsv"))?, base.split_ratios, base.seed)?;
    let variants = [Variant::Cnn, Variant::CnnAug, Variant::CnnPenalty, Variant::CnnNegation];
    let table = run_ablation(&dataset, &variants, &base, &resources)?;
    print!("{}", table.to_table());
    Ok(())
}
