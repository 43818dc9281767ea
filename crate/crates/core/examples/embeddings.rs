//! Train Skip-gram vectors on a toy corpus and list nearest neighbours.

use sentikit::skipgram::{train_skipgram, SkipGramConfig};
use sentikit::text::tokenize;
use sentikit::vocab::{build_vocabulary, cosine};

fn main() -> sentikit::Result<()> {
    let lines = [
        "the battery of my phone is great",
        "the battery of my tablet is great",
        "the screen of my phone is awful",
        "the screen of my tablet is awful",
        "this beer is cold and fresh",
        "that beer is warm and flat",
    ];
    let corpus: Vec<Vec<String>> = lines.iter().cycle().take(600).map(|l| tokenize(l)).collect();
    let vocab = build_vocabulary(&corpus, 1000)?;
    let ids: Vec<Vec<usize>> = corpus.iter().map(|t| vocab.encode(t)).collect();
    let config = SkipGramConfig {
        dim: 24,
        window_radius: 2,
        epochs: 5,
        ..SkipGramConfig::default()
    };
    let m = train_skipgram(&ids, &vocab, &config)?;

    for word in ["phone", "great", "beer"] {
        let w = m.row(vocab.index(word));
        let mut scored: Vec<(f64, &str)> = vocab
            .tokens()
            .iter()
            .enumerate()
            .skip(3)
            .filter(|(_, t)| t.as_str() != word)
            .map(|(i, t)| (cosine(w, m.row(i)), t.as_str()))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let top: Vec<String> = scored.iter().take(3).map(|(c, t)| format!("{t} ({c:.2})")).collect();
        println!("{word:>6}: {}", top.join(", "));
    }
    Ok(())
}
