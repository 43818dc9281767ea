//! Term swaps and negations generated from one labeled message.

use sentikit::augment::{
    augment_dataset, mask_target, AugmentConfig, AugmentedSample, NegationLexicon, Placement, SentimentDictionary,
};
use sentikit::Sentiment;

fn main() -> sentikit::Result<()> {
    let mut dict = SentimentDictionary::default();
    dict.insert("better", 1, Some("worse"))?;
    dict.insert("worse", -1, Some("better"))?;
    for t in ["horrible", "poor", "terrible"] {
        dict.insert(t, -1, None)?;
    }
    for t in ["great", "amazing"] {
        dict.insert(t, 1, None)?;
    }
    let lexicon = NegationLexicon::new(vec![
        ("not".into(), Placement::BeforeMessage),
        ("hardly".into(), Placement::BeforeTerm),
    ])?;

    let (text, _) = mask_target("Company A is better. Company B is horrible.", "Company B")?;
    println!("masked: {text}\n");
    let originals = vec![
        AugmentedSample::original(text, Sentiment::Negative, 0),
        AugmentedSample::original("This network is stable", Sentiment::Positive, 1),
    ];
    dict.insert("stable", 1, None)?;
    let config = AugmentConfig {
        term_swaps: true,
        negations: true,
        max_term_variants: 8,
        seed: 0,
    };
    let out = augment_dataset(&originals, &dict, Some(&lexicon), &config)?;
    for s in &out.samples {
        println!("{:<9} {:<9?} {}", s.label.as_str(), s.provenance, s.text);
    }
    Ok(())
}
