mod common;

use proptest::prelude::*;

use sentikit::augment::{
    mask_target, negation_augment, term_augment, AugmentedSample, NegationLexicon, Placement, SentimentDictionary,
};
use sentikit::loss::{cross_entropy, weighted_cross_entropy, PenaltyMatrix};
use sentikit::pipeline::{split_indices, Split};
use sentikit::rules::{tag_rule, RulePattern};
use sentikit::tensor::{Tape, Tensor};
use sentikit::text::{pad_truncate, token_spans, tokenize};
use sentikit::vocab::{build_vocabulary, PAD};
use sentikit::Sentiment;

use common::polar_dictionary_lines;

const WORDS: &[&str] = &[
    "the", "phone", "is", "good", "bad", "great", "awful", "not", "screen", "than", "?", "how", "today", "blue",
];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..9).prop_map(|w| w.join(" "))
}

fn polar() -> impl Strategy<Value = Sentiment> {
    prop_oneof![Just(Sentiment::Positive), Just(Sentiment::Negative)]
}

fn dict() -> SentimentDictionary {
    SentimentDictionary::parse(&polar_dictionary_lines()).unwrap()
}

fn lexicon() -> NegationLexicon {
    NegationLexicon::new(vec![
        ("not".into(), Placement::BeforeMessage),
        ("hardly".into(), Placement::BeforeTerm),
    ])
    .unwrap()
}

proptest! {
    #[test]
    fn pad_truncate_has_fixed_length(text in ".{0,80}", len in 1usize..20) {
        let vocab = build_vocabulary(&[tokenize("the phone is good")], 50).unwrap();
        let ids = pad_truncate(&tokenize(&text), &vocab, len);
        prop_assert_eq!(ids.len(), len);
        prop_assert!(ids.iter().all(|&i| i < vocab.len()));
        let n = tokenize(&text).len();
        prop_assert!(ids[n.min(len)..].iter().all(|&i| i == PAD));
    }

    #[test]
    fn token_spans_point_into_the_text(text in ".{0,60}") {
        for s in token_spans(&text) {
            prop_assert!(s.start < s.end && s.end <= text.len());
            prop_assert_eq!(text[s.start..s.end].to_lowercase(), s.text.clone());
        }
    }

    #[test]
    fn tagger_is_total(text in ".{0,60}") {
        let _ = tag_rule(&text, &RulePattern::default(), &dict());
    }

    #[test]
    fn splits_are_disjoint_and_cover(n in 0usize..200, a in 0.0f64..1.0, b in 0.0f64..1.0, seed: u64) {
        let train = a;
        let val = (1.0 - a) * b;
        let test = (1.0 - train - val).max(0.0);
        let s = split_indices(n, [train, val, test], seed).unwrap();
        prop_assert_eq!(s.len(), n);
        let count = |w| s.iter().filter(|&&x| x == w).count();
        prop_assert_eq!(count(Split::Train) + count(Split::Validation) + count(Split::Test), n);
        prop_assert_eq!(&s, &split_indices(n, [train, val, test], seed).unwrap());
    }

    #[test]
    fn softmax_is_a_distribution(v in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let mut tape = Tape::detached();
        let x = tape.leaf(&Tensor::vector(v));
        let p = tape.softmax(x).unwrap();
        let sum: f64 = tape.value(p).iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(tape.value(p).iter().all(|&q| (0.0..=1.0).contains(&q)));
    }

    #[test]
    fn default_penalty_never_lowers_the_loss(a in 0.01f64..1.0, b in 0.01f64..1.0, c in 0.01f64..1.0, t in 0usize..3) {
        let s = a + b + c;
        let y_hat = [a / s, b / s, c / s];
        let mut y = [0.0; 3];
        y[t] = 1.0;
        let plain = cross_entropy(&y, &y_hat).unwrap();
        let weighted = weighted_cross_entropy(&y, &y_hat, &PenaltyMatrix::default()).unwrap();
        prop_assert!(weighted >= plain);
        prop_assert!(weighted <= 2.5 * plain + 1e-12);
    }

    #[test]
    fn term_swaps_keep_polarity_class(text in sentence(), label in polar(), seed: u64) {
        let s = AugmentedSample::original(text.clone(), label, 0);
        for v in term_augment(&s, &dict(), 8, seed) {
            prop_assert!(v.label.is_polar());
            prop_assert_ne!(&v.text, &text);
            prop_assert_eq!(tokenize(&v.text).len(), tokenize(&text).len());
        }
    }

    #[test]
    fn double_negation_restores_the_label(text in sentence(), label in polar()) {
        let d = dict();
        let s = AugmentedSample::original(text, label, 0);
        for once in negation_augment(&s, &lexicon(), &d) {
            prop_assert_eq!(once.label, label.flipped());
            for twice in negation_augment(&once, &lexicon(), &d) {
                prop_assert_eq!(twice.label, label);
            }
        }
    }

    #[test]
    fn neutral_samples_are_never_negated(text in sentence()) {
        let s = AugmentedSample::original(text, Sentiment::Neutral, 0);
        prop_assert!(negation_augment(&s, &lexicon(), &dict()).is_empty());
    }

    #[test]
    fn masking_removes_the_entity(text in sentence()) {
        let (masked, found) = mask_target(&text, "phone").unwrap();
        let had = tokenize(&text).iter().any(|t| t == "phone");
        prop_assert_eq!(found, had);
        prop_assert!(!tokenize(&masked).iter().any(|t| t == "phone"));
    }
}
