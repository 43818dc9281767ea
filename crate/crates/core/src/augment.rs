//! Dictionary-driven data augmentation.
//!
//! * [`mask_target`] replaces an opinion target with the `Target` token.
//! * [`term_augment`] swaps sentiment terms for other terms of the same
//!   score (label kept) or the opposite score (Positive ↔ Negative).
//! * [`negation_augment`] inserts negation phrases and flips the label.
//!
//! Edits are made on byte spans of the original text, so everything outside
//! the swapped term or inserted phrase is preserved verbatim.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::Sentiment;
use crate::text::{token_spans, TokenSpan};

pub const TARGET_MASK: &str = "Target";

/// Replaces every whole-token, case-insensitive occurrence of `entity` with
/// `Target`. Returns the new text and whether anything was replaced.
pub fn mask_target(message: &str, entity: &str) -> Result<(String, bool)> {
    let needle: Vec<String> = token_spans(entity).into_iter().map(|s| s.text).collect();
    if needle.is_empty() {
        return Err(Error::Input("empty target entity".into()));
    }
    let spans = token_spans(message);
    let mut out = String::with_capacity(message.len());
    let mut cursor = 0;
    let mut i = 0;
    let mut found = false;
    while i + needle.len() <= spans.len() {
        if spans[i..i + needle.len()].iter().zip(&needle).all(|(s, n)| &s.text == n) {
            out.push_str(&message[cursor..spans[i].start]);
            out.push_str(TARGET_MASK);
            cursor = spans[i + needle.len() - 1].end;
            i += needle.len();
            found = true;
        } else {
            i += 1;
        }
    }
    out.push_str(&message[cursor..]);
    Ok((out, found))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictEntry {
    pub term: String,
    pub score: i8,
    /// Opposite-polarity counterpart used when a co-occurring term has to
    /// be flipped along with the swapped one.
    pub antonym: Option<String>,
}

/// Sentiment terms with scores in {−1, 0, 1}. Terms may span several tokens.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<DictEntry>", into = "Vec<DictEntry>")]
pub struct SentimentDictionary {
    entries: Vec<DictEntry>,
    keys: Vec<Vec<String>>,
    lookup: HashMap<Vec<String>, usize>,
}

impl From<Vec<DictEntry>> for SentimentDictionary {
    fn from(entries: Vec<DictEntry>) -> Self {
        let mut d = SentimentDictionary {
            entries,
            ..Default::default()
        };
        d.rebuild();
        d
    }
}

impl From<SentimentDictionary> for Vec<DictEntry> {
    fn from(d: SentimentDictionary) -> Self {
        d.entries
    }
}

fn normalize_term(term: &str) -> Vec<String> {
    token_spans(term).into_iter().map(|s| s.text).collect()
}

impl SentimentDictionary {
    pub fn new(entries: impl IntoIterator<Item = (impl AsRef<str>, i8)>) -> Result<Self> {
        let mut d = SentimentDictionary::default();
        for (t, s) in entries {
            d.insert(t.as_ref(), s, None)?;
        }
        Ok(d)
    }

    pub fn insert(&mut self, term: &str, score: i8, antonym: Option<&str>) -> Result<()> {
        if !(-1..=1).contains(&score) {
            return Err(Error::Input(format!("score for {term:?} must be -1, 0 or 1, got {score}")));
        }
        let key = normalize_term(term);
        if key.is_empty() {
            return Err(Error::Input("empty dictionary term".into()));
        }
        if self.lookup.contains_key(&key) {
            return Err(Error::Input(format!("duplicate dictionary term {term:?}")));
        }
        self.lookup.insert(key.clone(), self.entries.len());
        self.keys.push(key);
        self.entries.push(DictEntry {
            term: term.trim().to_string(),
            score,
            antonym: antonym.map(|a| a.trim().to_string()),
        });
        Ok(())
    }

    /// Declares `a` and `b` as each other's antonyms. Both must be present.
    pub fn set_antonyms(&mut self, a: &str, b: &str) -> Result<()> {
        let ia = self.position(a).ok_or_else(|| Error::Input(format!("{a:?} not in dictionary")))?;
        let ib = self.position(b).ok_or_else(|| Error::Input(format!("{b:?} not in dictionary")))?;
        self.entries[ia].antonym = Some(self.entries[ib].term.clone());
        self.entries[ib].antonym = Some(self.entries[ia].term.clone());
        Ok(())
    }

    fn position(&self, term: &str) -> Option<usize> {
        self.lookup.get(&normalize_term(term)).copied()
    }

    pub fn score(&self, term: &str) -> Option<i8> {
        self.position(term).map(|i| self.entries[i].score)
    }

    pub fn entries(&self) -> &[DictEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn rebuild(&mut self) {
        self.keys = self.entries.iter().map(|e| normalize_term(&e.term)).collect();
        self.lookup = self.keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    }

    /// One entry per line: `term<TAB>score[<TAB>antonym]`. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut d = SentimentDictionary::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(Error::Input(format!("line {}: expected term<TAB>score[<TAB>antonym]", n + 1)));
            }
            let score: i8 = fields[1]
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("line {}: bad score {:?}", n + 1, fields[1])))?;
            let antonym = fields.get(2).map(|s| s.trim()).filter(|s| !s.is_empty());
            d.insert(fields[0], score, antonym)
                .map_err(|e| Error::Input(format!("line {}: {e}", n + 1)))?;
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SentimentDictionary::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Non-overlapping term occurrences, scanning left to right and taking
    /// the longest dictionary term at each position.
    pub fn find_terms(&self, spans: &[TokenSpan]) -> Vec<TermMatch> {
        let max_len = self.keys.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = Vec::new();
        let mut i = 0;
        while i < spans.len() {
            let mut hit = None;
            for len in (1..=max_len.min(spans.len() - i)).rev() {
                let key: Vec<String> = spans[i..i + len].iter().map(|s| s.text.clone()).collect();
                if let Some(&e) = self.lookup.get(&key) {
                    hit = Some((e, len));
                    break;
                }
            }
            match hit {
                Some((entry, len)) => {
                    out.push(TermMatch {
                        entry,
                        first_token: i,
                        tokens: len,
                        start: spans[i].start,
                        end: spans[i + len - 1].end,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}

/// A dictionary term located in a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermMatch {
    pub entry: usize,
    pub first_token: usize,
    pub tokens: usize,
    /// Byte range in the source text.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Placement {
    BeforeMessage,
    BeforeTerm,
}

/// Negation phrases and where each one is inserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegationLexicon {
    entries: Vec<(String, Placement)>,
}

impl NegationLexicon {
    pub fn new(entries: Vec<(String, Placement)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Input("negation lexicon is empty".into()));
        }
        let mut seen = HashSet::new();
        for (p, pl) in &entries {
            if p.trim().is_empty() {
                return Err(Error::Input("empty negation phrase".into()));
            }
            if !seen.insert((p.to_lowercase(), *pl)) {
                return Err(Error::Input(format!("duplicate negation entry {p:?}")));
            }
        }
        Ok(NegationLexicon { entries })
    }

    pub fn entries(&self) -> &[(String, Placement)] {
        &self.entries
    }

    /// One entry per line: `phrase<TAB>message|term`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (phrase, place) = line
                .split_once('\t')
                .ok_or_else(|| Error::Input(format!("line {}: expected phrase<TAB>placement", n + 1)))?;
            let placement = match place.trim() {
                "message" => Placement::BeforeMessage,
                "term" => Placement::BeforeTerm,
                other => {
                    return Err(Error::Input(format!(
                        "line {}: placement must be message or term, got {other:?}",
                        n + 1
                    )))
                }
            };
            entries.push((phrase.trim().to_string(), placement));
        }
        NegationLexicon::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NegationLexicon::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Original,
    TermSwap,
    Negation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSample {
    pub text: String,
    pub label: Sentiment,
    pub provenance: Provenance,
    /// Id of the original sample this one derives from (its own id for originals).
    pub source: usize,
}

impl AugmentedSample {
    pub fn original(text: impl Into<String>, label: Sentiment, id: usize) -> Self {
        AugmentedSample {
            text: text.into(),
            label,
            provenance: Provenance::Original,
            source: id,
        }
    }

    fn derive(&self, text: String, label: Sentiment, provenance: Provenance) -> Self {
        AugmentedSample {
            text,
            label,
            provenance,
            source: self.source,
        }
    }
}

fn match_case(original: &str, replacement: &str) -> String {
    let upper = original.chars().next().is_some_and(char::is_uppercase);
    if !upper {
        return replacement.to_string();
    }
    let mut cs = replacement.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn splice(text: &str, edits: &[(usize, usize, String)]) -> String {
    let mut edits: Vec<&(usize, usize, String)> = edits.iter().collect();
    edits.sort_by_key(|e| e.0);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (s, e, r) in edits {
        out.push_str(&text[cursor..*s]);
        out.push_str(r);
        cursor = *e;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Every term-swap variant of `sample`, before capping and deduplication.
///
/// For each term found, every other dictionary term of the same score gives
/// a label-preserving variant. For a polar term in a polar sample, every
/// term of the opposite score gives a label-flipped variant in which the
/// other polar terms of the message are replaced by their antonyms; if one
/// of them has no antonym the flipped variant is not produced.
fn term_variants(sample: &AugmentedSample, dict: &SentimentDictionary) -> Vec<AugmentedSample> {
    let spans = token_spans(&sample.text);
    let matches = dict.find_terms(&spans);
    let mut out = Vec::new();
    for (mi, m) in matches.iter().enumerate() {
        let src = &dict.entries[m.entry];
        let original_text = &sample.text[m.start..m.end];
        for (ri, r) in dict.entries.iter().enumerate() {
            if ri == m.entry {
                continue;
            }
            if r.score == src.score {
                let text = splice(&sample.text, &[(m.start, m.end, match_case(original_text, &r.term))]);
                out.push(sample.derive(text, sample.label, Provenance::TermSwap));
            } else if src.score != 0 && r.score == -src.score && sample.label.is_polar() {
                let mut edits = vec![(m.start, m.end, match_case(original_text, &r.term))];
                let mut consistent = true;
                for (oi, o) in matches.iter().enumerate() {
                    let oe = &dict.entries[o.entry];
                    if oi == mi || oe.score == 0 {
                        continue;
                    }
                    match &oe.antonym {
                        Some(a) => edits.push((o.start, o.end, match_case(&sample.text[o.start..o.end], a))),
                        None => {
                            consistent = false;
                            break;
                        }
                    }
                }
                if consistent {
                    let text = splice(&sample.text, &edits);
                    out.push(sample.derive(text, sample.label.flipped(), Provenance::TermSwap));
                }
            }
        }
    }
    out
}

/// Term-swap variants of `sample`, deduplicated, never repeating the
/// original text, and capped at `max_variants` by seeded sampling that
/// keeps generation order.
pub fn term_augment(sample: &AugmentedSample, dict: &SentimentDictionary, max_variants: usize, seed: u64) -> Vec<AugmentedSample> {
    let mut seen = HashSet::new();
    seen.insert(sample.text.clone());
    let mut variants: Vec<AugmentedSample> = term_variants(sample, dict)
        .into_iter()
        .filter(|v| seen.insert(v.text.clone()))
        .collect();
    if variants.len() > max_variants {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = rand::seq::index::sample(&mut rng, variants.len(), max_variants).into_vec();
        keep.sort_unstable();
        let mut it = keep.into_iter().peekable();
        variants = variants
            .into_iter()
            .enumerate()
            .filter_map(|(i, v)| {
                if it.peek() == Some(&i) {
                    it.next();
                    Some(v)
                } else {
                    None
                }
            })
            .collect();
    }
    variants
}

fn prepend(text: &str, phrase: &str) -> String {
    format!("{} {}", match_case(text, phrase), text)
}

/// One label-flipped variant per lexicon entry. Message placement prefixes
/// the whole text; term placement goes before the first polar dictionary
/// term (and yields nothing when there is none). Neutral samples are skipped.
pub fn negation_augment(sample: &AugmentedSample, lexicon: &NegationLexicon, dict: &SentimentDictionary) -> Vec<AugmentedSample> {
    if !sample.label.is_polar() {
        return Vec::new();
    }
    let spans = token_spans(&sample.text);
    let first_polar = dict
        .find_terms(&spans)
        .into_iter()
        .find(|m| dict.entries[m.entry].score != 0);
    let mut out = Vec::new();
    for (phrase, placement) in &lexicon.entries {
        let text = match placement {
            Placement::BeforeMessage => prepend(&sample.text, phrase),
            Placement::BeforeTerm => match first_polar {
                Some(m) if m.start == 0 => prepend(&sample.text, phrase),
                Some(m) => splice(&sample.text, &[(m.start, m.start, format!("{phrase} "))]),
                None => continue,
            },
        };
        if text != sample.text {
            out.push(sample.derive(text, sample.label.flipped(), Provenance::Negation));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub term_swaps: bool,
    pub negations: bool,
    pub max_term_variants: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            term_swaps: true,
            negations: true,
            max_term_variants: 8,
            seed: 0,
        }
    }
}

/// A text generated with two different labels; the first one seen is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelConflict {
    pub text: String,
    pub kept: Sentiment,
    pub rejected: Sentiment,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AugmentOutput {
    pub samples: Vec<AugmentedSample>,
    pub conflicts: Vec<LabelConflict>,
}

/// Originals first (in input order), then for each original its term
/// variants followed by its negation variants. Deduplicated by text; a
/// text arriving with a second label is reported and dropped.
pub fn augment_dataset(
    originals: &[AugmentedSample],
    dict: &SentimentDictionary,
    lexicon: Option<&NegationLexicon>,
    config: &AugmentConfig,
) -> Result<AugmentOutput> {
    if config.negations && lexicon.is_none() {
        return Err(Error::Config("negation augmentation needs a negation lexicon".into()));
    }
    let mut out = AugmentOutput::default();
    let mut labels: HashMap<String, Sentiment> = HashMap::new();
    let mut push = |out: &mut AugmentOutput, s: AugmentedSample| match labels.get(&s.text) {
        Some(&l) if l == s.label => {}
        Some(&l) => out.conflicts.push(LabelConflict {
            text: s.text.clone(),
            kept: l,
            rejected: s.label,
        }),
        None => {
            labels.insert(s.text.clone(), s.label);
            out.samples.push(s);
        }
    };
    for s in originals {
        push(&mut out, s.clone());
    }
    for s in originals {
        if config.term_swaps {
            let seed = config.seed ^ (s.source as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            for v in term_augment(s, dict, config.max_term_variants, seed) {
                push(&mut out, v);
            }
        }
        if config.negations {
            for v in negation_augment(s, lexicon.expect("checked above"), dict) {
                push(&mut out, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict() -> SentimentDictionary {
        SentimentDictionary::new([("horrible", -1), ("poor", -1), ("great", 1)]).unwrap()
    }

    #[test]
    fn masks_multiword_target() {
        let (t, found) = mask_target("Company A is better. Company B is horrible", "Company B").unwrap();
        assert_eq!(t, "Company A is better. Target is horrible");
        assert!(found);
    }

    #[test]
    fn mask_absent_and_repeated() {
        let (t, found) = mask_target("nothing here", "phone").unwrap();
        assert_eq!((t.as_str(), found), ("nothing here", false));
        let (t, _) = mask_target("Phone good, phone cheap", "phone").unwrap();
        assert_eq!(t, "Target good, Target cheap");
        assert!(matches!(mask_target("x", "  "), Err(Error::Input(_))));
    }

    #[test]
    fn term_swap_keeps_or_flips_label() {
        let s = AugmentedSample::original("Target is horrible", Sentiment::Negative, 0);
        let v = term_augment(&s, &dict(), 10, 0);
        let got: Vec<(&str, Sentiment)> = v.iter().map(|v| (v.text.as_str(), v.label)).collect();
        assert_eq!(
            got,
            vec![("Target is poor", Sentiment::Negative), ("Target is great", Sentiment::Positive)]
        );
        assert!(v.iter().all(|x| x.provenance == Provenance::TermSwap && x.source == 0));
    }

    #[test]
    fn empty_dictionary_gives_nothing() {
        let s = AugmentedSample::original("Target is horrible", Sentiment::Negative, 0);
        assert!(term_augment(&s, &SentimentDictionary::default(), 10, 0).is_empty());
    }

    #[test]
    fn cap_is_deterministic_and_ordered() {
        let d = SentimentDictionary::new([("bad", -1), ("awful", -1), ("poor", -1), ("grim", -1), ("sad", -1)]).unwrap();
        let s = AugmentedSample::original("this is bad", Sentiment::Negative, 3);
        let all = term_augment(&s, &d, 100, 1);
        assert_eq!(all.len(), 4);
        let a = term_augment(&s, &d, 2, 9);
        assert_eq!(a, term_augment(&s, &d, 2, 9));
        assert_eq!(a.len(), 2);
        let pos: Vec<usize> = a.iter().map(|v| all.iter().position(|x| x == v).unwrap()).collect();
        assert!(pos[0] < pos[1]);
    }

    #[test]
    fn longest_match_first() {
        let d = SentimentDictionary::new([("good", 1), ("not good", -1), ("bad", -1)]).unwrap();
        let spans = token_spans("It is not good");
        let m = d.find_terms(&spans);
        assert_eq!(m.len(), 1);
        assert_eq!(d.entries()[m[0].entry].term, "not good");
    }

    #[test]
    fn negation_placements() {
        let d = SentimentDictionary::new([("bad", -1), ("stable", 1)]).unwrap();
        let msg = NegationLexicon::new(vec![("not".into(), Placement::BeforeMessage)]).unwrap();
        let term = NegationLexicon::new(vec![("hardly".into(), Placement::BeforeTerm)]).unwrap();
        let v = negation_augment(&AugmentedSample::original("Bad", Sentiment::Negative, 0), &msg, &d);
        assert_eq!(v[0].text, "Not Bad");
        assert_eq!(v[0].label, Sentiment::Positive);
        let v = negation_augment(
            &AugmentedSample::original("This network is stable", Sentiment::Positive, 1),
            &term,
            &d,
        );
        assert_eq!(v[0].text, "This network is hardly stable");
        assert_eq!(v[0].label, Sentiment::Negative);
        let v = negation_augment(&AugmentedSample::original("It is Monday", Sentiment::Neutral, 2), &msg, &d);
        assert!(v.is_empty());
    }

    #[test]
    fn lexicon_validation_and_parsing() {
        assert!(NegationLexicon::new(vec![]).is_err());
        assert!(NegationLexicon::new(vec![
            ("not".into(), Placement::BeforeMessage),
            ("Not".into(), Placement::BeforeMessage)
        ])
        .is_err());
        let l = NegationLexicon::parse("not\tmessage\nhardly\tterm\n").unwrap();
        assert_eq!(l.entries().len(), 2);
        assert!(NegationLexicon::parse("not\tsomewhere").is_err());
    }

    #[test]
    fn dictionary_parsing() {
        let d = SentimentDictionary::parse("# terms\nGood\t1\tbad\nbad\t-1\tgood\nok\t0\n").unwrap();
        assert_eq!(d.score("good"), Some(1));
        assert_eq!(d.score("OK"), Some(0));
        assert_eq!(d.entries()[0].antonym.as_deref(), Some("bad"));
        assert!(SentimentDictionary::parse("meh\t2").is_err());
        assert!(SentimentDictionary::parse("meh").is_err());
        let json = serde_json::to_string(&d).unwrap();
        let back: SentimentDictionary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.score("bad"), Some(-1));
    }

    #[test]
    fn dataset_toggles_and_conflicts() {
        let d = dict();
        let lex = NegationLexicon::new(vec![("not".into(), Placement::BeforeMessage)]).unwrap();
        let originals = vec![
            AugmentedSample::original("Target is horrible", Sentiment::Negative, 0),
            AugmentedSample::original("Target is great", Sentiment::Negative, 1),
        ];
        let off = AugmentConfig {
            term_swaps: false,
            negations: false,
            ..AugmentConfig::default()
        };
        let o = augment_dataset(&originals, &d, Some(&lex), &off).unwrap();
        assert_eq!(o.samples, originals);
        let on = augment_dataset(&originals, &d, Some(&lex), &AugmentConfig::default()).unwrap();
        // "Target is great" is generated as Positive from sample 0 but exists as Negative.
        assert!(on.conflicts.iter().any(|c| c.text == "Target is great" && c.kept == Sentiment::Negative));
        assert!(matches!(
            augment_dataset(&originals, &d, None, &AugmentConfig::default()),
            Err(Error::Config(_))
        ));
    }
}
