//! Pattern-based rule tagging for short messages.
//!
//! Checks run in a fixed order and the first hit wins:
//! comparable, question, simple, then heuristics as the fallback.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::SentimentDictionary;
use crate::error::{Error, Result};
use crate::labels::RuleLabel;
use crate::tensor::Tensor;
use crate::text::{token_spans, TokenSpan};
use crate::vocab::TARGET_TOKEN;

/// Largest token gap between an entity and a sentiment term for the
/// simple rule.
pub const SIMPLE_WINDOW: usize = 3;

const DEFAULT_ENTITIES: &[&str] = &[
    "phone", "smartphone", "tablet", "laptop", "ipad", "iphone", "camera", "screen", "battery", "beer", "food",
    "foods", "car", "cars", "shoes", "network", "service", "product", "store", "app",
];

const DEFAULT_COMPARATIVE: &[&str] = &[
    "than", "more", "less", "better", "worse", "best", "worst", "compared", "versus", "vs",
];

const DEFAULT_QUESTION: &[&str] = &["how", "what", "when", "where", "which", "who", "why", "?"];

/// Marker lists driving [`tag_rule`]. Entries are token sequences, so
/// multi-word entities such as `iphone x` are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RulePattern {
    pub entities: Vec<Vec<String>>,
    pub comparative: Vec<Vec<String>>,
    pub question: Vec<Vec<String>>,
}

fn phrases(items: &[&str]) -> Vec<Vec<String>> {
    items.iter().map(|s| tokens_of(s)).collect()
}

fn tokens_of(s: &str) -> Vec<String> {
    token_spans(s).into_iter().map(|t| t.text).collect()
}

impl Default for RulePattern {
    fn default() -> Self {
        let mut entities = phrases(DEFAULT_ENTITIES);
        entities.push(vec![TARGET_TOKEN.to_string()]);
        RulePattern {
            entities,
            comparative: phrases(DEFAULT_COMPARATIVE),
            question: phrases(DEFAULT_QUESTION),
        }
    }
}

impl RulePattern {
    /// Sectioned file: `[entities]`, `[comparative]`, `[question]` headers,
    /// one entry per line, `#` comments. Sections that are absent keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = RulePattern::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut section: Option<&str> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = match name.trim() {
                    s @ ("entities" | "comparative" | "question") => s,
                    other => return Err(Error::Input(format!("line {}: unknown section [{other}]", n + 1))),
                };
                if seen.contains(&name) {
                    return Err(Error::Input(format!("line {}: section [{name}] repeated", n + 1)));
                }
                seen.push(name);
                match name {
                    "entities" => p.entities.clear(),
                    "comparative" => p.comparative.clear(),
                    _ => p.question.clear(),
                }
                section = Some(name);
                continue;
            }
            let list = match section {
                Some("entities") => &mut p.entities,
                Some("comparative") => &mut p.comparative,
                Some(_) => &mut p.question,
                None => return Err(Error::Input(format!("line {}: entry outside a section", n + 1))),
            };
            let toks = tokens_of(line);
            if !list.contains(&toks) {
                list.push(toks);
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RulePattern::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

pub fn encode_rule(label: RuleLabel) -> Tensor {
    Tensor::vector(label.one_hot().to_vec())
}

/// Token ranges `[start, end)` where any phrase of `list` occurs.
fn occurrences(tokens: &[&str], list: &[Vec<String>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for p in list {
            if !p.is_empty() && tokens.len() - i >= p.len() && p.iter().zip(&tokens[i..]).all(|(a, b)| a == b) {
                out.push((i, i + p.len()));
            }
        }
    }
    out
}

fn gap(a: (usize, usize), b: (usize, usize)) -> usize {
    if a.1 <= b.0 {
        b.0 - a.1 + 1
    } else if b.1 <= a.0 {
        a.0 - b.1 + 1
    } else {
        0
    }
}

/// Assigns exactly one rule label to `message`.
///
/// * comparable: a comparative marker and an entity both occur;
/// * question: an interrogative marker or `?` occurs alongside an entity;
/// * simple: an entity lies within [`SIMPLE_WINDOW`] tokens of a dictionary term;
/// * heuristics: everything else.
pub fn tag_rule(message: &str, patterns: &RulePattern, dict: &SentimentDictionary) -> RuleLabel {
    let spans: Vec<TokenSpan> = token_spans(message);
    let tokens: Vec<&str> = spans.iter().map(|s| s.text.as_str()).collect();
    let entities = occurrences(&tokens, &patterns.entities);
    if entities.is_empty() {
        return RuleLabel::Heuristics;
    }
    if !occurrences(&tokens, &patterns.comparative).is_empty() {
        return RuleLabel::DirectlyComparable;
    }
    if !occurrences(&tokens, &patterns.question).is_empty() {
        return RuleLabel::Question;
    }
    let terms: Vec<(usize, usize)> = dict
        .find_terms(&spans)
        .into_iter()
        .map(|m| (m.first_token, m.first_token + m.tokens))
        .collect();
    let near = entities
        .iter()
        .any(|&e| terms.iter().any(|&t| gap(e, t) <= SIMPLE_WINDOW));
    if near {
        RuleLabel::DirectlySimple
    } else {
        RuleLabel::Heuristics
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict() -> SentimentDictionary {
        SentimentDictionary::new([("excellent", 1), ("terrible", -1), ("fresher", 1), ("sad", -1)]).unwrap()
    }

    #[test]
    fn table_fixtures() {
        let p = RulePattern::default();
        let d = dict();
        let cases = [
            ("This phone is excellent !", RuleLabel::DirectlySimple),
            ("A tablet and B tablet are terrible", RuleLabel::DirectlySimple),
            ("Canned beer is fresher than bottled", RuleLabel::DirectlyComparable),
            ("How much does Ipad cost ?", RuleLabel::Question),
            ("Today is Wednesday", RuleLabel::Heuristics),
            ("So sad :(", RuleLabel::Heuristics),
        ];
        for (m, want) in cases {
            assert_eq!(tag_rule(m, &p, &d), want, "{m}");
        }
    }

    #[test]
    fn question_needs_entity() {
        assert_eq!(tag_rule("Why is it raining?", &RulePattern::default(), &dict()), RuleLabel::Heuristics);
    }

    #[test]
    fn entity_far_from_term_is_heuristic() {
        let m = "phone arrived on a rainy day and it was excellent";
        assert_eq!(tag_rule(m, &RulePattern::default(), &dict()), RuleLabel::Heuristics);
    }

    #[test]
    fn encoding_is_one_hot() {
        assert_eq!(encode_rule(RuleLabel::DirectlySimple).values(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(encode_rule(RuleLabel::Question).values(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn pattern_file_sections() {
        let p = RulePattern::parse("[entities]\nSamsung S9\n\n[question]\n?\n").unwrap();
        assert_eq!(p.entities, vec![vec!["samsung".to_string(), "s9".to_string()]]);
        assert_eq!(p.question.len(), 1);
        assert_eq!(p.comparative, RulePattern::default().comparative);
        assert!(RulePattern::parse("phone").is_err());
        assert!(RulePattern::parse("[nouns]\nx").is_err());
        assert_eq!(
            tag_rule("Samsung S9 is excellent", &p, &dict()),
            RuleLabel::DirectlySimple
        );
    }
}
