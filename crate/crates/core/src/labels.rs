//! Sentiment and rule class labels with their one-hot encodings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class order is Positive, Negative, Neutral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }

    pub fn is_polar(self) -> bool {
        self != Sentiment::Neutral
    }

    /// Positive ↔ Negative; Neutral is its own inverse.
    pub fn flipped(self) -> Self {
        match self {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
            Sentiment::Neutral => Sentiment::Neutral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Sentiment::Positive),
            "negative" | "neg" => Ok(Sentiment::Negative),
            "neutral" | "neu" => Ok(Sentiment::Neutral),
            other => Err(Error::Input(format!("unknown sentiment label {other:?}"))),
        }
    }
}

/// Short-message rule categories, encoded in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleLabel {
    DirectlySimple,
    DirectlyComparable,
    Question,
    Heuristics,
}

impl RuleLabel {
    pub const ALL: [RuleLabel; 4] = [
        RuleLabel::DirectlySimple,
        RuleLabel::DirectlyComparable,
        RuleLabel::Question,
        RuleLabel::Heuristics,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self.index()] = 1.0;
        v
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RuleLabel::DirectlySimple => "simple",
            RuleLabel::DirectlyComparable => "comparable",
            RuleLabel::Question => "question",
            RuleLabel::Heuristics => "heuristic",
        }
    }
}

impl fmt::Display for RuleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simple" => Ok(RuleLabel::DirectlySimple),
            "comparable" => Ok(RuleLabel::DirectlyComparable),
            "question" => Ok(RuleLabel::Question),
            "heuristic" | "heuristics" => Ok(RuleLabel::Heuristics),
            other => Err(Error::Input(format!("unknown rule label {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_encoding_order() {
        assert_eq!(Sentiment::Positive.one_hot(), [1.0, 0.0, 0.0]);
        assert_eq!(Sentiment::Negative.one_hot(), [0.0, 1.0, 0.0]);
        assert_eq!(Sentiment::Neutral.one_hot(), [0.0, 0.0, 1.0]);
        assert_eq!(Sentiment::Positive.flipped().flipped(), Sentiment::Positive);
    }

    #[test]
    fn parse_round_trip() {
        for s in Sentiment::ALL {
            assert_eq!(s.as_str().parse::<Sentiment>().unwrap(), s);
        }
        for r in RuleLabel::ALL {
            assert_eq!(r.as_str().parse::<RuleLabel>().unwrap(), r);
        }
        assert!("meh".parse::<Sentiment>().is_err());
    }
}
