//! Tab-separated corpus records.
//!
//! `text<TAB>sentiment[<TAB>rule][<TAB>target]`, where the optional third
//! field is read as a rule label when it parses as one and as a target
//! entity otherwise.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::mask_target;
use crate::error::{Error, Result};
use crate::labels::{RuleLabel, Sentiment};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledMessage {
    pub text: String,
    pub sentiment: Sentiment,
    pub rule: Option<RuleLabel>,
    pub target: Option<String>,
}

impl LabeledMessage {
    pub fn new(text: impl Into<String>, sentiment: Sentiment) -> Self {
        LabeledMessage {
            text: text.into(),
            sentiment,
            rule: None,
            target: None,
        }
    }

    /// Text with the target entity (if any) replaced by `Target`.
    pub fn model_text(&self) -> Result<String> {
        match &self.target {
            Some(t) => Ok(mask_target(&self.text, t)?.0),
            None => Ok(self.text.clone()),
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = format!("{}\t{}", self.text, self.sentiment);
        match (&self.rule, &self.target) {
            (Some(r), Some(t)) => write!(s, "\t{r}\t{t}"),
            (Some(r), None) => write!(s, "\t{r}"),
            (None, Some(t)) => write!(s, "\t\t{t}"),
            (None, None) => Ok(()),
        }
        .expect("writing to a String");
        s
    }
}

fn parse_line(line: &str) -> Result<LabeledMessage> {
    let fields: Vec<&str> = line.split('\t').collect();
    if !(2..=4).contains(&fields.len()) {
        return Err(Error::Input(format!("expected 2 to 4 tab-separated fields, found {}", fields.len())));
    }
    let text = fields[0].trim();
    if text.is_empty() {
        return Err(Error::Input("empty message text".into()));
    }
    let sentiment: Sentiment = fields[1].parse()?;
    fn opt(s: &str) -> Option<&str> {
        Some(s.trim()).filter(|s| !s.is_empty())
    }
    let (rule, target) = match fields.len() {
        2 => (None, None),
        3 => match opt(fields[2]) {
            Some(f) => match f.parse::<RuleLabel>() {
                Ok(r) => (Some(r), None),
                Err(_) => (None, Some(f.to_string())),
            },
            None => (None, None),
        },
        _ => (
            opt(fields[2]).map(str::parse::<RuleLabel>).transpose()?,
            opt(fields[3]).map(str::to_string),
        ),
    };
    Ok(LabeledMessage {
        text: text.to_string(),
        sentiment,
        rule,
        target,
    })
}

/// Parses a whole corpus. Blank lines and `#` comments are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<LabeledMessage>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_line(line).map_err(|e| Error::Input(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<LabeledMessage>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_corpus(samples: &[LabeledMessage], path: &Path) -> Result<()> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
