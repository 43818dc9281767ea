//! Precision, recall and F-measure over the three sentiment classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::Sentiment;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "macro" => Ok(Averaging::Macro),
            "micro" => Ok(Averaging::Micro),
            other => Err(Error::Config(format!("averaging must be macro or micro, got {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub averaging: Averaging,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Positive, Negative, Neutral.
    pub per_class: [ClassMetrics; 3],
    /// `confusion[truth][predicted]`.
    pub confusion: [[usize; 3]; 3],
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl MetricsReport {
    /// Per-class scores use `F = 2PR/(P+R)`, with 0 for empty denominators.
    /// Macro averages the per-class values; micro pools the counts.
    pub fn from_predictions(truth: &[Sentiment], predicted: &[Sentiment], averaging: Averaging) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension {
                op: "metrics",
                left: vec![truth.len()],
                right: vec![predicted.len()],
            });
        }
        if truth.is_empty() {
            return Err(Error::Input("cannot evaluate an empty split".into()));
        }
        let mut confusion = [[0usize; 3]; 3];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        let per_class: [ClassMetrics; 3] = std::array::from_fn(|c| {
            let tp = confusion[c][c];
            let predicted: usize = (0..3).map(|t| confusion[t][c]).sum();
            let support: usize = confusion[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support,
            }
        });
        let correct: usize = (0..3).map(|c| confusion[c][c]).sum();
        let accuracy = ratio(correct, truth.len());
        let (precision, recall, f1) = match averaging {
            Averaging::Macro => (
                per_class.iter().map(|m| m.precision).sum::<f64>() / 3.0,
                per_class.iter().map(|m| m.recall).sum::<f64>() / 3.0,
                per_class.iter().map(|m| m.f1).sum::<f64>() / 3.0,
            ),
            // Single-label data: pooled P and R both equal accuracy.
            Averaging::Micro => (accuracy, accuracy, accuracy),
        };
        Ok(MetricsReport {
            averaging,
            precision,
            recall,
            f1,
            accuracy,
            per_class,
            confusion,
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support")?;
        for (s, m) in Sentiment::ALL.iter().zip(&self.per_class) {
            writeln!(
                f,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                s.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            )?;
        }
        let label = match self.averaging {
            Averaging::Macro => "macro",
            Averaging::Micro => "micro",
        };
        writeln!(
            f,
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            label,
            self.precision,
            self.recall,
            self.f1,
            self.per_class.iter().map(|m| m.support).sum::<usize>()
        )?;
        writeln!(f, "accuracy {:.4}", self.accuracy)?;
        writeln!(f, "confusion (rows = truth, cols = predicted: pos neg neu)")?;
        for (s, row) in Sentiment::ALL.iter().zip(&self.confusion) {
            writeln!(f, "  {:<8} {:>6} {:>6} {:>6}", s.as_str(), row[0], row[1], row[2])?;
        }
        Ok(())
    }
}
