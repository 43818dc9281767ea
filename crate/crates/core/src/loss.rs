//! Cross-entropy, penalty-weighted cross-entropy, and the multi-task sum.
//!
//! The weighted loss multiplies plain cross-entropy by
//! `P[argmax(ŷ), argmax(y)]`. The weight is read off the forward values and
//! enters the backward pass as a constant.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::Sentiment;
use crate::tensor::{Tape, Var};

/// Probabilities are clamped below at this value before `ln`.
pub const PROB_FLOOR: f64 = 1e-12;

/// Misclassification weights, rows = predicted class, columns = true class,
/// both in (Positive, Negative, Neutral) order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyMatrix([[f64; 3]; 3]);

impl Default for PenaltyMatrix {
    fn default() -> Self {
        PenaltyMatrix([[1.0, 2.5, 2.0], [2.5, 1.0, 2.0], [1.5, 1.5, 1.0]])
    }
}

impl PenaltyMatrix {
    pub fn new(weights: [[f64; 3]; 3]) -> Result<Self> {
        for (i, row) in weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 1.0 {
                    return Err(Error::Config(format!(
                        "penalty weight [{i}][{j}] = {w} must be a finite value >= 1"
                    )));
                }
                if i == j && w != 1.0 {
                    return Err(Error::Config(format!("penalty diagonal [{i}][{i}] must be 1, got {w}")));
                }
            }
        }
        Ok(PenaltyMatrix(weights))
    }

    /// All ones: weighted cross-entropy degenerates to plain cross-entropy.
    pub fn uniform() -> Self {
        PenaltyMatrix([[1.0; 3]; 3])
    }

    pub fn weight(&self, predicted: Sentiment, truth: Sentiment) -> f64 {
        self.0[predicted.index()][truth.index()]
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    /// Three lines of three whitespace-separated numbers. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        if rows.len() != 3 {
            return Err(Error::Input(format!("penalty matrix needs 3 rows, found {}", rows.len())));
        }
        let mut w = [[0.0; 3]; 3];
        for (i, line) in rows.iter().enumerate() {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Input(format!("bad penalty weight {t:?}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 3 {
                return Err(Error::Input(format!("penalty row {i} needs 3 values, found {}", vals.len())));
            }
            w[i].copy_from_slice(&vals);
        }
        PenaltyMatrix::new(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PenaltyMatrix::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Loads `path` when given, the default weights otherwise.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(PenaltyMatrix::default()), PenaltyMatrix::load)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn true_index(y: &[f64]) -> Result<usize> {
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    let zeros = y.iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || ones + zeros != y.len() {
        return Err(Error::Contract(format!("target {y:?} is not one-hot")));
    }
    Ok(y.iter().position(|&v| v == 1.0).expect("one entry is 1"))
}

fn check_probs(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::Dimension {
            op: "cross_entropy",
            left: vec![y.len()],
            right: vec![y_hat.len()],
        });
    }
    Ok(())
}

/// `H(y, ŷ) = −Σ yᵢ ln ŷᵢ` for one-hot `y`.
pub fn cross_entropy(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_probs(y, y_hat)?;
    let t = true_index(y)?;
    Ok(-y_hat[t].max(PROB_FLOOR).ln())
}

pub fn weighted_cross_entropy(y: &[f64], y_hat: &[f64], penalty: &PenaltyMatrix) -> Result<f64> {
    check_probs(y, y_hat)?;
    if y.len() != 3 {
        return Err(Error::Contract(format!(
            "weighted cross-entropy is defined for 3 sentiment classes, got {}",
            y.len()
        )));
    }
    let t = true_index(y)?;
    let w = penalty.weight(
        Sentiment::from_index(argmax(y_hat)).expect("3 classes"),
        Sentiment::from_index(t).expect("3 classes"),
    );
    Ok(w * cross_entropy(y, y_hat)?)
}

pub fn multitask_loss(sentiment_loss: f64, rule_loss: f64) -> f64 {
    sentiment_loss + rule_loss
}

/// `−ln(max(probs[target], floor))` recorded on the tape.
pub fn cross_entropy_on_tape(tape: &mut Tape, probs: Var, target: usize) -> Result<Var> {
    let p = tape.select(probs, target)?;
    let p = tape.clamp_min(p, PROB_FLOOR);
    let l = tape.ln(p)?;
    Ok(tape.scale(l, -1.0))
}

/// Weighted cross-entropy on the tape; the penalty weight is a constant.
pub fn weighted_cross_entropy_on_tape(tape: &mut Tape, probs: Var, truth: Sentiment, penalty: &PenaltyMatrix) -> Result<Var> {
    let predicted = Sentiment::from_index(argmax(tape.value(probs)))
        .ok_or_else(|| Error::Contract("sentiment head must have 3 outputs".into()))?;
    let w = penalty.weight(predicted, truth);
    let ce = cross_entropy_on_tape(tape, probs, truth.index())?;
    Ok(tape.scale(ce, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matrix_ordering() {
        use Sentiment::*;
        let p = PenaltyMatrix::default();
        assert_eq!(p.weight(Positive, Negative), 2.5);
        assert_eq!(p.weight(Negative, Positive), 2.5);
        assert_eq!(p.weight(Positive, Neutral), 2.0);
        assert_eq!(p.weight(Negative, Neutral), 2.0);
        assert_eq!(p.weight(Neutral, Positive), 1.5);
        assert_eq!(p.weight(Neutral, Negative), 1.5);
        for s in Sentiment::ALL {
            assert_eq!(p.weight(s, s), 1.0);
        }
        assert!(PenaltyMatrix::new(*p.rows()).is_ok());
    }

    #[test]
    fn invalid_matrices_rejected() {
        assert!(PenaltyMatrix::new([[2.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]).is_err());
        assert!(PenaltyMatrix::new([[1.0, 0.5, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]).is_err());
        assert!(PenaltyMatrix::parse("1 2\n1 1 1\n1 1 1").is_err());
        let p = PenaltyMatrix::parse("# pred/true\n1 2.5 2\n2.5 1 2\n1.5 1.5 1\n").unwrap();
        assert_eq!(p, PenaltyMatrix::default());
    }

    #[test]
    fn worked_examples() {
        let p = PenaltyMatrix::default();
        let ce1 = cross_entropy(&[0.0, 1.0, 0.0], &[0.2, 0.3, 0.5]).unwrap();
        let w1 = weighted_cross_entropy(&[0.0, 1.0, 0.0], &[0.2, 0.3, 0.5], &p).unwrap();
        assert!((ce1 - 1.204).abs() < 1e-3);
        assert!((w1 - 1.806).abs() < 1e-3);
        let ce2 = cross_entropy(&[1.0, 0.0, 0.0], &[0.2, 0.7, 0.1]).unwrap();
        let w2 = weighted_cross_entropy(&[1.0, 0.0, 0.0], &[0.2, 0.7, 0.1], &p).unwrap();
        assert!((ce2 - 1.609).abs() < 1e-3);
        assert!((w2 - 4.023).abs() < 1e-3);
    }

    #[test]
    fn perfect_prediction_is_zero_and_diagonal_is_plain() {
        assert_eq!(cross_entropy(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        let y = [0.0, 1.0, 0.0];
        let yh = [0.1, 0.6, 0.3];
        let p = PenaltyMatrix::default();
        assert_eq!(
            weighted_cross_entropy(&y, &yh, &p).unwrap().to_bits(),
            cross_entropy(&y, &yh).unwrap().to_bits()
        );
    }

    #[test]
    fn non_one_hot_rejected() {
        assert!(matches!(cross_entropy(&[0.5, 0.5, 0.0], &[0.2, 0.3, 0.5]), Err(Error::Contract(_))));
        assert!(matches!(cross_entropy(&[0.0, 0.0, 0.0], &[0.2, 0.3, 0.5]), Err(Error::Contract(_))));
    }

    #[test]
    fn clamp_keeps_loss_finite() {
        let l = cross_entropy(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((l - 1e-12f64.ln().abs()).abs() < 1e-9);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn multitask_sum() {
        assert_eq!(multitask_loss(1.0, 0.5), 1.5);
        assert_eq!(multitask_loss(0.7, 0.0), 0.7);
    }
}
