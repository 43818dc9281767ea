//! Seeded train/validation/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::LabeledMessage;
use crate::augment::AugmentedSample;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

/// Messages plus the split each one belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledMessage>,
    pub assignment: Vec<Split>,
}

impl Dataset {
    pub fn split(&self, which: Split) -> Vec<&LabeledMessage> {
        self.samples
            .iter()
            .zip(&self.assignment)
            .filter(|(_, &s)| s == which)
            .map(|(m, _)| m)
            .collect()
    }

    /// Indices of the samples in `which`, in corpus order.
    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.assignment[i] == which).collect()
    }

    pub fn sizes(&self) -> [usize; 3] {
        let mut n = [0; 3];
        for s in &self.assignment {
            n[*s as usize] += 1;
        }
        n
    }

    /// Split of every augmented sample, taken from its original
    /// (`source` indexes `samples`).
    pub fn assign_augmented(&self, augmented: &[AugmentedSample]) -> Result<Vec<Split>> {
        augmented
            .iter()
            .map(|a| {
                self.assignment.get(a.source).copied().ok_or_else(|| {
                    Error::Input(format!("augmented sample refers to missing original {}", a.source))
                })
            })
            .collect()
    }
}

fn check_ratios(ratios: [f64; 3]) -> Result<()> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    Ok(())
}

/// Split assignment for `n` items: seeded shuffle, then contiguous cuts of
/// `round(n·r_train)` and `round(n·r_val)` items; the test split takes the rest.
pub fn split_indices(n: usize, ratios: [f64; 3], seed: u64) -> Result<Vec<Split>> {
    check_ratios(ratios)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * ratios[0]).round() as usize).min(n);
    let n_val = ((n as f64 * ratios[1]).round() as usize).min(n - n_train);
    let mut out = vec![Split::Test; n];
    for (k, &i) in order.iter().enumerate() {
        out[i] = if k < n_train {
            Split::Train
        } else if k < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    Ok(out)
}

pub fn split_dataset(samples: Vec<LabeledMessage>, ratios: [f64; 3], seed: u64) -> Result<Dataset> {
    let assignment = split_indices(samples.len(), ratios, seed)?;
    Ok(Dataset { samples, assignment })
}
