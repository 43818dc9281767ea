//! Trains several variants on the same data and seeds and tabulates
//! their test-split metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, Variant};
use super::dataset::{Dataset, Split};
use super::train::{evaluate, train, Resources};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: u8,
    pub description: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<4} {:<40} {:>9} {:>9} {:>9}", "#", "model", "precision", "recall", "f1").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:<4} {:<40} {:>9.4} {:>9.4} {:>9.4}",
                r.variant, r.description, r.precision, r.recall, r.f1
            )
            .unwrap();
        }
        s
    }

    /// One JSON object per row.
    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
            .collect()
    }
}

/// Trains each variant with `base` (only the variant changes) and
/// evaluates it on the test split.
pub fn run_ablation(dataset: &Dataset, variants: &[Variant], base: &TrainConfig, resources: &Resources) -> Result<AblationTable> {
    let test = dataset.split(Split::Test);
    let mut rows = Vec::with_capacity(variants.len());
    for &v in variants {
        let config = TrainConfig {
            variant: v,
            ..base.clone()
        };
        log::info!("training variant {v}");
        let outcome = train(dataset, &config, resources)?;
        let m = evaluate(&outcome.model, test.iter().copied(), base.averaging)?;
        rows.push(AblationRow {
            variant: v.id(),
            description: v.description().to_string(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            accuracy: m.accuracy,
        });
    }
    Ok(AblationTable { rows })
}
