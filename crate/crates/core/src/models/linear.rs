use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};

/// Fully connected layer `W x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        let vals = (0..input * output).map(|_| rng.gen_range(-bound..bound)).collect();
        let weight = store.add(
            format!("{prefix}.weight"),
            Tensor::new(vec![output, input], vals).expect("shape matches"),
        );
        let bias = store.add(format!("{prefix}.bias"), Tensor::zeros(&[output]));
        Linear {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(self.weight);
        let b = tape.param(self.bias);
        let wx = tape.matvec(w, x)?;
        tape.add(wx, b)
    }

    pub fn ids(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }
}
