use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Inverted dropout: survivors are scaled by `1/(1 − drop_rate)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub drop_rate: f64,
    pub training: bool,
    pub rng_seed: u64,
}

pub(crate) fn check_rate(drop_rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&drop_rate) {
        return Err(Error::Config(format!("drop rate must be in [0, 1), got {drop_rate}")));
    }
    Ok(())
}

fn mask(n: usize, drop_rate: f64, rng: &mut impl Rng) -> Vec<f64> {
    let keep = 1.0 - drop_rate;
    (0..n)
        .map(|_| if rng.gen::<f64>() < drop_rate { 0.0 } else { 1.0 / keep })
        .collect()
}

pub fn dropout_apply(x: &Tensor, spec: &DropoutSpec) -> Result<Tensor> {
    check_rate(spec.drop_rate)?;
    if !spec.training || spec.drop_rate == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let m = mask(x.numel(), spec.drop_rate, &mut rng);
    let vals = x.values().iter().zip(&m).map(|(a, b)| a * b).collect();
    Tensor::new(x.shape().to_vec(), vals)
}

/// Tape variant; the mask is a constant so gradients flow only through survivors.
pub fn dropout_on_tape(tape: &mut Tape, x: Var, drop_rate: f64, mode: Mode, rng: &mut impl Rng) -> Result<Var> {
    check_rate(drop_rate)?;
    if mode == Mode::Infer || drop_rate == 0.0 {
        return Ok(x);
    }
    let shape = tape.shape(x).to_vec();
    let m = mask(tape.value(x).len(), drop_rate, rng);
    let mv = tape.constant(shape, m)?;
    tape.hadamard(x, mv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_cases() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.0]);
        let off = DropoutSpec { drop_rate: 0.0, training: true, rng_seed: 1 };
        assert_eq!(dropout_apply(&x, &off).unwrap(), x);
        for rate in [0.1, 0.5, 0.99] {
            let infer = DropoutSpec { drop_rate: rate, training: false, rng_seed: 1 };
            assert_eq!(dropout_apply(&x, &infer).unwrap(), x);
        }
    }

    #[test]
    fn rate_one_rejected() {
        let x = Tensor::vector(vec![1.0]);
        let bad = DropoutSpec { drop_rate: 1.0, training: true, rng_seed: 1 };
        assert!(matches!(dropout_apply(&x, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn mean_is_preserved() {
        let x = Tensor::vector(vec![1.0; 10_000]);
        let spec = DropoutSpec { drop_rate: 0.3, training: true, rng_seed: 42 };
        let y = dropout_apply(&x, &spec).unwrap();
        let mean: f64 = y.values().iter().sum::<f64>() / 10_000.0;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        let zeros = y.values().iter().filter(|&&v| v == 0.0).count();
        assert!((2_700..3_300).contains(&zeros));
    }
}
