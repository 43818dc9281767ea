//! Convolutional encoder: `f` filters of `d` rows slide over the embedded
//! sequence, feature maps are zero-padded back to length `N`, passed through
//! ReLU, max-pooled over non-overlapping windows of `q` rows and flattened
//! to `p·f` features with `p = N/q`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnnEncoderParams {
    /// `[f × d·K]`, one flattened `d×K` kernel per row.
    pub filters: ParamId,
    /// `[f]`
    pub bias: ParamId,
    pub num_filters: usize,
    pub width: usize,
    pub pool: usize,
    pub input_dim: usize,
}

impl CnnEncoderParams {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        num_filters: usize,
        width: usize,
        pool: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let fan_in = width * input_dim;
        let bound = (6.0 / fan_in as f64).sqrt();
        let vals = (0..num_filters * fan_in).map(|_| rng.gen_range(-bound..bound)).collect();
        let filters = store.add(
            format!("{prefix}.filters"),
            Tensor::new(vec![num_filters, fan_in], vals).expect("shape matches"),
        );
        let bias = store.add(format!("{prefix}.bias"), Tensor::zeros(&[num_filters]));
        CnnEncoderParams {
            filters,
            bias,
            num_filters,
            width,
            pool,
            input_dim,
        }
    }

    /// Flattened feature count for a sequence of `n` rows.
    pub fn output_dim(&self, n: usize) -> usize {
        (n / self.pool) * self.num_filters
    }

    pub fn ids(&self) -> [ParamId; 2] {
        [self.filters, self.bias]
    }
}

/// `E [N×K] → [p·f]`, row-major over the pooled `[p×f]` matrix.
pub fn cnn_encode(tape: &mut Tape, embedded: Var, params: &CnnEncoderParams) -> Result<Var> {
    let shape = tape.shape(embedded).to_vec();
    if shape.len() != 2 || shape[1] != params.input_dim {
        return Err(Error::Dimension {
            op: "cnn_encode",
            left: shape,
            right: vec![params.input_dim],
        });
    }
    let n = shape[0];
    if params.pool == 0 || !n.is_multiple_of(params.pool) {
        return Err(Error::Config(format!(
            "pooling window {} does not divide sequence length {n}",
            params.pool
        )));
    }
    let f = tape.param(params.filters);
    let b = tape.param(params.bias);
    let conv = tape.conv1d_rows(embedded, f, b, params.width)?;
    let act = tape.relu(conv);
    let pooled = tape.max_pool_rows(act, params.pool)?;
    Ok(tape.flatten(pooled))
}
