use super::ParamStore;
use crate::error::{Error, Result};

/// Plain gradient descent: `p ← p − lr·grad(p)` for every trainable tensor.
///
/// Frozen tensors (no gradient buffer) are left untouched. Gradients are not
/// cleared; call [`ParamStore::zero_grad`] before the next accumulation.
pub fn sgd_step(params: &mut ParamStore, learning_rate: f64) -> Result<()> {
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive and finite, got {learning_rate}"
        )));
    }
    for t in params.tensors_mut() {
        if !t.requires_grad() {
            continue;
        }
        let (values, grad) = (&mut t.values, &t.grad);
        for (v, g) in values.iter_mut().zip(grad) {
            *v -= learning_rate * g;
        }
    }
    Ok(())
}
