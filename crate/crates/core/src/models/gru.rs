//! Gated recurrent unit, single direction and bidirectional.
//!
//! ```text
//! r_t = σ(W_r x_t + U_r h_{t-1})
//! z_t = σ(W_z x_t + U_z h_{t-1})
//! ĥ_t = tanh(W x_t + U (r_t ⊙ h_{t-1}))
//! h_t = (1 − z_t) ⊙ h_{t-1} + z_t ⊙ ĥ_t
//! ```
//!
//! Biases are off by default; `GruParams::new(.., bias = true, ..)` adds one
//! per gate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub input: usize,
    pub hidden: usize,
    pub w_r: ParamId,
    pub u_r: ParamId,
    pub w_z: ParamId,
    pub u_z: ParamId,
    pub w_h: ParamId,
    pub u_h: ParamId,
    pub bias: Option<[ParamId; 3]>,
}

fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    let vals = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(vec![rows, cols], vals).expect("shape matches")
}

impl GruParams {
    /// Registers a cell in `store` with weights uniform in ±1/√hidden.
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, bias: bool, rng: &mut impl Rng) -> Self {
        let b = 1.0 / (hidden as f64).sqrt();
        let mut w = |name: &str, cols: usize| store.add(format!("{prefix}.{name}"), uniform(rng, hidden, cols, b));
        let w_r = w("w_r", input);
        let u_r = w("u_r", hidden);
        let w_z = w("w_z", input);
        let u_z = w("u_z", hidden);
        let w_h = w("w_h", input);
        let u_h = w("u_h", hidden);
        let bias = bias.then(|| {
            ["b_r", "b_z", "b_h"].map(|n| store.add(format!("{prefix}.{n}"), Tensor::zeros(&[hidden])))
        });
        GruParams {
            input,
            hidden,
            w_r,
            u_r,
            w_z,
            u_z,
            w_h,
            u_h,
            bias,
        }
    }

    pub fn ids(&self) -> Vec<ParamId> {
        let mut v = vec![self.w_r, self.u_r, self.w_z, self.u_z, self.w_h, self.u_h];
        if let Some(b) = self.bias {
            v.extend(b);
        }
        v
    }
}

/// Intermediate values of one cell step.
#[derive(Clone, Copy, Debug)]
pub struct GruStep {
    pub reset: Var,
    pub update: Var,
    pub candidate: Var,
    pub hidden: Var,
}

fn affine(tape: &mut Tape, w: ParamId, x: Var, u: ParamId, h: Var, b: Option<ParamId>) -> Result<Var> {
    let wv = tape.param(w);
    let uv = tape.param(u);
    let wx = tape.matvec(wv, x)?;
    let uh = tape.matvec(uv, h)?;
    let s = tape.add(wx, uh)?;
    match b {
        Some(b) => {
            let bv = tape.param(b);
            tape.add(s, bv)
        }
        None => Ok(s),
    }
}

/// One step with every intermediate exposed. `forced_update` replaces the
/// computed `z_t` by a constant vector filled with the given value.
pub fn gru_cell_detailed(tape: &mut Tape, x: Var, h_prev: Var, params: &GruParams, forced_update: Option<f64>) -> Result<GruStep> {
    if tape.shape(x) != [params.input] || tape.shape(h_prev) != [params.hidden] {
        return Err(Error::Dimension {
            op: "gru_cell_step",
            left: [tape.shape(x), tape.shape(h_prev)].concat(),
            right: vec![params.input, params.hidden],
        });
    }
    let (br, bz, bh) = match params.bias {
        Some([a, b, c]) => (Some(a), Some(b), Some(c)),
        None => (None, None, None),
    };
    let r_in = affine(tape, params.w_r, x, params.u_r, h_prev, br)?;
    let reset = tape.sigmoid(r_in);
    let update = match forced_update {
        Some(z) => tape.constant(vec![params.hidden], vec![z; params.hidden])?,
        None => {
            let z_in = affine(tape, params.w_z, x, params.u_z, h_prev, bz)?;
            tape.sigmoid(z_in)
        }
    };
    let gated = tape.hadamard(reset, h_prev)?;
    let c_in = affine(tape, params.w_h, x, params.u_h, gated, bh)?;
    let candidate = tape.tanh(c_in);

    // (1 − z) ⊙ h_prev + z ⊙ ĥ
    let ones = tape.constant(vec![params.hidden], vec![1.0; params.hidden])?;
    let keep = tape.sub(ones, update)?;
    let carried = tape.hadamard(keep, h_prev)?;
    let fresh = tape.hadamard(update, candidate)?;
    let hidden = tape.add(carried, fresh)?;
    Ok(GruStep {
        reset,
        update,
        candidate,
        hidden,
    })
}

pub fn gru_cell_step(tape: &mut Tape, x: Var, h_prev: Var, params: &GruParams) -> Result<Var> {
    Ok(gru_cell_detailed(tape, x, h_prev, params, None)?.hidden)
}

/// Runs the cell over the rows of `inputs [N×input]`. Returns the stacked
/// states `[N×hidden]` and the last state. `h0` defaults to zeros.
pub fn gru_run(tape: &mut Tape, inputs: Var, h0: Option<Var>, params: &GruParams) -> Result<(Var, Var)> {
    let steps = rows_of(tape, inputs)?;
    let states = run_rows(tape, &steps, h0, params)?;
    let last = *states.last().expect("non-empty");
    Ok((tape.stack_rows(&states)?, last))
}

fn rows_of(tape: &mut Tape, inputs: Var) -> Result<Vec<Var>> {
    let shape = tape.shape(inputs).to_vec();
    if shape.len() != 2 {
        return Err(Error::Contract(format!("GRU input must be [N×input], got {shape:?}")));
    }
    if shape[0] == 0 {
        return Err(Error::Input("GRU over an empty sequence".into()));
    }
    (0..shape[0]).map(|t| tape.row(inputs, t)).collect()
}

fn run_rows(tape: &mut Tape, rows: &[Var], h0: Option<Var>, params: &GruParams) -> Result<Vec<Var>> {
    let mut h = match h0 {
        Some(h) => h,
        None => tape.constant(vec![params.hidden], vec![0.0; params.hidden])?,
    };
    let mut states = Vec::with_capacity(rows.len());
    for &x in rows {
        h = gru_cell_step(tape, x, h, params)?;
        states.push(h);
    }
    Ok(states)
}

/// Bidirectional run: row `t` is `[forward_t, backward_t]`, where the
/// backward cell reads the sequence right to left and its states are
/// re-aligned to input positions.
pub fn bigru_run(tape: &mut Tape, inputs: Var, fwd: &GruParams, bwd: &GruParams) -> Result<Var> {
    let (f_states, b_states) = bigru_states(tape, inputs, fwd, bwd)?;
    let f = tape.stack_rows(&f_states)?;
    let b = tape.stack_rows(&b_states)?;
    tape.concat(&[f, b], 1)
}

/// Per-position forward and backward states, both in input order.
pub fn bigru_states(tape: &mut Tape, inputs: Var, fwd: &GruParams, bwd: &GruParams) -> Result<(Vec<Var>, Vec<Var>)> {
    let rows = rows_of(tape, inputs)?;
    let f_states = run_rows(tape, &rows, None, fwd)?;
    let reversed: Vec<Var> = rows.iter().rev().copied().collect();
    let mut b_states = run_rows(tape, &reversed, None, bwd)?;
    b_states.reverse();
    Ok((f_states, b_states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(input: usize, hidden: usize) -> (ParamStore, GruParams) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = GruParams::new(&mut store, "g", input, hidden, false, &mut rng);
        (store, p)
    }

    #[test]
    fn zero_params_halve_the_state() {
        let (mut store, p) = setup(3, 2);
        for id in p.ids() {
            store.get_mut(id).values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let mut tape = Tape::new(&store);
        let x = tape.leaf(&Tensor::vector(vec![0.3, -1.0, 2.0]));
        let h = tape.leaf(&Tensor::vector(vec![0.8, -0.4]));
        let s = gru_cell_detailed(&mut tape, x, h, &p, None).unwrap();
        assert_eq!(tape.value(s.reset), &[0.5, 0.5]);
        assert_eq!(tape.value(s.update), &[0.5, 0.5]);
        assert_eq!(tape.value(s.candidate), &[0.0, 0.0]);
        assert_eq!(tape.value(s.hidden), &[0.4, -0.2]);
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let (store, p) = setup(3, 2);
        let mut tape = Tape::new(&store);
        let x = tape.leaf(&Tensor::vector(vec![0.3, -1.0]));
        let h = tape.leaf(&Tensor::vector(vec![0.8, -0.4]));
        assert!(matches!(gru_cell_step(&mut tape, x, h, &p), Err(Error::Dimension { .. })));
    }

    #[test]
    fn single_step_run_equals_cell() {
        let (store, p) = setup(3, 4);
        let mut tape = Tape::new(&store);
        let xs = tape.leaf(&Tensor::matrix(1, 3, vec![0.1, 0.2, -0.3]).unwrap());
        let (_, last) = gru_run(&mut tape, xs, None, &p).unwrap();
        let x = tape.leaf(&Tensor::vector(vec![0.1, 0.2, -0.3]));
        let h0 = tape.leaf(&Tensor::zeros(&[4]));
        let step = gru_cell_step(&mut tape, x, h0, &p).unwrap();
        assert_eq!(tape.value(last), tape.value(step));
    }

    #[test]
    fn empty_sequence_rejected() {
        let (store, p) = setup(3, 4);
        let mut tape = Tape::new(&store);
        let h = tape.leaf(&Tensor::zeros(&[4]));
        // A [0×3] tensor cannot be constructed; a vector input is a contract error.
        assert!(gru_run(&mut tape, h, None, &p).is_err());
    }

    #[test]
    fn bigru_width_is_twice_hidden() {
        let (mut store, f) = setup(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = GruParams::new(&mut store, "b", 2, 3, false, &mut rng);
        for n in 1..5 {
            let mut tape = Tape::new(&store);
            let xs = tape.leaf(&Tensor::matrix(n, 2, vec![0.5; n * 2]).unwrap());
            let out = bigru_run(&mut tape, xs, &f, &b).unwrap();
            assert_eq!(tape.shape(out), &[n, 6]);
        }
    }
}
