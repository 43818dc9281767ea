//! The tape in isolation: a GRU step, its loss and parameter gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sentikit::loss::cross_entropy_on_tape;
use sentikit::models::{gru_cell_step, GruParams, Linear};
use sentikit::tensor::{sgd_step, ParamStore, Tape, Tensor};

fn main() -> sentikit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::new();
    let gru = GruParams::new(&mut store, "gru", 3, 4, false, &mut rng);
    let head = Linear::new(&mut store, "head", 4, 3, &mut rng);
    let x = Tensor::vector(vec![0.5, -1.0, 2.0]);

    for step in 0..5 {
        let grads = {
            let mut tape = Tape::new(&store);
            let xv = tape.leaf(&x);
            let h0 = tape.constant(vec![4], vec![0.0; 4])?;
            let h = gru_cell_step(&mut tape, xv, h0, &gru)?;
            let logits = head.forward(&mut tape, h)?;
            let p = tape.softmax(logits)?;
            let loss = cross_entropy_on_tape(&mut tape, p, 0)?;
            println!("step {step}: loss {:.4}", tape.scalar_value(loss));
            tape.backward(loss)?
        };
        store.zero_grad();
        store.accumulate(&grads);
        sgd_step(&mut store, 0.5)?;
    }
    Ok(())
}
