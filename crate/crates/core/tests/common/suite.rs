//! Finite-difference cases for every differentiable tape operation and the
//! composed model graphs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sentikit::chars::{CharEncoderConfig, CharVocabulary};
use sentikit::loss::{cross_entropy_on_tape, weighted_cross_entropy_on_tape, PenaltyMatrix};
use sentikit::models::{
    bigru_run, cnn_encode, gru_cell_step, gru_run, CnnEncoderParams, EncoderConfig, GruParams, Mode, NetConfig,
    SentimentNet,
};
use sentikit::tensor::{ParamStore, Tape};
use sentikit::text::tokenize;
use sentikit::vocab::build_vocabulary;
use sentikit::Sentiment;

use super::{grad_check, grad_check_store, project, rng, uniform, GradReport};

type Case = (&'static str, GradReport);

fn store_with(shapes: &[(&str, &[usize], f64, f64)], seed: u64) -> (ParamStore, Vec<sentikit::tensor::ParamId>) {
    let mut r = rng(seed);
    let mut s = ParamStore::new();
    let ids = shapes
        .iter()
        .map(|(name, shape, lo, hi)| s.add(*name, uniform(&mut r, shape, *lo, *hi)))
        .collect();
    (s, ids)
}

fn op_cases() -> Vec<Case> {
    let mut out = Vec::new();
    let m = |name: &'static str, shapes: &[(&str, &[usize], f64, f64)], f: &dyn Fn(&mut Tape, &[sentikit::tensor::Var]) -> sentikit::tensor::Var| {
        let (mut s, ids) = store_with(shapes, name.len() as u64);
        let rep = grad_check_store(&mut s, |t| {
            let vs: Vec<_> = ids.iter().map(|&i| t.param(i)).collect();
            let y = f(t, &vs);
            project(t, y, 99)
        });
        (name, rep)
    };
    out.push(m("matmul", &[("a", &[3, 4], -2.0, 2.0), ("b", &[4, 2], -2.0, 2.0)], &|t, v| t.matmul(v[0], v[1]).unwrap()));
    out.push(m("matvec", &[("a", &[3, 4], -2.0, 2.0), ("x", &[4], -2.0, 2.0)], &|t, v| t.matvec(v[0], v[1]).unwrap()));
    out.push(m("add", &[("a", &[5], -2.0, 2.0), ("b", &[5], -2.0, 2.0)], &|t, v| t.add(v[0], v[1]).unwrap()));
    out.push(m("sub", &[("a", &[2, 3], -2.0, 2.0), ("b", &[2, 3], -2.0, 2.0)], &|t, v| t.sub(v[0], v[1]).unwrap()));
    out.push(m("hadamard", &[("a", &[5], -2.0, 2.0), ("b", &[5], -2.0, 2.0)], &|t, v| t.hadamard(v[0], v[1]).unwrap()));
    out.push(m("sigmoid", &[("x", &[6], -2.0, 2.0)], &|t, v| t.sigmoid(v[0])));
    out.push(m("tanh", &[("x", &[6], -2.0, 2.0)], &|t, v| t.tanh(v[0])));
    out.push(m("relu", &[("x", &[6], -2.0, 2.0)], &|t, v| t.relu(v[0])));
    out.push(m("ln", &[("x", &[6], 0.2, 2.0)], &|t, v| t.ln(v[0]).unwrap()));
    out.push(m("scale", &[("x", &[4], -2.0, 2.0)], &|t, v| t.scale(v[0], -1.7)));
    out.push(m("softmax", &[("x", &[5], -2.0, 2.0)], &|t, v| t.softmax(v[0]).unwrap()));
    out.push(m("concat_axis0", &[("a", &[2, 3], -2.0, 2.0), ("b", &[1, 3], -2.0, 2.0)], &|t, v| {
        t.concat(&[v[0], v[1]], 0).unwrap()
    }));
    out.push(m("concat_axis1", &[("a", &[2, 3], -2.0, 2.0), ("b", &[2, 2], -2.0, 2.0)], &|t, v| {
        t.concat(&[v[0], v[1]], 1).unwrap()
    }));
    out.push(m("stack_rows", &[("a", &[3], -2.0, 2.0), ("b", &[3], -2.0, 2.0)], &|t, v| {
        t.stack_rows(&[v[0], v[1], v[0]]).unwrap()
    }));
    out.push(m("narrow", &[("x", &[4, 5], -2.0, 2.0)], &|t, v| t.narrow(v[0], 1, 1, 3).unwrap()));
    out.push(m("row", &[("x", &[4, 3], -2.0, 2.0)], &|t, v| t.row(v[0], 2).unwrap()));
    out.push(m("reshape", &[("x", &[2, 6], -2.0, 2.0)], &|t, v| t.reshape(v[0], vec![3, 4]).unwrap()));
    out.push(m("flatten", &[("x", &[3, 2], -2.0, 2.0)], &|t, v| t.flatten(v[0])));
    out.push(m("gather_rows", &[("table", &[5, 3], -2.0, 2.0)], &|t, v| {
        t.gather_rows(v[0], &[4, 0, 2, 4, 1], Some(0)).unwrap()
    }));
    out.push(m("sum", &[("x", &[7], -2.0, 2.0)], &|t, v| t.sum(v[0])));
    out.push(m("select", &[("x", &[4], -2.0, 2.0)], &|t, v| t.select(v[0], 2).unwrap()));
    out.push(m("clamp_min", &[("x", &[8], -2.0, 2.0)], &|t, v| t.clamp_min(v[0], 0.3)));
    out.push(m(
        "conv1d_rows",
        &[("x", &[6, 3], -2.0, 2.0), ("w", &[2, 9], -2.0, 2.0), ("b", &[2], -2.0, 2.0)],
        &|t, v| t.conv1d_rows(v[0], v[1], v[2], 3).unwrap(),
    ));
    out.push(m("max_pool_rows", &[("x", &[6, 3], -2.0, 2.0)], &|t, v| t.max_pool_rows(v[0], 2).unwrap()));
    out.push(m("cross_entropy", &[("logits", &[3], -2.0, 2.0)], &|t, v| {
        let p = t.softmax(v[0]).unwrap();
        cross_entropy_on_tape(t, p, 1).unwrap()
    }));
    out.push(m("weighted_cross_entropy", &[("logits", &[3], -2.0, 2.0)], &|t, v| {
        let p = t.softmax(v[0]).unwrap();
        weighted_cross_entropy_on_tape(t, p, Sentiment::Negative, &PenaltyMatrix::default()).unwrap()
    }));
    out
}

fn gru_store(input: usize, hidden: usize, bias: bool, seed: u64) -> (ParamStore, GruParams, GruParams) {
    let mut s = ParamStore::new();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let f = GruParams::new(&mut s, "fwd", input, hidden, bias, &mut r);
    let b = GruParams::new(&mut s, "bwd", input, hidden, bias, &mut r);
    // Spread the weights over ±2 so the gates are not all near 0.5.
    for t in s.tensors_mut() {
        t.values_mut().iter_mut().for_each(|v| *v *= 2.0 * (hidden as f64).sqrt());
    }
    (s, f, b)
}

fn composed_cases() -> Vec<Case> {
    let mut out = Vec::new();

    let (mut s, p, _) = gru_store(3, 4, true, 1);
    let x = s.add("x", uniform(&mut rng(2), &[3], -2.0, 2.0));
    let h = s.add("h", uniform(&mut rng(3), &[4], -1.0, 1.0));
    out.push((
        "gru_cell",
        grad_check_store(&mut s, |t| {
            let (xv, hv) = (t.param(x), t.param(h));
            let y = gru_cell_step(t, xv, hv, &p).unwrap();
            project(t, y, 5)
        }),
    ));

    let (mut s, p, _) = gru_store(3, 4, false, 4);
    let xs = s.add("xs", uniform(&mut rng(5), &[10, 3], -2.0, 2.0));
    out.push((
        "gru_10_steps",
        grad_check_store(&mut s, |t| {
            let xv = t.param(xs);
            let (states, _) = gru_run(t, xv, None, &p).unwrap();
            project(t, states, 6)
        }),
    ));

    let (mut s, f, b) = gru_store(2, 3, false, 7);
    let xs = s.add("xs", uniform(&mut rng(8), &[5, 2], -2.0, 2.0));
    out.push((
        "bigru",
        grad_check_store(&mut s, |t| {
            let xv = t.param(xs);
            let y = bigru_run(t, xv, &f, &b).unwrap();
            project(t, y, 9)
        }),
    ));

    let mut s = ParamStore::new();
    let cnn = CnnEncoderParams::new(&mut s, "cnn", 3, 3, 2, 2, &mut rng(10));
    for id in cnn.ids() {
        let shape = s.get(id).shape().to_vec();
        let fresh = uniform(&mut rng(11 + id.index() as u64), &shape, -2.0, 2.0);
        s.get_mut(id).values_mut().copy_from_slice(fresh.values());
    }
    let e = s.add("embedded", uniform(&mut rng(12), &[6, 3], -2.0, 2.0));
    out.push((
        "cnn_encoder",
        grad_check_store(&mut s, |t| {
            let ev = t.param(e);
            let y = cnn_encode(t, ev, &cnn).unwrap();
            project(t, y, 13)
        }),
    ));

    out.push(("multitask_net", multitask_case()));
    out
}

fn multitask_case() -> GradReport {
    let text = "the phone is great";
    let vocab = build_vocabulary(&[tokenize("the phone is great but the screen")], 50).unwrap();
    let cv = CharVocabulary::build(&["the phone is great but the screen"]);
    let config = NetConfig {
        seq_len: 4,
        word_dim: 3,
        char_encoder: Some(CharEncoderConfig { char_dim: 2, hidden: 2 }),
        encoder: EncoderConfig::Gru { hidden: 3, bias: false },
        rule_head: true,
        drop_rate: 0.3,
    };
    let mut net = SentimentNet::new(config, vocab, Some(cv), None, 21).unwrap();
    let tokens = tokenize(text);
    grad_check(
        &mut net,
        |n| &n.store,
        |n| &mut n.store,
        |n, t| {
            // Reseeded per evaluation so every pass draws the same dropout masks.
            let mut r = ChaCha8Rng::seed_from_u64(77);
            let out = n.forward(t, &tokens, Mode::Train, &mut r).unwrap();
            let s = weighted_cross_entropy_on_tape(t, out.sentiment, Sentiment::Positive, &PenaltyMatrix::default())
                .unwrap();
            let r = cross_entropy_on_tape(t, out.rule.unwrap(), 0).unwrap();
            t.add(s, r).unwrap()
        },
    )
}

/// Every case of the suite, primitive operations first.
pub fn gradient_suite() -> Vec<Case> {
    let mut v = op_cases();
    v.extend(composed_cases());
    v
}
