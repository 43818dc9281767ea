use super::{numel, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Index of a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryKind {
    Sigmoid,
    Tanh,
    Relu,
    Ln,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Subtract,
    Hadamard,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    MatVec(Var, Var),
    Binary(Var, Var, BinaryKind),
    Unary(Var, UnaryKind),
    Affine(Var, f64),
    Softmax(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Narrow { src: Var, axis: usize, start: usize },
    Reshape(Var),
    Gather { src: Var, indices: Vec<usize>, skip: Option<usize> },
    Sum(Var),
    Select(Var, usize),
    ClampMin(Var, f64),
    Conv1d { input: Var, filters: Var, bias: Var, width: usize },
    MaxPool { input: Var, argmax: Vec<usize> },
}

enum Storage {
    Owned(Vec<f64>),
    Param(ParamId),
}

struct Node {
    shape: Vec<usize>,
    storage: Storage,
    requires_grad: bool,
    op: Op,
}

static EMPTY_STORE: ParamStore = ParamStore::empty();

impl ParamStore {
    const fn empty() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }
}

/// Records a forward computation for reverse-mode differentiation.
///
/// The tape borrows the parameter store immutably; parameter values are read
/// in place and never copied.
pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl Tape<'static> {
    /// A tape with no parameter store, for computations on leaves only.
    pub fn detached() -> Self {
        Tape::new(&EMPTY_STORE)
    }
}

fn dim_err(op: &'static str, a: &[usize], b: &[usize]) -> Error {
    Error::Dimension {
        op,
        left: a.to_vec(),
        right: b.to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
            param_vars: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, values: Vec<f64>, requires_grad: bool, op: Op) -> Var {
        debug_assert_eq!(numel(&shape), values.len());
        self.nodes.push(Node {
            shape,
            storage: Storage::Owned(values),
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match &self.nodes[v.0].storage {
            Storage::Owned(vals) => vals,
            Storage::Param(id) => self.store.get(*id).values(),
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor {
            shape: self.shape(v).to_vec(),
            values: self.value(v).to_vec(),
            grad: Vec::new(),
            requires_grad: false,
        }
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    /// Records a copy of `t`; differentiable iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        self.push(t.shape.clone(), t.values.clone(), t.requires_grad, Op::Leaf)
    }

    /// Records a non-differentiable value.
    pub fn constant(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Result<Var> {
        if numel(&shape) != values.len() {
            return Err(dim_err("constant", &shape, &[values.len()]));
        }
        Ok(self.push(shape, values, false, Op::Leaf))
    }

    /// Node for a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let t = self.store.get(id);
        self.nodes.push(Node {
            shape: t.shape.clone(),
            storage: Storage::Param(id),
            requires_grad: t.requires_grad,
            op: Op::Param,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    /// `[m×k] × [k×n] → [m×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(dim_err("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = av[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += aip * b;
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(vec![m, n], out, rg, Op::MatMul(a, b)))
    }

    /// `[m×k] × [k] → [m]`.
    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (sa, sx) = (self.shape(a), self.shape(x));
        if sa.len() != 2 || sx.len() != 1 || sa[1] != sx[0] {
            return Err(dim_err("matvec", sa, sx));
        }
        let (m, k) = (sa[0], sa[1]);
        let (av, xv) = (self.value(a), self.value(x));
        let out: Vec<f64> = (0..m)
            .map(|i| av[i * k..(i + 1) * k].iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        let rg = self.rg(a) || self.rg(x);
        Ok(self.push(vec![m], out, rg, Op::MatVec(a, x)))
    }

    pub fn binary(&mut self, a: Var, b: Var, kind: BinaryKind) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(dim_err("elementwise", self.shape(a), self.shape(b)));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let out: Vec<f64> = match kind {
            BinaryKind::Add => av.iter().zip(bv).map(|(x, y)| x + y).collect(),
            BinaryKind::Subtract => av.iter().zip(bv).map(|(x, y)| x - y).collect(),
            BinaryKind::Hadamard => av.iter().zip(bv).map(|(x, y)| x * y).collect(),
        };
        let shape = self.shape(a).to_vec();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(shape, out, rg, Op::Binary(a, b, kind)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Subtract)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, BinaryKind::Hadamard)
    }

    pub fn unary(&mut self, x: Var, kind: UnaryKind) -> Result<Var> {
        let xv = self.value(x);
        let out: Vec<f64> = match kind {
            UnaryKind::Sigmoid => xv.iter().map(|&v| sigmoid(v)).collect(),
            UnaryKind::Tanh => xv.iter().map(|v| v.tanh()).collect(),
            UnaryKind::Relu => xv.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
            UnaryKind::Ln => {
                if let Some((i, &v)) = xv.iter().enumerate().find(|(_, &v)| v <= 0.0 || v.is_nan()) {
                    return Err(Error::Domain {
                        op: "ln",
                        index: i,
                        value: v,
                    });
                }
                xv.iter().map(|v| v.ln()).collect()
            }
        };
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x);
        Ok(self.push(shape, out, rg, Op::Unary(x, kind)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Sigmoid).expect("sigmoid is total")
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Tanh).expect("tanh is total")
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, UnaryKind::Relu).expect("relu is total")
    }

    pub fn ln(&mut self, x: Var) -> Result<Var> {
        self.unary(x, UnaryKind::Ln)
    }

    /// `scale · x`.
    pub fn scale(&mut self, x: Var, scale: f64) -> Var {
        let out = self.value(x).iter().map(|v| v * scale).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x);
        self.push(shape, out, rg, Op::Affine(x, scale))
    }

    /// Softmax over a vector, computed after subtracting the maximum.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if shape.len() != 1 {
            return Err(Error::Contract(format!(
                "softmax expects a vector, got shape {shape:?}"
            )));
        }
        let xv = self.value(x);
        let max = xv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xv.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let out = exps.into_iter().map(|e| e / total).collect();
        let rg = self.rg(x);
        Ok(self.push(shape, out, rg, Op::Softmax(x)))
    }

    /// Concatenates `parts` along `axis`. All other dimensions must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Input("concat of zero parts".into()))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(Error::Input(format!(
                "concat axis {axis} out of range for shape {base:?}"
            )));
        }
        let mut axis_len = 0;
        for (i, p) in parts.iter().enumerate() {
            let s = self.shape(*p);
            let ok = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !ok {
                return Err(Error::ConcatPart {
                    index: i,
                    shape: s.to_vec(),
                    expected: base.clone(),
                });
            }
            axis_len += s[axis];
        }
        let outer: usize = base[..axis].iter().product();
        let mut out = Vec::with_capacity(outer * axis_len * base[axis + 1..].iter().product::<usize>());
        for o in 0..outer {
            for p in parts {
                let s = self.shape(*p);
                let chunk: usize = s[axis..].iter().product();
                out.extend_from_slice(&self.value(*p)[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = axis_len;
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(
            shape,
            out,
            rg,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
        ))
    }

    /// Stacks equal-length vectors into the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Input("stack of zero rows".into()))?;
        let s0 = self.shape(*first).to_vec();
        if s0.len() != 1 {
            return Err(Error::Contract(format!("stack_rows expects vectors, got {s0:?}")));
        }
        let mut reshaped = Vec::with_capacity(rows.len());
        for r in rows {
            reshaped.push(self.reshape(*r, vec![1, self.shape(*r)[0]])?);
        }
        self.concat(&reshaped, 0)
    }

    /// The slice `[start, start+len)` of `src` along `axis`.
    pub fn narrow(&mut self, src: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(src).to_vec();
        if axis >= s.len() || len == 0 || start + len > s[axis] {
            return Err(Error::Input(format!(
                "narrow [{start}, {}) on axis {axis} of shape {s:?}",
                start + len
            )));
        }
        let outer: usize = s[..axis].iter().product();
        let inner: usize = s[axis + 1..].iter().product();
        let v = self.value(src);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * s[axis] * inner;
            out.extend_from_slice(&v[base + start * inner..base + (start + len) * inner]);
        }
        let mut shape = s;
        shape[axis] = len;
        let rg = self.rg(src);
        Ok(self.push(shape, out, rg, Op::Narrow { src, axis, start }))
    }

    /// Row `i` of a matrix as a vector.
    pub fn row(&mut self, m: Var, i: usize) -> Result<Var> {
        let cols = self.shape(m).get(1).copied().ok_or_else(|| {
            Error::Contract(format!("row() expects a matrix, got {:?}", self.shape(m)))
        })?;
        let r = self.narrow(m, 0, i, 1)?;
        self.reshape(r, vec![cols])
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        if numel(&shape) != numel(self.shape(x)) {
            return Err(dim_err("reshape", self.shape(x), &shape));
        }
        let out = self.value(x).to_vec();
        let rg = self.rg(x);
        Ok(self.push(shape, out, rg, Op::Reshape(x)))
    }

    pub fn flatten(&mut self, x: Var) -> Var {
        let n = numel(self.shape(x));
        self.reshape(x, vec![n]).expect("flatten preserves size")
    }

    /// Row lookup: output row `r` is row `indices[r]` of `src`. Indices equal
    /// to `skip` yield a zero row and pass no gradient back.
    pub fn gather_rows(&mut self, src: Var, indices: &[usize], skip: Option<usize>) -> Result<Var> {
        let s = self.shape(src).to_vec();
        if s.len() != 2 {
            return Err(Error::Contract(format!("gather_rows expects a matrix, got {s:?}")));
        }
        if indices.is_empty() {
            return Err(Error::Input("gather_rows with no indices".into()));
        }
        let (rows, cols) = (s[0], s[1]);
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(Error::Input(format!(
                "row index {bad} out of range for {rows} rows"
            )));
        }
        let v = self.value(src);
        let mut out = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            if Some(i) == skip {
                out.extend(std::iter::repeat_n(0.0, cols));
            } else {
                out.extend_from_slice(&v[i * cols..(i + 1) * cols]);
            }
        }
        let rg = self.rg(src);
        Ok(self.push(
            vec![indices.len(), cols],
            out,
            rg,
            Op::Gather {
                src,
                indices: indices.to_vec(),
                skip,
            },
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.value(x).iter().sum();
        let rg = self.rg(x);
        self.push(Vec::new(), vec![s], rg, Op::Sum(x))
    }

    /// Scalar entry `index` of a flattened tensor.
    pub fn select(&mut self, x: Var, index: usize) -> Result<Var> {
        let n = self.value(x).len();
        if index >= n {
            return Err(Error::Input(format!("select index {index} out of range for {n}")));
        }
        let v = self.value(x)[index];
        let rg = self.rg(x);
        Ok(self.push(Vec::new(), vec![v], rg, Op::Select(x, index)))
    }

    /// `max(x, floor)` elementwise; gradient passes where `x >= floor`.
    pub fn clamp_min(&mut self, x: Var, floor: f64) -> Var {
        let out = self.value(x).iter().map(|&v| v.max(floor)).collect();
        let shape = self.shape(x).to_vec();
        let rg = self.rg(x);
        self.push(shape, out, rg, Op::ClampMin(x, floor))
    }

    /// Valid 1-D convolution over the rows of `input [N×K]`.
    ///
    /// `filters` is `[f × width·K]` (each row a flattened `width×K` kernel),
    /// `bias` is `[f]`. Output is `[N×f]`; rows `N-width+1..N` are zero.
    pub fn conv1d_rows(&mut self, input: Var, filters: Var, bias: Var, width: usize) -> Result<Var> {
        let si = self.shape(input).to_vec();
        let sf = self.shape(filters).to_vec();
        let sb = self.shape(bias).to_vec();
        if si.len() != 2 || sf.len() != 2 || sb.len() != 1 || sb[0] != sf[0] {
            return Err(dim_err("conv1d", &si, &sf));
        }
        let (n, k) = (si[0], si[1]);
        let f = sf[0];
        if width == 0 || width > n {
            return Err(Error::Config(format!(
                "filter width {width} must be in 1..={n}"
            )));
        }
        if sf[1] != width * k {
            return Err(dim_err("conv1d", &si, &sf));
        }
        let (iv, fv, bv) = (self.value(input), self.value(filters), self.value(bias));
        let span = width * k;
        let mut out = vec![0.0; n * f];
        for j in 0..=(n - width) {
            let window = &iv[j * k..j * k + span];
            for g in 0..f {
                let w = &fv[g * span..(g + 1) * span];
                let dot: f64 = window.iter().zip(w).map(|(a, b)| a * b).sum();
                out[j * f + g] = dot + bv[g];
            }
        }
        let rg = self.rg(input) || self.rg(filters) || self.rg(bias);
        Ok(self.push(
            vec![n, f],
            out,
            rg,
            Op::Conv1d {
                input,
                filters,
                bias,
                width,
            },
        ))
    }

    /// Non-overlapping max pooling over `window` consecutive rows of `[N×f]`.
    pub fn max_pool_rows(&mut self, input: Var, window: usize) -> Result<Var> {
        let s = self.shape(input).to_vec();
        if s.len() != 2 {
            return Err(Error::Contract(format!("max_pool_rows expects a matrix, got {s:?}")));
        }
        let (n, f) = (s[0], s[1]);
        if window == 0 || n % window != 0 {
            return Err(Error::Config(format!(
                "pooling window {window} does not divide sequence length {n}"
            )));
        }
        let p = n / window;
        let v = self.value(input);
        let mut out = vec![0.0; p * f];
        let mut argmax = vec![0; p * f];
        for b in 0..p {
            for g in 0..f {
                let mut best = b * window;
                for r in b * window + 1..(b + 1) * window {
                    if v[r * f + g] > v[best * f + g] {
                        best = r;
                    }
                }
                out[b * f + g] = v[best * f + g];
                argmax[b * f + g] = best * f + g;
            }
        }
        let rg = self.rg(input);
        Ok(self.push(vec![p, f], out, rg, Op::MaxPool { input, argmax }))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::new();
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(&node.op, Var(i), &g, &mut grads);
            grads[i] = Some(g);
        }

        let params = self
            .param_vars
            .iter()
            .enumerate()
            .filter_map(|(pid, v)| {
                let v = (*v)?;
                grads[v.0].as_ref().map(|_| (ParamId(pid), v))
            })
            .collect();
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, op: &Op, out: Var, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if self.rg(*a) {
                    let bv = self.value(*b);
                    let ga = slot(grads, *a, m * k);
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &bv[p * n..(p + 1) * n];
                            ga[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                }
                if self.rg(*b) {
                    let av = self.value(*a);
                    let gb = slot(grads, *b, k * n);
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let aip = av[i * k + p];
                            if aip == 0.0 {
                                continue;
                            }
                            for (dst, gv) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *dst += aip * gv;
                            }
                        }
                    }
                }
            }
            Op::MatVec(a, x) => {
                let sa = self.shape(*a);
                let (m, k) = (sa[0], sa[1]);
                if self.rg(*a) {
                    let xv = self.value(*x);
                    let ga = slot(grads, *a, m * k);
                    for i in 0..m {
                        let gi = g[i];
                        if gi == 0.0 {
                            continue;
                        }
                        for (dst, xj) in ga[i * k..(i + 1) * k].iter_mut().zip(xv) {
                            *dst += gi * xj;
                        }
                    }
                }
                if self.rg(*x) {
                    let av = self.value(*a);
                    let gx = slot(grads, *x, k);
                    for i in 0..m {
                        let gi = g[i];
                        for (dst, aij) in gx.iter_mut().zip(&av[i * k..(i + 1) * k]) {
                            *dst += gi * aij;
                        }
                    }
                }
            }
            Op::Binary(a, b, kind) => {
                let n = g.len();
                match kind {
                    BinaryKind::Add | BinaryKind::Subtract => {
                        if self.rg(*a) {
                            add_into(slot(grads, *a, n), g, 1.0);
                        }
                        if self.rg(*b) {
                            let sign = if *kind == BinaryKind::Add { 1.0 } else { -1.0 };
                            add_into(slot(grads, *b, n), g, sign);
                        }
                    }
                    BinaryKind::Hadamard => {
                        if self.rg(*a) {
                            let bv = self.value(*b);
                            let ga = slot(grads, *a, n);
                            for ((dst, gv), bv) in ga.iter_mut().zip(g).zip(bv) {
                                *dst += gv * bv;
                            }
                        }
                        if self.rg(*b) {
                            let av = self.value(*a);
                            let gb = slot(grads, *b, n);
                            for ((dst, gv), av) in gb.iter_mut().zip(g).zip(av) {
                                *dst += gv * av;
                            }
                        }
                    }
                }
            }
            Op::Unary(x, kind) => {
                if !self.rg(*x) {
                    return;
                }
                let y = self.value(out);
                let xv = self.value(*x);
                let gx = slot(grads, *x, g.len());
                for i in 0..g.len() {
                    let d = match kind {
                        UnaryKind::Sigmoid => y[i] * (1.0 - y[i]),
                        UnaryKind::Tanh => 1.0 - y[i] * y[i],
                        UnaryKind::Relu => {
                            if xv[i] > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        UnaryKind::Ln => 1.0 / xv[i],
                    };
                    gx[i] += g[i] * d;
                }
            }
            Op::Affine(x, scale) => {
                if self.rg(*x) {
                    add_into(slot(grads, *x, g.len()), g, *scale);
                }
            }
            Op::Softmax(x) => {
                if !self.rg(*x) {
                    return;
                }
                let y = self.value(out);
                let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                let gx = slot(grads, *x, g.len());
                for i in 0..g.len() {
                    gx[i] += y[i] * (g[i] - dot);
                }
            }
            Op::Concat { parts, axis } => {
                let base = self.shape(out);
                let outer: usize = base[..*axis].iter().product();
                let mut offset = 0;
                let total: usize = base[*axis..].iter().product();
                for p in parts {
                    let chunk: usize = self.shape(*p)[*axis..].iter().product();
                    if self.rg(*p) {
                        let n = self.value(*p).len();
                        let gp = slot(grads, *p, n);
                        for o in 0..outer {
                            let src = &g[o * total + offset..o * total + offset + chunk];
                            add_into(&mut gp[o * chunk..(o + 1) * chunk], src, 1.0);
                        }
                    }
                    offset += chunk;
                }
            }
            Op::Narrow { src, axis, start } => {
                if !self.rg(*src) {
                    return;
                }
                let s = self.shape(*src);
                let len = self.shape(out)[*axis];
                let outer: usize = s[..*axis].iter().product();
                let inner: usize = s[axis + 1..].iter().product();
                let full = s[*axis];
                let n = self.value(*src).len();
                let gs = slot(grads, *src, n);
                for o in 0..outer {
                    let base = o * full * inner + start * inner;
                    let src_g = &g[o * len * inner..(o + 1) * len * inner];
                    add_into(&mut gs[base..base + len * inner], src_g, 1.0);
                }
            }
            Op::Reshape(x) => {
                if self.rg(*x) {
                    add_into(slot(grads, *x, g.len()), g, 1.0);
                }
            }
            Op::Gather { src, indices, skip } => {
                if !self.rg(*src) {
                    return;
                }
                let cols = self.shape(*src)[1];
                let n = self.value(*src).len();
                let gs = slot(grads, *src, n);
                for (r, &idx) in indices.iter().enumerate() {
                    if Some(idx) == *skip {
                        continue;
                    }
                    add_into(&mut gs[idx * cols..(idx + 1) * cols], &g[r * cols..(r + 1) * cols], 1.0);
                }
            }
            Op::Sum(x) => {
                if self.rg(*x) {
                    let n = self.value(*x).len();
                    slot(grads, *x, n).iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Select(x, index) => {
                if self.rg(*x) {
                    let n = self.value(*x).len();
                    slot(grads, *x, n)[*index] += g[0];
                }
            }
            Op::ClampMin(x, floor) => {
                if self.rg(*x) {
                    let xv = self.value(*x);
                    let gx = slot(grads, *x, g.len());
                    for i in 0..g.len() {
                        if xv[i] >= *floor {
                            gx[i] += g[i];
                        }
                    }
                }
            }
            Op::Conv1d {
                input,
                filters,
                bias,
                width,
            } => {
                let si = self.shape(*input);
                let (n, k) = (si[0], si[1]);
                let f = self.shape(*filters)[0];
                let span = width * k;
                let valid = n - width + 1;
                if self.rg(*bias) {
                    let gb = slot(grads, *bias, f);
                    for j in 0..valid {
                        add_into(gb, &g[j * f..(j + 1) * f], 1.0);
                    }
                }
                if self.rg(*filters) {
                    let iv = self.value(*input);
                    let gf = slot(grads, *filters, f * span);
                    for j in 0..valid {
                        let window = &iv[j * k..j * k + span];
                        for gi in 0..f {
                            let gv = g[j * f + gi];
                            if gv == 0.0 {
                                continue;
                            }
                            add_into(&mut gf[gi * span..(gi + 1) * span], window, gv);
                        }
                    }
                }
                if self.rg(*input) {
                    let fv = self.value(*filters);
                    let gin = slot(grads, *input, n * k);
                    for j in 0..valid {
                        for gi in 0..f {
                            let gv = g[j * f + gi];
                            if gv == 0.0 {
                                continue;
                            }
                            add_into(&mut gin[j * k..j * k + span], &fv[gi * span..(gi + 1) * span], gv);
                        }
                    }
                }
            }
            Op::MaxPool { input, argmax } => {
                if self.rg(*input) {
                    let n = self.value(*input).len();
                    let gi = slot(grads, *input, n);
                    for (o, &src) in argmax.iter().enumerate() {
                        gi[src] += g[o];
                    }
                }
            }
        }
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], v: Var, n: usize) -> &mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; n])
}

fn add_into(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

/// Result of a reverse pass.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`, if `v` was reached.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0)?.as_deref()
    }

    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        let (_, v) = self.params.iter().find(|(p, _)| *p == id)?;
        self.wrt(*v)
    }

    pub fn params(&self) -> impl Iterator<Item = (ParamId, &[f64])> + '_ {
        self.params
            .iter()
            .filter_map(|(id, v)| self.wrt(*v).map(|g| (*id, g)))
    }
}
