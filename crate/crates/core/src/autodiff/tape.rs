use std::cmp::Ordering;

use super::{Gradients, ParamId, ParamStore, Tensor};
use crate::graph::SparseMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    SpMM(SparseMatrix, Var),
    AddRowBias(Var, Var),
    AddChannelBias(Var, Var),
    Tanh(Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    SortPool { input: Var, selected: Vec<usize> },
    Reshape(Var),
    Conv1d { input: Var, filters: Var, stride: usize },
    LogSoftmax(Var),
    Dot(Var, Var),
    Mse { pred: Var, target: f64 },
    Nll { logp: Var, class: usize },
    Dropout { input: Var, mask: Vec<f64> },
    Sum(Vec<Var>),
    Scale(Var, f64),
}

struct Node {
    op: Op,
    // `None` for parameters, whose values stay in the store.
    value: Option<Tensor>,
}

/// Records a forward computation over the parameters of one store so the
/// gradients of any scalar result can be computed in a single reverse pass.
///
/// Shape mismatches are contract violations and panic.
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.value(*id),
            _ => unreachable!("non-parameter node without a value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value: Some(value) });
        Var(self.nodes.len() - 1)
    }

    /// A constant input; it receives no gradient outside the tape.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Op::Input, value)
    }

    /// The parameter `id`; repeated calls return the same variable.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        let (r, k) = ta.dims2();
        let (k2, c) = tb.dims2();
        assert_eq!(k, k2, "matmul shapes {:?} x {:?}", ta.shape(), tb.shape());
        let out = matmul_raw(ta.data(), tb.data(), r, k, c);
        self.push(Op::MatMul(a, b), Tensor::matrix(r, c, out))
    }

    /// `s · x` for a constant sparse `s`.
    pub fn spmm(&mut self, s: SparseMatrix, x: Var) -> Var {
        let tx = self.value(x);
        let (n, c) = tx.dims2();
        assert_eq!(s.n_cols(), n, "sparse product with {} columns on {n} rows", s.n_cols());
        let mut out = vec![0.0; s.n_rows() * c];
        for r in 0..s.n_rows() {
            let dst = &mut out[r * c..(r + 1) * c];
            for (col, w) in s.row(r) {
                let src = &tx.data()[col * c..(col + 1) * c];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += w * x;
                }
            }
        }
        let rows = s.n_rows();
        self.push(Op::SpMM(s, x), Tensor::matrix(rows, c, out))
    }

    /// Adds a length-`c` bias to every row of an `r x c` matrix.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Var {
        let (tx, tb) = (self.value(x), self.value(bias));
        let (_, c) = tx.dims2();
        assert_eq!(tb.len(), c, "row bias length");
        let mut out = tx.clone();
        for row in out.data_mut().chunks_mut(c) {
            for (o, b) in row.iter_mut().zip(tb.data()) {
                *o += b;
            }
        }
        self.push(Op::AddRowBias(x, bias), out)
    }

    /// Adds one bias per channel (row) of a `channels x length` matrix.
    pub fn add_channel_bias(&mut self, x: Var, bias: Var) -> Var {
        let (tx, tb) = (self.value(x), self.value(bias));
        let (ch, len) = tx.dims2();
        assert_eq!(tb.len(), ch, "channel bias length");
        let mut out = tx.clone();
        for (row, b) in out.data_mut().chunks_mut(len).zip(tb.data()) {
            row.iter_mut().for_each(|o| *o += b);
        }
        self.push(Op::AddChannelBias(x, bias), out)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v.tanh()).collect());
        self.push(Op::Tanh(x), out)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let out = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v.max(0.0)).collect());
        self.push(Op::Relu(x), out)
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concatenation of nothing");
        let rows = self.value(parts[0]).dims2().0;
        let widths: Vec<usize> = parts
            .iter()
            .map(|&p| {
                let (r, c) = self.value(p).dims2();
                assert_eq!(r, rows, "concatenated parts differ in rows");
                c
            })
            .collect();
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; rows * total];
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let src = self.value(p).data();
            for r in 0..rows {
                out[r * total + offset..r * total + offset + w].copy_from_slice(&src[r * w..(r + 1) * w]);
            }
            offset += w;
        }
        self.push(Op::ConcatCols(parts.to_vec()), Tensor::matrix(rows, total, out))
    }

    /// Sorts the rows of an `n x c` matrix and keeps the first `k`, padding
    /// with zero rows when `n < k`.
    ///
    /// Rows are ordered by the last column descending; ties fall back to the
    /// preceding columns from right to left (also descending), and finally
    /// to the original row index ascending.
    pub fn sortpool(&mut self, x: Var, k: usize) -> Var {
        assert!(k >= 1, "sortpool needs k >= 1");
        let t = self.value(x);
        let (n, c) = t.dims2();
        let data = t.data();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&data[a * c..(a + 1) * c], &data[b * c..(b + 1) * c]);
            for col in (0..c).rev() {
                match rb[col].total_cmp(&ra[col]) {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            a.cmp(&b)
        });
        order.truncate(k);
        let mut out = vec![0.0; k * c];
        for (dst, &src) in order.iter().enumerate() {
            out[dst * c..(dst + 1) * c].copy_from_slice(&data[src * c..(src + 1) * c]);
        }
        self.push(
            Op::SortPool {
                input: x,
                selected: order,
            },
            Tensor::matrix(k, c, out),
        )
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Var {
        let out = self.value(x).clone().reshaped(shape.to_vec());
        self.push(Op::Reshape(x), out)
    }

    /// Valid (unpadded) 1-D cross-correlation of a `in x length` input with
    /// `out x in x width` filters.
    pub fn conv1d(&mut self, x: Var, filters: Var, stride: usize) -> Var {
        assert!(stride >= 1, "conv1d stride must be positive");
        let (tx, tf) = (self.value(x), self.value(filters));
        let (cin, len) = tx.dims2();
        let fs = tf.shape();
        assert_eq!(fs.len(), 3, "conv1d filters must be out x in x width");
        let (cout, fin, width) = (fs[0], fs[1], fs[2]);
        assert_eq!(fin, cin, "conv1d input channels");
        assert!(
            len >= width,
            "conv1d input length {len} shorter than filter width {width}"
        );
        let lout = (len - width) / stride + 1;
        let (xd, fd) = (tx.data(), tf.data());
        let mut out = vec![0.0; cout * lout];
        for o in 0..cout {
            for i in 0..cin {
                let f = &fd[(o * cin + i) * width..(o * cin + i + 1) * width];
                let xi = &xd[i * len..(i + 1) * len];
                for t in 0..lout {
                    let window = &xi[t * stride..t * stride + width];
                    out[o * lout + t] += f.iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        self.push(
            Op::Conv1d {
                input: x,
                filters,
                stride,
            },
            Tensor::matrix(cout, lout, out),
        )
    }

    /// Row-wise log-softmax, stabilized by subtracting the row maximum.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let (_, c) = t.dims2();
        let mut out = t.data().to_vec();
        for row in out.chunks_mut(c) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            row.iter_mut().for_each(|v| *v -= lse);
        }
        let shape = t.shape().to_vec();
        self.push(Op::LogSoftmax(x), Tensor::new(shape, out))
    }

    /// Inner product of two tensors with the same number of values.
    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(
            ta.len(),
            tb.len(),
            "dot product of lengths {} and {}",
            ta.len(),
            tb.len()
        );
        let v = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        self.push(Op::Dot(a, b), Tensor::scalar(v))
    }

    /// `(pred - target)^2` for a single-valued `pred`.
    pub fn mse(&mut self, pred: Var, target: f64) -> Var {
        let p = self.value(pred).item();
        self.push(Op::Mse { pred, target }, Tensor::scalar((p - target).powi(2)))
    }

    /// `-logp[class]` for a `1 x C` row of log-probabilities.
    pub fn nll(&mut self, logp: Var, class: usize) -> Var {
        let t = self.value(logp);
        assert!(class < t.len(), "class {class} outside {} log-probabilities", t.len());
        let v = -t.data()[class];
        self.push(Op::Nll { logp, class }, Tensor::scalar(v))
    }

    /// Multiplies element-wise by a fixed mask (inverted dropout).
    pub fn dropout(&mut self, x: Var, mask: Vec<f64>) -> Var {
        let t = self.value(x);
        assert_eq!(mask.len(), t.len(), "dropout mask length");
        let out = Tensor::new(
            t.shape().to_vec(),
            t.data().iter().zip(&mask).map(|(a, m)| a * m).collect(),
        );
        self.push(Op::Dropout { input: x, mask }, out)
    }

    /// Sum of single-valued variables.
    pub fn sum(&mut self, xs: &[Var]) -> Var {
        let v = xs.iter().map(|&x| self.value(x).item()).sum();
        self.push(Op::Sum(xs.to_vec()), Tensor::scalar(v))
    }

    pub fn scale(&mut self, x: Var, f: f64) -> Var {
        let mut out = self.value(x).clone();
        out.scale(f);
        self.push(Op::Scale(x, f), out)
    }

    /// Mean of single-valued variables.
    pub fn mean(&mut self, xs: &[Var]) -> Var {
        assert!(!xs.is_empty(), "mean of nothing");
        let s = self.sum(xs);
        self.scale(s, 1.0 / xs.len() as f64)
    }

    /// Gradients of a single-valued `loss` with respect to every parameter
    /// of the store. Parameters not reached from `loss` get zeros.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).len(), 1, "backward needs a single-valued loss");
        self.backward_from(loss, Tensor::new(self.value(loss).shape().to_vec(), vec![1.0]))
    }

    /// Reverse pass seeded with `seed` as the gradient of `output`.
    pub fn backward_from(&self, output: Var, seed: Tensor) -> Gradients {
        assert!(
            output.0 < self.nodes.len(),
            "backward on a variable that was never recorded"
        );
        assert_eq!(seed.shape(), self.value(output).shape(), "seed gradient shape");
        let mut grads: Vec<Option<Tensor>> = (0..=output.0).map(|_| None).collect();
        grads[output.0] = Some(seed);
        let mut out = Gradients::zeros_like(self.params);

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => out.0[id.0].add_assign(&g),
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (r, k) = ta.dims2();
                    let (_, c) = tb.dims2();
                    // da = g · bᵀ, db = aᵀ · g
                    let mut da = vec![0.0; r * k];
                    let mut db = vec![0.0; k * c];
                    for row in 0..r {
                        let grow = &g.data()[row * c..(row + 1) * c];
                        let arow = &ta.data()[row * k..(row + 1) * k];
                        for j in 0..k {
                            let brow = &tb.data()[j * c..(j + 1) * c];
                            da[row * k + j] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                            let aj = arow[j];
                            if aj != 0.0 {
                                for (d, gv) in db[j * c..(j + 1) * c].iter_mut().zip(grow) {
                                    *d += aj * gv;
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::matrix(r, k, da));
                    accumulate(&mut grads, *b, Tensor::matrix(k, c, db));
                }
                Op::SpMM(s, x) => {
                    let (n, c) = self.value(*x).dims2();
                    let mut dx = vec![0.0; n * c];
                    for r in 0..s.n_rows() {
                        let grow = &g.data()[r * c..(r + 1) * c];
                        for (col, w) in s.row(r) {
                            for (d, gv) in dx[col * c..(col + 1) * c].iter_mut().zip(grow) {
                                *d += w * gv;
                            }
                        }
                    }
                    accumulate(&mut grads, *x, Tensor::matrix(n, c, dx));
                }
                Op::AddRowBias(x, b) => {
                    let tb = self.value(*b);
                    let c = tb.len();
                    let mut db = vec![0.0; c];
                    for row in g.data().chunks(c) {
                        for (d, gv) in db.iter_mut().zip(row) {
                            *d += gv;
                        }
                    }
                    accumulate(&mut grads, *b, Tensor::new(tb.shape().to_vec(), db));
                    accumulate(&mut grads, *x, g);
                }
                Op::AddChannelBias(x, b) => {
                    let tb = self.value(*b);
                    let (_, len) = g.dims2();
                    let db = g.data().chunks(len).map(|row| row.iter().sum()).collect();
                    accumulate(&mut grads, *b, Tensor::new(tb.shape().to_vec(), db));
                    accumulate(&mut grads, *x, g);
                }
                Op::Tanh(x) => {
                    let y = node.value.as_ref().expect("tanh value");
                    let dx = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gv, yv)| gv * (1.0 - yv * yv))
                        .collect();
                    accumulate(&mut grads, *x, Tensor::new(y.shape().to_vec(), dx));
                }
                Op::Relu(x) => {
                    let tx = self.value(*x);
                    let dx = g
                        .data()
                        .iter()
                        .zip(tx.data())
                        .map(|(gv, xv)| if *xv > 0.0 { *gv } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *x, Tensor::new(tx.shape().to_vec(), dx));
                }
                Op::ConcatCols(parts) => {
                    let (rows, total) = g.dims2();
                    let mut offset = 0;
                    for &p in parts {
                        let (_, w) = self.value(p).dims2();
                        let mut dp = vec![0.0; rows * w];
                        for r in 0..rows {
                            dp[r * w..(r + 1) * w]
                                .copy_from_slice(&g.data()[r * total + offset..r * total + offset + w]);
                        }
                        accumulate(&mut grads, p, Tensor::matrix(rows, w, dp));
                        offset += w;
                    }
                }
                Op::SortPool { input, selected } => {
                    let (n, c) = self.value(*input).dims2();
                    let mut dx = vec![0.0; n * c];
                    for (dst, &src) in selected.iter().enumerate() {
                        dx[src * c..(src + 1) * c].copy_from_slice(&g.data()[dst * c..(dst + 1) * c]);
                    }
                    accumulate(&mut grads, *input, Tensor::matrix(n, c, dx));
                }
                Op::Reshape(x) => {
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, g.reshaped(shape));
                }
                Op::Conv1d { input, filters, stride } => {
                    let (tx, tf) = (self.value(*input), self.value(*filters));
                    let (cin, len) = tx.dims2();
                    let fs = tf.shape();
                    let (cout, width) = (fs[0], fs[2]);
                    let (_, lout) = g.dims2();
                    let (xd, fd, gd) = (tx.data(), tf.data(), g.data());
                    let mut dx = vec![0.0; cin * len];
                    let mut df = vec![0.0; cout * cin * width];
                    for o in 0..cout {
                        for i in 0..cin {
                            let base = (o * cin + i) * width;
                            for t in 0..lout {
                                let gv = gd[o * lout + t];
                                if gv == 0.0 {
                                    continue;
                                }
                                let start = i * len + t * stride;
                                for w in 0..width {
                                    dx[start + w] += gv * fd[base + w];
                                    df[base + w] += gv * xd[start + w];
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *input, Tensor::matrix(cin, len, dx));
                    accumulate(&mut grads, *filters, Tensor::new(fs.to_vec(), df));
                }
                Op::LogSoftmax(x) => {
                    let y = node.value.as_ref().expect("log-softmax value");
                    let (_, c) = y.dims2();
                    let mut dx = g.data().to_vec();
                    for (drow, yrow) in dx.chunks_mut(c).zip(y.data().chunks(c)) {
                        let gsum: f64 = drow.iter().sum();
                        for (d, yv) in drow.iter_mut().zip(yrow) {
                            *d -= yv.exp() * gsum;
                        }
                    }
                    accumulate(&mut grads, *x, Tensor::new(y.shape().to_vec(), dx));
                }
                Op::Dot(a, b) => {
                    let gv = g.item();
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let da = Tensor::new(ta.shape().to_vec(), tb.data().iter().map(|v| gv * v).collect());
                    let db = Tensor::new(tb.shape().to_vec(), ta.data().iter().map(|v| gv * v).collect());
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Mse { pred, target } => {
                    let p = self.value(*pred);
                    let d = 2.0 * (p.item() - target) * g.item();
                    accumulate(&mut grads, *pred, Tensor::new(p.shape().to_vec(), vec![d]));
                }
                Op::Nll { logp, class } => {
                    let t = self.value(*logp);
                    let mut d = Tensor::zeros(t.shape());
                    d.data_mut()[*class] = -g.item();
                    accumulate(&mut grads, *logp, d);
                }
                Op::Dropout { input, mask } => {
                    let dx = g.data().iter().zip(mask).map(|(a, m)| a * m).collect();
                    accumulate(&mut grads, *input, Tensor::new(g.shape().to_vec(), dx));
                }
                Op::Sum(xs) => {
                    for &x in xs {
                        let shape = self.value(x).shape().to_vec();
                        accumulate(&mut grads, x, Tensor::new(shape, vec![g.item()]));
                    }
                }
                Op::Scale(x, f) => {
                    let mut d = g;
                    d.scale(*f);
                    accumulate(&mut grads, *x, d);
                }
            }
        }
        out
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Row-major `r x k` times `k x c`.
fn matmul_raw(a: &[f64], b: &[f64], r: usize, k: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        let orow = &mut out[i * c..(i + 1) * c];
        for j in 0..k {
            let aij = a[i * k + j];
            if aij == 0.0 {
                continue;
            }
            for (o, bv) in orow.iter_mut().zip(&b[j * c..(j + 1) * c]) {
                *o += aij * bv;
            }
        }
    }
    out
}
