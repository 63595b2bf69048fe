use std::collections::HashMap;

use rand::RngExt;

use super::{shape_err, ParamId, ParamStore, RunRng, Tensor, TensorError};

type OpResult = Result<Var, TensorError>;

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var),
    ConcatCols(Vec<Var>),
    ColSlice {
        x: Var,
        start: usize,
    },
    RowSlice {
        x: Var,
        start: usize,
    },
    ConcatRows(Vec<Var>),
    Embedding {
        table: Var,
        ids: Vec<usize>,
        pad: Option<usize>,
    },
    MaxPoolTime {
        x: Var,
        argmax: Vec<Option<usize>>,
    },
    MeanTime {
        x: Var,
        weights: Vec<f64>,
        batch: usize,
    },
    RepeatTime {
        x: Var,
        steps: usize,
    },
    ScaleRows {
        x: Var,
        factors: Vec<f64>,
    },
    L2Normalize {
        x: Var,
        norms: Vec<f64>,
    },
    Cosine {
        a: Var,
        b: Var,
    },
    Dropout {
        x: Var,
        mask: Vec<f64>,
    },
    CrossEntropy {
        probs: Var,
        targets: Vec<usize>,
    },
    Mean(Var),
    Sum(Var),
}

struct Node {
    /// `None` for parameters, whose value lives in the store.
    value: Option<Tensor>,
    op: Op,
}

/// One forward pass over a borrowed parameter store.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, Var>,
}

/// Parameter gradients from one backward sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    #[cfg(test)]
    pub(crate) fn get_mut(&mut self, id: ParamId) -> Option<&mut Tensor> {
        self.grads.get_mut(id.0).and_then(Option::as_mut)
    }

    pub(crate) fn empty(n: usize) -> Self {
        Gradients { grads: vec![None; n] }
    }
}

fn dims2(op: &'static str, t: &Tensor) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [n, m] => Ok((*n, *m)),
        s => Err(shape_err(op, format!("expected a 2-D tensor, got {s:?}"))),
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), TensorError> {
    if a.shape() != b.shape() {
        return Err(shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor {
        shape: t.shape.clone(),
        data: t.data.iter().map(|&x| f(x)).collect(),
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor {
        shape: a.shape.clone(),
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

/// `a @ b` for row-major `[n,k] x [k,m]`.
fn matmul_raw(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for (p, &aip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            for (o, &bpj) in row.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *o += aip * bpj;
            }
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smallest probability fed to the logarithm in cross-entropy.
const PROB_FLOOR: f64 = 1e-300;

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.get(*id),
            (None, _) => unreachable!("non-parameter node without a value"),
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

    fn push(&mut self, op_name: &'static str, value: Tensor, op: Op) -> OpResult {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: op_name });
        }
        self.nodes.push(Node { value: Some(value), op });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, t: Tensor) -> OpResult {
        self.push("constant", t, Op::Constant)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> OpResult {
        let (n, k) = dims2("matmul", self.value(a))?;
        let (k2, m) = dims2("matmul", self.value(b))?;
        if k != k2 {
            return Err(shape_err("matmul", format!("[{n},{k}] x [{k2},{m}]")));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), n, k, m);
        self.push(
            "matmul",
            Tensor {
                shape: vec![n, m],
                data: out,
            },
            Op::MatMul(a, b),
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> OpResult {
        same_shape("add", self.value(a), self.value(b))?;
        let v = zip(self.value(a), self.value(b), |x, y| x + y);
        self.push("add", v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> OpResult {
        same_shape("sub", self.value(a), self.value(b))?;
        let v = zip(self.value(a), self.value(b), |x, y| x - y);
        self.push("sub", v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> OpResult {
        same_shape("mul", self.value(a), self.value(b))?;
        let v = zip(self.value(a), self.value(b), |x, y| x * y);
        self.push("mul", v, Op::Mul(a, b))
    }

    /// `[n,m] + [m]`, broadcasting the bias over rows.
    pub fn add_row(&mut self, x: Var, bias: Var) -> OpResult {
        let (n, m) = dims2("add_row", self.value(x))?;
        if self.value(bias).numel() != m {
            return Err(shape_err(
                "add_row",
                format!("[{n},{m}] + {:?}", self.value(bias).shape()),
            ));
        }
        let b = self.value(bias).data();
        let mut v = self.value(x).clone();
        for row in v.data.chunks_mut(m) {
            for (o, bb) in row.iter_mut().zip(b) {
                *o += bb;
            }
        }
        self.push("add_row", v, Op::AddRow(x, bias))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> OpResult {
        let v = map(self.value(x), |a| a * c);
        self.push("scale", v, Op::Scale(x, c))
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> OpResult {
        let v = map(self.value(x), |a| a + c);
        self.push("add_scalar", v, Op::AddScalar(x))
    }

    pub fn tanh(&mut self, x: Var) -> OpResult {
        let v = map(self.value(x), f64::tanh);
        self.push("tanh", v, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> OpResult {
        let v = map(self.value(x), sigmoid);
        self.push("sigmoid", v, Op::Sigmoid(x))
    }

    pub fn relu(&mut self, x: Var) -> OpResult {
        let v = map(self.value(x), |a| a.max(0.0));
        self.push("relu", v, Op::Relu(x))
    }

    /// Row-wise softmax of a 2-D tensor.
    pub fn softmax(&mut self, x: Var) -> OpResult {
        let (_, m) = dims2("softmax", self.value(x))?;
        let mut v = self.value(x).clone();
        for row in v.data.chunks_mut(m) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for e in row.iter_mut() {
                *e = (*e - max).exp();
                sum += *e;
            }
            for e in row.iter_mut() {
                *e /= sum;
            }
        }
        self.push("softmax", v, Op::Softmax(x))
    }

    pub fn concat_cols(&mut self, xs: &[Var]) -> OpResult {
        let first = *xs.first().ok_or_else(|| shape_err("concat_cols", "no inputs"))?;
        let (n, _) = dims2("concat_cols", self.value(first))?;
        let mut widths = Vec::with_capacity(xs.len());
        for &x in xs {
            let (r, c) = dims2("concat_cols", self.value(x))?;
            if r != n {
                return Err(shape_err("concat_cols", format!("row counts {n} vs {r}")));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(n * total);
        for i in 0..n {
            for (&x, &w) in xs.iter().zip(&widths) {
                data.extend_from_slice(&self.value(x).data()[i * w..(i + 1) * w]);
            }
        }
        self.push(
            "concat_cols",
            Tensor {
                shape: vec![n, total],
                data,
            },
            Op::ConcatCols(xs.to_vec()),
        )
    }

    pub fn col_slice(&mut self, x: Var, start: usize, len: usize) -> OpResult {
        let (n, m) = dims2("col_slice", self.value(x))?;
        if start + len > m {
            return Err(shape_err("col_slice", format!("{start}+{len} > {m} columns")));
        }
        let src = self.value(x).data();
        let data = (0..n)
            .flat_map(|i| src[i * m + start..i * m + start + len].iter().copied())
            .collect();
        self.push(
            "col_slice",
            Tensor {
                shape: vec![n, len],
                data,
            },
            Op::ColSlice { x, start },
        )
    }

    pub fn row_slice(&mut self, x: Var, start: usize, len: usize) -> OpResult {
        let (n, m) = dims2("row_slice", self.value(x))?;
        if start + len > n {
            return Err(shape_err("row_slice", format!("{start}+{len} > {n} rows")));
        }
        let data = self.value(x).data()[start * m..(start + len) * m].to_vec();
        self.push(
            "row_slice",
            Tensor {
                shape: vec![len, m],
                data,
            },
            Op::RowSlice { x, start },
        )
    }

    pub fn concat_rows(&mut self, xs: &[Var]) -> OpResult {
        let first = *xs.first().ok_or_else(|| shape_err("concat_rows", "no inputs"))?;
        let (_, m) = dims2("concat_rows", self.value(first))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for &x in xs {
            let (r, c) = dims2("concat_rows", self.value(x))?;
            if c != m {
                return Err(shape_err("concat_rows", format!("column counts {m} vs {c}")));
            }
            rows += r;
            data.extend_from_slice(self.value(x).data());
        }
        self.push(
            "concat_rows",
            Tensor {
                shape: vec![rows, m],
                data,
            },
            Op::ConcatRows(xs.to_vec()),
        )
    }

    /// Gathers table rows; `pad` ids yield zero rows that receive no
    /// gradient.
    pub fn embedding(&mut self, table: Var, ids: &[usize], pad: Option<usize>) -> OpResult {
        let (v, d) = dims2("embedding", self.value(table))?;
        let t = self.value(table).data();
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(shape_err("embedding", format!("id {id} outside table of {v} rows")));
            }
            if Some(id) == pad {
                data.extend(std::iter::repeat_n(0.0, d));
            } else {
                data.extend_from_slice(&t[id * d..(id + 1) * d]);
            }
        }
        self.push(
            "embedding",
            Tensor {
                shape: vec![ids.len(), d],
                data,
            },
            Op::Embedding {
                table,
                ids: ids.to_vec(),
                pad,
            },
        )
    }

    fn time_layout(&self, op: &'static str, x: Var, mask: &[u8], batch: usize) -> Result<(usize, usize), TensorError> {
        let (rows, h) = dims2(op, self.value(x))?;
        if batch == 0 || rows % batch != 0 || mask.len() != rows {
            return Err(shape_err(
                op,
                format!("{rows} rows, batch {batch}, mask {}", mask.len()),
            ));
        }
        Ok((rows / batch, h))
    }

    /// Masked max over time for a time-major `[T*B, H]` input (row
    /// `t*B + b`). Sequences with no unmasked step pool to zeros.
    pub fn max_pool_time(&mut self, x: Var, mask: &[u8], batch: usize) -> OpResult {
        let (steps, h) = self.time_layout("max_pool_time", x, mask, batch)?;
        let src = self.value(x).data();
        let mut out = vec![0.0; batch * h];
        let mut argmax = vec![None; batch * h];
        for b in 0..batch {
            for t in (0..steps).filter(|t| mask[t * batch + b] != 0) {
                let row = t * batch + b;
                for j in 0..h {
                    let val = src[row * h + j];
                    let k = b * h + j;
                    if argmax[k].is_none() || val > out[k] {
                        out[k] = val;
                        argmax[k] = Some(row);
                    }
                }
            }
        }
        self.push(
            "max_pool_time",
            Tensor {
                shape: vec![batch, h],
                data: out,
            },
            Op::MaxPoolTime { x, argmax },
        )
    }

    /// Masked mean over time for a time-major `[T*B, H]` input; fully
    /// masked sequences give zeros.
    pub fn mean_time(&mut self, x: Var, mask: &[u8], batch: usize) -> OpResult {
        let (steps, h) = self.time_layout("mean_time", x, mask, batch)?;
        let mut counts = vec![0usize; batch];
        for (i, &m) in mask.iter().enumerate() {
            if m != 0 {
                counts[i % batch] += 1;
            }
        }
        let weights: Vec<f64> = mask
            .iter()
            .enumerate()
            .map(|(i, &m)| if m != 0 { 1.0 / counts[i % batch] as f64 } else { 0.0 })
            .collect();
        let src = self.value(x).data();
        let mut out = vec![0.0; batch * h];
        for t in 0..steps {
            for b in 0..batch {
                let row = t * batch + b;
                let w = weights[row];
                if w == 0.0 {
                    continue;
                }
                for j in 0..h {
                    out[b * h + j] += w * src[row * h + j];
                }
            }
        }
        self.push(
            "mean_time",
            Tensor {
                shape: vec![batch, h],
                data: out,
            },
            Op::MeanTime { x, weights, batch },
        )
    }

    /// Tiles `[B, d]` to time-major `[steps*B, d]`.
    pub fn repeat_time(&mut self, x: Var, steps: usize) -> OpResult {
        let src = self.value(x);
        let (b, d) = dims2("repeat_time", src)?;
        let mut data = Vec::with_capacity(steps * b * d);
        for _ in 0..steps {
            data.extend_from_slice(src.data());
        }
        self.push(
            "repeat_time",
            Tensor {
                shape: vec![steps * b, d],
                data,
            },
            Op::RepeatTime { x, steps },
        )
    }

    /// Multiplies row `i` by the constant `factors[i]`.
    pub fn scale_rows(&mut self, x: Var, factors: &[f64]) -> OpResult {
        let (n, m) = dims2("scale_rows", self.value(x))?;
        if factors.len() != n {
            return Err(shape_err("scale_rows", format!("{n} rows, {} factors", factors.len())));
        }
        let mut v = self.value(x).clone();
        for (row, f) in v.data.chunks_mut(m).zip(factors) {
            row.iter_mut().for_each(|e| *e *= f);
        }
        self.push(
            "scale_rows",
            v,
            Op::ScaleRows {
                x,
                factors: factors.to_vec(),
            },
        )
    }

    /// Scales each row to unit Euclidean norm. Zero rows are an error.
    pub fn l2_normalize(&mut self, x: Var) -> OpResult {
        let (_, m) = dims2("l2_normalize", self.value(x))?;
        let mut v = self.value(x).clone();
        let mut norms = Vec::new();
        for row in v.data.chunks_mut(m) {
            let norm = row.iter().map(|e| e * e).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(TensorError::NonFinite { op: "l2_normalize" });
            }
            row.iter_mut().for_each(|e| *e /= norm);
            norms.push(norm);
        }
        self.push("l2_normalize", v, Op::L2Normalize { x, norms })
    }

    /// Row-wise cosine similarity of two `[B, d]` tensors, giving `[B]`.
    pub fn cosine_similarity(&mut self, a: Var, b: Var) -> OpResult {
        same_shape("cosine_similarity", self.value(a), self.value(b))?;
        let (n, m) = dims2("cosine_similarity", self.value(a))?;
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (x, y) = (&av[i * m..(i + 1) * m], &bv[i * m..(i + 1) * m]);
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
            let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
            out.push(dot / (nx * ny));
        }
        self.push(
            "cosine_similarity",
            Tensor {
                shape: vec![n],
                data: out,
            },
            Op::Cosine { a, b },
        )
    }

    /// Inverted dropout: active only when `train` is set, scaling kept units
    /// by `1 / (1 - rate)`. Identity otherwise.
    pub fn dropout(&mut self, x: Var, rate: f64, train: bool, rng: &mut RunRng) -> OpResult {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::Invalid(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !train || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(x).numel())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let v = Tensor {
            shape: self.value(x).shape.clone(),
            data: self.value(x).data.iter().zip(&mask).map(|(a, m)| a * m).collect(),
        };
        self.push("dropout", v, Op::Dropout { x, mask })
    }

    /// Mean negative log-probability of the target classes of a `[B, C]`
    /// probability matrix.
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize]) -> OpResult {
        let (n, c) = dims2("cross_entropy", self.value(probs))?;
        if targets.len() != n || targets.iter().any(|&t| t >= c) {
            return Err(shape_err("cross_entropy", format!("{n} rows, targets {targets:?}")));
        }
        let p = self.value(probs).data();
        let loss = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| -p[i * c + t].max(PROB_FLOOR).ln())
            .sum::<f64>()
            / n as f64;
        self.push(
            "cross_entropy",
            Tensor::scalar(loss),
            Op::CrossEntropy {
                probs,
                targets: targets.to_vec(),
            },
        )
    }

    pub fn mean(&mut self, x: Var) -> OpResult {
        let t = self.value(x);
        if t.numel() == 0 {
            return Err(shape_err("mean", "empty tensor"));
        }
        let m = t.data().iter().sum::<f64>() / t.numel() as f64;
        self.push("mean", Tensor::scalar(m), Op::Mean(x))
    }

    pub fn sum(&mut self, x: Var) -> OpResult {
        let s = self.value(x).data().iter().sum();
        self.push("sum", Tensor::scalar(s), Op::Sum(x))
    }

    /// Reverse sweep from a scalar loss. Nodes are appended in evaluation
    /// order, so reverse index order is a valid topological order.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lt = self.value(loss);
        if lt.numel() != 1 {
            return Err(TensorError::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor {
            shape: lt.shape.clone(),
            data: vec![1.0],
        });
        let mut out = Gradients::empty(self.params.len());

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => accumulate(&mut out.grads[id.0], g),
                op => self.propagate(Var(i), op, &g, &mut grads),
            }
        }
        Ok(out)
    }

    fn propagate(&self, this: Var, op: &Op, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = self.value(this);
        let acc = |grads: &mut [Option<Tensor>], v: Var, t: Tensor| accumulate(&mut grads[v.0], t);
        match op {
            Op::Constant | Op::Param(_) => unreachable!(),
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (n, k) = (av.shape[0], av.shape[1]);
                let m = bv.shape[1];
                // dA = G B^T
                let mut ga = vec![0.0; n * k];
                for i in 0..n {
                    let grow = &g.data[i * m..(i + 1) * m];
                    for p in 0..k {
                        let brow = &bv.data[p * m..(p + 1) * m];
                        ga[i * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                    }
                }
                // dB = A^T G
                let mut gb = vec![0.0; k * m];
                for i in 0..n {
                    let grow = &g.data[i * m..(i + 1) * m];
                    for p in 0..k {
                        let aip = av.data[i * k + p];
                        if aip == 0.0 {
                            continue;
                        }
                        for (o, x) in gb[p * m..(p + 1) * m].iter_mut().zip(grow) {
                            *o += aip * x;
                        }
                    }
                }
                acc(
                    grads,
                    *a,
                    Tensor {
                        shape: vec![n, k],
                        data: ga,
                    },
                );
                acc(
                    grads,
                    *b,
                    Tensor {
                        shape: vec![k, m],
                        data: gb,
                    },
                );
            }
            Op::Add(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, map(g, |x| -x));
            }
            Op::Mul(a, b) => {
                acc(grads, *a, zip(g, self.value(*b), |x, y| x * y));
                acc(grads, *b, zip(g, self.value(*a), |x, y| x * y));
            }
            Op::AddRow(x, bias) => {
                let bt = self.value(*bias);
                let m = bt.numel();
                let mut gb = vec![0.0; m];
                for row in g.data.chunks(m) {
                    for (o, e) in gb.iter_mut().zip(row) {
                        *o += e;
                    }
                }
                acc(grads, *x, g.clone());
                acc(
                    grads,
                    *bias,
                    Tensor {
                        shape: bt.shape.clone(),
                        data: gb,
                    },
                );
            }
            Op::Scale(x, c) => acc(grads, *x, map(g, |e| e * c)),
            Op::AddScalar(x) => acc(grads, *x, g.clone()),
            Op::Tanh(x) => acc(grads, *x, zip(g, out, |e, y| e * (1.0 - y * y))),
            Op::Sigmoid(x) => acc(grads, *x, zip(g, out, |e, y| e * y * (1.0 - y))),
            Op::Relu(x) => acc(grads, *x, zip(g, self.value(*x), |e, a| if a > 0.0 { e } else { 0.0 })),
            Op::Softmax(x) => {
                let m = out.shape[1];
                let mut gx = g.clone();
                for (gr, yr) in gx.data.chunks_mut(m).zip(out.data.chunks(m)) {
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for (e, y) in gr.iter_mut().zip(yr) {
                        *e = y * (*e - dot);
                    }
                }
                acc(grads, *x, gx);
            }
            Op::ConcatCols(xs) => {
                let (n, total) = (out.shape[0], out.shape[1]);
                let mut offset = 0;
                for &x in xs {
                    let w = self.value(x).shape[1];
                    let data = (0..n)
                        .flat_map(|i| g.data[i * total + offset..i * total + offset + w].iter().copied())
                        .collect();
                    acc(
                        grads,
                        x,
                        Tensor {
                            shape: vec![n, w],
                            data,
                        },
                    );
                    offset += w;
                }
            }
            Op::ColSlice { x, start } => {
                let src = self.value(*x);
                let (n, m) = (src.shape[0], src.shape[1]);
                let len = out.shape[1];
                let mut gx = Tensor::zeros(&[n, m]);
                for i in 0..n {
                    gx.data[i * m + start..i * m + start + len].copy_from_slice(&g.data[i * len..(i + 1) * len]);
                }
                acc(grads, *x, gx);
            }
            Op::RowSlice { x, start } => {
                let src = self.value(*x);
                let m = src.shape[1];
                let mut gx = Tensor::zeros(&src.shape);
                gx.data[start * m..start * m + g.numel()].copy_from_slice(&g.data);
                acc(grads, *x, gx);
            }
            Op::ConcatRows(xs) => {
                let mut offset = 0;
                for &x in xs {
                    let shape = self.value(x).shape.clone();
                    let n = self.value(x).numel();
                    acc(
                        grads,
                        x,
                        Tensor {
                            shape,
                            data: g.data[offset..offset + n].to_vec(),
                        },
                    );
                    offset += n;
                }
            }
            Op::Embedding { table, ids, pad } => {
                let shape = self.value(*table).shape.clone();
                let d = shape[1];
                let slot = &mut grads[table.0];
                let gt = slot.get_or_insert_with(|| Tensor::zeros(&shape));
                for (r, &id) in ids.iter().enumerate() {
                    if Some(id) == *pad {
                        continue;
                    }
                    for (o, e) in gt.data[id * d..(id + 1) * d]
                        .iter_mut()
                        .zip(&g.data[r * d..(r + 1) * d])
                    {
                        *o += e;
                    }
                }
            }
            Op::MaxPoolTime { x, argmax } => {
                let src = self.value(*x);
                let h = src.shape[1];
                let mut gx = Tensor::zeros(&src.shape);
                for (k, arg) in argmax.iter().enumerate() {
                    if let Some(row) = arg {
                        gx.data[row * h + k % h] += g.data[k];
                    }
                }
                acc(grads, *x, gx);
            }
            Op::MeanTime { x, weights, batch } => {
                let src = self.value(*x);
                let h = src.shape[1];
                let mut gx = Tensor::zeros(&src.shape);
                for (row, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let b = row % batch;
                    for j in 0..h {
                        gx.data[row * h + j] = w * g.data[b * h + j];
                    }
                }
                acc(grads, *x, gx);
            }
            Op::RepeatTime { x, steps } => {
                let shape = self.value(*x).shape.clone();
                let n = self.value(*x).numel();
                let mut gx = Tensor::zeros(&shape);
                for t in 0..*steps {
                    for (o, e) in gx.data.iter_mut().zip(&g.data[t * n..(t + 1) * n]) {
                        *o += e;
                    }
                }
                acc(grads, *x, gx);
            }
            Op::ScaleRows { x, factors } => {
                let m = out.shape[1];
                let mut gx = g.clone();
                for (row, f) in gx.data.chunks_mut(m).zip(factors) {
                    row.iter_mut().for_each(|e| *e *= f);
                }
                acc(grads, *x, gx);
            }
            Op::L2Normalize { x, norms } => {
                let m = out.shape[1];
                let mut gx = g.clone();
                for ((gr, yr), norm) in gx.data.chunks_mut(m).zip(out.data.chunks(m)).zip(norms) {
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for (e, y) in gr.iter_mut().zip(yr) {
                        *e = (*e - y * dot) / norm;
                    }
                }
                acc(grads, *x, gx);
            }
            Op::Cosine { a, b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let m = av.shape[1];
                let mut ga = Tensor::zeros(&av.shape);
                let mut gb = Tensor::zeros(&bv.shape);
                for i in 0..av.shape[0] {
                    let (x, y) = (&av.data[i * m..(i + 1) * m], &bv.data[i * m..(i + 1) * m]);
                    let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
                    let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
                    let c = out.data[i];
                    let gi = g.data[i];
                    for j in 0..m {
                        ga.data[i * m + j] = gi * (y[j] / (nx * ny) - c * x[j] / (nx * nx));
                        gb.data[i * m + j] = gi * (x[j] / (nx * ny) - c * y[j] / (ny * ny));
                    }
                }
                acc(grads, *a, ga);
                acc(grads, *b, gb);
            }
            Op::Dropout { x, mask } => {
                let gx = Tensor {
                    shape: g.shape.clone(),
                    data: g.data.iter().zip(mask).map(|(e, m)| e * m).collect(),
                };
                acc(grads, *x, gx);
            }
            Op::CrossEntropy { probs, targets } => {
                let p = self.value(*probs);
                let (n, c) = (p.shape[0], p.shape[1]);
                let mut gp = Tensor::zeros(&p.shape);
                for (i, &t) in targets.iter().enumerate() {
                    gp.data[i * c + t] = -g.data[0] / (n as f64 * p.data[i * c + t].max(PROB_FLOOR));
                }
                acc(grads, *probs, gp);
            }
            Op::Mean(x) => {
                let t = self.value(*x);
                let v = g.data[0] / t.numel() as f64;
                acc(
                    grads,
                    *x,
                    Tensor {
                        shape: t.shape.clone(),
                        data: vec![v; t.numel()],
                    },
                );
            }
            Op::Sum(x) => {
                let t = self.value(*x);
                acc(
                    grads,
                    *x,
                    Tensor {
                        shape: t.shape.clone(),
                        data: vec![g.data[0]; t.numel()],
                    },
                );
            }
        }
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(existing) => existing.add_assign(&g),
        None => *slot = Some(g),
    }
}
