use std::rc::Rc;

use super::params::{ParamId, ParamStore};
use super::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    Param(ParamId),
    /// `x · W + b`
    Dense(Var, Var, Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Rc<[u32]>),
    Reshape(Var),
    SegmentSum(Var, Rc<[u32]>),
    SegmentLogSumExp(Var, Rc<[u32]>),
    Add(Var, Var),
    Scale(Var, f64),
    /// Mean absolute error against constant targets.
    L1Loss(Var, Rc<[f64]>),
    /// `coef · Σ|θ|` over the given parameter nodes.
    L1Penalty(Vec<Var>, f64),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// A computation tape. Nodes are appended in evaluation order, so reverse
/// index order is a valid topological order for backpropagation.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn check_finite(op: &str, t: &Tensor) {
    debug_assert!(t.is_finite(), "non-finite output from {op}: {t:?}");
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A constant leaf; no gradient flows into it.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    /// A trainable leaf whose gradient is accumulated into `store` by
    /// [`Graph::backward`].
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        assert_eq!(
            xv.cols(),
            wv.rows(),
            "dense: input {:?} vs weight {:?}",
            xv.shape(),
            wv.shape()
        );
        assert_eq!(
            bv.shape(),
            [1, wv.cols()],
            "dense: bias {:?} vs weight {:?}",
            bv.shape(),
            wv.shape()
        );
        let (n, a, m) = (xv.rows(), xv.cols(), wv.cols());
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            out.extend_from_slice(bv.data());
            let row = &mut out[i * m..(i + 1) * m];
            let xr = xv.row_slice(i);
            for (k, &xik) in xr.iter().enumerate().take(a) {
                if xik == 0.0 {
                    continue;
                }
                for (o, &w) in row.iter_mut().zip(wv.row_slice(k)) {
                    *o += xik * w;
                }
            }
        }
        let t = Tensor::new(n, m, out);
        check_finite("dense", &t);
        self.push(t, Op::Dense(x, w, b))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let t = Tensor::new(
            xv.rows(),
            xv.cols(),
            xv.data().iter().map(|&v| v.max(0.0)).collect(),
        );
        self.push(t, Op::Relu(x))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = self.value(parts[0]).rows();
        for p in parts {
            assert_eq!(
                self.value(*p).rows(),
                rows,
                "concat_cols: {:?} vs {:?}",
                self.value(parts[0]).shape(),
                self.value(*p).shape()
            );
        }
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                out.extend_from_slice(self.value(*p).row_slice(r));
            }
        }
        self.push(Tensor::new(rows, cols, out), Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows of nothing");
        let cols = self.value(parts[0]).cols();
        let mut out = Vec::new();
        let mut rows = 0;
        for p in parts {
            let v = self.value(*p);
            assert_eq!(
                v.cols(),
                cols,
                "concat_rows: {:?} vs {:?}",
                self.value(parts[0]).shape(),
                v.shape()
            );
            out.extend_from_slice(v.data());
            rows += v.rows();
        }
        self.push(Tensor::new(rows, cols, out), Op::ConcatRows(parts.to_vec()))
    }

    /// Row `i` of the output is row `index[i]` of `x`.
    pub fn gather_rows(&mut self, x: Var, index: Rc<[u32]>) -> Var {
        let xv = self.value(x);
        let mut out = Vec::with_capacity(index.len() * xv.cols());
        for &r in index.iter() {
            assert!(
                (r as usize) < xv.rows(),
                "gather_rows: row {r} out of {:?}",
                xv.shape()
            );
            out.extend_from_slice(xv.row_slice(r as usize));
        }
        self.push(
            Tensor::new(index.len(), xv.cols(), out),
            Op::GatherRows(x, index),
        )
    }

    /// Reinterprets the row-major data under a new shape of equal size.
    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        let xv = self.value(x);
        assert_eq!(
            rows * cols,
            xv.rows() * xv.cols(),
            "reshape: {:?} to [{rows}, {cols}]",
            xv.shape()
        );
        let t = Tensor::new(rows, cols, xv.data().to_vec());
        self.push(t, Op::Reshape(x))
    }

    /// Row `s` of the output sums the rows `r` of `x` with `segment[r] == s`.
    pub fn segment_sum(&mut self, x: Var, segment: Rc<[u32]>, segments: usize) -> Var {
        let xv = self.value(x);
        assert_eq!(
            segment.len(),
            xv.rows(),
            "segment_sum: {} ids for {:?}",
            segment.len(),
            xv.shape()
        );
        let c = xv.cols();
        let mut out = vec![0.0; segments * c];
        for (r, &s) in segment.iter().enumerate() {
            let dst = &mut out[s as usize * c..(s as usize + 1) * c];
            for (o, &v) in dst.iter_mut().zip(xv.row_slice(r)) {
                *o += v;
            }
        }
        self.push(Tensor::new(segments, c, out), Op::SegmentSum(x, segment))
    }

    /// Column-wise `log Σ exp` per segment, stabilized by subtracting the
    /// segment maximum. Empty segments yield zero.
    pub fn segment_logsumexp(&mut self, x: Var, segment: Rc<[u32]>, segments: usize) -> Var {
        let xv = self.value(x);
        assert_eq!(
            segment.len(),
            xv.rows(),
            "segment_logsumexp: {} ids for {:?}",
            segment.len(),
            xv.shape()
        );
        let c = xv.cols();
        let mut max = vec![f64::NEG_INFINITY; segments * c];
        for (r, &s) in segment.iter().enumerate() {
            for (m, &v) in max[s as usize * c..(s as usize + 1) * c]
                .iter_mut()
                .zip(xv.row_slice(r))
            {
                *m = m.max(v);
            }
        }
        let mut acc = vec![0.0; segments * c];
        for (r, &s) in segment.iter().enumerate() {
            let base = s as usize * c;
            for (j, &v) in xv.row_slice(r).iter().enumerate() {
                acc[base + j] += (v - max[base + j]).exp();
            }
        }
        let out: Vec<f64> = acc
            .iter()
            .zip(&max)
            .map(|(&a, &m)| {
                if m == f64::NEG_INFINITY {
                    0.0
                } else {
                    m + a.ln()
                }
            })
            .collect();
        let t = Tensor::new(segments, c, out);
        check_finite("segment_logsumexp", &t);
        self.push(t, Op::SegmentLogSumExp(x, segment))
    }

    /// Sums all rows into one.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let n = self.value(x).rows();
        self.segment_sum(x, vec![0; n].into(), 1)
    }

    /// `log Σ exp` over all rows, column-wise.
    pub fn logsumexp_rows(&mut self, x: Var) -> Var {
        let n = self.value(x).rows();
        self.segment_logsumexp(x, vec![0; n].into(), 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(
            av.shape(),
            bv.shape(),
            "add: {:?} vs {:?}",
            av.shape(),
            bv.shape()
        );
        let t = Tensor::new(
            av.rows(),
            av.cols(),
            av.data()
                .iter()
                .zip(bv.data())
                .map(|(x, y)| x + y)
                .collect(),
        );
        self.push(t, Op::Add(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let av = self.value(a);
        let t = Tensor::new(
            av.rows(),
            av.cols(),
            av.data().iter().map(|x| x * c).collect(),
        );
        self.push(t, Op::Scale(a, c))
    }

    /// `mean_i |pred_i − target_i|` over all entries of `pred`.
    pub fn l1_loss(&mut self, pred: Var, target: &[f64]) -> Var {
        let pv = self.value(pred);
        assert_eq!(
            pv.data().len(),
            target.len(),
            "l1_loss: prediction {:?} vs {} targets",
            pv.shape(),
            target.len()
        );
        let n = target.len().max(1) as f64;
        let loss = pv
            .data()
            .iter()
            .zip(target)
            .map(|(p, t)| (p - t).abs())
            .sum::<f64>()
            / n;
        self.push(Tensor::scalar(loss), Op::L1Loss(pred, target.into()))
    }

    /// `coef · Σ|θ|` over the given nodes.
    pub fn l1_penalty(&mut self, params: &[Var], coef: f64) -> Var {
        let total: f64 = params.iter().map(|p| self.value(*p).abs_sum()).sum();
        self.push(
            Tensor::scalar(coef * total),
            Op::L1Penalty(params.to_vec(), coef),
        )
    }

    /// Backpropagates from the scalar `loss` and adds parameter gradients
    /// into `store`. Consumes the tape, so a graph cannot be replayed.
    pub fn backward(self, loss: Var, store: &mut ParamStore) {
        assert_eq!(
            self.value(loss).shape(),
            [1, 1],
            "backward from non-scalar {:?}",
            self.value(loss).shape()
        );
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        fn acc(
            grads: &mut [Option<Tensor>],
            v: Var,
            shape: [usize; 2],
            f: impl FnOnce(&mut [f64]),
        ) {
            let slot = grads[v.0].get_or_insert_with(|| Tensor::zeros(shape[0], shape[1]));
            f(slot.data_mut());
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => store.accumulate(*id, &g),
                Op::Dense(x, w, b) => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let (n, a, m) = (xv.rows(), xv.cols(), wv.cols());
                    acc(&mut grads, *x, xv.shape(), |dx| {
                        for r in 0..n {
                            let gr = g.row_slice(r);
                            for k in 0..a {
                                let wk = wv.row_slice(k);
                                let mut s = 0.0;
                                for j in 0..m {
                                    s += gr[j] * wk[j];
                                }
                                dx[r * a + k] += s;
                            }
                        }
                    });
                    acc(&mut grads, *w, wv.shape(), |dw| {
                        for r in 0..n {
                            let gr = g.row_slice(r);
                            for (k, &xk) in xv.row_slice(r).iter().enumerate() {
                                if xk == 0.0 {
                                    continue;
                                }
                                for (d, &gj) in dw[k * m..(k + 1) * m].iter_mut().zip(gr) {
                                    *d += xk * gj;
                                }
                            }
                        }
                    });
                    acc(&mut grads, *b, [1, m], |db| {
                        for r in 0..n {
                            for (d, &gj) in db.iter_mut().zip(g.row_slice(r)) {
                                *d += gj;
                            }
                        }
                    });
                }
                Op::Relu(x) => {
                    let out = &node.value;
                    acc(&mut grads, *x, out.shape(), |dx| {
                        for ((d, &o), &gi) in dx.iter_mut().zip(out.data()).zip(g.data()) {
                            if o > 0.0 {
                                *d += gi;
                            }
                        }
                    });
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    let total = g.cols();
                    for p in parts {
                        let shape = self.value(*p).shape();
                        let c = shape[1];
                        acc(&mut grads, *p, shape, |dp| {
                            for r in 0..shape[0] {
                                for j in 0..c {
                                    dp[r * c + j] += g.data()[r * total + offset + j];
                                }
                            }
                        });
                        offset += c;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let shape = self.value(*p).shape();
                        let len = shape[0] * shape[1];
                        acc(&mut grads, *p, shape, |dp| {
                            for (d, &gi) in dp.iter_mut().zip(&g.data()[offset..offset + len]) {
                                *d += gi;
                            }
                        });
                        offset += len;
                    }
                }
                Op::GatherRows(x, index) => {
                    let shape = self.value(*x).shape();
                    let c = shape[1];
                    acc(&mut grads, *x, shape, |dx| {
                        for (i, &r) in index.iter().enumerate() {
                            let r = r as usize;
                            for (d, &gi) in dx[r * c..(r + 1) * c].iter_mut().zip(g.row_slice(i)) {
                                *d += gi;
                            }
                        }
                    });
                }
                Op::Reshape(x) => {
                    let shape = self.value(*x).shape();
                    acc(&mut grads, *x, shape, |dx| {
                        for (d, &gi) in dx.iter_mut().zip(g.data()) {
                            *d += gi;
                        }
                    });
                }
                Op::SegmentSum(x, segment) => {
                    let shape = self.value(*x).shape();
                    let c = shape[1];
                    acc(&mut grads, *x, shape, |dx| {
                        for (r, &s) in segment.iter().enumerate() {
                            for (d, &gi) in dx[r * c..(r + 1) * c]
                                .iter_mut()
                                .zip(g.row_slice(s as usize))
                            {
                                *d += gi;
                            }
                        }
                    });
                }
                Op::SegmentLogSumExp(x, segment) => {
                    let xv = self.value(*x);
                    let out = &node.value;
                    let c = xv.cols();
                    acc(&mut grads, *x, xv.shape(), |dx| {
                        for (r, &s) in segment.iter().enumerate() {
                            let s = s as usize;
                            for j in 0..c {
                                let w = (xv.get(r, j) - out.get(s, j)).exp();
                                dx[r * c + j] += g.get(s, j) * w;
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        acc(&mut grads, *v, g.shape(), |d| {
                            for (di, &gi) in d.iter_mut().zip(g.data()) {
                                *di += gi;
                            }
                        });
                    }
                }
                Op::Scale(a, c) => {
                    acc(&mut grads, *a, g.shape(), |d| {
                        for (di, &gi) in d.iter_mut().zip(g.data()) {
                            *di += c * gi;
                        }
                    });
                }
                Op::L1Loss(pred, target) => {
                    let pv = self.value(*pred);
                    let scale = g.item() / target.len().max(1) as f64;
                    acc(&mut grads, *pred, pv.shape(), |d| {
                        for ((di, &p), &t) in d.iter_mut().zip(pv.data()).zip(target.iter()) {
                            *di += scale * sign(p - t);
                        }
                    });
                }
                Op::L1Penalty(params, coef) => {
                    let scale = g.item() * coef;
                    for p in params {
                        let pv = self.value(*p);
                        acc(&mut grads, *p, pv.shape(), |d| {
                            for (di, &x) in d.iter_mut().zip(pv.data()) {
                                *di += scale * sign(x);
                            }
                        });
                    }
                }
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
