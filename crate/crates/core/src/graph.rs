//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records the forward computation as a flat list of nodes;
//! [`Tape::backward`] walks it in reverse and accumulates gradients.
//! Operands are either tracked nodes or constants, so the same builder
//! code serves training (parameters as leaves), attacks (images as the
//! only leaf) and plain evaluation (everything constant).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

pub mod kernels {
    //! Forward kernels shared between the tape and the eager operations,
    //! so both paths produce bit-identical values.

    use super::*;

    /// Row-wise softmax of `scale * s`, max-subtracted for stability.
    pub fn softmax_rows<S: Scalar>(s: &Mat<S>, scale: S) -> Mat<S> {
        let mut out = Mat::zeros(s.rows(), s.cols());
        for i in 0..s.rows() {
            let row = s.row(i);
            let mut hi = S::neg_infinity();
            for &v in row {
                let t = scale * v;
                if t > hi {
                    hi = t;
                }
            }
            let out_row = out.row_mut(i);
            let mut sum = S::zero();
            for (j, &v) in row.iter().enumerate() {
                let e = (scale * v - hi).exp();
                out_row[j] = e;
                sum += e;
            }
            for v in out_row.iter_mut() {
                *v = *v / sum;
            }
        }
        out
    }

    /// `ln(max(x, floor))`.
    pub fn floored_ln<S: Scalar>(x: S, floor: S) -> S {
        if x > floor {
            x.ln()
        } else {
            floor.ln()
        }
    }

    /// Mean negative log-likelihood of the true class: `-(1/N) ΣΣ Y ln P⌊`.
    pub fn cross_entropy<S: Scalar>(p: &Mat<S>, y: &Mat<S>, floor: S) -> S {
        debug_assert_eq!(p.shape(), y.shape());
        let n = S::of(p.rows() as f64);
        let mut total = S::zero();
        for i in 0..p.rows() {
            let (pr, yr) = (p.row(i), y.row(i));
            for j in 0..p.cols() {
                if yr[j] != S::zero() {
                    total += yr[j] * floored_ln(pr[j], floor);
                }
            }
        }
        -total / n
    }

    /// Mean entropy `-(1/N) ΣΣ P ln P⌊`.
    pub fn entropy_mean<S: Scalar>(p: &Mat<S>, floor: S) -> S {
        let n = S::of(p.rows() as f64);
        let mut total = S::zero();
        for i in 0..p.rows() {
            for &v in p.row(i) {
                total += v * floored_ln(v, floor);
            }
        }
        -total / n
    }

    /// Mean cross-entropy between distributions `-(1/N) ΣΣ P ln Q⌊`.
    pub fn cross_entropy_between<S: Scalar>(p: &Mat<S>, q: &Mat<S>, floor: S) -> S {
        debug_assert_eq!(p.shape(), q.shape());
        let n = S::of(p.rows() as f64);
        let mut total = S::zero();
        for i in 0..p.rows() {
            let (pr, qr) = (p.row(i), q.row(i));
            for j in 0..p.cols() {
                total += pr[j] * floored_ln(qr[j], floor);
            }
        }
        -total / n
    }

    /// Mean per-row KL divergence `(1/N) Σᵢ Σⱼ P(ln P⌊ − ln Q⌊)`.
    pub fn kl_mean<S: Scalar>(p: &Mat<S>, q: &Mat<S>, floor: S) -> S {
        debug_assert_eq!(p.shape(), q.shape());
        let n = S::of(p.rows() as f64);
        let mut total = S::zero();
        for i in 0..p.rows() {
            let (pr, qr) = (p.row(i), q.row(i));
            for j in 0..p.cols() {
                total += pr[j] * (floored_ln(pr[j], floor) - floored_ln(qr[j], floor));
            }
        }
        total / n
    }

    /// Mean per-row Euclidean distance `(1/N) Σᵢ ‖Aᵢ − Bᵢ‖₂`.
    pub fn l2_rows_mean<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> S {
        debug_assert_eq!(a.shape(), b.shape());
        let n = S::of(a.rows() as f64);
        let mut total = S::zero();
        for i in 0..a.rows() {
            let (ar, br) = (a.row(i), b.row(i));
            let mut acc = S::zero();
            for j in 0..a.cols() {
                let d = ar[j] - br[j];
                acc += d * d;
            }
            total += acc.sqrt();
        }
        total / n
    }

    /// Mean per-row cosine distance `(1/N) Σᵢ (1 − cos(Aᵢ, Bᵢ))`.
    ///
    /// Fails if any row of either side has zero norm.
    pub fn cosine_rows_mean<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<S> {
        debug_assert_eq!(a.shape(), b.shape());
        let n = S::of(a.rows() as f64);
        let mut total = S::zero();
        for i in 0..a.rows() {
            let (ar, br) = (a.row(i), b.row(i));
            let mut dot = S::zero();
            let mut na = S::zero();
            let mut nb = S::zero();
            for j in 0..a.cols() {
                dot += ar[j] * br[j];
                na += ar[j] * ar[j];
                nb += br[j] * br[j];
            }
            let (na, nb) = (na.sqrt(), nb.sqrt());
            if na == S::zero() || nb == S::zero() {
                return Err(Error::validation(format!(
                    "cosine distance undefined for zero-norm row {i}"
                )));
            }
            total += S::one() - dot / (na * nb);
        }
        Ok(total / n)
    }
}

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// An input to an op: a tracked node or an untracked constant.
#[derive(Clone)]
pub enum Operand<S> {
    Node(NodeId),
    Const(Arc<Mat<S>>),
}

impl<S> From<NodeId> for Operand<S> {
    fn from(id: NodeId) -> Self {
        Operand::Node(id)
    }
}

impl<S: Scalar> Operand<S> {
    pub fn constant(m: Mat<S>) -> Self {
        Operand::Const(Arc::new(m))
    }
}

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

enum Op<S> {
    Leaf,
    /// `A · Bᵀ`
    MatMulNt { a: Operand<S>, b: Operand<S> },
    /// `A + 1·bias` (bias broadcast over rows)
    AddRow { a: Operand<S>, bias: Operand<S> },
    Activation { a: NodeId, kind: Activation },
    /// rows scaled to unit norm; `norms` are the pre-clamp row norms
    RowNormalize { a: NodeId, norms: Vec<S> },
    Clamp { a: NodeId, lo: S, hi: S },
    /// row softmax of `scale * a`
    SoftmaxRows { a: NodeId, scale: S },
    /// scalar `-(1/N) ΣΣ Y ln P⌊`
    CeOnehot { p: NodeId, labels: Arc<Mat<S>>, floor: S },
    /// scalar `(1/N) Σ KL(Pᵢ ‖ Qᵢ)`
    KlMean { p: NodeId, q: Operand<S>, floor: S },
    /// scalar `(1/N) Σ ‖Aᵢ − Bᵢ‖₂`
    L2RowsMean { a: NodeId, b: Operand<S> },
    /// scalar `(1/N) Σ (1 − cos(Aᵢ, Bᵢ))`
    CosineRowsMean { a: NodeId, b: Operand<S> },
    /// scalar `Σ wᵢ·xᵢ` over scalar nodes
    WeightedSum { terms: Vec<(NodeId, S)> },
}

struct Node<S> {
    value: Mat<S>,
    op: Op<S>,
}

/// Records a forward computation and differentiates it in reverse.
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
    grads: Vec<Option<Mat<S>>>,
}

/// Row norms below this are treated as a constant divisor in normalization.
const NORM_FLOOR: f64 = 1e-30;

fn node_value<'a, S: Scalar>(nodes: &'a [Node<S>], id: NodeId) -> &'a Mat<S> {
    &nodes[id.0].value
}

fn op_value<'a, S: Scalar>(nodes: &'a [Node<S>], op: &'a Operand<S>) -> &'a Mat<S> {
    match op {
        Operand::Node(id) => node_value(nodes, *id),
        Operand::Const(m) => m,
    }
}

fn accumulate<S: Scalar>(grads: &mut [Option<Mat<S>>], id: NodeId, delta: Mat<S>) {
    match &mut grads[id.0] {
        Some(g) => g.add_scaled_in_place(&delta, S::one()),
        slot @ None => *slot = Some(delta),
    }
}

fn accumulate_operand<S: Scalar>(grads: &mut [Option<Mat<S>>], op: &Operand<S>, delta: Mat<S>) {
    if let Operand::Node(id) = op {
        accumulate(grads, *id, delta);
    }
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), grads: Vec::new() }
    }

    fn push(&mut self, value: Mat<S>, op: Op<S>) -> NodeId {
        self.nodes.push(Node { value, op });
        self.grads.push(None);
        NodeId(self.nodes.len() - 1)
    }

    /// Registers a gradient-tracked input.
    pub fn leaf(&mut self, value: Mat<S>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Value of a node.
    pub fn value(&self, id: NodeId) -> &Mat<S> {
        node_value(&self.nodes, id)
    }

    fn operand_value<'a>(&'a self, op: &'a Operand<S>) -> &'a Mat<S> {
        op_value(&self.nodes, op)
    }

    /// Gradient accumulated at `id` by the last `backward` call.
    pub fn grad(&self, id: NodeId) -> Option<&Mat<S>> {
        self.grads[id.0].as_ref()
    }

    /// Gradient at `id`, or zeros if the node is off the backward path.
    pub fn grad_or_zeros(&self, id: NodeId) -> Mat<S> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.value(id).shape();
                Mat::zeros(r, c)
            }
        }
    }

    pub fn matmul_nt(
        &mut self,
        a: impl Into<Operand<S>>,
        b: impl Into<Operand<S>>,
    ) -> Result<NodeId> {
        let (a, b) = (a.into(), b.into());
        let value = self.operand_value(&a).matmul_nt(self.operand_value(&b))?;
        Ok(self.push(value, Op::MatMulNt { a, b }))
    }

    pub fn add_row(
        &mut self,
        a: impl Into<Operand<S>>,
        bias: impl Into<Operand<S>>,
    ) -> Result<NodeId> {
        let (a, bias) = (a.into(), bias.into());
        let am = self.operand_value(&a);
        let bm = self.operand_value(&bias);
        if bm.rows() != 1 || bm.cols() != am.cols() {
            return Err(Error::shape(format!(
                "bias {}x{} does not broadcast over {}x{}",
                bm.rows(),
                bm.cols(),
                am.rows(),
                am.cols()
            )));
        }
        let mut value = am.clone();
        for i in 0..value.rows() {
            let row = value.row_mut(i);
            for (v, &b) in row.iter_mut().zip(bm.row(0)) {
                *v += b;
            }
        }
        Ok(self.push(value, Op::AddRow { a, bias }))
    }

    pub fn activation(&mut self, a: NodeId, kind: Activation) -> NodeId {
        let value = match kind {
            Activation::Tanh => self.value(a).map(|v| v.tanh()),
            Activation::Relu => self.value(a).map(|v| if v > S::zero() { v } else { S::zero() }),
        };
        self.push(value, Op::Activation { a, kind })
    }

    pub fn row_normalize(&mut self, a: NodeId) -> NodeId {
        let x = self.value(a);
        let norms = x.row_norms();
        let floor = S::of(NORM_FLOOR);
        let mut value = x.clone();
        for (i, &n) in norms.iter().enumerate() {
            let d = if n > floor { n } else { floor };
            for v in value.row_mut(i) {
                *v = *v / d;
            }
        }
        self.push(value, Op::RowNormalize { a, norms })
    }

    pub fn clamp(&mut self, a: NodeId, lo: S, hi: S) -> NodeId {
        let value = self.value(a).clamp(lo, hi);
        self.push(value, Op::Clamp { a, lo, hi })
    }

    pub fn softmax_rows(&mut self, a: NodeId, scale: S) -> NodeId {
        let value = kernels::softmax_rows(self.value(a), scale);
        self.push(value, Op::SoftmaxRows { a, scale })
    }

    pub fn ce_onehot(&mut self, p: NodeId, labels: Arc<Mat<S>>, floor: S) -> Result<NodeId> {
        if self.value(p).shape() != labels.shape() {
            return Err(Error::shape("probabilities and labels differ in shape"));
        }
        let v = kernels::cross_entropy(self.value(p), &labels, floor);
        Ok(self.push(Mat::full(1, 1, v), Op::CeOnehot { p, labels, floor }))
    }

    pub fn kl_mean(&mut self, p: NodeId, q: impl Into<Operand<S>>, floor: S) -> Result<NodeId> {
        let q = q.into();
        if self.value(p).shape() != self.operand_value(&q).shape() {
            return Err(Error::shape("KL operands differ in shape"));
        }
        let v = kernels::kl_mean(self.value(p), self.operand_value(&q), floor);
        Ok(self.push(Mat::full(1, 1, v), Op::KlMean { p, q, floor }))
    }

    pub fn l2_rows_mean(&mut self, a: NodeId, b: impl Into<Operand<S>>) -> Result<NodeId> {
        let b = b.into();
        if self.value(a).shape() != self.operand_value(&b).shape() {
            return Err(Error::shape("distance operands differ in shape"));
        }
        let v = kernels::l2_rows_mean(self.value(a), self.operand_value(&b));
        Ok(self.push(Mat::full(1, 1, v), Op::L2RowsMean { a, b }))
    }

    pub fn cosine_rows_mean(&mut self, a: NodeId, b: impl Into<Operand<S>>) -> Result<NodeId> {
        let b = b.into();
        if self.value(a).shape() != self.operand_value(&b).shape() {
            return Err(Error::shape("distance operands differ in shape"));
        }
        let v = kernels::cosine_rows_mean(self.value(a), self.operand_value(&b))?;
        Ok(self.push(Mat::full(1, 1, v), Op::CosineRowsMean { a, b }))
    }

    pub fn weighted_sum(&mut self, terms: &[(NodeId, S)]) -> NodeId {
        let mut v = S::zero();
        for &(id, w) in terms {
            debug_assert_eq!(self.value(id).shape(), (1, 1));
            v += w * self.value(id)[(0, 0)];
        }
        self.push(Mat::full(1, 1, v), Op::WeightedSum { terms: terms.to_vec() })
    }

    /// Runs reverse-mode differentiation from a scalar root.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        if self.value(root).shape() != (1, 1) {
            return Err(Error::validation("backward root must be a scalar node"));
        }
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        for g in grads.iter_mut() {
            *g = None;
        }
        grads[root.0] = Some(Mat::full(1, 1, S::one()));

        for idx in (0..nodes.len()).rev() {
            let Some(gout) = grads[idx].take() else { continue };
            match &nodes[idx].op {
                Op::Leaf => {}
                Op::MatMulNt { a, b } => {
                    if let Operand::Node(aid) = a {
                        let bv = op_value(nodes, b);
                        let av = node_value(nodes, *aid);
                        let mut da = Mat::zeros(av.rows(), av.cols());
                        Mat::add_matmul_nn(&mut da, &gout, bv);
                        accumulate(grads, *aid, da);
                    }
                    if let Operand::Node(bid) = b {
                        let av = op_value(nodes, a);
                        let bv = node_value(nodes, *bid);
                        let mut db = Mat::zeros(bv.rows(), bv.cols());
                        Mat::add_matmul_tn(&mut db, &gout, av);
                        accumulate(grads, *bid, db);
                    }
                }
                Op::AddRow { a, bias } => {
                    accumulate_operand(grads, a, gout.clone());
                    if let Operand::Node(bid) = bias {
                        let mut db = Mat::zeros(1, gout.cols());
                        for i in 0..gout.rows() {
                            let row = gout.row(i);
                            let acc = db.row_mut(0);
                            for (j, &v) in row.iter().enumerate() {
                                acc[j] += v;
                            }
                        }
                        accumulate(grads, *bid, db);
                    }
                }
                Op::Activation { a, kind } => {
                    let y = &nodes[idx].value;
                    let mut dx = gout.clone();
                    match kind {
                        Activation::Tanh => {
                            for (d, &yv) in dx.as_mut_slice().iter_mut().zip(y.as_slice()) {
                                *d = *d * (S::one() - yv * yv);
                            }
                        }
                        Activation::Relu => {
                            for (d, &yv) in dx.as_mut_slice().iter_mut().zip(y.as_slice()) {
                                if yv <= S::zero() {
                                    *d = S::zero();
                                }
                            }
                        }
                    }
                    accumulate(grads, *a, dx);
                }
                Op::RowNormalize { a, norms } => {
                    let y = &nodes[idx].value;
                    let floor = S::of(NORM_FLOOR);
                    let mut dx = Mat::zeros(gout.rows(), gout.cols());
                    for i in 0..gout.rows() {
                        let g_row = gout.row(i);
                        let y_row = y.row(i);
                        let n = norms[i];
                        let dst = dx.row_mut(i);
                        if n > floor {
                            let mut dot = S::zero();
                            for j in 0..g_row.len() {
                                dot += g_row[j] * y_row[j];
                            }
                            for j in 0..g_row.len() {
                                dst[j] = (g_row[j] - y_row[j] * dot) / n;
                            }
                        } else {
                            for j in 0..g_row.len() {
                                dst[j] = g_row[j] / floor;
                            }
                        }
                    }
                    accumulate(grads, *a, dx);
                }
                Op::Clamp { a, lo, hi } => {
                    let x = node_value(nodes, *a);
                    let mut dx = gout.clone();
                    for (d, &xv) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        if xv <= *lo || xv >= *hi {
                            *d = S::zero();
                        }
                    }
                    accumulate(grads, *a, dx);
                }
                Op::SoftmaxRows { a, scale } => {
                    let y = &nodes[idx].value;
                    let mut dx = Mat::zeros(gout.rows(), gout.cols());
                    for i in 0..gout.rows() {
                        let g_row = gout.row(i);
                        let y_row = y.row(i);
                        let mut dot = S::zero();
                        for j in 0..g_row.len() {
                            dot += g_row[j] * y_row[j];
                        }
                        let dst = dx.row_mut(i);
                        for j in 0..g_row.len() {
                            dst[j] = *scale * y_row[j] * (g_row[j] - dot);
                        }
                    }
                    accumulate(grads, *a, dx);
                }
                Op::CeOnehot { p, labels, floor } => {
                    let g = gout[(0, 0)];
                    let pv = node_value(nodes, *p);
                    let n = S::of(pv.rows() as f64);
                    let mut dp = Mat::zeros(pv.rows(), pv.cols());
                    for i in 0..pv.rows() {
                        let (pr, yr) = (pv.row(i), labels.row(i));
                        let dst = dp.row_mut(i);
                        for j in 0..pr.len() {
                            if yr[j] != S::zero() && pr[j] > *floor {
                                dst[j] = -g * yr[j] / (pr[j] * n);
                            }
                        }
                    }
                    accumulate(grads, *p, dp);
                }
                Op::KlMean { p, q, floor } => {
                    let g = gout[(0, 0)];
                    let pv = node_value(nodes, *p);
                    let qv = op_value(nodes, q);
                    let n = S::of(pv.rows() as f64);
                    let mut dp = Mat::zeros(pv.rows(), pv.cols());
                    for i in 0..pv.rows() {
                        let (pr, qr) = (pv.row(i), qv.row(i));
                        let dst = dp.row_mut(i);
                        for j in 0..pr.len() {
                            let mut d = kernels::floored_ln(pr[j], *floor)
                                - kernels::floored_ln(qr[j], *floor);
                            if pr[j] > *floor {
                                d += S::one();
                            }
                            dst[j] = g * d / n;
                        }
                    }
                    let dq = if let Operand::Node(_) = q {
                        let mut dq = Mat::zeros(qv.rows(), qv.cols());
                        for i in 0..qv.rows() {
                            let (pr, qr) = (pv.row(i), qv.row(i));
                            let dst = dq.row_mut(i);
                            for j in 0..qr.len() {
                                if qr[j] > *floor {
                                    dst[j] = -g * pr[j] / (qr[j] * n);
                                }
                            }
                        }
                        Some(dq)
                    } else {
                        None
                    };
                    accumulate(grads, *p, dp);
                    if let (Operand::Node(qid), Some(dq)) = (q, dq) {
                        accumulate(grads, *qid, dq);
                    }
                }
                Op::L2RowsMean { a, b } => {
                    let g = gout[(0, 0)];
                    let av = node_value(nodes, *a);
                    let bv = op_value(nodes, b);
                    let n = S::of(av.rows() as f64);
                    let mut da = Mat::zeros(av.rows(), av.cols());
                    for i in 0..av.rows() {
                        let (ar, br) = (av.row(i), bv.row(i));
                        let mut norm = S::zero();
                        for j in 0..ar.len() {
                            let d = ar[j] - br[j];
                            norm += d * d;
                        }
                        let norm = norm.sqrt();
                        if norm > S::zero() {
                            let dst = da.row_mut(i);
                            for j in 0..ar.len() {
                                dst[j] = g * (ar[j] - br[j]) / (norm * n);
                            }
                        }
                    }
                    let db = match b {
                        Operand::Node(_) => Some(da.scale(-S::one())),
                        Operand::Const(_) => None,
                    };
                    accumulate(grads, *a, da);
                    if let (Operand::Node(bid), Some(db)) = (b, db) {
                        accumulate(grads, *bid, db);
                    }
                }
                Op::CosineRowsMean { a, b } => {
                    let g = gout[(0, 0)];
                    let av = node_value(nodes, *a);
                    let bv = op_value(nodes, b);
                    let n = S::of(av.rows() as f64);
                    let mut da = Mat::zeros(av.rows(), av.cols());
                    let mut db = Mat::zeros(bv.rows(), bv.cols());
                    for i in 0..av.rows() {
                        let (ar, br) = (av.row(i), bv.row(i));
                        let mut dot = S::zero();
                        let mut na2 = S::zero();
                        let mut nb2 = S::zero();
                        for j in 0..ar.len() {
                            dot += ar[j] * br[j];
                            na2 += ar[j] * ar[j];
                            nb2 += br[j] * br[j];
                        }
                        let (na, nb) = (na2.sqrt(), nb2.sqrt());
                        let cos = dot / (na * nb);
                        let dsta = da.row_mut(i);
                        for j in 0..ar.len() {
                            dsta[j] = g * (-br[j] / (na * nb) + cos * ar[j] / na2) / n;
                        }
                        let dstb = db.row_mut(i);
                        for j in 0..br.len() {
                            dstb[j] = g * (-ar[j] / (na * nb) + cos * br[j] / nb2) / n;
                        }
                    }
                    accumulate(grads, *a, da);
                    if let Operand::Node(bid) = b {
                        accumulate(grads, *bid, db);
                    }
                }
                Op::WeightedSum { terms } => {
                    let deltas: Vec<(NodeId, Mat<S>)> = terms
                        .iter()
                        .map(|&(id, w)| (id, Mat::full(1, 1, gout[(0, 0)] * w)))
                        .collect();
                    for (id, delta) in deltas {
                        accumulate(grads, id, delta);
                    }
                }
            }
            grads[idx] = Some(gout);
        }
        Ok(())
    }
}
