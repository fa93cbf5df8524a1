// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reverse-mode differentiation over row-major matrices.
//!
//! A [`Tape`] records every operation as it is evaluated; [`Tape::backward`]
//! walks the record in reverse and returns the gradient of a scalar with
//! respect to every node that depends on a parameter. The operation set is
//! the one needed by the attentional LSTM encoder-decoder, with the LSTM
//! cell, additive attention scoring and the softmax cross-entropy fused into
//! single nodes.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumCast};

/// Element type of the tape: `f32` for training, `f64` for gradient checks.
pub trait Scalar:
    LinalgScalar + Float + FromPrimitive + NumCast + ScalarOperand + AddAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: LinalgScalar + Float + FromPrimitive + NumCast + ScalarOperand + AddAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Elementwise sum; a single-row right operand is broadcast over rows.
    Add(Var, Var),
    Tanh(Var),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    /// Row `i` comes from the first operand when `mask[i]`, else the second.
    Blend(Var, Var, Vec<bool>),
    Gather(Var, Vec<usize>),
    /// `[h | c]` from pre-activation gates `[i f g o]` and the previous cell.
    LstmCell(Var, Var),
    /// `out[b, t] = v · tanh(q[b] + keys[t * B + b])`.
    AdditiveScores(Var, Var, Var),
    MaskedSoftmax(Var),
    /// `out[b] = Σ_t alpha[b, t] · memory[t * B + b]`.
    WeightedSum(Var, Var),
    /// `Σ_i w_i · −log softmax(logits_i)[target_i]`.
    CrossEntropy(Var, Vec<usize>, Vec<f64>),
}

struct Node<F> {
    value: Array2<F>,
    op: Op,
    /// Intermediate values kept for the backward pass.
    cache: Option<Array2<F>>,
    needs_grad: bool,
}

/// Recording of one forward computation.
pub struct Tape<F: Scalar> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Tape { nodes: Vec::new() }
    }
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

fn cast<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("representable constant")
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<F>, op: Op, cache: Option<Array2<F>>, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value, op, cache, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf.
    pub fn param(&mut self, value: Array2<F>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, cache: None, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: Array2<F>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, cache: None, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<F> {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        self.push(value, Op::MatMul(a, b), None, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert!(y.dim() == x.dim() || (y.nrows() == 1 && y.ncols() == x.ncols()), "add: shape mismatch");
        let value = x + y;
        self.push(value, Op::Add(a, b), None, &[a, b])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(F::tanh);
        self.push(value, Op::Tanh(a), None, &[a])
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(value, Op::SliceCols(a, start), None, &[a])
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let value = self.value(a).slice(s![start..end, ..]).to_owned();
        self.push(value, Op::SliceRows(a, start), None, &[a])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<F>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = concatenate(Axis(1), &views).expect("concat_cols: row counts differ");
        self.push(value, Op::ConcatCols(parts.to_vec()), None, parts)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<ArrayView2<F>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = concatenate(Axis(0), &views).expect("concat_rows: column counts differ");
        self.push(value, Op::ConcatRows(parts.to_vec()), None, parts)
    }

    pub fn blend(&mut self, a: Var, b: Var, mask: &[bool]) -> Var {
        let mut value = self.value(b).clone();
        assert_eq!(value.dim(), self.value(a).dim(), "blend: shape mismatch");
        assert_eq!(mask.len(), value.nrows(), "blend: mask length");
        for (i, &take) in mask.iter().enumerate() {
            if take {
                value.row_mut(i).assign(&self.value(a).row(i));
            }
        }
        self.push(value, Op::Blend(a, b, mask.to_vec()), None, &[a, b])
    }

    pub fn gather(&mut self, table: Var, rows: &[usize]) -> Var {
        let value = self.value(table).select(Axis(0), rows);
        self.push(value, Op::Gather(table, rows.to_vec()), None, &[table])
    }

    pub fn lstm_cell(&mut self, gates: Var, c_prev: Var) -> Var {
        let z = self.value(gates);
        let c0 = self.value(c_prev);
        let (b, h4) = z.dim();
        let h = h4 / 4;
        assert_eq!(c0.dim(), (b, h), "lstm_cell: cell shape");
        // cache: activated gates [i f g o] followed by tanh(c)
        let mut cache = Array2::zeros((b, 5 * h));
        let mut value = Array2::zeros((b, 2 * h));
        for r in 0..b {
            for j in 0..h {
                let i = sigmoid(z[[r, j]]);
                let f = sigmoid(z[[r, h + j]]);
                let g = z[[r, 2 * h + j]].tanh();
                let o = sigmoid(z[[r, 3 * h + j]]);
                let c = f * c0[[r, j]] + i * g;
                let tc = c.tanh();
                value[[r, j]] = o * tc;
                value[[r, h + j]] = c;
                cache[[r, j]] = i;
                cache[[r, h + j]] = f;
                cache[[r, 2 * h + j]] = g;
                cache[[r, 3 * h + j]] = o;
                cache[[r, 4 * h + j]] = tc;
            }
        }
        self.push(value, Op::LstmCell(gates, c_prev), Some(cache), &[gates, c_prev])
    }

    pub fn additive_scores(&mut self, query: Var, keys: Var, v: Var) -> Var {
        let q = self.value(query);
        let k = self.value(keys);
        let w = self.value(v);
        let (b, a) = q.dim();
        assert_eq!(k.ncols(), a, "additive_scores: key width");
        assert_eq!(k.nrows() % b, 0, "additive_scores: keys not time-major over the batch");
        assert_eq!(w.dim(), (a, 1), "additive_scores: score vector shape");
        let t_len = k.nrows() / b;
        let mut cache = Array2::zeros(k.dim());
        let mut value = Array2::zeros((b, t_len));
        for t in 0..t_len {
            for r in 0..b {
                let row = t * b + r;
                let mut acc = F::zero();
                for j in 0..a {
                    let th = (q[[r, j]] + k[[row, j]]).tanh();
                    cache[[row, j]] = th;
                    acc += th * w[[j, 0]];
                }
                value[[r, t]] = acc;
            }
        }
        self.push(value, Op::AdditiveScores(query, keys, v), Some(cache), &[query, keys, v])
    }

    /// Row-wise softmax over the first `lengths[b]` columns; later columns are 0.
    pub fn masked_softmax(&mut self, x: Var, lengths: &[usize]) -> Var {
        let xs = self.value(x);
        assert_eq!(lengths.len(), xs.nrows(), "masked_softmax: lengths");
        let mut value = Array2::zeros(xs.dim());
        for (r, &len) in lengths.iter().enumerate() {
            assert!(len >= 1 && len <= xs.ncols(), "masked_softmax: length out of range");
            let row = xs.row(r);
            let max = row.iter().take(len).fold(F::neg_infinity(), |m, &v| m.max(v));
            let mut total = F::zero();
            for t in 0..len {
                let e = (row[t] - max).exp();
                value[[r, t]] = e;
                total += e;
            }
            for t in 0..len {
                value[[r, t]] = value[[r, t]] / total;
            }
        }
        self.push(value, Op::MaskedSoftmax(x), None, &[x])
    }

    pub fn weighted_sum(&mut self, alpha: Var, memory: Var) -> Var {
        let al = self.value(alpha);
        let m = self.value(memory);
        let (b, t_len) = al.dim();
        assert_eq!(m.nrows(), b * t_len, "weighted_sum: memory rows");
        let mut value = Array2::zeros((b, m.ncols()));
        for t in 0..t_len {
            for r in 0..b {
                let w = al[[r, t]];
                if w != F::zero() {
                    value.row_mut(r).scaled_add(w, &m.row(t * b + r));
                }
            }
        }
        self.push(value, Op::WeightedSum(alpha, memory), None, &[alpha, memory])
    }

    /// Weighted negative log-likelihood of `targets` under row-wise softmax;
    /// rows with weight 0 (padding) contribute nothing. Output is `[1, 1]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize], weights: &[f64]) -> Var {
        let x = self.value(logits);
        assert_eq!(targets.len(), x.nrows(), "cross_entropy: targets");
        assert_eq!(weights.len(), x.nrows(), "cross_entropy: weights");
        let mut probs = Array2::zeros(x.dim());
        let mut loss = F::zero();
        for (r, (&target, &weight)) in targets.iter().zip(weights).enumerate() {
            let row = x.row(r);
            let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
            let mut total = F::zero();
            for (c, &v) in row.iter().enumerate() {
                let e = (v - max).exp();
                probs[[r, c]] = e;
                total += e;
            }
            probs.row_mut(r).mapv_inplace(|p| p / total);
            if weight != 0.0 {
                let nll = total.ln() + max - row[target];
                loss += cast::<F>(weight) * nll;
            }
        }
        let value = Array2::from_elem((1, 1), loss);
        self.push(value, Op::CrossEntropy(logits, targets.to_vec(), weights.to_vec()), Some(probs), &[logits])
    }

    /// Gradients of the `[1, 1]` node `loss` with respect to every node that
    /// depends on a parameter.
    pub fn backward(&self, loss: Var) -> Gradients<F> {
        assert_eq!(self.value(loss).dim(), (1, 1), "backward: loss must be a 1x1 node");
        let mut grads: Vec<Option<Array2<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::from_elem((1, 1), F::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.backward_node(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }

    fn backward_node(&self, node: &Node<F>, g: &Array2<F>, grads: &mut [Option<Array2<F>>]) {
        let wants = |v: &Var| self.nodes[v.0].needs_grad;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if wants(a) {
                    let slot = slot(grads, *a, self.value(*a).dim());
                    general_mat_mul(F::one(), g, &self.value(*b).t(), F::one(), slot);
                }
                if wants(b) {
                    let slot = slot(grads, *b, self.value(*b).dim());
                    general_mat_mul(F::one(), &self.value(*a).t(), g, F::one(), slot);
                }
            }
            Op::Add(a, b) => {
                if wants(a) {
                    *slot(grads, *a, g.dim()) += g;
                }
                if wants(b) {
                    let dim = self.value(*b).dim();
                    if dim == g.dim() {
                        *slot(grads, *b, dim) += g;
                    } else {
                        *slot(grads, *b, dim) += &g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    }
                }
            }
            Op::Tanh(a) => {
                if wants(a) {
                    let local = ndarray::Zip::from(g).and(&node.value).map_collect(|&g, &y| g * (F::one() - y * y));
                    *slot(grads, *a, g.dim()) += &local;
                }
            }
            Op::SliceCols(a, start) => {
                if wants(a) {
                    let dim = self.value(*a).dim();
                    let mut target = slot(grads, *a, dim).slice_mut(s![.., *start..*start + g.ncols()]);
                    target += g;
                }
            }
            Op::SliceRows(a, start) => {
                if wants(a) {
                    let dim = self.value(*a).dim();
                    let mut target = slot(grads, *a, dim).slice_mut(s![*start..*start + g.nrows(), ..]);
                    target += g;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let dim = self.value(*p).dim();
                    if wants(p) {
                        *slot(grads, *p, dim) += &g.slice(s![.., offset..offset + dim.1]);
                    }
                    offset += dim.1;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let dim = self.value(*p).dim();
                    if wants(p) {
                        *slot(grads, *p, dim) += &g.slice(s![offset..offset + dim.0, ..]);
                    }
                    offset += dim.0;
                }
            }
            Op::Blend(a, b, mask) => {
                for (v, pick) in [(a, true), (b, false)] {
                    if wants(v) {
                        let target = slot(grads, *v, g.dim());
                        for (i, &m) in mask.iter().enumerate() {
                            if m == pick {
                                let mut row = target.row_mut(i);
                                row += &g.row(i);
                            }
                        }
                    }
                }
            }
            Op::Gather(table, rows) => {
                if wants(table) {
                    let dim = self.value(*table).dim();
                    let target = slot(grads, *table, dim);
                    for (i, &r) in rows.iter().enumerate() {
                        let mut row = target.row_mut(r);
                        row += &g.row(i);
                    }
                }
            }
            Op::LstmCell(gates, c_prev) => {
                let cache = node.cache.as_ref().expect("lstm cache");
                let c0 = self.value(*c_prev);
                let (b, h2) = g.dim();
                let h = h2 / 2;
                let mut dz = Array2::zeros((b, 4 * h));
                let mut dc0 = Array2::zeros((b, h));
                for r in 0..b {
                    for j in 0..h {
                        let (i, f, gg, o, tc) = (
                            cache[[r, j]],
                            cache[[r, h + j]],
                            cache[[r, 2 * h + j]],
                            cache[[r, 3 * h + j]],
                            cache[[r, 4 * h + j]],
                        );
                        let gh = g[[r, j]];
                        let dc = g[[r, h + j]] + gh * o * (F::one() - tc * tc);
                        dz[[r, j]] = dc * gg * i * (F::one() - i);
                        dz[[r, h + j]] = dc * c0[[r, j]] * f * (F::one() - f);
                        dz[[r, 2 * h + j]] = dc * i * (F::one() - gg * gg);
                        dz[[r, 3 * h + j]] = gh * tc * o * (F::one() - o);
                        dc0[[r, j]] = dc * f;
                    }
                }
                if wants(gates) {
                    *slot(grads, *gates, dz.dim()) += &dz;
                }
                if wants(c_prev) {
                    *slot(grads, *c_prev, dc0.dim()) += &dc0;
                }
            }
            Op::AdditiveScores(query, keys, v) => {
                let th = node.cache.as_ref().expect("score cache");
                let w = self.value(*v);
                let (b, t_len) = g.dim();
                let a = th.ncols();
                let mut dq = Array2::zeros((b, a));
                let mut dk = Array2::zeros(th.dim());
                let mut dv = Array2::zeros((a, 1));
                for t in 0..t_len {
                    for r in 0..b {
                        let gs = g[[r, t]];
                        if gs == F::zero() {
                            continue;
                        }
                        let row = t * b + r;
                        for j in 0..a {
                            let x = th[[row, j]];
                            let d = gs * w[[j, 0]] * (F::one() - x * x);
                            dq[[r, j]] += d;
                            dk[[row, j]] = d;
                            dv[[j, 0]] += gs * x;
                        }
                    }
                }
                if wants(query) {
                    *slot(grads, *query, dq.dim()) += &dq;
                }
                if wants(keys) {
                    *slot(grads, *keys, dk.dim()) += &dk;
                }
                if wants(v) {
                    *slot(grads, *v, dv.dim()) += &dv;
                }
            }
            Op::MaskedSoftmax(x) => {
                if wants(x) {
                    let y = &node.value;
                    let mut dx = Array2::zeros(y.dim());
                    for r in 0..y.nrows() {
                        let dot: F = y.row(r).iter().zip(g.row(r)).map(|(&a, &b)| a * b).sum();
                        for c in 0..y.ncols() {
                            dx[[r, c]] = y[[r, c]] * (g[[r, c]] - dot);
                        }
                    }
                    *slot(grads, *x, dx.dim()) += &dx;
                }
            }
            Op::WeightedSum(alpha, memory) => {
                let al = self.value(*alpha);
                let m = self.value(*memory);
                let (b, t_len) = al.dim();
                if wants(alpha) {
                    let mut da = Array2::zeros((b, t_len));
                    for t in 0..t_len {
                        for r in 0..b {
                            da[[r, t]] = m.row(t * b + r).dot(&g.row(r));
                        }
                    }
                    *slot(grads, *alpha, da.dim()) += &da;
                }
                if wants(memory) {
                    let target = slot(grads, *memory, m.dim());
                    for t in 0..t_len {
                        for r in 0..b {
                            let w = al[[r, t]];
                            if w != F::zero() {
                                target.row_mut(t * b + r).scaled_add(w, &g.row(r));
                            }
                        }
                    }
                }
            }
            Op::CrossEntropy(logits, targets, weights) => {
                if wants(logits) {
                    let probs = node.cache.as_ref().expect("softmax cache");
                    let upstream = g[[0, 0]];
                    let target = slot(grads, *logits, probs.dim());
                    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let scale = upstream * cast::<F>(w);
                        let mut row = target.row_mut(r);
                        row.scaled_add(scale, &probs.row(r));
                        row[t] = row[t] - scale;
                    }
                }
            }
        }
    }
}

fn slot<F: Scalar>(grads: &mut [Option<Array2<F>>], v: Var, dim: (usize, usize)) -> &mut Array2<F> {
    grads[v.0].get_or_insert_with(|| Array2::zeros(dim))
}

/// Result of [`Tape::backward`].
pub struct Gradients<F> {
    grads: Vec<Option<Array2<F>>>,
}

impl<F: Scalar> Gradients<F> {
    /// Gradient of `v`, or `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Array2<F>> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<F>> {
        self.grads[v.0].take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
    }

    /// Compare tape gradients with central differences of
    /// `cross_entropy(build(inputs))` for every entry of every input.
    fn check(inputs: Vec<Array2<f64>>, build: impl Fn(&mut Tape<f64>, &[Var]) -> Var) {
        let loss_of = |values: &[Array2<f64>]| -> (f64, Tape<f64>, Vec<Var>, Var) {
            let mut tape = Tape::new();
            let vars: Vec<Var> = values.iter().map(|v| tape.param(v.clone())).collect();
            let out = build(&mut tape, &vars);
            let rows = tape.value(out).nrows();
            let cols = tape.value(out).ncols();
            let targets: Vec<usize> = (0..rows).map(|r| (r * 7 + 3) % cols).collect();
            let weights: Vec<f64> = (0..rows).map(|r| 0.5 + r as f64 * 0.25).collect();
            let loss = tape.cross_entropy(out, &targets, &weights);
            (tape.value(loss)[[0, 0]], tape, vars, loss)
        };
        let (_, tape, vars, loss) = loss_of(&inputs);
        let grads = tape.backward(loss);
        let h = 1e-5;
        for (k, input) in inputs.iter().enumerate() {
            let analytic = grads.get(vars[k]).cloned().unwrap_or_else(|| Array2::zeros(input.dim()));
            for idx in 0..input.len() {
                let (r, c) = (idx / input.ncols(), idx % input.ncols());
                let mut plus = inputs.clone();
                plus[k][[r, c]] += h;
                let mut minus = inputs.clone();
                minus[k][[r, c]] -= h;
                let numeric = (loss_of(&plus).0 - loss_of(&minus).0) / (2.0 * h);
                let a = analytic[[r, c]];
                assert!(
                    (a - numeric).abs() <= 1e-7 + 1e-6 * numeric.abs().max(a.abs()),
                    "input {k} entry ({r},{c}): analytic {a} numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn matmul_add_tanh() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inputs = vec![random(&mut rng, 3, 4), random(&mut rng, 4, 5), random(&mut rng, 1, 5), random(&mut rng, 3, 5)];
        check(inputs, |t, v| {
            let m = t.matmul(v[0], v[1]);
            let a = t.add(m, v[2]);
            let b = t.add(a, v[3]);
            t.tanh(b)
        });
    }

    #[test]
    fn slicing_and_concatenation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs = vec![random(&mut rng, 4, 6), random(&mut rng, 4, 2)];
        check(inputs, |t, v| {
            let left = t.slice_cols(v[0], 1, 4);
            let top = t.slice_rows(v[0], 0, 2);
            let bottom = t.slice_rows(v[0], 2, 4);
            let swapped = t.concat_rows(&[bottom, top]);
            let wide = t.concat_cols(&[left, v[1], swapped]);
            t.tanh(wide)
        });
    }

    #[test]
    fn blend_and_gather() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inputs = vec![random(&mut rng, 3, 4), random(&mut rng, 3, 4), random(&mut rng, 5, 4)];
        check(inputs, |t, v| {
            let b = t.blend(v[0], v[1], &[true, false, true]);
            let g = t.gather(v[2], &[4, 0, 4]);
            t.add(b, g)
        });
    }

    #[test]
    fn lstm_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inputs = vec![random(&mut rng, 2, 12).mapv(|x| 2.0 * x), random(&mut rng, 2, 3)];
        check(inputs, |t, v| t.lstm_cell(v[0], v[1]));
    }

    #[test]
    fn attention_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // batch 2, source length 3, attention width 4, memory width 5
        let inputs = vec![random(&mut rng, 2, 4), random(&mut rng, 6, 4), random(&mut rng, 4, 1), random(&mut rng, 6, 5)];
        check(inputs, |t, v| {
            let scores = t.additive_scores(v[0], v[1], v[2]);
            let alpha = t.masked_softmax(scores, &[3, 2]);
            let ctx = t.weighted_sum(alpha, v[3]);
            t.concat_cols(&[ctx, alpha])
        });
    }

    #[test]
    fn masked_softmax_ignores_padding() {
        let mut tape = Tape::<f64>::new();
        let x = tape.param(Array2::from_shape_vec((1, 3), vec![1.0, 2.0, 100.0]).unwrap());
        let y = tape.masked_softmax(x, &[2]);
        let v = tape.value(y);
        assert!((v[[0, 0]] + v[[0, 1]] - 1.0).abs() < 1e-12);
        assert_eq!(v[[0, 2]], 0.0);
    }

    #[test]
    fn cross_entropy_matches_direct_formula() {
        let logits = Array2::from_shape_vec((2, 3), vec![0.0, 1.0, 2.0, -1.0, 0.5, 0.0]).unwrap();
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(logits.clone());
        let loss = tape.cross_entropy(x, &[2, 0], &[0.5, 0.0]);
        let lse: f64 = (0.0f64.exp() + 1.0f64.exp() + 2.0f64.exp()).ln();
        assert!((tape.value(loss)[[0, 0]] - 0.5 * (lse - 2.0)).abs() < 1e-12);
        assert!(tape.backward(loss).get(x).is_none());
    }
}
