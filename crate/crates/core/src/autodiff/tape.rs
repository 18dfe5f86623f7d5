use std::rc::Rc;

use super::matrix::{Matrix, SparseMatrix};
use crate::error::{Error, Result};

/// Norms below this are clamped before dividing in `row_l2_normalize`.
pub const NORM_FLOOR: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    ScalarMul(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    RowL2Normalize(Var, Vec<f64>),
    LogSoftmaxRows(Var),
    MeanRows(Var),
    SumRows(Var),
    RowSums(Var),
    SumAll(Var),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    Pick(Var, Vec<usize>),
    Sparse(Rc<SparseMatrix>, Var),
}

impl Op {
    fn parents(&self) -> Vec<Var> {
        use Op::*;
        match self {
            Leaf => vec![],
            MatMul(a, b) | MatMulT(a, b) | Add(a, b) | AddRow(a, b) | Sub(a, b) | Mul(a, b) => {
                vec![*a, *b]
            }
            Transpose(a) | ScalarMul(a, _) | Relu(a) | Sigmoid(a) | RowL2Normalize(a, _)
            | LogSoftmaxRows(a) | MeanRows(a) | SumRows(a) | RowSums(a) | SumAll(a)
            | GatherRows(a, _) | Pick(a, _) | Sparse(_, a) => vec![*a],
            ConcatRows(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of a tensor program. Parents always precede
/// children, so reverse insertion order is a valid topological order.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to the leaves that asked for them.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn leaf(&mut self, value: Matrix, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Matrix) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.leaf(value, false)
    }

    /// Copy of `v` that blocks gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    fn push(&mut self, op: &'static str, value: Matrix, node_op: Op) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::Numeric { op });
        }
        let requires_grad = node_op
            .parents()
            .iter()
            .any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            op: node_op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push("matmul", value, Op::MatMul(a, b))
    }

    /// `a * b^T`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul_transposed(self.value(b))?;
        self.push("matmul_t", value, Op::MatMulT(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).transpose();
        self.push("transpose", value, Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push("add", value, Op::Add(a, b))
    }

    /// Adds a `1 x c` row vector to every row of an `r x c` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (r, c) = self.shape(a);
        if self.shape(row) != (1, c) {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + {:?}", (r, c), self.shape(row)),
            ));
        }
        let mut value = self.value(a).clone();
        let bias = self.value(row).data().to_vec();
        for i in 0..r {
            for (x, b) in value.row_mut(i).iter_mut().zip(&bias) {
                *x += b;
            }
        }
        self.push("add_row", value, Op::AddRow(a, row))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push("sub", value, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push("mul", value, Op::Mul(a, b))
    }

    pub fn scalar_mul(&mut self, a: Var, s: f64) -> Result<Var> {
        let value = self.value(a).scale(s);
        self.push("scalar_mul", value, Op::ScalarMul(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| x.max(0.0));
        self.push("relu", value, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|x| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                let e = x.exp();
                e / (1.0 + e)
            }
        });
        self.push("sigmoid", value, Op::Sigmoid(a))
    }

    /// Divides each row by its L2 norm, clamped below at [`NORM_FLOOR`].
    pub fn row_l2_normalize(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let mut value = x.clone();
        let mut norms = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let n = x.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            let d = n.max(NORM_FLOOR);
            for v in value.row_mut(r) {
                *v /= d;
            }
            norms.push(n);
        }
        self.push("row_l2_normalize", value, Op::RowL2Normalize(a, norms))
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let mut value = x.clone();
        for r in 0..x.rows() {
            let row = value.row_mut(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        self.push("log_softmax_rows", value, Op::LogSoftmaxRows(a))
    }

    /// Column-wise mean over rows: `r x c -> 1 x c`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.shape(a);
        if r == 0 {
            return Err(Error::shape("mean_rows", "no rows"));
        }
        let value = self.column_sums(a).scale(1.0 / r as f64);
        debug_assert_eq!(value.cols(), c);
        self.push("mean_rows", value, Op::MeanRows(a))
    }

    /// Column-wise sum over rows: `r x c -> 1 x c`.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var> {
        let value = self.column_sums(a);
        self.push("sum_rows", value, Op::SumRows(a))
    }

    /// Per-row sums: `r x c -> r x 1`.
    pub fn row_sums(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let data = (0..x.rows()).map(|r| x.row(r).iter().sum()).collect();
        let value = Matrix::from_vec(x.rows(), 1, data)?;
        self.push("row_sums", value, Op::RowSums(a))
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let value = Matrix::scalar(self.value(a).sum());
        self.push("sum_all", value, Op::SumAll(a))
    }

    pub fn mean_all(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(Error::shape("mean_all", "empty tensor"));
        }
        let s = self.sum_all(a)?;
        self.scalar_mul(s, 1.0 / n as f64)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&v| self.value(v)).collect();
        let value = Matrix::vstack(&mats)?;
        self.push("concat_rows", value, Op::ConcatRows(parts.to_vec()))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let rows = self.shape(a).0;
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(Error::shape("gather_rows", format!("row {bad} of {rows}")));
        }
        let value = self.value(a).select_rows(idx);
        self.push("gather_rows", value, Op::GatherRows(a, idx.to_vec()))
    }

    /// Picks column `cols[r]` from each row `r`: `r x c -> r x 1`.
    pub fn pick(&mut self, a: Var, cols: &[usize]) -> Result<Var> {
        let (r, c) = self.shape(a);
        if cols.len() != r || cols.iter().any(|&j| j >= c) {
            return Err(Error::shape("pick", format!("{} indices into {r}x{c}", cols.len())));
        }
        let x = self.value(a);
        let data = cols.iter().enumerate().map(|(i, &j)| x.get(i, j)).collect();
        let value = Matrix::from_vec(r, 1, data)?;
        self.push("pick", value, Op::Pick(a, cols.to_vec()))
    }

    /// Constant sparse matrix times a recorded dense value.
    pub fn sparse_matmul(&mut self, s: &Rc<SparseMatrix>, a: Var) -> Result<Var> {
        let value = s.mul_dense(self.value(a))?;
        self.push("sparse_matmul", value, Op::Sparse(Rc::clone(s), a))
    }

    fn column_sums(&self, a: Var) -> Matrix {
        let x = self.value(a);
        let mut out = Matrix::zeros(1, x.cols());
        for r in 0..x.rows() {
            for (o, v) in out.data_mut().iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        out
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        Ok(())
    }

    /// Sign pattern (`input > 0`) of every ReLU on the tape, in order.
    pub fn relu_pattern(&self) -> Vec<Vec<bool>> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu(a) => Some(self.value(a).data().iter().map(|&x| x > 0.0).collect()),
                _ => None,
            })
            .collect()
    }

    /// Reverse-mode sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::shape(
                "backward",
                format!("loss must be 1x1, got {:?}", self.shape(loss)),
            ));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                grads[idx] = None;
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
                continue;
            }
            for (parent, pg) in self.local_grads(node, &g)? {
                if !self.nodes[parent.0].requires_grad {
                    continue;
                }
                match &mut grads[parent.0] {
                    Some(acc) => acc.add_assign(&pg),
                    slot @ None => *slot = Some(pg),
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn local_grads(&self, node: &Node, g: &Matrix) -> Result<Vec<(Var, Matrix)>> {
        use Op::*;
        let out = &node.value;
        Ok(match &node.op {
            Leaf => vec![],
            MatMul(a, b) => vec![
                (*a, g.matmul_transposed(self.value(*b))?),
                (*b, self.value(*a).transposed_matmul(g)?),
            ],
            MatMulT(a, b) => vec![
                (*a, g.matmul(self.value(*b))?),
                (*b, g.transposed_matmul(self.value(*a))?),
            ],
            Transpose(a) => vec![(*a, g.transpose())],
            Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            AddRow(a, b) => {
                let mut gb = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, v) in gb.data_mut().iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                vec![(*a, g.clone()), (*b, gb)]
            }
            Sub(a, b) => vec![(*a, g.clone()), (*b, g.scale(-1.0))],
            Mul(a, b) => vec![
                (*a, g.zip_map(self.value(*b), |x, y| x * y)),
                (*b, g.zip_map(self.value(*a), |x, y| x * y)),
            ],
            ScalarMul(a, s) => vec![(*a, g.scale(*s))],
            Relu(a) => vec![(*a, g.zip_map(self.value(*a), |gv, x| if x > 0.0 { gv } else { 0.0 }))],
            Sigmoid(a) => vec![(*a, g.zip_map(out, |gv, y| gv * y * (1.0 - y)))],
            RowL2Normalize(a, norms) => {
                let mut ga = Matrix::zeros(g.rows(), g.cols());
                for (r, &n) in norms.iter().enumerate() {
                    let y = out.row(r);
                    let gr = g.row(r);
                    let row = ga.row_mut(r);
                    if n > NORM_FLOOR {
                        let yg: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, &gv), &yv) in row.iter_mut().zip(gr).zip(y) {
                            *o = (gv - yv * yg) / n;
                        }
                    } else {
                        for (o, &gv) in row.iter_mut().zip(gr) {
                            *o = gv / NORM_FLOOR;
                        }
                    }
                }
                vec![(*a, ga)]
            }
            LogSoftmaxRows(a) => {
                let mut ga = g.clone();
                for r in 0..g.rows() {
                    let gsum: f64 = g.row(r).iter().sum();
                    let y = out.row(r);
                    for (o, &yv) in ga.row_mut(r).iter_mut().zip(y) {
                        *o -= yv.exp() * gsum;
                    }
                }
                vec![(*a, ga)]
            }
            MeanRows(a) | SumRows(a) => {
                let rows = self.shape(*a).0;
                let scale = if matches!(node.op, MeanRows(_)) {
                    1.0 / rows as f64
                } else {
                    1.0
                };
                let mut ga = Matrix::zeros(rows, g.cols());
                for r in 0..rows {
                    for (o, v) in ga.row_mut(r).iter_mut().zip(g.data()) {
                        *o = v * scale;
                    }
                }
                vec![(*a, ga)]
            }
            RowSums(a) => {
                let (rows, cols) = self.shape(*a);
                let mut ga = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    let gv = g.get(r, 0);
                    ga.row_mut(r).iter_mut().for_each(|o| *o = gv);
                }
                vec![(*a, ga)]
            }
            SumAll(a) => {
                let (rows, cols) = self.shape(*a);
                vec![(*a, Matrix::filled(rows, cols, g.item()))]
            }
            ConcatRows(parts) => {
                let mut offset = 0;
                let mut out = Vec::with_capacity(parts.len());
                for &p in parts {
                    let rows = self.shape(p).0;
                    let idx: Vec<usize> = (offset..offset + rows).collect();
                    out.push((p, g.select_rows(&idx)));
                    offset += rows;
                }
                out
            }
            GatherRows(a, idx) => {
                let (rows, cols) = self.shape(*a);
                let mut ga = Matrix::zeros(rows, cols);
                for (o, &i) in idx.iter().enumerate() {
                    for (dst, src) in ga.row_mut(i).iter_mut().zip(g.row(o)) {
                        *dst += src;
                    }
                }
                vec![(*a, ga)]
            }
            Pick(a, cols) => {
                let (rows, c) = self.shape(*a);
                let mut ga = Matrix::zeros(rows, c);
                for (r, &j) in cols.iter().enumerate() {
                    ga.set(r, j, g.get(r, 0));
                }
                vec![(*a, ga)]
            }
            Sparse(s, a) => vec![(*a, s.transposed_mul_dense(g)?)],
        })
    }
}
