//! GCN and GIN backbones with a projection head and mean/sum readout.
//!
//! Several graphs are encoded at once by stacking their node rows and
//! propagating with a block-diagonal sparse adjacency; a sparse pooling
//! matrix maps node rows back to one row per graph.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::augment::View;
use crate::autodiff::{Matrix, SparseMatrix, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::SplitMix64;

pub const MAX_LAYERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    Gcn,
    Gin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    Mean,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSpec {
    pub backbone: Backbone,
    pub layer_count: usize,
    pub hidden_dim: usize,
    pub gin_epsilon: f64,
    pub projection_layers: usize,
    pub readout: Readout,
}

impl Default for EncoderSpec {
    fn default() -> Self {
        Self {
            backbone: Backbone::Gin,
            layer_count: 3,
            hidden_dim: 32,
            gin_epsilon: 0.0,
            projection_layers: 2,
            readout: Readout::Mean,
        }
    }
}

impl EncoderSpec {
    pub fn gcn(layer_count: usize, hidden_dim: usize) -> Self {
        Self {
            backbone: Backbone::Gcn,
            layer_count,
            hidden_dim,
            ..Self::default()
        }
    }

    pub fn gin(layer_count: usize, hidden_dim: usize) -> Self {
        Self {
            backbone: Backbone::Gin,
            layer_count,
            hidden_dim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LAYERS).contains(&self.layer_count) {
            return Err(Error::Config(format!("layer_count {} outside 1..={MAX_LAYERS}", self.layer_count)));
        }
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be at least 1".into()));
        }
        if !self.gin_epsilon.is_finite() {
            return Err(Error::Config("gin_epsilon must be finite".into()));
        }
        if self.projection_layers > 2 {
            return Err(Error::Config(format!("projection_layers {} not in {{0, 1, 2}}", self.projection_layers)));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let backbone = match self.backbone {
            Backbone::Gcn => "gcn",
            Backbone::Gin => "gin",
        };
        let readout = match self.readout {
            Readout::Mean => "mean",
            Readout::Sum => "sum",
        };
        let mut s = format!(
            "{backbone}-{}x{}-proj{}-{readout}",
            self.layer_count, self.hidden_dim, self.projection_layers
        );
        if self.backbone == Backbone::Gin && self.gin_epsilon != 0.0 {
            s.push_str(&format!("-eps{}", self.gin_epsilon));
        }
        s
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

pub const CHECKPOINT_FORMAT: &str = "infogcl-ckpt-v1";

/// Named parameter matrices, ordered by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    tensors: BTreeMap<String, Matrix>,
}

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    params: BTreeMap<String, StoredTensor>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) {
        self.tensors.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.tensors.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Matrix)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Matrix)> {
        self.tensors.iter_mut()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(Matrix::len).sum()
    }

    /// Records every tensor on the tape, trainable or constant.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundParams {
        BoundParams {
            vars: self
                .tensors
                .iter()
                .map(|(k, m)| (k.clone(), tape.leaf(m.clone(), trainable)))
                .collect(),
        }
    }

    pub fn to_checkpoint_json(&self) -> Result<String> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            params: self
                .tensors
                .iter()
                .map(|(k, m)| {
                    (
                        k.clone(),
                        StoredTensor {
                            shape: [m.rows(), m.cols()],
                            values: m.data().to_vec(),
                        },
                    )
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&ckpt)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!("unsupported checkpoint format {:?}", ckpt.format)));
        }
        let mut out = Params::new();
        for (k, t) in ckpt.params {
            out.insert(k, Matrix::from_vec(t.shape[0], t.shape[1], t.values)?);
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_checkpoint_json(&text)
    }
}

/// Tape handles for a [`Params`] set.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: BTreeMap<String, Var>,
}

impl BoundParams {
    pub fn from_vars(vars: impl IntoIterator<Item = (String, Var)>) -> Self {
        Self {
            vars: vars.into_iter().collect(),
        }
    }

    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }
}

/// Glorot-uniform matrix, entries in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut SplitMix64) -> Matrix {
    let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized buffer")
}

/// A GNN encoder bound to an input dimension and a parameter-name prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub spec: EncoderSpec,
    pub in_dim: usize,
    pub prefix: String,
}

impl Encoder {
    pub fn new(spec: EncoderSpec, in_dim: usize, prefix: impl Into<String>) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            in_dim,
            prefix: prefix.into(),
        })
    }

    fn name(&self, part: &str) -> String {
        format!("{}{part}", self.prefix)
    }

    /// Adds freshly initialized parameters to `params`; biases start at zero.
    pub fn init_params(&self, params: &mut Params, rng: &mut SplitMix64) {
        let h = self.spec.hidden_dim;
        for l in 0..self.spec.layer_count {
            let fan_in = if l == 0 { self.in_dim } else { h };
            match self.spec.backbone {
                Backbone::Gcn => params.insert(self.name(&format!("gcn{l}.w")), glorot(fan_in, h, rng)),
                Backbone::Gin => {
                    params.insert(self.name(&format!("gin{l}.w1")), glorot(fan_in, h, rng));
                    params.insert(self.name(&format!("gin{l}.b1")), Matrix::zeros(1, h));
                    params.insert(self.name(&format!("gin{l}.w2")), glorot(h, h, rng));
                    params.insert(self.name(&format!("gin{l}.b2")), Matrix::zeros(1, h));
                }
            }
        }
        for k in 0..self.spec.projection_layers {
            params.insert(self.name(&format!("proj{k}.w")), glorot(h, h, rng));
            params.insert(self.name(&format!("proj{k}.b")), Matrix::zeros(1, h));
        }
    }

    pub fn init(&self, seed: u64) -> Params {
        let mut params = Params::new();
        self.init_params(&mut params, &mut SplitMix64::new(seed));
        params
    }

    /// Tape-level forward pass over a batch.
    pub fn forward(&self, tape: &mut Tape, p: &BoundParams, batch: &GraphBatch) -> Result<BatchVars> {
        if batch.features.cols() != self.in_dim {
            return Err(Error::shape(
                "encode",
                format!("attribute dim {} but encoder expects {}", batch.features.cols(), self.in_dim),
            ));
        }
        let mut h = tape.constant(batch.features.clone());
        let mut per_layer = Vec::with_capacity(self.spec.layer_count);
        for l in 0..self.spec.layer_count {
            h = match self.spec.backbone {
                Backbone::Gcn => {
                    let w = p.var(&self.name(&format!("gcn{l}.w")))?;
                    gcn_layer_forward(tape, &batch.normalized, h, w)?
                }
                Backbone::Gin => {
                    let mlp = GinMlp {
                        w1: p.var(&self.name(&format!("gin{l}.w1")))?,
                        b1: p.var(&self.name(&format!("gin{l}.b1")))?,
                        w2: p.var(&self.name(&format!("gin{l}.w2")))?,
                        b2: p.var(&self.name(&format!("gin{l}.b2")))?,
                    };
                    let out = gin_layer_forward(tape, &batch.adjacency, h, self.spec.gin_epsilon, &mlp)?;
                    tape.relu(out)?
                }
            };
            per_layer.push(h);
        }
        let node_embeddings = h;
        let mut z = h;
        for k in 0..self.spec.projection_layers {
            let w = p.var(&self.name(&format!("proj{k}.w")))?;
            let b = p.var(&self.name(&format!("proj{k}.b")))?;
            let zw = tape.matmul(z, w)?;
            z = tape.add_row(zw, b)?;
            if k + 1 < self.spec.projection_layers {
                z = tape.relu(z)?;
            }
        }
        let graph_embeddings = tape.sparse_matmul(batch.pool(self.spec.readout), z)?;
        Ok(BatchVars {
            node_embeddings,
            per_layer,
            projected: z,
            graph_embeddings,
        })
    }

    pub fn encode(&self, params: &Params, view: &View) -> Result<Representations> {
        Ok(self.encode_batch(params, std::slice::from_ref(view))?.remove(0))
    }

    pub fn encode_graphs(&self, params: &Params, graphs: &[&Graph]) -> Result<Vec<Representations>> {
        let batch = GraphBatch::new(graphs)?;
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape, false);
        let vars = self.forward(&mut tape, &bound, &batch)?;
        Ok(vars.split(&tape, &batch))
    }

    pub fn encode_batch(&self, params: &Params, views: &[View]) -> Result<Vec<Representations>> {
        let graphs: Vec<&Graph> = views.iter().map(|v| &v.graph).collect();
        self.encode_graphs(params, &graphs)
    }

    /// Frozen downstream embedding of each graph: readouts of every
    /// backbone layer, concatenated.
    pub fn graph_features(&self, params: &Params, graphs: &[&Graph], chunk: usize) -> Result<Matrix> {
        let mut rows = Vec::with_capacity(graphs.len());
        for part in graphs.chunks(chunk.max(1)) {
            for rep in self.encode_graphs(params, part)? {
                let mut row = Vec::new();
                for layer in &rep.per_layer {
                    row.extend(readout_rows(layer, self.spec.readout));
                }
                rows.push(row);
            }
        }
        Matrix::from_rows(&rows)
    }

    /// Frozen downstream embedding of each node: every backbone layer's
    /// output, concatenated column-wise.
    pub fn node_features(&self, params: &Params, graph: &Graph) -> Result<Matrix> {
        let rep = self.encode_graphs(params, &[graph])?.remove(0);
        let layers: Vec<&Matrix> = rep.per_layer.iter().collect();
        Matrix::hstack(&layers)
    }
}

fn readout_rows(m: &Matrix, readout: Readout) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    if readout == Readout::Mean && m.rows() > 0 {
        let n = m.rows() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    }
    out
}

/// Tape handles produced by [`Encoder::forward`]; rows span the whole batch.
#[derive(Debug, Clone)]
pub struct BatchVars {
    /// Last backbone layer, before projection.
    pub node_embeddings: Var,
    pub per_layer: Vec<Var>,
    /// Projection head applied to `node_embeddings`.
    pub projected: Var,
    /// One row per graph: readout of `projected`.
    pub graph_embeddings: Var,
}

impl BatchVars {
    pub fn split(&self, tape: &Tape, batch: &GraphBatch) -> Vec<Representations> {
        (0..batch.graph_count())
            .map(|g| {
                let rows: Vec<usize> = batch.node_range(g).collect();
                Representations {
                    node_embeddings: tape.value(self.node_embeddings).select_rows(&rows),
                    per_layer: self.per_layer.iter().map(|&v| tape.value(v).select_rows(&rows)).collect(),
                    projected: tape.value(self.projected).select_rows(&rows),
                    graph_embedding: tape.value(self.graph_embeddings).row(g).to_vec(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representations {
    pub node_embeddings: Matrix,
    pub per_layer: Vec<Matrix>,
    pub projected: Matrix,
    pub graph_embedding: Vec<f64>,
}

/// Several graphs as one block-diagonal graph.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub features: Matrix,
    /// Raw 0/1 adjacency.
    pub adjacency: Rc<SparseMatrix>,
    /// `D^-1/2 (A + I) D^-1/2`.
    pub normalized: Rc<SparseMatrix>,
    pub mean_pool: Rc<SparseMatrix>,
    pub sum_pool: Rc<SparseMatrix>,
    offsets: Vec<usize>,
}

impl GraphBatch {
    pub fn new(graphs: &[&Graph]) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::shape("batch", "no graphs"));
        }
        let d = graphs[0].attr_dim();
        if let Some(g) = graphs.iter().find(|g| g.attr_dim() != d) {
            return Err(Error::shape("batch", format!("attribute dims {d} and {}", g.attr_dim())));
        }
        let mut offsets = vec![0];
        for g in graphs {
            offsets.push(offsets.last().unwrap() + g.node_count());
        }
        let total = *offsets.last().unwrap();
        let mut adj_rows = Vec::with_capacity(total);
        let mut norm_rows = Vec::with_capacity(total);
        for (gi, g) in graphs.iter().enumerate() {
            let base = offsets[gi];
            let scale: Vec<f64> = (0..g.node_count())
                .map(|u| 1.0 / ((g.degree(u) + 1) as f64).sqrt())
                .collect();
            for u in 0..g.node_count() {
                adj_rows.push(g.neighbors(u).iter().map(|&v| (base + v, 1.0)).collect());
                let mut row: Vec<(usize, f64)> = g
                    .neighbors(u)
                    .iter()
                    .map(|&v| (base + v, scale[u] * scale[v]))
                    .collect();
                let at = row.partition_point(|&(c, _)| c < base + u);
                row.insert(at, (base + u, scale[u] * scale[u]));
                norm_rows.push(row);
            }
        }
        let pool = |mean: bool| {
            let rows = (0..graphs.len())
                .map(|gi| {
                    let n = offsets[gi + 1] - offsets[gi];
                    let w = if mean { 1.0 / n as f64 } else { 1.0 };
                    (offsets[gi]..offsets[gi + 1]).map(|c| (c, w)).collect()
                })
                .collect();
            Rc::new(SparseMatrix::from_row_entries(total, rows))
        };
        let parts: Vec<&Matrix> = graphs.iter().map(|g| g.attributes()).collect();
        Ok(Self {
            features: Matrix::vstack(&parts)?,
            adjacency: Rc::new(SparseMatrix::from_row_entries(total, adj_rows)),
            normalized: Rc::new(SparseMatrix::from_row_entries(total, norm_rows)),
            mean_pool: pool(true),
            sum_pool: pool(false),
            offsets,
        })
    }

    pub fn graph_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn node_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn node_range(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn offset(&self, g: usize) -> usize {
        self.offsets[g]
    }

    /// Graph index owning each batch row.
    pub fn row_graph(&self) -> Vec<usize> {
        (0..self.graph_count())
            .flat_map(|g| self.node_range(g).map(move |_| g))
            .collect()
    }

    pub fn pool(&self, readout: Readout) -> &Rc<SparseMatrix> {
        match readout {
            Readout::Mean => &self.mean_pool,
            Readout::Sum => &self.sum_pool,
        }
    }
}

/// `ReLU(norm_adj · H · W)` where `norm_adj = D^-1/2 (A + I) D^-1/2`.
pub fn gcn_layer_forward(tape: &mut Tape, norm_adj: &Rc<SparseMatrix>, h: Var, w: Var) -> Result<Var> {
    let hw = tape.matmul(h, w)?;
    let prop = tape.sparse_matmul(norm_adj, hw)?;
    tape.relu(prop)
}

#[derive(Debug, Clone, Copy)]
pub struct GinMlp {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

/// `MLP((1 + eps) h_v + sum_{u in N(v)} h_u)` with
/// `MLP(x) = ReLU(x W1 + b1) W2 + b2`.
pub fn gin_layer_forward(tape: &mut Tape, adjacency: &Rc<SparseMatrix>, h: Var, epsilon: f64, mlp: &GinMlp) -> Result<Var> {
    let agg = tape.sparse_matmul(adjacency, h)?;
    let own = tape.scalar_mul(h, 1.0 + epsilon)?;
    let pre = tape.add(own, agg)?;
    let a = tape.matmul(pre, mlp.w1)?;
    let a = tape.add_row(a, mlp.b1)?;
    let a = tape.relu(a)?;
    let b = tape.matmul(a, mlp.w2)?;
    tape.add_row(b, mlp.b2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> Graph {
        let x = Matrix::from_rows(&[vec![1.0, -0.5], vec![0.3, 0.2], vec![-1.0, 2.0], vec![0.7, 0.1]]).unwrap();
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], x).unwrap()
    }

    #[test]
    fn gcn_isolated_node() {
        let g = Graph::from_edges(1, &[], Matrix::from_rows(&[vec![0.5, -0.2]]).unwrap()).unwrap();
        let batch = GraphBatch::new(&[&g]).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(batch.features.clone());
        let w = tape.constant(Matrix::identity(2));
        let out = gcn_layer_forward(&mut tape, &batch.normalized, h, w).unwrap();
        assert_eq!(tape.value(out).data(), &[0.5, 0.0]);
    }

    #[test]
    fn gcn_symmetric_pair() {
        let g = Graph::from_edges(2, &[(0, 1)], Matrix::filled(2, 3, 0.4)).unwrap();
        let batch = GraphBatch::new(&[&g]).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(batch.features.clone());
        let w = tape.constant(glorot(3, 3, &mut SplitMix64::new(1)));
        let out = gcn_layer_forward(&mut tape, &batch.normalized, h, w).unwrap();
        assert_eq!(tape.value(out).row(0), tape.value(out).row(1));
    }

    #[test]
    fn gcn_path_matches_dense_normalization() {
        let g = path4();
        let batch = GraphBatch::new(&[&g]).unwrap();
        let w = glorot(2, 3, &mut SplitMix64::new(5));
        let mut tape = Tape::new();
        let h = tape.constant(g.attributes().clone());
        let wv = tape.constant(w.clone());
        let out = gcn_layer_forward(&mut tape, &batch.normalized, h, wv).unwrap();

        // Degrees with self-loops on a 4-path: 2, 3, 3, 2.
        let deg = [2.0f64, 3.0, 3.0, 2.0];
        let mut a_hat = Matrix::zeros(4, 4);
        for (u, v) in [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)] {
            a_hat.set(u, v, 1.0 / (deg[u] * deg[v]).sqrt());
        }
        let want = a_hat.matmul(&g.attributes().matmul(&w).unwrap()).unwrap().map(|v| v.max(0.0));
        for (a, b) in tape.value(out).data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gin_single_node_identity_mlp() {
        let g = Graph::from_edges(1, &[], Matrix::from_rows(&[vec![0.3, 0.9]]).unwrap()).unwrap();
        let batch = GraphBatch::new(&[&g]).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(batch.features.clone());
        let mlp = GinMlp {
            w1: tape.constant(Matrix::identity(2)),
            b1: tape.constant(Matrix::zeros(1, 2)),
            w2: tape.constant(Matrix::identity(2)),
            b2: tape.constant(Matrix::zeros(1, 2)),
        };
        let out = gin_layer_forward(&mut tape, &batch.adjacency, h, 0.0, &mlp).unwrap();
        assert_eq!(tape.value(out).data(), &[0.3, 0.9]);
    }

    #[test]
    fn gin_star_pre_activation() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], x).unwrap();
        let batch = GraphBatch::new(&[&g]).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(batch.features.clone());
        let one = Matrix::identity(1);
        let mlp = GinMlp {
            w1: tape.constant(one.clone()),
            b1: tape.constant(Matrix::zeros(1, 1)),
            w2: tape.constant(one),
            b2: tape.constant(Matrix::zeros(1, 1)),
        };
        let out = gin_layer_forward(&mut tape, &batch.adjacency, h, 0.5, &mlp).unwrap();
        assert_eq!(tape.value(out).get(0, 0), 1.5 * 1.0 + 9.0);
    }

    #[test]
    fn one_node_mean_readout_equals_node() {
        let spec = EncoderSpec {
            layer_count: 1,
            projection_layers: 0,
            ..EncoderSpec::gcn(1, 4)
        };
        let enc = Encoder::new(spec, 2, "").unwrap();
        let params = enc.init(3);
        let g = Graph::from_edges(1, &[], Matrix::from_rows(&[vec![0.8, 0.4]]).unwrap()).unwrap();
        let rep = enc.encode(&params, &View::identity_of(&g)).unwrap();
        assert_eq!(rep.graph_embedding, rep.node_embeddings.row(0));
    }

    #[test]
    fn spec_limits() {
        assert!(EncoderSpec::gin(5, 8).validate().is_err());
        assert!(EncoderSpec::gin(0, 8).validate().is_err());
        assert!(EncoderSpec::gin(2, 0).validate().is_err());
        assert!(EncoderSpec { projection_layers: 3, ..EncoderSpec::default() }.validate().is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let enc = Encoder::new(EncoderSpec::default(), 3, "enc.").unwrap();
        let params = enc.init(11);
        let text = params.to_checkpoint_json().unwrap();
        assert!(text.contains(CHECKPOINT_FORMAT));
        assert_eq!(Params::from_checkpoint_json(&text).unwrap(), params);
    }
}
