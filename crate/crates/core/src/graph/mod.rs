//! Graph data model, dataset containers, file ingestion and synthetic
//! generators.

mod node_task;
mod synthetic;
mod tu;

pub use node_task::{load_node_task, write_node_task};
pub use synthetic::{
    generate_node_task, generate_synthetic_graphs, Factors, NodeTaskSpec, SyntheticProcess,
    MAX_SUPPORT,
};
pub use tu::{parse_tu_dataset, parse_tu_dataset_with_report, write_tu_dataset, IngestReport};

use serde::Serialize;

use crate::autodiff::Matrix;
use crate::error::{Error, Result};

/// Undirected, unweighted graph with a dense node-attribute matrix.
///
/// Adjacency is stored as sorted neighbor lists. Self-loops are never
/// stored; encoders add them where their propagation rule needs them.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    attributes: Matrix,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Edges are symmetrized;
    /// duplicates and self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], attributes: Matrix) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Domain(format!("edge ({u}, {v}) outside 0..{n}")));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::Domain("duplicate edge".into()));
            }
        }
        let g = Self {
            neighbors,
            attributes,
        };
        let problems = validate_graph(&g);
        if let Some(first) = problems.first() {
            return Err(Error::Domain(first.clone()));
        }
        Ok(g)
    }

    /// Builds from a dense 0/1 adjacency matrix.
    pub fn from_dense(adjacency: &Matrix, attributes: Matrix) -> Result<Self> {
        let n = adjacency.rows();
        if adjacency.cols() != n {
            return Err(Error::shape("from_dense", "adjacency must be square"));
        }
        let mut neighbors = vec![Vec::new(); n];
        for (i, list) in neighbors.iter_mut().enumerate() {
            for j in 0..n {
                match adjacency.get(i, j) {
                    0.0 => {}
                    1.0 => list.push(j),
                    other => {
                        return Err(Error::Domain(format!("adjacency[{i}][{j}] = {other} is not 0/1")))
                    }
                }
            }
        }
        Ok(Self::from_neighbors_unchecked(neighbors, attributes))
    }

    /// No invariant checks; pair with [`validate_graph`].
    pub fn from_neighbors_unchecked(neighbors: Vec<Vec<usize>>, attributes: Matrix) -> Self {
        Self {
            neighbors,
            attributes,
        }
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn attr_dim(&self) -> usize {
        self.attributes.cols()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn attributes(&self) -> &Matrix {
        &self.attributes
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn adjacency_dense(&self) -> Matrix {
        let n = self.node_count();
        let mut a = Matrix::zeros(n, n);
        for (u, list) in self.neighbors.iter().enumerate() {
            for &v in list {
                a.set(u, v, 1.0);
            }
        }
        a
    }

    /// Subgraph induced on `nodes`; view node `i` is source node `nodes[i]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut position = vec![usize::MAX; self.node_count()];
        for (i, &u) in nodes.iter().enumerate() {
            position[u] = i;
        }
        let neighbors = nodes
            .iter()
            .map(|&u| {
                let mut list: Vec<usize> = self.neighbors[u]
                    .iter()
                    .filter_map(|&v| (position[v] != usize::MAX).then_some(position[v]))
                    .collect();
                list.sort_unstable();
                list
            })
            .collect();
        Graph {
            neighbors,
            attributes: self.attributes.select_rows(nodes),
        }
    }

    /// Relabels nodes so that new node `perm[u]` is old node `u`.
    pub fn permute(&self, perm: &[usize]) -> Graph {
        let n = self.node_count();
        let mut inverse = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        let neighbors = (0..n)
            .map(|new| {
                let mut list: Vec<usize> = self.neighbors[inverse[new]].iter().map(|&v| perm[v]).collect();
                list.sort_unstable();
                list
            })
            .collect();
        Graph {
            neighbors,
            attributes: self.attributes.select_rows(&inverse),
        }
    }

    pub fn with_attributes(&self, attributes: Matrix) -> Graph {
        Graph {
            neighbors: self.neighbors.clone(),
            attributes,
        }
    }
}

/// Lists every violated [`Graph`] invariant; empty means valid.
pub fn validate_graph(g: &Graph) -> Vec<String> {
    let n = g.neighbors.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push("graph has no nodes".to_string());
    }
    for (u, list) in g.neighbors.iter().enumerate() {
        for (k, &v) in list.iter().enumerate() {
            if v >= n {
                out.push(format!("node {u} lists neighbor {v} outside 0..{n}"));
                continue;
            }
            if v == u {
                out.push(format!("self-loop at node {u}"));
            }
            if k > 0 && list[k - 1] >= v {
                out.push(format!("neighbors of node {u} unsorted or duplicated at {v}"));
            }
            if !g.neighbors[v].contains(&u) {
                out.push(format!("asymmetric adjacency: {u}->{v} without {v}->{u}"));
            }
        }
    }
    if g.attributes.rows() != n {
        out.push(format!(
            "attribute matrix has {} rows for {n} nodes",
            g.attributes.rows()
        ));
    }
    if !g.attributes.is_finite() {
        out.push("non-finite attribute value".to_string());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub name: String,
    pub graphs: usize,
    pub avg_nodes: f64,
    pub avg_edges: f64,
    pub classes: usize,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::Domain(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        if class_count < 2 {
            return Err(Error::Domain(format!("class_count {class_count} < 2")));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::Domain(format!("label {bad} >= class_count {class_count}")));
        }
        Ok(Self {
            name: name.into(),
            graphs,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn attr_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::attr_dim)
    }

    pub fn stats(&self) -> DatasetStats {
        let count = self.graphs.len().max(1) as f64;
        DatasetStats {
            name: self.name.clone(),
            graphs: self.graphs.len(),
            avg_nodes: self.graphs.iter().map(|g| g.node_count() as f64).sum::<f64>() / count,
            avg_edges: self.graphs.iter().map(|g| g.edge_count() as f64).sum::<f64>() / count,
            classes: self.class_count,
        }
    }
}

/// A single graph with partially labeled nodes (`-1` = unlabeled).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTaskDataset {
    pub name: String,
    pub graph: Graph,
    pub labels: Vec<i64>,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub class_count: usize,
}

impl NodeTaskDataset {
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        labels: Vec<i64>,
        train_ids: Vec<usize>,
        test_ids: Vec<usize>,
    ) -> Result<Self> {
        let n = graph.node_count();
        if labels.len() != n {
            return Err(Error::Domain(format!("{} labels for {n} nodes", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y < -1) {
            return Err(Error::Domain(format!("label {bad} < -1")));
        }
        let mut seen = vec![false; n];
        for &id in &train_ids {
            if id >= n || labels[id] < 0 {
                return Err(Error::Domain(format!("train id {id} unknown or unlabeled")));
            }
            seen[id] = true;
        }
        for &id in &test_ids {
            if id >= n || labels[id] < 0 {
                return Err(Error::Domain(format!("test id {id} unknown or unlabeled")));
            }
            if seen[id] {
                return Err(Error::Domain(format!("node {id} in both train and test")));
            }
        }
        let class_count = labels.iter().copied().max().unwrap_or(-1).max(0) as usize + 1;
        Ok(Self {
            name: name.into(),
            graph,
            labels,
            train_ids,
            test_ids,
            class_count,
        })
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            name: self.name.clone(),
            graphs: 1,
            avg_nodes: self.graph.node_count() as f64,
            avg_edges: self.graph.edge_count() as f64,
            classes: self.class_count,
        }
    }
}
