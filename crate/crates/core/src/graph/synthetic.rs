//! Enumerable generative processes with known label-relevant and
//! nuisance factors, and a stochastic-block node-task generator.

use std::fmt;
use std::sync::Arc;

use super::{Graph, GraphDataset, NodeTaskDataset};
use crate::autodiff::Matrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// Upper bound on the support of a [`SyntheticProcess`].
pub const MAX_SUPPORT: usize = 4096;

/// Generative factors of one synthetic graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factors {
    pub label: usize,
    pub relevant: u32,
    pub nuisance: u32,
}

type EmitFn = dyn Fn(&Factors) -> Graph + Send + Sync;

/// Finite distribution over [`Factors`] plus a deterministic map to graphs.
#[derive(Clone)]
pub struct SyntheticProcess {
    name: String,
    support: Vec<(Factors, f64)>,
    class_count: usize,
    emit: Arc<EmitFn>,
}

impl fmt::Debug for SyntheticProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyntheticProcess")
            .field("name", &self.name)
            .field("support_size", &self.support.len())
            .field("class_count", &self.class_count)
            .finish()
    }
}

impl SyntheticProcess {
    pub fn new(
        name: impl Into<String>,
        support: Vec<(Factors, f64)>,
        emit: impl Fn(&Factors) -> Graph + Send + Sync + 'static,
    ) -> Result<Self> {
        if support.is_empty() || support.len() > MAX_SUPPORT {
            return Err(Error::Domain(format!(
                "support size {} outside 1..={MAX_SUPPORT}",
                support.len()
            )));
        }
        if support.iter().any(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("negative or non-finite factor probability".into()));
        }
        let mass: f64 = support.iter().map(|(_, p)| p).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("factor probabilities sum to {mass}")));
        }
        let class_count = support.iter().map(|(f, _)| f.label).max().unwrap_or(0) + 1;
        Ok(Self {
            name: name.into(),
            support,
            class_count: class_count.max(2),
            emit: Arc::new(emit),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> &[(Factors, f64)] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn emit(&self, f: &Factors) -> Graph {
        (self.emit)(f)
    }

    /// Every support point with its probability and emitted graph.
    pub fn enumerate(&self) -> Vec<(Factors, f64, Graph)> {
        self.support
            .iter()
            .map(|(f, p)| (*f, *p, self.emit(f)))
            .collect()
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> Factors {
        let u = rng.next_f64();
        let mut acc = 0.0;
        for (f, p) in &self.support {
            acc += p;
            if u < acc {
                return *f;
            }
        }
        self.support.last().expect("non-empty support").0
    }

    /// Label in topology, nuisance in attributes.
    ///
    /// Six nodes. Label 0 is a 6-cycle, label 1 a star with center 0.
    /// The nuisance `u in 0..16` splits into two independent 2-bit values
    /// `u % 4` and `u / 4`; attribute column `c` has ones on the first
    /// `value_c + 1` nodes and zeros elsewhere. All 32 support points are
    /// equally likely; `relevant` equals the label.
    pub fn two_factor() -> Self {
        let mut support = Vec::new();
        for label in 0..2 {
            for nuisance in 0..16 {
                support.push((
                    Factors {
                        label,
                        relevant: label as u32,
                        nuisance,
                    },
                    1.0 / 32.0,
                ));
            }
        }
        Self::new("two_factor", support, |f| {
            let n = 6;
            let edges: Vec<(usize, usize)> = if f.label == 0 {
                (0..n).map(|i| (i, (i + 1) % n)).collect()
            } else {
                (1..n).map(|i| (0, i)).collect()
            };
            let mut x = Matrix::zeros(n, 2);
            let values = [(f.nuisance % 4) as usize, (f.nuisance / 4) as usize];
            for (c, v) in values.into_iter().enumerate() {
                for r in 0..=v {
                    x.set(r, c, 1.0);
                }
            }
            Graph::from_edges(n, &edges, x).expect("valid two-factor graph")
        })
        .expect("valid two-factor process")
    }

    /// Label 0: cycle `C_n`; label 1: circulant `C_n(1, 2)` (4-regular).
    /// `n = 8 + nuisance`, nuisance uniform in `0..8`, constant attributes.
    ///
    /// Symmetric-normalized propagation maps a constant signal on any
    /// regular graph to itself, so degree-normalized encoders cannot see
    /// the label while sum aggregation can.
    pub fn regular_degree() -> Self {
        let mut support = Vec::new();
        for label in 0..2 {
            for nuisance in 0..8 {
                support.push((Factors { label, relevant: label as u32, nuisance }, 1.0 / 16.0));
            }
        }
        Self::new("regular_degree", support, |f| {
            let n = 8 + f.nuisance as usize;
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            if f.label == 1 {
                edges.extend((0..n).map(|i| (i, (i + 2) % n)));
            }
            let edges = normalize_edges(edges);
            Graph::from_edges(n, &edges, Matrix::filled(n, 1, 1.0)).expect("valid circulant")
        })
        .expect("valid regular-degree process")
    }

    /// Random tree (8 to 12 nodes, seeded by the nuisance) with one
    /// (label 0) or three (label 1) triangles attached. Constant attributes.
    pub fn triangle_motif() -> Self {
        let mut support = Vec::new();
        for label in 0..2 {
            for nuisance in 0..256 {
                support.push((Factors { label, relevant: label as u32, nuisance }, 1.0 / 512.0));
            }
        }
        Self::new("triangle_motif", support, |f| {
            let mut rng = SplitMix64::new(derive_seed(0x7121, f.nuisance as u64));
            let tree = 8 + rng.below_usize(5);
            let mut edges: Vec<(usize, usize)> = (1..tree).map(|v| (rng.below_usize(v), v)).collect();
            let triangles = if f.label == 0 { 1 } else { 3 };
            let mut n = tree;
            for _ in 0..triangles {
                let anchor = rng.below_usize(tree);
                edges.extend([(anchor, n), (anchor, n + 1), (n, n + 1)]);
                n += 2;
            }
            Graph::from_edges(n, &edges, Matrix::filled(n, 1, 1.0)).expect("valid motif graph")
        })
        .expect("valid triangle-motif process")
    }

    /// Dense Erdos-Renyi graphs: label 0 has edge probability 0.3,
    /// label 1 has 0.6; 12 to 19 nodes; constant attributes.
    pub fn density() -> Self {
        let mut support = Vec::new();
        for label in 0..2 {
            for nuisance in 0..512 {
                support.push((Factors { label, relevant: label as u32, nuisance }, 1.0 / 1024.0));
            }
        }
        Self::new("density", support, |f| {
            let mut rng = SplitMix64::new(derive_seed(0xDE45, f.nuisance as u64));
            let n = 12 + rng.below_usize(8);
            let p = if f.label == 0 { 0.3 } else { 0.6 };
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.next_f64() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, &edges, Matrix::filled(n, 1, 1.0)).expect("valid ER graph")
        })
        .expect("valid density process")
    }
}

fn normalize_edges(edges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = edges
        .into_iter()
        .filter(|(u, v)| u != v)
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

/// Draws `count` graphs; labels are the drawn factor labels.
pub fn generate_synthetic_graphs(process: &SyntheticProcess, count: usize, seed: u64) -> Result<GraphDataset> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut graphs = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let f = process.sample(&mut rng);
        graphs.push(process.emit(&f));
        labels.push(f.label);
    }
    GraphDataset::new(process.name(), graphs, labels, process.class_count())
}

/// Stochastic block model with bag-of-words features.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeTaskSpec {
    pub nodes: usize,
    pub classes: usize,
    /// Expected neighbors inside the node's own class.
    pub degree_in: f64,
    /// Expected neighbors in other classes.
    pub degree_out: f64,
    pub feature_dim: usize,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the class vocabulary rather
    /// than uniformly over all features.
    pub feature_signal: f64,
    pub train_per_class: usize,
    pub test_count: usize,
}

impl Default for NodeTaskSpec {
    fn default() -> Self {
        Self {
            nodes: 300,
            classes: 3,
            degree_in: 2.0,
            degree_out: 0.5,
            feature_dim: 300,
            words_per_node: 4,
            feature_signal: 0.5,
            train_per_class: 20,
            test_count: 150,
        }
    }
}

pub fn generate_node_task(spec: &NodeTaskSpec, seed: u64) -> Result<NodeTaskDataset> {
    let NodeTaskSpec { nodes: n, classes: k, .. } = *spec;
    if n < 2 || k < 2 || spec.feature_dim < k {
        return Err(Error::Domain("node task needs >= 2 nodes, >= 2 classes, feature_dim >= classes".into()));
    }
    if spec.train_per_class * k + spec.test_count > n {
        return Err(Error::Domain("split larger than the node set".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let class_size = n as f64 / k as f64;
    let p_in = (spec.degree_in / (class_size - 1.0).max(1.0)).min(1.0);
    let p_out = (spec.degree_out / (n as f64 - class_size).max(1.0)).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.next_f64() < p {
                edges.push((u, v));
            }
        }
    }
    let vocab = spec.feature_dim / k;
    let mut x = Matrix::zeros(n, spec.feature_dim);
    for u in 0..n {
        for _ in 0..spec.words_per_node {
            let w = if rng.next_f64() < spec.feature_signal {
                labels[u] * vocab + rng.below_usize(vocab)
            } else {
                rng.below_usize(spec.feature_dim)
            };
            x.set(u, w, 1.0);
        }
    }
    let graph = Graph::from_edges(n, &edges, x)?;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    for &u in &order {
        by_class[labels[u]].push(u);
    }
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for members in &by_class {
        train.extend_from_slice(&members[..spec.train_per_class]);
        rest.extend_from_slice(&members[spec.train_per_class..]);
    }
    rng.shuffle(&mut rest);
    let mut test: Vec<usize> = rest.into_iter().take(spec.test_count).collect();
    train.sort_unstable();
    test.sort_unstable();
    NodeTaskDataset::new(
        "sbm_node_task",
        graph,
        labels.iter().map(|&y| y as i64).collect(),
        train,
        test,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;

    #[test]
    fn zero_count_is_rejected() {
        assert!(generate_synthetic_graphs(&SyntheticProcess::two_factor(), 0, 1).is_err());
    }

    #[test]
    fn same_seed_same_dataset() {
        let p = SyntheticProcess::triangle_motif();
        let a = generate_synthetic_graphs(&p, 50, 11).unwrap();
        let b = generate_synthetic_graphs(&p, 50, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_balance_within_binomial_bound() {
        // P(y=0) = 0.5; 0.45..0.55 is more than 3 standard deviations at n=1000.
        let ds = generate_synthetic_graphs(&SyntheticProcess::two_factor(), 1000, 5).unwrap();
        let zeros = ds.labels.iter().filter(|&&y| y == 0).count() as f64 / 1000.0;
        assert!((0.45..=0.55).contains(&zeros), "{zeros}");
    }

    #[test]
    fn builtin_processes_emit_valid_graphs() {
        for p in [
            SyntheticProcess::two_factor(),
            SyntheticProcess::regular_degree(),
            SyntheticProcess::triangle_motif(),
            SyntheticProcess::density(),
        ] {
            assert!(p.support_size() <= MAX_SUPPORT);
            for (_, _, g) in p.enumerate().into_iter().take(64) {
                assert!(validate_graph(&g).is_empty(), "{}", p.name());
            }
        }
    }

    #[test]
    fn regular_degree_graphs_are_regular() {
        let p = SyntheticProcess::regular_degree();
        for (f, _, g) in p.enumerate() {
            let want = if f.label == 0 { 2 } else { 4 };
            assert!((0..g.node_count()).all(|u| g.degree(u) == want));
        }
    }

    #[test]
    fn support_checks() {
        let f = Factors { label: 0, relevant: 0, nuisance: 0 };
        let emit = |_: &Factors| Graph::from_edges(1, &[], Matrix::filled(1, 1, 1.0)).unwrap();
        assert!(SyntheticProcess::new("bad", vec![(f, 0.5)], emit).is_err());
        assert!(SyntheticProcess::new("bad", vec![], emit).is_err());
        assert!(SyntheticProcess::new("ok", vec![(f, 1.0)], emit).is_ok());
    }

    #[test]
    fn node_task_split_is_disjoint_and_labeled() {
        let ds = generate_node_task(&NodeTaskSpec::default(), 3).unwrap();
        assert_eq!(ds.train_ids.len(), 60);
        assert_eq!(ds.test_ids.len(), 150);
        assert!(ds.train_ids.iter().all(|id| !ds.test_ids.contains(id)));
        assert!(validate_graph(&ds.graph).is_empty());
    }
}
