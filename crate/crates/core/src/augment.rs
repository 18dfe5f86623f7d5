//! View augmentations: identity, node dropping, edge perturbation,
//! attribute masking and random-walk subgraph sampling.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{validate_graph, Graph};
use crate::error::{Error, Result};
use crate::rng::{SplitMix64, VIEW_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    Identity,
    NodeDrop,
    EdgePerturb,
    AttrMask,
    Subgraph,
}

impl AugmentationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::NodeDrop => "node_drop",
            Self::EdgePerturb => "edge_perturb",
            Self::AttrMask => "attr_mask",
            Self::Subgraph => "subgraph",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSpec {
    pub kind: AugmentationKind,
    #[serde(default)]
    pub ratio: f64,
}

impl AugmentationSpec {
    pub fn new(kind: AugmentationKind, ratio: f64) -> Result<Self> {
        let spec = Self { kind, ratio };
        spec.validate()?;
        Ok(spec)
    }

    pub fn identity() -> Self {
        Self {
            kind: AugmentationKind::Identity,
            ratio: 0.0,
        }
    }

    pub fn node_drop(ratio: f64) -> Self {
        Self { kind: AugmentationKind::NodeDrop, ratio }
    }

    pub fn edge_perturb(ratio: f64) -> Self {
        Self { kind: AugmentationKind::EdgePerturb, ratio }
    }

    pub fn attr_mask(ratio: f64) -> Self {
        Self { kind: AugmentationKind::AttrMask, ratio }
    }

    pub fn subgraph(ratio: f64) -> Self {
        Self { kind: AugmentationKind::Subgraph, ratio }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::Config(format!("{}: ratio {} outside [0, 1]", self.kind.as_str(), self.ratio)));
        }
        match self.kind {
            AugmentationKind::Identity if self.ratio != 0.0 => {
                Err(Error::Config("identity augmentation must have ratio 0".into()))
            }
            AugmentationKind::NodeDrop | AugmentationKind::Subgraph if self.ratio > 0.9 => Err(Error::Config(
                format!("{}: ratio {} above 0.9", self.kind.as_str(), self.ratio),
            )),
            _ => Ok(()),
        }
    }

    /// Stable text form, e.g. `node_drop(0.20)`; used for ranking ties.
    pub fn describe(&self) -> String {
        match self.kind {
            AugmentationKind::Identity => "identity".to_string(),
            kind => format!("{}({:.2})", kind.as_str(), self.ratio),
        }
    }
}

impl fmt::Display for AugmentationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// An augmented graph. View node `u` came from source node `origin_nodes[u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub graph: Graph,
    pub origin_nodes: Vec<usize>,
    pub spec: AugmentationSpec,
    pub seed: u64,
}

impl View {
    pub fn identity_of(g: &Graph) -> Self {
        Self {
            graph: g.clone(),
            origin_nodes: (0..g.node_count()).collect(),
            spec: AugmentationSpec::identity(),
            seed: 0,
        }
    }
}

/// Round-half-up of `ratio * count`.
pub fn round_count(ratio: f64, count: usize) -> usize {
    (ratio * count as f64 + 0.5 + 1e-9).floor() as usize
}

pub fn apply_augmentation(g: &Graph, spec: &AugmentationSpec, seed: u64) -> Result<View> {
    spec.validate()?;
    let n = g.node_count();
    if spec.kind == AugmentationKind::Identity || spec.ratio == 0.0 {
        return Ok(View { seed, spec: *spec, ..View::identity_of(g) });
    }
    let mut rng = SplitMix64::new(seed);
    let (graph, origin_nodes) = match spec.kind {
        AugmentationKind::Identity => unreachable!(),
        AugmentationKind::NodeDrop => {
            let k = round_count(spec.ratio, n).min(n - 1);
            let mut dropped = vec![false; n];
            for u in rng.sample_without_replacement(n, k) {
                dropped[u] = true;
            }
            let keep: Vec<usize> = (0..n).filter(|&u| !dropped[u]).collect();
            (g.induced_subgraph(&keep), keep)
        }
        AugmentationKind::EdgePerturb => (perturb_edges(g, spec.ratio, &mut rng), (0..n).collect()),
        AugmentationKind::AttrMask => {
            let k = round_count(spec.ratio, n);
            let mut x = g.attributes().clone();
            for u in rng.sample_without_replacement(n, k) {
                x.row_mut(u).fill(0.0);
            }
            (g.with_attributes(x), (0..n).collect())
        }
        AugmentationKind::Subgraph => {
            let keep = random_walk_nodes(g, spec.ratio, &mut rng);
            (g.induced_subgraph(&keep), keep)
        }
    };
    debug_assert!(validate_graph(&graph).is_empty());
    Ok(View {
        graph,
        origin_nodes,
        spec: *spec,
        seed,
    })
}

fn perturb_edges(g: &Graph, ratio: f64, rng: &mut SplitMix64) -> Graph {
    let n = g.node_count();
    let edges = g.edges();
    let m = edges.len();
    if m == 0 {
        log::warn!("edge_perturb on a graph without edges; returning the graph unchanged");
        return g.clone();
    }
    let absent = n * (n - 1) / 2 - m;
    let mut k = round_count(ratio, m);
    if k > absent {
        log::warn!("edge_perturb: only {absent} absent pairs, perturbing {absent} of {k} requested edges");
        k = absent;
    }
    let mut removed = vec![false; m];
    for i in rng.sample_without_replacement(m, k) {
        removed[i] = true;
    }
    let mut added = HashSet::with_capacity(k);
    let mut new_edges: Vec<(usize, usize)> = Vec::with_capacity(m);
    while added.len() < k {
        let u = rng.below_usize(n);
        let v = rng.below_usize(n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if added.insert(pair) {
            new_edges.push(pair);
        }
    }
    new_edges.extend(edges.iter().zip(&removed).filter(|(_, &r)| !r).map(|(&e, _)| e));
    Graph::from_edges(n, &new_edges, g.attributes().clone()).expect("perturbed edges stay valid")
}

/// Distinct nodes visited by a random walk, sorted ascending.
///
/// The walk restarts from its start node when it reaches a node without
/// neighbors. An isolated start node ends the walk immediately.
fn random_walk_nodes(g: &Graph, ratio: f64, rng: &mut SplitMix64) -> Vec<usize> {
    let n = g.node_count();
    let target = ((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let start = rng.below_usize(n);
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut visited = vec![start];
    let mut current = start;
    let mut steps = 0;
    while visited.len() < target && steps < 10 * n {
        let nbrs = g.neighbors(current);
        if nbrs.is_empty() {
            if current == start {
                break;
            }
            current = start;
        } else {
            current = nbrs[rng.below_usize(nbrs.len())];
            if !seen[current] {
                seen[current] = true;
                visited.push(current);
            }
        }
        steps += 1;
    }
    visited.sort_unstable();
    visited
}

/// Two views with decorrelated streams: `seed` for view i and
/// `seed ^ VIEW_STREAM` for view j.
pub fn make_view_pair(g: &Graph, spec_i: &AugmentationSpec, spec_j: &AugmentationSpec, seed: u64) -> Result<(View, View)> {
    Ok((
        apply_augmentation(g, spec_i, seed)?,
        apply_augmentation(g, spec_j, seed ^ VIEW_STREAM)?,
    ))
}

/// Pairs `(u_i, u_j)` of view-node indices that share a source node,
/// ordered by source node.
pub fn aligned_nodes(view_i: &View, view_j: &View) -> Vec<(usize, usize)> {
    // origin_nodes are sorted ascending for every augmentation kind.
    let (a, b) = (&view_i.origin_nodes, &view_j.origin_nodes);
    let (mut p, mut q) = (0, 0);
    let mut out = Vec::new();
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                out.push((p, q));
                p += 1;
                q += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Matrix;

    fn ring(n: usize, d: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let x = Matrix::from_vec(n, d, (0..n * d).map(|v| v as f64 + 1.0).collect()).unwrap();
        Graph::from_edges(n, &edges, x).unwrap()
    }

    #[test]
    fn node_drop_count() {
        let v = apply_augmentation(&ring(10, 2), &AugmentationSpec::node_drop(0.2), 3).unwrap();
        assert_eq!(v.graph.node_count(), 8);
    }

    #[test]
    fn ratio_zero_is_identity_for_every_kind() {
        let g = ring(7, 3);
        for kind in [
            AugmentationKind::NodeDrop,
            AugmentationKind::EdgePerturb,
            AugmentationKind::AttrMask,
            AugmentationKind::Subgraph,
        ] {
            let v = apply_augmentation(&g, &AugmentationSpec { kind, ratio: 0.0 }, 9).unwrap();
            assert_eq!(v.graph, g);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(AugmentationSpec::new(AugmentationKind::Identity, 0.1).is_err());
        assert!(AugmentationSpec::new(AugmentationKind::NodeDrop, 0.95).is_err());
        assert!(AugmentationSpec::new(AugmentationKind::AttrMask, 1.0).is_ok());
        assert!(AugmentationSpec::new(AugmentationKind::EdgePerturb, -0.1).is_err());
    }

    #[test]
    fn round_half_up() {
        assert_eq!(round_count(0.25, 10), 3);
        assert_eq!(round_count(0.15, 10), 2);
        assert_eq!(round_count(0.2, 10), 2);
        assert_eq!(round_count(0.3, 10), 3);
    }

    #[test]
    fn edge_perturb_without_edges_is_identity() {
        let g = Graph::from_edges(3, &[], Matrix::filled(3, 1, 1.0)).unwrap();
        let v = apply_augmentation(&g, &AugmentationSpec::edge_perturb(0.5), 1).unwrap();
        assert_eq!(v.graph, g);
    }

    #[test]
    fn node_drop_keeps_one_node() {
        let g = Graph::from_edges(1, &[], Matrix::filled(1, 1, 1.0)).unwrap();
        let v = apply_augmentation(&g, &AugmentationSpec::node_drop(0.9), 1).unwrap();
        assert_eq!(v.graph.node_count(), 1);
    }

    #[test]
    fn view_pair_streams_differ() {
        let g = ring(30, 1);
        let spec = AugmentationSpec::node_drop(0.5);
        let (a, b) = make_view_pair(&g, &spec, &spec, 4).unwrap();
        assert_ne!(a.origin_nodes, b.origin_nodes);
        let (a2, b2) = make_view_pair(&g, &spec, &spec, 4).unwrap();
        assert_eq!((a, b), (a2, b2));
    }

    #[test]
    fn alignment_matches_origins() {
        let g = ring(12, 1);
        let (a, b) = make_view_pair(&g, &AugmentationSpec::node_drop(0.3), &AugmentationSpec::subgraph(0.6), 2).unwrap();
        for (p, q) in aligned_nodes(&a, &b) {
            assert_eq!(a.origin_nodes[p], b.origin_nodes[q]);
        }
    }

    #[test]
    fn isolated_start_stops_walk() {
        let g = Graph::from_edges(4, &[(1, 2)], Matrix::filled(4, 1, 1.0)).unwrap();
        for seed in 0..20 {
            let v = apply_augmentation(&g, &AugmentationSpec::subgraph(0.9), seed).unwrap();
            assert!(v.graph.node_count() <= 2);
        }
    }
}
