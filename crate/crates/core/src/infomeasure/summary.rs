//! Discrete view summaries and the augmentation-pair score.

use serde::{Deserialize, Serialize};

use super::empirical_mi;
use crate::augment::{make_view_pair, AugmentationSpec, View};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::rng::derive_seed;

/// Attribute columns beyond this many are left out of the summary.
pub const SUMMARY_ATTR_CAP: usize = 8;
pub const DEFAULT_BINS: usize = 8;

/// Continuous summary: fractions of nodes with degree 0, 1, 2 and >= 3,
/// then the means of the first `min(d, 8)` attribute columns.
pub fn raw_summary(g: &Graph) -> Vec<f64> {
    let n = g.node_count() as f64;
    let mut out = vec![0.0; 4];
    for u in 0..g.node_count() {
        out[g.degree(u).min(3)] += 1.0 / n;
    }
    let x = g.attributes();
    for c in 0..x.cols().min(SUMMARY_ATTR_CAP) {
        out.push((0..x.rows()).map(|r| x.get(r, c)).sum::<f64>() / n);
    }
    out
}

/// Per-coordinate quantile bin edges fitted on a dataset's original graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBinner {
    pub bins: usize,
    edges: Vec<Vec<f64>>,
}

impl SummaryBinner {
    /// Edge `k` of a coordinate (for `k = 1..bins`) is the sorted value at
    /// position `floor(k N / bins)`; duplicate edges collapse.
    pub fn fit(dataset: &GraphDataset, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
        }
        let summaries: Vec<Vec<f64>> = dataset.graphs.iter().map(raw_summary).collect();
        let dims = summaries.first().map_or(0, Vec::len);
        let n = summaries.len();
        let edges = (0..dims)
            .map(|d| {
                let mut col: Vec<f64> = summaries.iter().map(|s| s[d]).collect();
                col.sort_by(f64::total_cmp);
                let mut e: Vec<f64> = (1..bins).map(|k| col[(k * n / bins).min(n - 1)]).collect();
                e.dedup();
                e
            })
            .collect();
        Ok(Self { bins, edges })
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn dims(&self) -> usize {
        self.edges.len()
    }

    /// Symbol of each coordinate: the number of edges strictly below it.
    pub fn symbols(&self, raw: &[f64]) -> Vec<usize> {
        raw.iter()
            .zip(&self.edges)
            .map(|(v, e)| e.partition_point(|edge| edge < v))
            .collect()
    }
}

pub fn view_summary(view: &View, binner: &SummaryBinner) -> Vec<usize> {
    binner.symbols(&raw_summary(&view.graph))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub desc: String,
    pub score: f64,
    pub i_vi_y: f64,
    pub i_vj_y: f64,
    pub i_vi_vj: f64,
}

/// Orders the two specs by description so the score is symmetric.
pub(crate) fn canonical_pair(a: &AugmentationSpec, b: &AugmentationSpec) -> (AugmentationSpec, AugmentationSpec) {
    if a.describe() <= b.describe() {
        (*a, *b)
    } else {
        (*b, *a)
    }
}

/// `I(v_i; y) + I(v_j; y) - I(v_i; v_j)` from plug-in MI over summary
/// symbols, averaged across summary coordinates. One view pair per graph,
/// graph `g` seeded with `derive_seed(seed, g)`.
pub fn score_augmentation_pair(
    dataset: &GraphDataset,
    spec_i: &AugmentationSpec,
    spec_j: &AugmentationSpec,
    seed: u64,
    bins: usize,
) -> Result<PairScore> {
    let binner = SummaryBinner::fit(dataset, bins)?;
    score_with_binner(dataset, spec_i, spec_j, seed, &binner)
}

pub(crate) fn score_with_binner(
    dataset: &GraphDataset,
    spec_i: &AugmentationSpec,
    spec_j: &AugmentationSpec,
    seed: u64,
    binner: &SummaryBinner,
) -> Result<PairScore> {
    if dataset.class_count < 2 {
        return Err(Error::Domain("augmentation scoring needs at least 2 classes".into()));
    }
    let (a, b) = canonical_pair(spec_i, spec_j);
    let mut sym_i = Vec::with_capacity(dataset.len());
    let mut sym_j = Vec::with_capacity(dataset.len());
    for (g, graph) in dataset.graphs.iter().enumerate() {
        let (vi, vj) = make_view_pair(graph, &a, &b, derive_seed(seed, g as u64))?;
        sym_i.push(view_summary(&vi, binner));
        sym_j.push(view_summary(&vj, binner));
    }
    let dims = binner.dims().max(1) as f64;
    let column = |s: &[Vec<usize>], d: usize| -> Vec<usize> { s.iter().map(|v| v[d]).collect() };
    let (mut i_vi_y, mut i_vj_y, mut i_vi_vj) = (0.0, 0.0, 0.0);
    for d in 0..binner.dims() {
        let ci = column(&sym_i, d);
        let cj = column(&sym_j, d);
        i_vi_y += empirical_mi(&ci, &dataset.labels) / dims;
        i_vj_y += empirical_mi(&cj, &dataset.labels) / dims;
        i_vi_vj += empirical_mi(&ci, &cj) / dims;
    }
    Ok(PairScore {
        desc: format!("{}+{}", a.describe(), b.describe()),
        score: i_vi_y + i_vj_y - i_vi_vj,
        i_vi_y,
        i_vj_y,
        i_vi_vj,
    })
}
