//! Mutual-information estimates and the selection / verification
//! procedures built on them.
//!
//! Exact quantities come from enumerable discrete joints; estimated ones
//! from discretized view summaries (augmentations) or a cross-validated
//! logistic probe (representations).

mod corollary;
mod nce;
mod selection;
mod summary;

pub use corollary::{
    attribute_column_key, graph_key, topology_key, verify_corollary1, verify_corollary2,
    verify_corollary3, AggregationInfo, Corollary1Report, Corollary2Report, Corollary3Report,
    EncoderInfo, Key, KeyFn, KeyMap, NamedKeyFn, NamedKeyMap, PairInfo, VennRegions,
};
pub use nce::{train_nce_critic, NceCriticConfig, NceCriticReport};
pub use selection::{
    rank, select_augmentations, select_encoder, select_mode, CandidateScore, Components, SelectionReport,
    PROXY_FOLDS,
};
pub use summary::{raw_summary, score_augmentation_pair, view_summary, PairScore, SummaryBinner, DEFAULT_BINS, SUMMARY_ATTR_CAP};

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::autodiff::Matrix;
use crate::error::{Error, Result};
use crate::pipeline::probe::{pick, split_indices, stratified_folds, LogisticProbe, DEFAULT_LAMBDA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plugin,
    NceBound,
    LabelProbe,
}

/// A mutual-information value in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub nats: f64,
    pub estimator: Estimator,
    pub detail: String,
}

/// Joint distribution of two discrete variables; rows index `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    table: Matrix,
}

impl DiscreteJoint {
    pub fn new(table: Matrix) -> Result<Self> {
        if let Some(&bad) = table.data().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("joint entry {bad} is negative or non-finite")));
        }
        let mass = table.sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("joint mass {mass} differs from 1")));
        }
        Ok(Self { table })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Empirical joint of paired symbols.
    pub fn from_samples<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(pairs: &[(A, B)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Domain("no samples".into()));
        }
        let w = 1.0 / pairs.len() as f64;
        Self::from_weighted(pairs.iter().map(|(a, b)| (a.clone(), b.clone(), w)))
    }

    /// Joint from `(u, v, probability)` triples; repeated pairs accumulate.
    pub fn from_weighted<A: Eq + Hash, B: Eq + Hash>(items: impl IntoIterator<Item = (A, B, f64)>) -> Result<Self> {
        let mut us: HashMap<A, usize> = HashMap::new();
        let mut vs: HashMap<B, usize> = HashMap::new();
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, p) in items {
            let next = us.len();
            let i = *us.entry(a).or_insert(next);
            let next = vs.len();
            let j = *vs.entry(b).or_insert(next);
            cells.push((i, j, p));
        }
        let mut table = Matrix::zeros(us.len().max(1), vs.len().max(1));
        for (i, j, p) in cells {
            table.set(i, j, table.get(i, j) + p);
        }
        Self::new(table)
    }

    pub fn table(&self) -> &Matrix {
        &self.table
    }

    pub fn transpose(&self) -> Self {
        Self {
            table: self.table.transpose(),
        }
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.table.rows()).map(|r| self.table.row(r).iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.table.cols()];
        for r in 0..self.table.rows() {
            for (o, v) in out.iter_mut().zip(self.table.row(r)) {
                *o += v;
            }
        }
        out
    }
}

/// Shannon entropy in nats; `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// Entropy of a keyed distribution (repeated keys accumulate).
pub fn entropy_of<K: Eq + Hash>(items: impl IntoIterator<Item = (K, f64)>) -> f64 {
    let mut acc: HashMap<K, f64> = HashMap::new();
    for (k, p) in items {
        *acc.entry(k).or_insert(0.0) += p;
    }
    let mut probs: Vec<f64> = acc.into_values().collect();
    probs.sort_by(f64::total_cmp);
    entropy(&probs)
}

fn plugin_mi(joint: &DiscreteJoint) -> f64 {
    let pu = joint.row_marginal();
    let pv = joint.col_marginal();
    let t = &joint.table;
    let mut mi = 0.0;
    for (r, &pr) in pu.iter().enumerate() {
        for (c, &pc) in pv.iter().enumerate() {
            let p = t.get(r, c);
            if p > 0.0 {
                mi += p * (p / (pr * pc)).ln();
            }
        }
    }
    mi
}

/// Plug-in `sum p(u,v) ln(p(u,v) / (p(u) p(v)))`.
pub fn discrete_mi(joint: &DiscreteJoint) -> MiEstimate {
    let (r, c) = joint.table.shape();
    MiEstimate {
        nats: plugin_mi(joint).max(0.0),
        estimator: Estimator::Plugin,
        detail: format!("plug-in over {r}x{c} support"),
    }
}

/// Plug-in MI between two paired symbol sequences.
pub fn empirical_mi<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(a: &[A], b: &[B]) -> f64 {
    let pairs: Vec<(A, B)> = a.iter().cloned().zip(b.iter().cloned()).collect();
    match DiscreteJoint::from_samples(&pairs) {
        Ok(j) => plugin_mi(&j).max(0.0),
        Err(_) => 0.0,
    }
}

/// Information-bottleneck value `-I(D; Z) + beta I(Z; y)`.
pub fn compute_ib_objective(i_dz: f64, i_zy: f64, beta: f64) -> f64 {
    -i_dz + beta * i_zy
}

/// `ln n - loss`, the InfoNCE lower bound on `I(z_i; z_j)`.
pub fn mi_lower_bound_from_nce(loss: f64, n: usize) -> Result<MiEstimate> {
    if n < 2 {
        return Err(Error::Domain(format!("NCE bound needs n >= 2, got {n}")));
    }
    if loss < 0.0 {
        return Err(Error::Domain(format!("InfoNCE loss {loss} is negative")));
    }
    Ok(MiEstimate {
        nats: (n as f64).ln() - loss,
        estimator: Estimator::NceBound,
        detail: format!("ln {n} - L_NCE"),
    })
}

const PROXY_SEED: u64 = 0x5EED_0F_1AB3;

/// `H(y) - CE`, where `CE` is the mean held-out cross-entropy of a logistic
/// probe under stratified `folds`-fold cross-validation; clamped at 0.
///
/// Columns that are constant across all rows carry no information and are
/// dropped; with none left the estimate is exactly 0.
pub fn label_mi_proxy(embeddings: &Matrix, labels: &[usize], folds: usize) -> Result<MiEstimate> {
    let n = labels.len();
    if embeddings.rows() != n {
        return Err(Error::shape("label_mi_proxy", format!("{} rows, {n} labels", embeddings.rows())));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    labels.iter().for_each(|&y| counts[y] += 1);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Domain("label MI needs at least two classes".into()));
    }
    if n < 2 * folds {
        return Err(Error::Domain(format!("{n} samples is fewer than 2 x {folds} folds")));
    }
    let h_y = entropy(&counts.iter().map(|&c| c as f64 / n as f64).collect::<Vec<_>>());
    let detail = format!("H(y) - CV cross-entropy, {folds} folds, logistic probe lambda {DEFAULT_LAMBDA}");

    let varying: Vec<usize> = (0..embeddings.cols())
        .filter(|&c| {
            let first = embeddings.get(0, c);
            (1..n).any(|r| embeddings.get(r, c) != first)
        })
        .collect();
    if varying.is_empty() {
        return Ok(MiEstimate {
            nats: 0.0,
            estimator: Estimator::LabelProbe,
            detail,
        });
    }
    let x = select_cols(embeddings, &varying);
    let parts = stratified_folds(labels, folds, PROXY_SEED)?;
    let mut ce = 0.0;
    for f in 0..parts.len() {
        let (tr, te) = split_indices(&parts, f);
        let probe = LogisticProbe::fit(&x.select_rows(&tr), &pick(labels, &tr), classes, DEFAULT_LAMBDA)?;
        ce += probe.total_cross_entropy(&x.select_rows(&te), &pick(labels, &te))?;
    }
    ce /= n as f64;
    Ok(MiEstimate {
        nats: (h_y - ce).max(0.0),
        estimator: Estimator::LabelProbe,
        detail,
    })
}

pub(crate) fn select_cols(m: &Matrix, cols: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), cols.len());
    for r in 0..m.rows() {
        for (k, &c) in cols.iter().enumerate() {
            out.set(r, k, m.get(r, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn mi_examples() {
        let ind = DiscreteJoint::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(discrete_mi(&ind).nats.abs() < 1e-15);
        let diag = DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((discrete_mi(&diag).nats - 2f64.ln()).abs() < 1e-15);
        let j = DiscreteJoint::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let want = 0.8 * (1.6f64).ln() + 0.2 * (0.4f64).ln();
        assert!((discrete_mi(&j).nats - want).abs() < 1e-15);
        assert!((want - 0.192745).abs() < 1e-6);
    }

    #[test]
    fn negative_entry_rejected() {
        assert!(DiscreteJoint::from_rows(&[vec![1.2, -0.2]]).is_err());
        assert!(DiscreteJoint::from_rows(&[vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn ib_and_nce_bound() {
        assert_eq!(compute_ib_objective(1.0, 0.5, 2.0), 0.0);
        assert_eq!(compute_ib_objective(0.7, 3.0, 0.0), -0.7);
        assert_eq!(compute_ib_objective(0.0, 0.4, 1.0), 0.4);
        assert!(mi_lower_bound_from_nce(2f64.ln(), 2).unwrap().nats.abs() < 1e-15);
        assert!((mi_lower_bound_from_nce(0.0, 8).unwrap().nats - 2.079442).abs() < 1e-6);
        assert!(mi_lower_bound_from_nce(0.1, 1).is_err());
    }

    #[test]
    fn proxy_one_hot_labels() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let rows: Vec<Vec<f64>> = labels.iter().map(|&y| vec![f64::from(y == 0), f64::from(y == 1)]).collect();
        let est = label_mi_proxy(&Matrix::from_rows(&rows).unwrap(), &labels, 5).unwrap();
        assert!((est.nats - 2f64.ln()).abs() < 0.05, "{}", est.nats);
    }

    #[test]
    fn proxy_noise_and_constant() {
        let labels: Vec<usize> = (0..200).map(|i| i % 2).collect();
        let mut rng = SplitMix64::new(13);
        let noise = Matrix::from_vec(200, 4, (0..800).map(|_| rng.normal()).collect()).unwrap();
        assert!(label_mi_proxy(&noise, &labels, 5).unwrap().nats < 0.05);
        let constant = Matrix::filled(200, 3, 0.7);
        assert_eq!(label_mi_proxy(&constant, &labels, 5).unwrap().nats, 0.0);
        assert!(label_mi_proxy(&constant, &vec![0; 200], 5).is_err());
    }
}
