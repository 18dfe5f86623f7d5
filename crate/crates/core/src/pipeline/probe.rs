//! Multinomial logistic probe, stratified folds and linear evaluation.

use serde::{Deserialize, Serialize};

use crate::autodiff::Matrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

pub const DEFAULT_LAMBDA: f64 = 1e-3;
pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 500;

/// L2-regularized softmax regression on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticProbe {
    weights: Matrix,
    bias: Vec<f64>,
    mean: Vec<f64>,
    /// Reciprocal standard deviation; 0 for constant columns.
    inv_std: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticProbe {
    /// Minimizes `mean CE + (lambda / 2) ||W||^2` (bias unpenalized) by
    /// full-batch L-BFGS with Armijo backtracking.
    pub fn fit(x: &Matrix, y: &[usize], classes: usize, lambda: f64) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || n != y.len() {
            return Err(Error::shape("probe", format!("{n} rows, {} labels", y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
            return Err(Error::Domain(format!("label {bad} >= class count {classes}")));
        }
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v / n as f64;
            }
        }
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m) / n as f64;
            }
        }
        let inv_std: Vec<f64> = var
            .iter()
            .map(|&v| if v.sqrt() > 1e-12 { 1.0 / v.sqrt() } else { 0.0 })
            .collect();
        let z = standardize(x, &mean, &inv_std);

        let c = classes;
        let objective = |theta: &[f64]| -> (f64, Vec<f64>) {
            let (w, b) = theta.split_at(d * c);
            let mut grad = vec![0.0; theta.len()];
            let mut loss = 0.0;
            let mut logits = vec![0.0; c];
            for r in 0..n {
                let row = z.row(r);
                logits.copy_from_slice(b);
                for (j, &xv) in row.iter().enumerate() {
                    if xv != 0.0 {
                        for (l, wv) in logits.iter_mut().zip(&w[j * c..(j + 1) * c]) {
                            *l += xv * wv;
                        }
                    }
                }
                let lse = log_sum_exp(&logits);
                loss += lse - logits[y[r]];
                for k in 0..c {
                    let p = (logits[k] - lse).exp() - if k == y[r] { 1.0 } else { 0.0 };
                    let p = p / n as f64;
                    grad[d * c + k] += p;
                    for (j, &xv) in row.iter().enumerate() {
                        grad[j * c + k] += xv * p;
                    }
                }
            }
            loss /= n as f64;
            for (i, wv) in w.iter().enumerate() {
                loss += 0.5 * lambda * wv * wv;
                grad[i] += lambda * wv;
            }
            (loss, grad)
        };
        let (theta, iterations, converged) = minimize_lbfgs(objective, vec![0.0; d * c + c], GRAD_TOL, MAX_ITER);
        let weights = Matrix::from_vec(d, c, theta[..d * c].to_vec())?;
        Ok(Self {
            weights,
            bias: theta[d * c..].to_vec(),
            mean,
            inv_std,
            iterations,
            converged,
        })
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    /// Row-wise log-probabilities.
    pub fn log_proba(&self, x: &Matrix) -> Result<Matrix> {
        let z = standardize(x, &self.mean, &self.inv_std);
        let mut logits = z.matmul(&self.weights)?;
        for r in 0..logits.rows() {
            let row = logits.row_mut(r);
            for (l, b) in row.iter_mut().zip(&self.bias) {
                *l += b;
            }
            let lse = log_sum_exp(row);
            row.iter_mut().for_each(|l| *l -= lse);
        }
        Ok(logits)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let lp = self.log_proba(x)?;
        Ok((0..lp.rows()).map(|r| argmax(lp.row(r))).collect())
    }

    pub fn accuracy(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        let pred = self.predict(x)?;
        let hits = pred.iter().zip(y).filter(|(p, t)| p == t).count();
        Ok(hits as f64 / y.len().max(1) as f64)
    }

    /// Summed cross-entropy (nats) over the rows.
    pub fn total_cross_entropy(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        let lp = self.log_proba(x)?;
        Ok(y.iter().enumerate().map(|(r, &c)| -lp.get(r, c)).sum())
    }
}

fn standardize(x: &Matrix, mean: &[f64], inv_std: &[f64]) -> Matrix {
    let mut z = x.clone();
    for r in 0..z.rows() {
        for ((v, m), s) in z.row_mut(r).iter_mut().zip(mean).zip(inv_std) {
            *v = (*v - m) * s;
        }
    }
    z
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS (memory 10) with Armijo backtracking. Stops when the
/// largest gradient entry is below `tol`. Returns `(x, iterations, converged)`.
pub fn minimize_lbfgs<F>(mut f: F, mut x: Vec<f64>, tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const MEMORY: usize = 10;
    let (mut fx, mut g) = f(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    for iter in 0..max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < tol {
            return (x, iter, true);
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alpha = vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dot(&s_hist[i], &q);
            q.iter_mut().zip(&y_hist[i]).for_each(|(qv, yv)| *qv -= alpha[i] * yv);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..s_hist.len() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            q.iter_mut().zip(&s_hist[i]).for_each(|(qv, sv)| *qv += (alpha[i] - beta) * sv);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = f(&cand);
            if fc.is_finite() && fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return (x, iter, false);
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let converged = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < tol;
    (x, max_iter, converged)
}

/// Stratified `k`-fold partition of `0..labels.len()`.
///
/// Each class is shuffled, then dealt round-robin; the dealing position
/// carries over from one class to the next so fold sizes stay balanced.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let mut rng = SplitMix64::new(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::Stratification {
                class,
                count: members.len(),
                folds: k,
            });
        }
        rng.shuffle(members);
        for &i in members.iter() {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Protocol {
    Kfold { folds: usize },
    FixedSplit { train: Vec<usize>, test: Vec<usize> },
}

impl Protocol {
    pub fn kfold10() -> Self {
        Protocol::Kfold { folds: 10 }
    }

    pub fn name(&self) -> String {
        match self {
            Protocol::Kfold { folds } => format!("kfold{folds}"),
            Protocol::FixedSplit { .. } => "fixed_split".into(),
        }
    }
}

pub const PROBE_NOTE: &str =
    "multinomial logistic probe (L2, full-batch L-BFGS to grad tol 1e-6) in place of a linear SVM; regularization chosen on training folds only";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub protocol: String,
    pub runs: usize,
    pub note: String,
}

impl EvalResult {
    pub fn from_accuracies(fold_accuracies: Vec<f64>, protocol: String, runs: usize) -> Self {
        let (mean, std) = mean_std(&fold_accuracies);
        Self {
            fold_accuracies,
            mean,
            std,
            protocol,
            runs,
            note: PROBE_NOTE.into(),
        }
    }
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Candidate L2 strengths; more than one triggers an inner 3-fold
    /// search on each training split.
    pub lambdas: Vec<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![DEFAULT_LAMBDA],
        }
    }
}

fn class_count(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m + 1)
}

fn distinct_classes(labels: &[usize]) -> usize {
    let mut seen = vec![false; class_count(labels)];
    labels.iter().for_each(|&y| seen[y] = true);
    seen.iter().filter(|&&s| s).count()
}

fn pick_lambda(x: &Matrix, y: &[usize], classes: usize, cfg: &ProbeConfig, seed: u64) -> Result<f64> {
    let first = *cfg.lambdas.first().ok_or_else(|| Error::Config("empty lambda grid".into()))?;
    if cfg.lambdas.len() == 1 {
        return Ok(first);
    }
    let Ok(folds) = stratified_folds(y, 3, seed) else {
        return Ok(first);
    };
    let mut best = (f64::NEG_INFINITY, first);
    for &lambda in &cfg.lambdas {
        let mut hits = 0.0;
        for f in 0..folds.len() {
            let (tr, te) = split_indices(&folds, f);
            let probe = LogisticProbe::fit(&x.select_rows(&tr), &pick(y, &tr), classes, lambda)?;
            hits += probe.accuracy(&x.select_rows(&te), &pick(y, &te))? * te.len() as f64;
        }
        if hits > best.0 {
            best = (hits, lambda);
        }
    }
    Ok(best.1)
}

pub(crate) fn split_indices(folds: &[Vec<usize>], test: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != test)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    (train, folds[test].clone())
}

pub(crate) fn pick(y: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| y[i]).collect()
}

/// Linear-probe accuracy of frozen embeddings.
///
/// `kfold` re-draws stratified folds for every run from
/// `derive_seed(seed, run)`; `fixed_split` trains once per run on the given
/// split (the probe is deterministic, so runs agree).
pub fn linear_eval(
    embeddings: &Matrix,
    labels: &[usize],
    protocol: &Protocol,
    runs: usize,
    seed: u64,
    cfg: &ProbeConfig,
) -> Result<EvalResult> {
    if embeddings.rows() != labels.len() {
        return Err(Error::shape("linear_eval", format!("{} rows, {} labels", embeddings.rows(), labels.len())));
    }
    if distinct_classes(labels) < 2 {
        return Err(Error::Domain("linear evaluation needs at least 2 classes".into()));
    }
    let classes = class_count(labels);
    let runs = runs.max(1);
    let mut accs = Vec::new();
    for run in 0..runs {
        let run_seed = derive_seed(seed, run as u64);
        match protocol {
            Protocol::Kfold { folds } => {
                let parts = stratified_folds(labels, *folds, run_seed)?;
                for f in 0..parts.len() {
                    let (tr, te) = split_indices(&parts, f);
                    let xtr = embeddings.select_rows(&tr);
                    let ytr = pick(labels, &tr);
                    let lambda = pick_lambda(&xtr, &ytr, classes, cfg, derive_seed(run_seed, f as u64))?;
                    let probe = LogisticProbe::fit(&xtr, &ytr, classes, lambda)?;
                    accs.push(probe.accuracy(&embeddings.select_rows(&te), &pick(labels, &te))?);
                }
            }
            Protocol::FixedSplit { train, test } => {
                let xtr = embeddings.select_rows(train);
                let ytr = pick(labels, train);
                let lambda = pick_lambda(&xtr, &ytr, classes, cfg, run_seed)?;
                let probe = LogisticProbe::fit(&xtr, &ytr, classes, lambda)?;
                accs.push(probe.accuracy(&embeddings.select_rows(test), &pick(labels, test))?);
            }
        }
    }
    Ok(EvalResult::from_accuracies(accs, protocol.name(), runs))
}
