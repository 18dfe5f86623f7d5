//! A trainable InfoNCE critic on a discrete pair, for checking the
//! `ln N - L` lower bound against an exact mutual information.

use serde::Serialize;

use super::{discrete_mi, DiscreteJoint};
use crate::autodiff::{Matrix, Tape, Var};
use crate::contrast::{infonce_loss, ContrastBatch, ScoreFn};
use crate::encoder::Params;
use crate::error::Result;
use crate::pipeline::{adam_step, AdamConfig, AdamState};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NceCriticConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// Fixed evaluation batches averaged at each checkpoint.
    pub eval_batches: usize,
    pub eval_every: usize,
}

impl Default for NceCriticConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            steps: 200,
            learning_rate: 0.1,
            eval_batches: 32,
            eval_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NceCriticReport {
    pub exact_mi: f64,
    /// `(step, mean of ln N - L over the evaluation batches)`.
    pub bound_history: Vec<(usize, f64)>,
    pub final_bound: f64,
    pub max_bound: f64,
}

fn sample_pairs(joint: &DiscreteJoint, n: usize, rng: &mut SplitMix64) -> Vec<(usize, usize)> {
    let t = joint.table();
    let cells: Vec<(usize, usize, f64)> = (0..t.rows())
        .flat_map(|r| (0..t.cols()).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, t.get(r, c)))
        .collect();
    (0..n)
        .map(|_| {
            let u = rng.next_f64();
            let mut acc = 0.0;
            for &(r, c, p) in &cells {
                acc += p;
                if u < acc {
                    return (r, c);
                }
            }
            let last = cells.iter().rev().find(|x| x.2 > 0.0).expect("non-empty joint");
            (last.0, last.1)
        })
        .collect()
}

fn one_hot(idx: impl Iterator<Item = usize>, width: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = idx
        .map(|i| {
            let mut r = vec![0.0; width];
            r[i] = 1.0;
            r
        })
        .collect();
    Matrix::from_rows(&rows).expect("uniform rows")
}

fn batch_loss(tape: &mut Tape, table: &Params, pairs: &[(usize, usize)], dims: (usize, usize)) -> Result<(f64, Var, Var)> {
    let w = tape.param(table.get("critic").expect("critic table").clone());
    let a = tape.constant(one_hot(pairs.iter().map(|p| p.0), dims.0));
    let p = tape.constant(one_hot(pairs.iter().map(|p| p.1), dims.1));
    let batch = ContrastBatch {
        anchors: a,
        positives: p,
        groups: (0..pairs.len()).collect(),
        meta: "critic".into(),
    };
    let loss = infonce_loss(tape, &batch, &ScoreFn::bilinear(), Some(w))?;
    Ok((tape.value(loss).item(), loss, w))
}

/// Trains a bilinear critic `h(u, v) = onehot(u)^T T onehot(v)` (a free
/// score table) with Adam and tracks `ln N - L_NCE` on fixed evaluation
/// batches drawn from the same joint.
pub fn train_nce_critic(joint: &DiscreteJoint, cfg: &NceCriticConfig, seed: u64) -> Result<NceCriticReport> {
    let dims = joint.table().shape();
    let mut params = Params::new();
    params.insert("critic", Matrix::zeros(dims.0, dims.1));
    let mut state = AdamState::default();
    let adam = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let eval: Vec<Vec<(usize, usize)>> = (0..cfg.eval_batches)
        .map(|b| sample_pairs(joint, cfg.batch_size, &mut SplitMix64::new(derive_seed(seed ^ 0xE7A1, b as u64))))
        .collect();
    let ln_n = (cfg.batch_size as f64).ln();
    let evaluate = |params: &Params| -> Result<f64> {
        let mut total = 0.0;
        for pairs in &eval {
            let mut tape = Tape::new();
            total += ln_n - batch_loss(&mut tape, params, pairs, dims)?.0;
        }
        Ok(total / eval.len().max(1) as f64)
    };
    let mut history = vec![(0, evaluate(&params)?)];
    let mut rng = SplitMix64::new(seed);
    for step in 1..=cfg.steps {
        let pairs = sample_pairs(joint, cfg.batch_size, &mut rng);
        let mut tape = Tape::new();
        let (_, loss, w) = batch_loss(&mut tape, &params, &pairs, dims)?;
        let grads = tape.backward(loss)?;
        let mut g = Params::new();
        if let Some(gw) = grads.get(w) {
            g.insert("critic", gw.clone());
        }
        adam_step(&mut params, &g, &mut state, &adam);
        if step % cfg.eval_every.max(1) == 0 || step == cfg.steps {
            history.push((step, evaluate(&params)?));
        }
    }
    let final_bound = history.last().map_or(0.0, |h| h.1);
    let max_bound = history.iter().map(|h| h.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(NceCriticReport {
        exact_mi: discrete_mi(joint).nats,
        bound_history: history,
        final_bound,
        max_bound,
    })
}
