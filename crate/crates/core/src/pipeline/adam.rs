use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::Matrix;
use crate::encoder::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub betas: (f64, f64),
    /// Decoupled (AdamW-style) decay, applied as `p -= lr * wd * p`.
    pub weight_decay: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            betas: (0.9, 0.999),
            weight_decay: 0.0,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: BTreeMap<String, Matrix>,
    v: BTreeMap<String, Matrix>,
}

/// One bias-corrected Adam update. Parameters without a gradient entry
/// only receive weight decay.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, cfg: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = cfg.betas;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (name, p) in params.iter_mut() {
        if cfg.weight_decay != 0.0 {
            let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
            p.data_mut().iter_mut().for_each(|x| *x *= decay);
        }
        let Some(g) = grads.get(name) else { continue };
        let m = state.m.entry(name.clone()).or_insert_with(|| Matrix::zeros(p.rows(), p.cols()));
        let v = state.v.entry(name.clone()).or_insert_with(|| Matrix::zeros(p.rows(), p.cols()));
        for (((x, &gi), mi), vi) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut())
            .zip(v.data_mut().iter_mut())
        {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *x -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
