//! Ranking of augmentation pairs, encoders and contrastive modes by
//! estimated information terms.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::label_mi_proxy;
use super::summary::{canonical_pair, score_with_binner, SummaryBinner};
use crate::augment::{aligned_nodes, make_view_pair, AugmentationSpec};
use crate::autodiff::Matrix;
use crate::contrast::{Mode, ModeSpec};
use crate::encoder::EncoderSpec;
use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::pipeline::{train, Model, TrainConfig, TrainData};
use crate::rng::{derive_seed, SplitMix64};

/// Folds of the probe behind every representation-level score.
pub const PROXY_FOLDS: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub i_vi_y: Option<f64>,
    pub i_vj_y: Option<f64>,
    pub i_vi_vj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub desc: String,
    pub score: f64,
    pub components: Components,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub task: String,
    pub candidates: Vec<CandidateScore>,
    /// Candidate indices, best first.
    pub ranking: Vec<usize>,
    pub config_echo: serde_json::Value,
    pub detail: String,
}

impl SelectionReport {
    fn assemble(task: &str, candidates: Vec<CandidateScore>, config_echo: serde_json::Value, detail: String) -> Self {
        let ranking = rank(&candidates);
        Self {
            task: task.into(),
            candidates,
            ranking,
            config_echo,
            detail,
        }
    }

    pub fn best(&self) -> Option<&CandidateScore> {
        self.ranking.first().map(|&i| &self.candidates[i])
    }
}

/// Score descending, then description ascending. NaN sorts last.
pub fn rank(candidates: &[CandidateScore]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    idx.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        key(cb.score)
            .partial_cmp(&key(ca.score))
            .unwrap_or(Ordering::Equal)
            .then_with(|| ca.desc.cmp(&cb.desc))
            .then(a.cmp(&b))
    });
    idx
}

/// Scores every unordered pair of candidates, same-kind pairs included.
/// All pairs share the per-graph view seeds, so score differences come from
/// the augmentations rather than sampling noise.
pub fn select_augmentations(
    dataset: &GraphDataset,
    candidates: &[AugmentationSpec],
    seed: u64,
    bins: usize,
) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::Domain("no augmentation candidates".into()));
    }
    for c in candidates {
        c.validate()?;
    }
    let binner = SummaryBinner::fit(dataset, bins)?;
    let mut scored = Vec::new();
    for i in 0..candidates.len() {
        for j in i..candidates.len() {
            let (a, b) = canonical_pair(&candidates[i], &candidates[j]);
            let p = score_with_binner(dataset, &a, &b, seed, &binner)?;
            scored.push(CandidateScore {
                desc: p.desc,
                score: p.score,
                components: Components {
                    i_vi_y: Some(p.i_vi_y),
                    i_vj_y: Some(p.i_vj_y),
                    i_vi_vj: Some(p.i_vi_vj),
                },
                flags: Vec::new(),
            });
        }
    }
    let echo = serde_json::json!({
        "dataset": dataset.name,
        "candidates": candidates,
        "seed": seed,
        "bins": bins,
    });
    let detail = format!(
        "plug-in MI over {}-bin quantile summaries, averaged over {} coordinates; one view pair per graph",
        bins,
        binner.dims()
    );
    Ok(SelectionReport::assemble("augmentation", scored, echo, detail))
}

fn frozen_embeddings(model: &Model, data: TrainData<'_>) -> Result<(Matrix, Vec<usize>)> {
    match data {
        TrainData::Graphs(ds) => Ok((model.graph_embeddings(ds)?, ds.labels.clone())),
        TrainData::Nodes(nd) => {
            let x = model.node_embeddings(nd)?;
            let rows: Vec<usize> = (0..nd.labels.len()).filter(|&r| nd.labels[r] >= 0).collect();
            let y = rows.iter().map(|&r| nd.labels[r] as usize).collect();
            Ok((x.select_rows(&rows), y))
        }
    }
}

fn diverged(desc: String, e: &Error) -> CandidateScore {
    CandidateScore {
        desc,
        score: f64::NEG_INFINITY,
        components: Components::default(),
        flags: vec![format!("diverged: {e}")],
    }
}

/// Trains each encoder candidate for `train_budget` epochs with the views of
/// `base` and scores it by the label-information proxy of its frozen
/// embeddings. Every candidate uses the same seed.
pub fn select_encoder(
    data: TrainData<'_>,
    base: &TrainConfig,
    candidates: &[EncoderSpec],
    train_budget: usize,
    seed: u64,
) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::Domain("no encoder candidates".into()));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for spec in candidates {
        let cfg = TrainConfig {
            encoder: *spec,
            epochs: train_budget,
            seed,
            ..base.clone()
        };
        cfg.validate()?;
        let desc = spec.describe();
        let out = match train(&cfg, data) {
            Ok(o) => o,
            Err(e @ Error::Divergence { .. }) => {
                scored.push(diverged(desc, &e));
                continue;
            }
            Err(e) => return Err(e),
        };
        let (x, y) = frozen_embeddings(&out.model, data)?;
        let i_z_y = label_mi_proxy(&x, &y, PROXY_FOLDS)?.nats;
        let mut flags = Vec::new();
        if train_budget == 0 {
            flags.push("untrained".to_string());
        }
        scored.push(CandidateScore {
            desc,
            score: i_z_y,
            components: Components {
                i_vi_y: Some(i_z_y),
                i_vj_y: None,
                i_vi_vj: out.history.last().and_then(|r| r.nce_bound),
            },
            flags,
        });
    }
    let echo = serde_json::json!({
        "aug_i": base.aug_i,
        "aug_j": base.aug_j,
        "candidates": candidates,
        "train_budget": train_budget,
        "seed": seed,
    });
    let detail = format!(
        "label MI proxy (H(y) - {PROXY_FOLDS}-fold probe cross-entropy) on frozen embeddings; i_vi_vj is the final-epoch NCE bound"
    );
    Ok(SelectionReport::assemble("encoder", scored, echo, detail))
}

/// Aggregated representations each mode contrasts, one row per graph:
/// a node row is a deterministic random node of that graph.
fn mode_rows(model: &Model, cfg: &TrainConfig, ds: &GraphDataset, mode: &ModeSpec, seed: u64) -> Result<Matrix> {
    let layer = mode.layer_for(cfg.encoder.layer_count);
    let mut rows = Vec::with_capacity(ds.len());
    for (g, graph) in ds.graphs.iter().enumerate() {
        let gseed = derive_seed(seed, g as u64);
        let (vi, vj) = make_view_pair(graph, &cfg.aug_i, &cfg.aug_j, gseed)?;
        let ri = model.encoder_i.encode(&model.params, &vi)?;
        let rj = model.encoder_j.encode(&model.params, &vj)?;
        let mut rng = SplitMix64::new(gseed ^ 0x0DE5);
        let mut row = Vec::new();
        match mode.mode {
            Mode::GlobalGlobal => {
                row.extend(&ri.graph_embedding);
                row.extend(&rj.graph_embedding);
            }
            Mode::LocalGlobal => {
                let u = rng.below_usize(vi.graph.node_count());
                row.extend(ri.projected.row(u));
                row.extend(&rj.graph_embedding);
            }
            Mode::LocalLocal => {
                let pairs = aligned_nodes(&vi, &vj);
                if pairs.is_empty() {
                    return Err(Error::Alignment { graph: g });
                }
                let (p, q) = pairs[rng.below_usize(pairs.len())];
                row.extend(ri.projected.row(p));
                row.extend(rj.projected.row(q));
            }
            Mode::MultiScale => {
                let u = rng.below_usize(vj.graph.node_count());
                row.extend(&ri.graph_embedding);
                row.extend(rj.per_layer[layer].row(u));
            }
            Mode::Hybrid => unreachable!("hybrid is scored from its parts"),
        }
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

/// Retrains the base configuration once per mode and scores the
/// label-information proxy of the representations that mode aggregates.
/// Hybrid scores `w * score(global_global) + (1 - w) * score(local_global)`
/// of its own trained encoder. Graph datasets only.
pub fn select_mode(
    dataset: &GraphDataset,
    base: &TrainConfig,
    candidates: &[ModeSpec],
    train_budget: usize,
    seed: u64,
) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::Domain("no mode candidates".into()));
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for spec in candidates {
        let cfg = TrainConfig {
            mode: *spec,
            epochs: train_budget,
            seed,
            ..base.clone()
        };
        cfg.validate()?;
        let desc = spec.describe();
        let out = match train(&cfg, TrainData::Graphs(dataset)) {
            Ok(o) => o,
            Err(e @ Error::Divergence { .. }) => {
                scored.push(diverged(desc, &e));
                continue;
            }
            Err(e) => return Err(e),
        };
        let proxy = |m: &ModeSpec| -> Result<f64> {
            let x = mode_rows(&out.model, &cfg, dataset, m, seed)?;
            Ok(label_mi_proxy(&x, &dataset.labels, PROXY_FOLDS)?.nats)
        };
        let score = match spec.mode {
            Mode::Hybrid => {
                let w = spec.hybrid_weight;
                w * proxy(&ModeSpec::new(Mode::GlobalGlobal))? + (1.0 - w) * proxy(&ModeSpec::new(Mode::LocalGlobal))?
            }
            _ => proxy(spec)?,
        };
        let mut flags = Vec::new();
        if train_budget == 0 {
            flags.push("untrained".to_string());
        }
        scored.push(CandidateScore {
            desc,
            score,
            components: Components {
                i_vi_y: Some(score),
                i_vj_y: None,
                i_vi_vj: out.history.last().and_then(|r| r.nce_bound),
            },
            flags,
        });
    }
    let echo = serde_json::json!({
        "dataset": dataset.name,
        "encoder": base.encoder,
        "candidates": candidates,
        "train_budget": train_budget,
        "seed": seed,
    });
    let detail = format!("label MI proxy ({PROXY_FOLDS}-fold probe) of the aggregated pair c_i(z_i) ++ c_j(z_j), one row per graph");
    Ok(SelectionReport::assemble("mode", scored, echo, detail))
}
