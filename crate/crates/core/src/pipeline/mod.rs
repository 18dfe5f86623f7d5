//! Contrastive training, frozen-embedding evaluation and the
//! negative-sample ablation.

mod adam;
mod config;
mod metrics;
pub mod probe;
mod suite;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use config::{synthetic_process, DataKind, DataSection, Dataset, RunConfig};
pub use metrics::{metrics_csv, write_metrics_csv};
pub use probe::{linear_eval, stratified_folds, EvalResult, LogisticProbe, ProbeConfig, Protocol};
pub use suite::{gradcheck_suite, SuiteEntry, SUITE_STEP, SUITE_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::augment::{aligned_nodes, make_view_pair, AugmentationSpec, View};
use crate::autodiff::{Matrix, Tape, Var};
use crate::contrast::{apply_mode, combined_loss, Alignment, LossKind, Mode, ModeSpec, ScoreFn, ScoreKind, BILINEAR_PARAM};
use crate::encoder::{glorot, Backbone, BoundParams, Encoder, EncoderSpec, GraphBatch, Params};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset, NodeTaskDataset};
use crate::rng::{derive_seed, SplitMix64};

const INIT_STREAM: u64 = 0x1417;
const SHUFFLE_STREAM: u64 = 0x5A0F;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub aug_i: AugmentationSpec,
    pub aug_j: AugmentationSpec,
    pub encoder: EncoderSpec,
    /// One encoder for both views; `false` gives view j its own weights.
    pub share_encoders: bool,
    pub mode: ModeSpec,
    pub score: ScoreFn,
    pub loss: LossKind,
    /// Negative-free loss only: symmetrized cosine with stop-gradient.
    pub stop_gradient: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub weight_decay: f64,
    /// Epochs without an improvement of at least 1e-4 before stopping;
    /// 0 disables early stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::graph_default()
    }
}

impl TrainConfig {
    /// GIN, node dropping + subgraph views, local-global InfoNCE.
    pub fn graph_default() -> Self {
        Self {
            aug_i: AugmentationSpec::node_drop(0.2),
            aug_j: AugmentationSpec::subgraph(0.8),
            encoder: EncoderSpec::default(),
            share_encoders: true,
            mode: ModeSpec::new(Mode::LocalGlobal),
            score: ScoreFn::default(),
            loss: LossKind::Infonce,
            stop_gradient: false,
            epochs: 20,
            batch_size: 128,
            learning_rate: 0.01,
            adam_betas: (0.9, 0.999),
            weight_decay: 0.0,
            patience: 0,
            seed: 0,
        }
    }

    /// One GCN layer, attribute masking + edge perturbation, local-local.
    pub fn node_default() -> Self {
        Self {
            aug_i: AugmentationSpec::attr_mask(0.3),
            aug_j: AugmentationSpec::edge_perturb(0.2),
            encoder: EncoderSpec {
                projection_layers: 1,
                ..EncoderSpec::gcn(1, 64)
            },
            mode: ModeSpec::new(Mode::LocalLocal),
            epochs: 50,
            batch_size: 2,
            learning_rate: 0.005,
            ..Self::graph_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.aug_i.validate()?;
        self.aug_j.validate()?;
        self.encoder.validate()?;
        self.mode.validate(self.encoder.layer_count)?;
        self.score.validate()?;
        if self.batch_size == 0 || (self.loss == LossKind::Infonce && self.batch_size < 2) {
            return Err(Error::Config(format!("batch_size {} too small for the loss", self.batch_size)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        let (b1, b2) = self.adam_betas;
        if !(b1 > 0.0 && b1 < 1.0 && b2 > 0.0 && b2 < 1.0) {
            return Err(Error::Config(format!("adam_betas {:?} outside (0, 1)^2", self.adam_betas)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            betas: self.adam_betas,
            weight_decay: self.weight_decay,
            eps: 1e-8,
        }
    }
}

/// Encoders plus their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub encoder_i: Encoder,
    pub encoder_j: Encoder,
    pub params: Params,
}

impl Model {
    pub fn new(config: &TrainConfig, in_dim: usize) -> Result<Self> {
        config.validate()?;
        let (pi, pj) = if config.share_encoders {
            ("enc.", "enc.")
        } else {
            ("enc_i.", "enc_j.")
        };
        let encoder_i = Encoder::new(config.encoder, in_dim, pi)?;
        let encoder_j = Encoder::new(config.encoder, in_dim, pj)?;
        let mut rng = SplitMix64::new(derive_seed(config.seed, INIT_STREAM));
        let mut params = Params::new();
        encoder_i.init_params(&mut params, &mut rng);
        if !config.share_encoders {
            encoder_j.init_params(&mut params, &mut rng);
        }
        if config.score.kind == ScoreKind::Bilinear {
            let h = config.encoder.hidden_dim;
            params.insert(BILINEAR_PARAM, glorot(h, h, &mut rng));
        }
        Ok(Self {
            encoder_i,
            encoder_j,
            params,
        })
    }

    pub fn with_params(mut self, params: Params) -> Result<Self> {
        for (name, m) in self.params.iter() {
            match params.get(name) {
                Some(p) if p.shape() == m.shape() => {}
                _ => return Err(Error::Config(format!("checkpoint lacks a matching {name}"))),
            }
        }
        self.params = params;
        Ok(self)
    }

    /// Frozen graph-level features (per-layer readouts, concatenated).
    pub fn graph_embeddings(&self, dataset: &GraphDataset) -> Result<Matrix> {
        let graphs: Vec<&Graph> = dataset.graphs.iter().collect();
        self.encoder_i.graph_features(&self.params, &graphs, 64)
    }

    pub fn node_embeddings(&self, dataset: &NodeTaskDataset) -> Result<Matrix> {
        self.encoder_i.node_features(&self.params, &dataset.graph)
    }
}

/// The two kinds of training data.
#[derive(Debug, Clone, Copy)]
pub enum TrainData<'a> {
    Graphs(&'a GraphDataset),
    Nodes(&'a NodeTaskDataset),
}

impl TrainData<'_> {
    pub fn attr_dim(&self) -> usize {
        match self {
            TrainData::Graphs(d) => d.attr_dim(),
            TrainData::Nodes(d) => d.graph.attr_dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// Mean over batches of `ln(graphs in batch) - loss`, InfoNCE only.
    pub nce_bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (`None` when no epoch ran).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Loss of one batch of view pairs on a fresh tape.
pub fn batch_objective(
    model: &Model,
    config: &TrainConfig,
    tape: &mut Tape,
    bound: &BoundParams,
    views_i: &[View],
    views_j: &[View],
) -> Result<Var> {
    let gi: Vec<&Graph> = views_i.iter().map(|v| &v.graph).collect();
    let gj: Vec<&Graph> = views_j.iter().map(|v| &v.graph).collect();
    let batch_i = GraphBatch::new(&gi)?;
    let batch_j = GraphBatch::new(&gj)?;
    let reps_i = model.encoder_i.forward(tape, bound, &batch_i)?;
    let reps_j = model.encoder_j.forward(tape, bound, &batch_j)?;
    let alignment: Alignment = if config.mode.mode == Mode::LocalLocal {
        views_i
            .iter()
            .zip(views_j)
            .enumerate()
            .map(|(g, (a, b))| {
                aligned_nodes(a, b)
                    .into_iter()
                    .map(|(p, q)| (batch_i.offset(g) + p, batch_j.offset(g) + q))
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    let batches = apply_mode(tape, &config.mode, (&batch_i, &batch_j), &reps_i, &reps_j, &alignment)?;
    let bilinear = match config.score.kind {
        ScoreKind::Bilinear => Some(bound.var(BILINEAR_PARAM)?),
        ScoreKind::Cosine => None,
    };
    combined_loss(tape, &batches, config.loss, &config.score, bilinear, config.stop_gradient)
}

fn gradients(tape: &Tape, bound: &BoundParams, loss: Var) -> Result<Params> {
    let grads = tape.backward(loss)?;
    let mut out = Params::new();
    for (name, &v) in bound.iter() {
        if let Some(g) = grads.get(v) {
            out.insert(name.clone(), g.clone());
        }
    }
    Ok(out)
}

fn diverged(epoch: usize, batch: usize, e: Error) -> Error {
    match e {
        Error::Numeric { .. } => Error::Divergence {
            epoch,
            batch,
            loss: f64::NAN,
        },
        other => other,
    }
}

/// Seed of the view pair for item `index` in `epoch`; independent of the
/// minibatch order, so runs that differ only in the loss see the same views.
pub fn view_seed(seed: u64, epoch: usize, index: usize) -> u64 {
    derive_seed(derive_seed(seed, epoch as u64), index as u64)
}

/// Contrastive training with Adam and optional early stopping. Returns the
/// parameters of the epoch with the lowest mean loss.
pub fn train(config: &TrainConfig, data: TrainData<'_>) -> Result<TrainOutcome> {
    config.validate()?;
    if let TrainData::Nodes(_) = data {
        if config.mode.mode != Mode::LocalLocal {
            return Err(Error::Config(format!(
                "node tasks train on one graph and need local_local mode, not {}",
                config.mode.describe()
            )));
        }
    }
    let mut model = Model::new(config, data.attr_dim())?;
    let adam = config.adam();
    let mut state = AdamState::default();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Params)> = None;
    let mut wait = 0;
    let mut stopped_early = false;

    for epoch in 0..config.epochs {
        let batches: Vec<Vec<usize>> = match data {
            TrainData::Graphs(ds) => {
                let mut order: Vec<usize> = (0..ds.len()).collect();
                SplitMix64::new(derive_seed(config.seed ^ SHUFFLE_STREAM, epoch as u64)).shuffle(&mut order);
                let mut chunks: Vec<Vec<usize>> = order.chunks(config.batch_size).map(<[usize]>::to_vec).collect();
                if config.loss == LossKind::Infonce && chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < 2) {
                    chunks.pop();
                }
                chunks
            }
            TrainData::Nodes(_) => vec![vec![0]],
        };
        let mut losses = Vec::with_capacity(batches.len());
        let mut bounds = Vec::with_capacity(batches.len());
        for (b, members) in batches.iter().enumerate() {
            let mut views_i = Vec::with_capacity(members.len());
            let mut views_j = Vec::with_capacity(members.len());
            for &idx in members {
                let g = match data {
                    TrainData::Graphs(ds) => &ds.graphs[idx],
                    TrainData::Nodes(nd) => &nd.graph,
                };
                let (vi, vj) = make_view_pair(g, &config.aug_i, &config.aug_j, view_seed(config.seed, epoch, idx))?;
                views_i.push(vi);
                views_j.push(vj);
            }
            let mut tape = Tape::new();
            let bound = model.params.bind(&mut tape, true);
            let loss = batch_objective(&model, config, &mut tape, &bound, &views_i, &views_j)
                .map_err(|e| diverged(epoch, b, e))?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Divergence { epoch, batch: b, loss: value });
            }
            let grads = gradients(&tape, &bound, loss).map_err(|e| diverged(epoch, b, e))?;
            adam_step(&mut model.params, &grads, &mut state, &adam);
            if model.params.iter().any(|(_, m)| !m.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b, loss: value });
            }
            losses.push(value);
            bounds.push((members.len().max(2) as f64).ln() - value);
        }
        let mean = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
        history.push(EpochRecord {
            epoch,
            loss: mean,
            nce_bound: (config.loss == LossKind::Infonce)
                .then(|| bounds.iter().sum::<f64>() / bounds.len().max(1) as f64),
        });
        log::debug!("epoch {epoch}: loss {mean:.6}");
        match &best {
            Some((b, _, _)) if mean > b - 1e-4 => {
                wait += 1;
                // Equal-or-slightly-better epochs still refresh nothing; the
                // reported best loss can only go down.
                if config.patience > 0 && wait >= config.patience {
                    stopped_early = true;
                    break;
                }
            }
            _ => {
                best = Some((mean, epoch, model.params.clone()));
                wait = 0;
            }
        }
    }
    let best_epoch = best.as_ref().map(|b| b.1);
    if let Some((_, _, params)) = best {
        model.params = params;
    }
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        stopped_early,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub folds: usize,
    pub runs: usize,
    pub probe: ProbeConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            runs: 5,
            probe: ProbeConfig::default(),
        }
    }
}

/// Linear evaluation of a trained model: stratified k-fold for graph
/// tasks, the dataset's fixed split for node tasks.
pub fn evaluate(model: &Model, data: TrainData<'_>, eval: &EvalConfig, seed: u64) -> Result<EvalResult> {
    match data {
        TrainData::Graphs(ds) => {
            let x = model.graph_embeddings(ds)?;
            linear_eval(&x, &ds.labels, &Protocol::Kfold { folds: eval.folds }, eval.runs, seed, &eval.probe)
        }
        TrainData::Nodes(nd) => {
            let x = model.node_embeddings(nd)?;
            let (x, y, protocol) = fixed_split_rows(&x, nd);
            linear_eval(&x, &y, &protocol, 1, seed, &eval.probe)
        }
    }
}

fn fixed_split_rows(x: &Matrix, nd: &NodeTaskDataset) -> (Matrix, Vec<usize>, Protocol) {
    let rows: Vec<usize> = nd.train_ids.iter().chain(&nd.test_ids).copied().collect();
    let y = rows.iter().map(|&r| nd.labels[r] as usize).collect();
    let a = nd.train_ids.len();
    let protocol = Protocol::FixedSplit {
        train: (0..a).collect(),
        test: (a..rows.len()).collect(),
    };
    (x.select_rows(&rows), y, protocol)
}

/// Graph tasks: one training run, k-fold evaluation repeated `eval.runs`
/// times. Node tasks: `eval.runs` training runs with derived seeds, each
/// scored once on the fixed split.
pub fn train_and_evaluate(config: &TrainConfig, data: TrainData<'_>, eval: &EvalConfig) -> Result<EvalResult> {
    match data {
        TrainData::Graphs(_) => {
            let out = train(config, data)?;
            evaluate(&out.model, data, eval, config.seed)
        }
        TrainData::Nodes(_) => {
            let mut accs = Vec::new();
            for run in 0..eval.runs.max(1) {
                let cfg = TrainConfig {
                    seed: derive_seed(config.seed, run as u64),
                    ..config.clone()
                };
                let out = train(&cfg, data)?;
                accs.extend(evaluate(&out.model, data, eval, cfg.seed)?.fold_accuracies);
            }
            Ok(EvalResult::from_accuracies(accs, "fixed_split".into(), eval.runs.max(1)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub infonce: EvalResult,
    pub negfree: EvalResult,
    pub negfree_stop_gradient: EvalResult,
    /// `infonce.mean - negfree.mean`.
    pub delta: f64,
}

/// Trains with InfoNCE and with the negative-free loss (plain, and with
/// stop-gradient) under identical seeds and views, then evaluates each.
pub fn ablate_negatives(config: &TrainConfig, data: TrainData<'_>, eval: &EvalConfig) -> Result<AblationReport> {
    let with_loss = |loss, stop_gradient| TrainConfig {
        loss,
        stop_gradient,
        ..config.clone()
    };
    with_loss(LossKind::Infonce, false).validate()?;
    let infonce = train_and_evaluate(&with_loss(LossKind::Infonce, false), data, eval)?;
    let negfree = train_and_evaluate(&with_loss(LossKind::Negfree, false), data, eval)?;
    let negfree_stop_gradient = train_and_evaluate(&with_loss(LossKind::Negfree, true), data, eval)?;
    Ok(AblationReport {
        delta: infonce.mean - negfree.mean,
        infonce,
        negfree,
        negfree_stop_gradient,
    })
}

pub fn backbone_name(b: Backbone) -> &'static str {
    match b {
        Backbone::Gcn => "gcn",
        Backbone::Gin => "gin",
    }
}
