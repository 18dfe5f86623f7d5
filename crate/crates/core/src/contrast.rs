//! Contrastive modes, scoring functions and the two losses.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::encoder::{BatchVars, GraphBatch};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    GlobalGlobal,
    LocalGlobal,
    LocalLocal,
    MultiScale,
    Hybrid,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::GlobalGlobal,
        Mode::LocalGlobal,
        Mode::LocalLocal,
        Mode::MultiScale,
        Mode::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::GlobalGlobal => "global_global",
            Mode::LocalGlobal => "local_global",
            Mode::LocalLocal => "local_local",
            Mode::MultiScale => "multi_scale",
            Mode::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub mode: Mode,
    /// Layer whose node embeddings meet the other view's graph embedding.
    /// `None` picks `layer_count - 2` (or 0 for a single layer).
    #[serde(default)]
    pub multi_scale_layer: Option<usize>,
    #[serde(default = "default_hybrid_weight")]
    pub hybrid_weight: f64,
}

fn default_hybrid_weight() -> f64 {
    0.5
}

impl Default for ModeSpec {
    fn default() -> Self {
        Self::new(Mode::LocalGlobal)
    }
}

impl ModeSpec {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            multi_scale_layer: None,
            hybrid_weight: 0.5,
        }
    }

    pub fn layer_for(&self, layer_count: usize) -> usize {
        self.multi_scale_layer
            .unwrap_or(if layer_count >= 2 { layer_count - 2 } else { 0 })
    }

    pub fn validate(&self, layer_count: usize) -> Result<()> {
        if self.mode == Mode::MultiScale && self.layer_for(layer_count) >= layer_count {
            return Err(Error::Config(format!(
                "multi_scale_layer {} not below layer_count {layer_count}",
                self.layer_for(layer_count)
            )));
        }
        if !(0.0..=1.0).contains(&self.hybrid_weight) {
            return Err(Error::Config(format!("hybrid_weight {} outside [0, 1]", self.hybrid_weight)));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self.mode {
            Mode::MultiScale => match self.multi_scale_layer {
                Some(l) => format!("multi_scale(layer={l})"),
                None => "multi_scale".into(),
            },
            Mode::Hybrid => format!("hybrid(w={:.2})", self.hybrid_weight),
            m => m.as_str().into(),
        }
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Cosine,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreFn {
    pub kind: ScoreKind,
    pub temperature: f64,
}

impl Default for ScoreFn {
    fn default() -> Self {
        Self::cosine(0.5)
    }
}

/// Parameter name of the bilinear score matrix.
pub const BILINEAR_PARAM: &str = "score.w";

impl ScoreFn {
    pub fn cosine(temperature: f64) -> Self {
        Self {
            kind: ScoreKind::Cosine,
            temperature,
        }
    }

    pub fn bilinear() -> Self {
        Self {
            kind: ScoreKind::Bilinear,
            temperature: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        Ok(())
    }

    /// `N x M` score matrix `h(anchor_n, candidate_m)`.
    ///
    /// `bilinear` must hold the `h x h` matrix for the bilinear kind.
    pub fn scores(&self, tape: &mut Tape, anchors: Var, candidates: Var, bilinear: Option<Var>) -> Result<Var> {
        match self.kind {
            ScoreKind::Cosine => {
                let a = tape.row_l2_normalize(anchors)?;
                let c = tape.row_l2_normalize(candidates)?;
                let s = tape.matmul_t(a, c)?;
                tape.scalar_mul(s, 1.0 / self.temperature)
            }
            ScoreKind::Bilinear => {
                let w = bilinear.ok_or_else(|| Error::Config("bilinear score needs its weight matrix".into()))?;
                let aw = tape.matmul(anchors, w)?;
                tape.matmul_t(aw, candidates)
            }
        }
    }
}

/// Paired rows to contrast. Row `n` of `anchors` is positive with row `n`
/// of `positives`; rows with equal `groups` entries share one positive
/// target, and every other group is a negative.
#[derive(Debug, Clone)]
pub struct ContrastBatch {
    pub anchors: Var,
    pub positives: Var,
    pub groups: Vec<usize>,
    pub meta: String,
}

impl ContrastBatch {
    /// One row per anchor, each its own group.
    pub fn paired(tape: &Tape, anchors: Var, positives: Var, meta: impl Into<String>) -> Result<Self> {
        if tape.shape(anchors) != tape.shape(positives) {
            return Err(Error::shape(
                "contrast batch",
                format!("{:?} vs {:?}", tape.shape(anchors), tape.shape(positives)),
            ));
        }
        let n = tape.shape(anchors).0;
        Ok(Self {
            anchors,
            positives,
            groups: (0..n).collect(),
            meta: meta.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Contrast batches with their loss weights; weights sum to 1.
pub type WeightedBatches = Vec<(f64, ContrastBatch)>;

/// Which aligned node pairs feed local-local mode. Entry `g` lists
/// `(row_i, row_j)` batch-row pairs for graph `g`.
pub type Alignment = Vec<Vec<(usize, usize)>>;

pub fn apply_mode(
    tape: &mut Tape,
    spec: &ModeSpec,
    batches: (&GraphBatch, &GraphBatch),
    reps_i: &BatchVars,
    reps_j: &BatchVars,
    alignment: &Alignment,
) -> Result<WeightedBatches> {
    let (batch_i, batch_j) = batches;
    let layers = reps_i.per_layer.len();
    spec.validate(layers)?;
    Ok(match spec.mode {
        Mode::GlobalGlobal => vec![(1.0, global_global(tape, reps_i, reps_j)?)],
        Mode::LocalGlobal => local_global(tape, (batch_i, batch_j), (reps_i.projected, reps_j.projected), (reps_i, reps_j), "local_global")?,
        Mode::LocalLocal => vec![(1.0, local_local(tape, reps_i, reps_j, alignment)?)],
        Mode::MultiScale => {
            let l = spec.layer_for(layers);
            let meta = format!("multi_scale(layer={l})");
            local_global(tape, (batch_j, batch_i), (reps_j.per_layer[l], reps_i.per_layer[l]), (reps_j, reps_i), &meta)?
        }
        Mode::Hybrid => {
            let w = spec.hybrid_weight;
            let mut out = vec![(w, global_global(tape, reps_i, reps_j)?)];
            for (v, b) in local_global(tape, (batch_i, batch_j), (reps_i.projected, reps_j.projected), (reps_i, reps_j), "local_global")? {
                out.push(((1.0 - w) * v, b));
            }
            out
        }
    })
}

fn global_global(tape: &mut Tape, reps_i: &BatchVars, reps_j: &BatchVars) -> Result<ContrastBatch> {
    ContrastBatch::paired(tape, reps_i.graph_embeddings, reps_j.graph_embeddings, "global_global")
}

/// Nodes of one view against graph embeddings of the other, both ways.
///
/// Node rows of view a (from `batches.0`) are contrasted with the graph
/// rows of view b, then node rows of view b with the graph rows of view a.
fn local_global(
    tape: &mut Tape,
    batches: (&GraphBatch, &GraphBatch),
    nodes: (Var, Var),
    reps: (&BatchVars, &BatchVars),
    meta: &str,
) -> Result<WeightedBatches> {
    let mut out = Vec::with_capacity(2);
    for (batch, nodes, graphs) in [
        (batches.0, nodes.0, reps.1.graph_embeddings),
        (batches.1, nodes.1, reps.0.graph_embeddings),
    ] {
        let owner = batch.row_graph();
        let rows = tape.shape(nodes).0;
        if rows != owner.len() {
            return Err(Error::shape(meta_op(meta), format!("{rows} node rows for a {}-node batch", owner.len())));
        }
        let positives = tape.gather_rows(graphs, &owner)?;
        if tape.shape(nodes).1 != tape.shape(positives).1 {
            return Err(Error::shape(
                meta_op(meta),
                format!("node dim {} vs graph dim {}", tape.shape(nodes).1, tape.shape(positives).1),
            ));
        }
        out.push((
            0.5,
            ContrastBatch {
                anchors: nodes,
                positives,
                groups: owner.clone(),
                meta: meta.to_string(),
            },
        ));
    }
    Ok(out)
}

fn meta_op(meta: &str) -> &'static str {
    if meta.starts_with("multi_scale") {
        "multi_scale"
    } else {
        "local_global"
    }
}

fn local_local(tape: &mut Tape, reps_i: &BatchVars, reps_j: &BatchVars, alignment: &Alignment) -> Result<ContrastBatch> {
    if let Some(g) = alignment.iter().position(Vec::is_empty) {
        return Err(Error::Alignment { graph: g });
    }
    if alignment.is_empty() {
        return Err(Error::Alignment { graph: 0 });
    }
    let (rows_i, rows_j): (Vec<usize>, Vec<usize>) = alignment.iter().flatten().copied().unzip();
    let a = tape.gather_rows(reps_i.projected, &rows_i)?;
    let p = tape.gather_rows(reps_j.projected, &rows_j)?;
    ContrastBatch::paired(tape, a, p, "local_local")
}

/// `-(1/N) sum_n log softmax_m h(a_n, c_m)` at the anchor's own group,
/// where `c` holds one positive row per distinct group.
pub fn infonce_loss(tape: &mut Tape, batch: &ContrastBatch, score: &ScoreFn, bilinear: Option<Var>) -> Result<Var> {
    let mut first_row = Vec::new();
    let mut group_index = std::collections::HashMap::new();
    let mut targets = Vec::with_capacity(batch.len());
    for (row, &g) in batch.groups.iter().enumerate() {
        let next = first_row.len();
        let t = *group_index.entry(g).or_insert_with(|| {
            first_row.push(row);
            next
        });
        targets.push(t);
    }
    if first_row.len() < 2 {
        return Err(Error::NeedNegatives { got: first_row.len() });
    }
    let candidates = if first_row.len() == batch.len() && first_row.iter().enumerate().all(|(i, &r)| i == r) {
        batch.positives
    } else {
        tape.gather_rows(batch.positives, &first_row)?
    };
    let s = score.scores(tape, batch.anchors, candidates, bilinear)?;
    let log_p = tape.log_softmax_rows(s)?;
    let picked = tape.pick(log_p, &targets)?;
    let mean = tape.mean_all(picked)?;
    tape.scalar_mul(mean, -1.0)
}

/// `-(1/N) sum_n cos(a_n, p_n)`.
///
/// With `stop_gradient`, the loss becomes the symmetrized
/// `-(cos(a, sg(p)) + cos(sg(a), p)) / 2`; its value is unchanged. When
/// both sides come from one shared encoder its gradient is exactly half
/// the plain one, so a scale-invariant optimizer follows the same path.
pub fn negfree_loss(tape: &mut Tape, batch: &ContrastBatch, stop_gradient: bool) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::shape("negfree_loss", "empty batch"));
    }
    let cos = |tape: &mut Tape, a: Var, p: Var| -> Result<Var> {
        let a = tape.row_l2_normalize(a)?;
        let p = tape.row_l2_normalize(p)?;
        let prod = tape.mul(a, p)?;
        let rows = tape.row_sums(prod)?;
        let mean = tape.mean_all(rows)?;
        tape.scalar_mul(mean, -1.0)
    };
    if !stop_gradient {
        return cos(tape, batch.anchors, batch.positives);
    }
    let p_stop = tape.detach(batch.positives);
    let a_stop = tape.detach(batch.anchors);
    let left = cos(tape, batch.anchors, p_stop)?;
    let right = cos(tape, a_stop, batch.positives)?;
    let sum = tape.add(left, right)?;
    tape.scalar_mul(sum, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Infonce,
    Negfree,
}

/// Weighted sum of per-batch losses.
pub fn combined_loss(
    tape: &mut Tape,
    batches: &WeightedBatches,
    loss: LossKind,
    score: &ScoreFn,
    bilinear: Option<Var>,
    stop_gradient: bool,
) -> Result<Var> {
    let mut total: Option<Var> = None;
    for (w, b) in batches {
        let l = match loss {
            LossKind::Infonce => infonce_loss(tape, b, score, bilinear)?,
            LossKind::Negfree => negfree_loss(tape, b, stop_gradient)?,
        };
        let l = if (*w - 1.0).abs() > 0.0 { tape.scalar_mul(l, *w)? } else { l };
        total = Some(match total {
            Some(t) => tape.add(t, l)?,
            None => l,
        });
    }
    total.ok_or_else(|| Error::shape("loss", "no contrast batches"))
}
