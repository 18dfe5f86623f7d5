//! The JSON run configuration shared by the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalConfig, TrainConfig, TrainData};
use crate::augment::AugmentationSpec;
use crate::contrast::{LossKind, ModeSpec, ScoreFn};
use crate::encoder::EncoderSpec;
use crate::error::{Error, Result};
use crate::graph::{
    generate_node_task, generate_synthetic_graphs, load_node_task, parse_tu_dataset, GraphDataset, NodeTaskDataset,
    NodeTaskSpec, SyntheticProcess,
};
use crate::infomeasure::DEFAULT_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// A TU-format directory.
    #[default]
    Tu,
    /// A directory with `edges.tsv`, `features.csv`, `labels.csv`, `split.json`.
    NodeTask,
    /// A named synthetic graph process, sampled with the run seed.
    Synthetic,
    /// A generated stochastic block model node task.
    SyntheticNodeTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub kind: DataKind,
    pub path: Option<PathBuf>,
    /// `two_factor`, `regular_degree`, `triangle_motif` or `density`.
    pub process: Option<String>,
    pub count: usize,
    pub node_task: NodeTaskSpec,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            kind: DataKind::Tu,
            path: None,
            process: None,
            count: 200,
            node_task: NodeTaskSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationSection {
    pub view_i: Option<AugmentationSpec>,
    pub view_j: Option<AugmentationSpec>,
    /// Candidates for augmentation selection.
    pub candidates: Vec<AugmentationSpec>,
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub spec: Option<EncoderSpec>,
    pub share: Option<bool>,
    /// Candidates for encoder selection.
    pub candidates: Vec<EncoderSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeSection {
    pub spec: Option<ModeSpec>,
    /// Candidates for mode selection.
    pub candidates: Vec<ModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub kind: Option<LossKind>,
    pub score: Option<ScoreFn>,
    pub stop_gradient: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub betas: Option<(f64, f64)>,
    pub weight_decay: Option<f64>,
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub folds: Option<usize>,
    pub runs: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
}

/// One JSON document; every section and field is optional and unknown keys
/// are rejected. Unset training fields fall back to the graph-task or
/// node-task defaults according to the data kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub augmentation: AugmentationSection,
    pub encoder: EncoderSection,
    pub mode: ModeSection,
    pub loss: LossSection,
    pub optimizer: OptimizerSection,
    pub eval: EvalSection,
}

/// A loaded dataset of either task type.
#[derive(Debug, Clone)]
pub enum Dataset {
    Graphs(GraphDataset),
    Nodes(NodeTaskDataset),
}

impl Dataset {
    pub fn as_train_data(&self) -> TrainData<'_> {
        match self {
            Dataset::Graphs(d) => TrainData::Graphs(d),
            Dataset::Nodes(d) => TrainData::Nodes(d),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Dataset::Graphs(d) => &d.name,
            Dataset::Nodes(d) => &d.name,
        }
    }
}

pub fn synthetic_process(name: &str) -> Result<SyntheticProcess> {
    Ok(match name {
        "two_factor" => SyntheticProcess::two_factor(),
        "regular_degree" => SyntheticProcess::regular_degree(),
        "triangle_motif" => SyntheticProcess::triangle_motif(),
        "density" => SyntheticProcess::density(),
        other => return Err(Error::Config(format!("unknown synthetic process {other:?}"))),
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn is_node_task(&self) -> bool {
        matches!(self.data.kind, DataKind::NodeTask | DataKind::SyntheticNodeTask)
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let d = if self.is_node_task() {
            TrainConfig::node_default()
        } else {
            TrainConfig::graph_default()
        };
        let o = &self.optimizer;
        let cfg = TrainConfig {
            aug_i: self.augmentation.view_i.unwrap_or(d.aug_i),
            aug_j: self.augmentation.view_j.unwrap_or(d.aug_j),
            encoder: self.encoder.spec.unwrap_or(d.encoder),
            share_encoders: self.encoder.share.unwrap_or(d.share_encoders),
            mode: self.mode.spec.unwrap_or(d.mode),
            score: self.loss.score.unwrap_or(d.score),
            loss: self.loss.kind.unwrap_or(d.loss),
            stop_gradient: self.loss.stop_gradient.unwrap_or(d.stop_gradient),
            epochs: o.epochs.unwrap_or(d.epochs),
            batch_size: o.batch_size.unwrap_or(d.batch_size),
            learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
            adam_betas: o.betas.unwrap_or(d.adam_betas),
            weight_decay: o.weight_decay.unwrap_or(d.weight_decay),
            patience: o.patience.unwrap_or(d.patience),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn eval_config(&self) -> EvalConfig {
        let d = EvalConfig {
            runs: if self.is_node_task() { 50 } else { 5 },
            ..EvalConfig::default()
        };
        EvalConfig {
            folds: self.eval.folds.unwrap_or(d.folds),
            runs: self.eval.runs.unwrap_or(d.runs),
            probe: match &self.eval.lambdas {
                Some(l) => super::ProbeConfig { lambdas: l.clone() },
                None => d.probe,
            },
        }
    }

    pub fn bins(&self) -> usize {
        self.augmentation.bins.unwrap_or(DEFAULT_BINS)
    }

    /// Loads the configured dataset; `path` overrides `data.path`.
    pub fn load_data(&self, path: Option<&Path>, seed: u64) -> Result<Dataset> {
        let path = path.map(Path::to_path_buf).or_else(|| self.data.path.clone());
        let need_path = || {
            path.clone()
                .ok_or_else(|| Error::Config("no data path: pass --data or set data.path".into()))
        };
        match self.data.kind {
            DataKind::Tu => Ok(Dataset::Graphs(parse_tu_dataset(need_path()?)?)),
            DataKind::NodeTask => {
                let dir = need_path()?;
                let ds = load_node_task(
                    dir.join("edges.tsv"),
                    dir.join("features.csv"),
                    dir.join("labels.csv"),
                    dir.join("split.json"),
                )?;
                Ok(Dataset::Nodes(ds))
            }
            DataKind::Synthetic => {
                let name = self
                    .data
                    .process
                    .as_deref()
                    .ok_or_else(|| Error::Config("data.process is required for synthetic data".into()))?;
                Ok(Dataset::Graphs(generate_synthetic_graphs(&synthetic_process(name)?, self.data.count, seed)?))
            }
            DataKind::SyntheticNodeTask => Ok(Dataset::Nodes(generate_node_task(&self.data.node_task, seed)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrast::Mode;
    use crate::encoder::Backbone;

    #[test]
    fn empty_document_gives_graph_defaults() {
        let rc = RunConfig::from_json("{}").unwrap();
        assert_eq!(rc.train_config(7).unwrap(), TrainConfig { seed: 7, ..TrainConfig::graph_default() });
        assert_eq!(rc.eval_config().runs, 5);
    }

    #[test]
    fn node_kind_switches_defaults() {
        let rc = RunConfig::from_json(r#"{"data": {"kind": "synthetic_node_task"}}"#).unwrap();
        let cfg = rc.train_config(0).unwrap();
        assert_eq!(cfg.encoder.backbone, Backbone::Gcn);
        assert_eq!(cfg.mode.mode, Mode::LocalLocal);
        assert_eq!(rc.eval_config().runs, 50);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"optimiser": {}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"optimizer": {"lr": 0.1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"encoder": {"spec": {"depth": 2}}}"#).is_err());
    }

    #[test]
    fn overrides_apply() {
        let rc = RunConfig::from_json(
            r#"{
                "augmentation": {"view_i": {"kind": "edge_perturb", "ratio": 0.1}},
                "encoder": {"spec": {"backbone": "gcn", "layer_count": 2, "hidden_dim": 16}, "share": false},
                "mode": {"spec": {"mode": "global_global"}},
                "loss": {"kind": "negfree", "stop_gradient": true},
                "optimizer": {"epochs": 3, "batch_size": 1},
                "eval": {"folds": 5, "runs": 1, "lambdas": [0.01, 0.1]}
            }"#,
        )
        .unwrap();
        let cfg = rc.train_config(0).unwrap();
        assert_eq!(cfg.aug_i, AugmentationSpec::edge_perturb(0.1));
        assert_eq!(cfg.encoder.hidden_dim, 16);
        assert!(!cfg.share_encoders && cfg.stop_gradient);
        assert_eq!((cfg.epochs, cfg.batch_size), (3, 1));
        assert_eq!(rc.eval_config().probe.lambdas, vec![0.01, 0.1]);
    }

    #[test]
    fn invalid_values_surface_as_config_errors() {
        let rc = RunConfig::from_json(r#"{"optimizer": {"batch_size": 1}}"#).unwrap();
        assert!(matches!(rc.train_config(0), Err(Error::Config(_))));
    }
}
