//! The `infogcl` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (including a failed gradient check), 3 training divergence.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::augment::{make_view_pair, AugmentationSpec, View};
use crate::contrast::{Mode, ModeSpec};
use crate::encoder::{EncoderSpec, Params};
use crate::error::{Error, Result};
use crate::graph::{parse_tu_dataset_with_report, validate_graph};
use crate::infomeasure::{
    discrete_mi, mi_lower_bound_from_nce, select_augmentations, select_encoder, select_mode, train_nce_critic,
    DiscreteJoint, NceCriticConfig,
};
use crate::pipeline::{
    ablate_negatives, evaluate, gradcheck_suite, train, train_and_evaluate, view_seed, write_metrics_csv, Dataset,
    Model, RunConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "infogcl", version, about = "Information-aware graph contrastive learning")]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset path; overrides `data.path` in the config.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Augmentation,
    Encoder,
    Mode,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a dataset and print its statistics.
    Ingest,
    /// Print the view pair the training loop would build for one graph.
    AugmentPreview {
        #[arg(long, default_value_t = 0)]
        graph: usize,
        #[arg(long, default_value_t = 0)]
        epoch: usize,
    },
    /// Rank augmentation pairs, encoders or contrastive modes.
    Select {
        #[arg(long, value_enum)]
        stage: Stage,
        /// Training epochs per candidate (encoder and mode stages).
        #[arg(long, default_value_t = 20)]
        budget: usize,
    },
    /// Train and write `checkpoint.json` and `metrics.csv`.
    Train,
    /// Linear evaluation; trains first unless `--checkpoint` is given.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Mutual information of a discrete joint given as a JSON matrix.
    Mi {
        #[arg(long)]
        joint: PathBuf,
        /// Also train an InfoNCE critic and report its bound.
        #[arg(long)]
        nce: bool,
    },
    /// Finite-difference check of every autodiff op and composed programs.
    Gradcheck,
    /// Train with and without negative samples and compare.
    AblateNeg,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Divergence { .. } => EXIT_DIVERGED,
        _ => EXIT_DATA,
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    let dir = cli
        .out
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs --out <dir>".into()))?;
    fs::create_dir_all(dir)?;
    Ok(dir)
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn graphs_only(ds: &Dataset, what: &str) -> Result<()> {
    match ds {
        Dataset::Graphs(_) => Ok(()),
        Dataset::Nodes(_) => Err(Error::Config(format!("{what} needs a graph-classification dataset"))),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gradcheck => {
            let entries = gradcheck_suite(cli.seed)?;
            let mut failed = 0;
            for e in &entries {
                println!(
                    "{:<30} {} max_rel_error={:.3e} checked={} kinks={}",
                    e.name,
                    if e.passed { "ok  " } else { "FAIL" },
                    e.max_rel_error,
                    e.checked,
                    e.excluded_kinks
                );
                failed += usize::from(!e.passed);
            }
            if failed > 0 {
                return Err(Error::Domain(format!("{failed} gradient checks failed")));
            }
            Ok(())
        }
        Command::Mi { joint, nce } => {
            let text = fs::read_to_string(joint).map_err(|e| Error::Ingest {
                path: joint.clone(),
                reason: e.to_string(),
            })?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
            let joint = DiscreteJoint::from_rows(&rows)?;
            let exact = discrete_mi(&joint);
            if *nce {
                let cfg = NceCriticConfig::default();
                let report = train_nce_critic(&joint, &cfg, cli.seed)?;
                let bound = mi_lower_bound_from_nce(
                    ((cfg.batch_size as f64).ln() - report.final_bound).max(0.0),
                    cfg.batch_size,
                )?;
                print_json(&serde_json::json!({ "plugin": exact, "nce": bound, "critic": report }))
            } else {
                print_json(&exact)
            }
        }
        Command::Ingest => {
            let rc = run_config(cli)?;
            let ds = match (&cli.data, rc.data.kind) {
                (Some(p), crate::pipeline::DataKind::Tu) => {
                    let (ds, report) = parse_tu_dataset_with_report(p)?;
                    if report.duplicate_edges + report.self_loops > 0 {
                        log::warn!(
                            "dropped {} duplicate edges and {} self-loops",
                            report.duplicate_edges,
                            report.self_loops
                        );
                    }
                    Dataset::Graphs(ds)
                }
                _ => rc.load_data(cli.data.as_deref(), cli.seed)?,
            };
            let issues: Vec<String> = match &ds {
                Dataset::Graphs(d) => d
                    .graphs
                    .iter()
                    .enumerate()
                    .flat_map(|(i, g)| validate_graph(g).into_iter().map(move |s| format!("graph {i}: {s}")))
                    .collect(),
                Dataset::Nodes(d) => validate_graph(&d.graph),
            };
            let stats = match &ds {
                Dataset::Graphs(d) => d.stats(),
                Dataset::Nodes(d) => d.stats(),
            };
            print_json(&serde_json::json!({ "stats": stats, "issues": issues }))
        }
        Command::AugmentPreview { graph, epoch } => {
            let rc = run_config(cli)?;
            let cfg = rc.train_config(cli.seed)?;
            let ds = rc.load_data(cli.data.as_deref(), cli.seed)?;
            let g = match &ds {
                Dataset::Graphs(d) => d
                    .graphs
                    .get(*graph)
                    .ok_or_else(|| Error::Domain(format!("graph {graph} out of range")))?,
                Dataset::Nodes(d) => &d.graph,
            };
            let (vi, vj) = make_view_pair(g, &cfg.aug_i, &cfg.aug_j, view_seed(cli.seed, *epoch, *graph))?;
            let describe = |v: &View| {
                serde_json::json!({
                    "spec": v.spec.describe(),
                    "nodes": v.graph.node_count(),
                    "edges": v.graph.edges(),
                    "origin_nodes": v.origin_nodes,
                    "masked_rows": (0..v.graph.node_count())
                        .filter(|&u| g.attributes().row(v.origin_nodes[u]).iter().any(|&x| x != 0.0)
                            && v.graph.attributes().row(u).iter().all(|&x| x == 0.0))
                        .collect::<Vec<_>>(),
                })
            };
            print_json(&serde_json::json!({
                "source": { "nodes": g.node_count(), "edges": g.edge_count() },
                "view_i": describe(&vi),
                "view_j": describe(&vj),
            }))
        }
        Command::Select { stage, budget } => {
            let rc = run_config(cli)?;
            let ds = rc.load_data(cli.data.as_deref(), cli.seed)?;
            let base = rc.train_config(cli.seed)?;
            let report = match stage {
                Stage::Augmentation => {
                    graphs_only(&ds, "augmentation selection")?;
                    let Dataset::Graphs(d) = &ds else { unreachable!() };
                    let cands = if rc.augmentation.candidates.is_empty() {
                        default_augmentations()
                    } else {
                        rc.augmentation.candidates.clone()
                    };
                    select_augmentations(d, &cands, cli.seed, rc.bins())?
                }
                Stage::Encoder => {
                    let cands = if rc.encoder.candidates.is_empty() {
                        default_encoders(&base.encoder)
                    } else {
                        rc.encoder.candidates.clone()
                    };
                    select_encoder(ds.as_train_data(), &base, &cands, *budget, cli.seed)?
                }
                Stage::Mode => {
                    graphs_only(&ds, "mode selection")?;
                    let Dataset::Graphs(d) = &ds else { unreachable!() };
                    let cands = if rc.mode.candidates.is_empty() {
                        Mode::ALL.iter().map(|&m| ModeSpec::new(m)).collect()
                    } else {
                        rc.mode.candidates.clone()
                    };
                    select_mode(d, &base, &cands, *budget, cli.seed)?
                }
            };
            print_json(&report)
        }
        Command::Train => {
            let rc = run_config(cli)?;
            let cfg = rc.train_config(cli.seed)?;
            let ds = rc.load_data(cli.data.as_deref(), cli.seed)?;
            let dir = out_dir(cli)?;
            let out = train(&cfg, ds.as_train_data())?;
            out.model.params.save(&dir.join("checkpoint.json"))?;
            write_metrics_csv(&out.history, &dir.join("metrics.csv"))?;
            fs::write(dir.join("train_config.json"), serde_json::to_string_pretty(&cfg)?)?;
            log::info!(
                "trained {} epochs on {}, best epoch {:?}",
                out.history.len(),
                ds.name(),
                out.best_epoch
            );
            Ok(())
        }
        Command::Eval { checkpoint } => {
            let rc = run_config(cli)?;
            let cfg = rc.train_config(cli.seed)?;
            let ds = rc.load_data(cli.data.as_deref(), cli.seed)?;
            let eval = rc.eval_config();
            let data = ds.as_train_data();
            let result = match checkpoint {
                Some(p) => {
                    let model = Model::new(&cfg, data.attr_dim())?.with_params(Params::load(p)?)?;
                    evaluate(&model, data, &eval, cli.seed)?
                }
                None => train_and_evaluate(&cfg, data, &eval)?,
            };
            let doc = serde_json::json!({
                "dataset": ds.name(),
                "protocol": result.protocol,
                "runs": result.runs,
                "mean": result.mean,
                "std": result.std,
                "fold_accuracies": result.fold_accuracies,
                "note": result.note,
            });
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("results.json"), serde_json::to_string_pretty(&doc)?)?;
            }
            print_json(&doc)
        }
        Command::AblateNeg => {
            let rc = run_config(cli)?;
            let cfg = rc.train_config(cli.seed)?;
            let ds = rc.load_data(cli.data.as_deref(), cli.seed)?;
            let report = ablate_negatives(&cfg, ds.as_train_data(), &rc.eval_config())?;
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("ablation.json"), serde_json::to_string_pretty(&report)?)?;
            }
            print_json(&report)
        }
    }
}

fn default_augmentations() -> Vec<AugmentationSpec> {
    vec![
        AugmentationSpec::identity(),
        AugmentationSpec::node_drop(0.2),
        AugmentationSpec::edge_perturb(0.2),
        AugmentationSpec::attr_mask(0.3),
        AugmentationSpec::subgraph(0.8),
    ]
}

fn default_encoders(base: &EncoderSpec) -> Vec<EncoderSpec> {
    let h = base.hidden_dim;
    let mut out = Vec::new();
    for layers in [1, 2, 3] {
        out.push(EncoderSpec::gin(layers, h));
        out.push(EncoderSpec::gcn(layers, h));
    }
    out.into_iter()
        .map(|s| EncoderSpec {
            projection_layers: base.projection_layers,
            readout: base.readout,
            ..s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run_cli(["infogcl", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_cli(["infogcl"]), EXIT_USAGE);
    }

    #[test]
    fn missing_data_is_a_data_error() {
        assert_eq!(run_cli(["infogcl", "ingest", "--data", "/nonexistent/dir"]), EXIT_DATA);
    }

    #[test]
    fn train_without_out_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"data": {"kind": "synthetic", "process": "triangle_motif", "count": 10}}"#).unwrap();
        assert_eq!(run_cli(["infogcl", "train", "--config", cfg.to_str().unwrap()]), EXIT_USAGE);
    }

    #[test]
    fn exit_codes_by_error() {
        assert_eq!(exit_code(&Error::Divergence { epoch: 0, batch: 1, loss: f64::NAN }), EXIT_DIVERGED);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Domain("x".into())), EXIT_DATA);
    }
}
