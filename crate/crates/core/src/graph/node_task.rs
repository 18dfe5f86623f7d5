//! Node-task layout: `edges.tsv` (0-indexed pairs, tab-separated),
//! `features.csv` (one row per node), `labels.csv` (`-1` = unlabeled),
//! `split.json` (`{"train": [...], "test": [...]}`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Graph, NodeTaskDataset};
use crate::autodiff::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn load_node_task(
    edges: impl AsRef<Path>,
    features: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    split: impl AsRef<Path>,
) -> Result<NodeTaskDataset> {
    let (edges, features, labels, split) = (edges.as_ref(), features.as_ref(), labels.as_ref(), split.as_ref());
    let fname = |p: &Path| p.display().to_string();

    let mut rows = Vec::new();
    for (i, line) in read(features)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::format(fname(features), i + 1, format!("not a real: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let x = Matrix::from_rows(&rows).map_err(|_| Error::format(fname(features), 0, "ragged feature rows"))?;
    let n = x.rows();

    let mut y = Vec::new();
    for (i, line) in read(labels)?.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        y.push(
            t.parse::<i64>()
                .map_err(|_| Error::format(fname(labels), i + 1, format!("not an integer: {t:?}")))?,
        );
    }
    if y.len() != n {
        return Err(Error::format(
            fname(labels),
            y.len(),
            format!("{} labels but {n} feature rows", y.len()),
        ));
    }

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dropped = 0usize;
    for (i, line) in read(edges)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split('\t').map(str::trim).collect();
        if toks.len() != 2 {
            return Err(Error::format(fname(edges), i + 1, "expected two tab-separated ids"));
        }
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::format(fname(edges), i + 1, format!("not a node id: {t:?}")))
        };
        let (u, v) = (parse(toks[0])?, parse(toks[1])?);
        if u >= n || v >= n {
            return Err(Error::format(fname(edges), i + 1, format!("node id outside 0..{n}")));
        }
        if u == v {
            dropped += 1;
            continue;
        }
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    for list in &mut neighbors {
        list.sort_unstable();
        let before = list.len();
        list.dedup();
        dropped += before - list.len();
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} self-loop or duplicate edge entries", fname(edges));
    }

    let split_text = read(split)?;
    let s: Split = serde_json::from_str(&split_text)
        .map_err(|e| Error::format(fname(split), e.line(), e.to_string()))?;
    for &id in s.train.iter().chain(&s.test) {
        if id >= n {
            return Err(Error::format(fname(split), 0, format!("unknown node {id}")));
        }
        if y[id] < 0 {
            return Err(Error::format(fname(split), 0, format!("node {id} is unlabeled")));
        }
    }

    let name = edges
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .unwrap_or("node-task")
        .to_string();
    let graph = Graph::from_neighbors_unchecked(neighbors, x);
    NodeTaskDataset::new(name, graph, y, s.train, s.test)
        .map_err(|e| Error::format(fname(split), 0, e.to_string()))
}

/// Writes the four node-task files into `dir`.
pub fn write_node_task(ds: &NodeTaskDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut edges = String::new();
    for (u, v) in ds.graph.edges() {
        writeln!(edges, "{u}\t{v}").unwrap();
    }
    let mut features = String::new();
    for r in 0..ds.graph.node_count() {
        let row: Vec<String> = ds.graph.attributes().row(r).iter().map(|x| format!("{x:?}")).collect();
        writeln!(features, "{}", row.join(",")).unwrap();
    }
    let labels: String = ds.labels.iter().map(|y| format!("{y}\n")).collect();
    let split = serde_json::to_string(&Split {
        train: ds.train_ids.clone(),
        test: ds.test_ids.clone(),
    })?;
    fs::write(dir.join("edges.tsv"), edges)?;
    fs::write(dir.join("features.csv"), features)?;
    fs::write(dir.join("labels.csv"), labels)?;
    fs::write(dir.join("split.json"), split)?;
    Ok(())
}
