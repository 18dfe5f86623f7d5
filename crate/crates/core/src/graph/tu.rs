//! TU benchmark format: `DS_A.txt`, `DS_graph_indicator.txt`,
//! `DS_graph_labels.txt` and optional `DS_node_labels.txt` /
//! `DS_node_attributes.txt`. Node and graph ids are 1-indexed on disk.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Graph, GraphDataset};
use crate::autodiff::Matrix;
use crate::error::{Error, Result};

/// Input irregularities that were repaired rather than rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

pub fn parse_tu_dataset(dir: impl AsRef<Path>) -> Result<GraphDataset> {
    parse_tu_dataset_with_report(dir).map(|(ds, _)| ds)
}

pub fn parse_tu_dataset_with_report(dir: impl AsRef<Path>) -> Result<(GraphDataset, IngestReport)> {
    let dir = dir.as_ref();
    let prefix = find_prefix(dir)?;
    let file = |suffix: &str| dir.join(format!("{prefix}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let indicator = read_ints(&indicator_path, read_required(&indicator_path)?)?;
    let labels_path = file("graph_labels");
    let raw_labels = read_ints(&labels_path, read_required(&labels_path)?)?;
    let edges_path = file("A");
    let edge_text = read_required(&edges_path)?;

    let graph_count = raw_labels.len();
    let node_total = indicator.len();

    // Graph membership and local index of every global node.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); graph_count];
    let mut owner = Vec::with_capacity(node_total);
    let mut local = Vec::with_capacity(node_total);
    for (line, &gid) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > graph_count {
            return Err(Error::format(
                display(&indicator_path),
                line + 1,
                format!("graph id {gid} outside 1..={graph_count}"),
            ));
        }
        let g = gid as usize - 1;
        owner.push(g);
        local.push(members[g].len());
        members[g].push(line);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::format(
            display(&indicator_path),
            0,
            format!("graph {} has no nodes", empty + 1),
        ));
    }

    let mut report = IngestReport::default();
    let mut seen_directed = BTreeSet::new();
    let mut adjacency: Vec<Vec<BTreeSet<usize>>> =
        members.iter().map(|m| vec![BTreeSet::new(); m.len()]).collect();
    for (line_no, line) in edge_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::format(display(&edges_path), line_no + 1, "expected `i, j`"));
        };
        let u = parse_int(&edges_path, line_no, a)?;
        let v = parse_int(&edges_path, line_no, b)?;
        let in_range = |x: i64| x >= 1 && x as usize <= node_total;
        if !in_range(u) || !in_range(v) {
            return Err(Error::format(
                display(&edges_path),
                line_no + 1,
                format!("endpoint outside 1..={node_total}"),
            ));
        }
        let (u, v) = (u as usize - 1, v as usize - 1);
        if owner[u] != owner[v] {
            return Err(Error::format(
                display(&edges_path),
                line_no + 1,
                format!("edge joins graphs {} and {}", owner[u] + 1, owner[v] + 1),
            ));
        }
        if !seen_directed.insert((u, v)) {
            report.duplicate_edges += 1;
            continue;
        }
        if u == v {
            report.self_loops += 1;
            continue;
        }
        let g = owner[u];
        adjacency[g][local[u]].insert(local[v]);
        adjacency[g][local[v]].insert(local[u]);
    }
    if report.duplicate_edges > 0 || report.self_loops > 0 {
        log::warn!(
            "{prefix}: dropped {} duplicate edge lines and {} self-loops",
            report.duplicate_edges,
            report.self_loops
        );
    }

    let attributes = node_features(dir, &prefix, node_total)?;
    let d = attributes.cols();

    let graphs = members
        .iter()
        .zip(adjacency)
        .map(|(nodes, adj)| {
            let neighbors = adj.into_iter().map(|s| s.into_iter().collect()).collect();
            let mut x = Matrix::zeros(nodes.len(), d);
            for (i, &global) in nodes.iter().enumerate() {
                x.row_mut(i).copy_from_slice(attributes.row(global));
            }
            Graph::from_neighbors_unchecked(neighbors, x)
        })
        .collect();

    let label_map: BTreeMap<i64, usize> = raw_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, raw)| (raw, i))
        .collect();
    let labels = raw_labels.iter().map(|raw| label_map[raw]).collect();
    let class_count = label_map.len().max(2);
    Ok((GraphDataset::new(prefix, graphs, labels, class_count)?, report))
}

/// Continuous attributes if present, else one-hot node labels, else a
/// constant column of ones.
fn node_features(dir: &Path, prefix: &str, node_total: usize) -> Result<Matrix> {
    let attr_path = dir.join(format!("{prefix}_node_attributes.txt"));
    if attr_path.exists() {
        let text = read_required(&attr_path)?;
        let mut rows = Vec::with_capacity(node_total);
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        Error::format(display(&attr_path), line_no + 1, format!("not a real: {tok:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() != node_total {
            return Err(Error::format(
                display(&attr_path),
                rows.len(),
                format!("{} attribute rows for {node_total} nodes", rows.len()),
            ));
        }
        return Matrix::from_rows(&rows).map_err(|_| {
            Error::format(display(&attr_path), 0, "attribute rows have different lengths")
        });
    }

    let label_path = dir.join(format!("{prefix}_node_labels.txt"));
    if label_path.exists() {
        let raw = read_ints(&label_path, read_required(&label_path)?)?;
        if raw.len() != node_total {
            return Err(Error::format(
                display(&label_path),
                raw.len(),
                format!("{} node labels for {node_total} nodes", raw.len()),
            ));
        }
        let values: BTreeMap<i64, usize> = raw
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        let mut x = Matrix::zeros(node_total, values.len());
        for (i, v) in raw.iter().enumerate() {
            x.set(i, values[v], 1.0);
        }
        return Ok(x);
    }

    Ok(Matrix::filled(node_total, 1, 1.0))
}

fn find_prefix(dir: &Path) -> Result<String> {
    let ingest = |reason: String| Error::Ingest {
        path: dir.to_path_buf(),
        reason,
    };
    if let Some(name) = dir.file_name().and_then(|n| n.to_str()) {
        if dir.join(format!("{name}_A.txt")).exists() {
            return Ok(name.to_string());
        }
    }
    let entries = fs::read_dir(dir).map_err(|e| ingest(e.to_string()))?;
    let mut found: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(str::to_owned))
        .filter_map(|f| f.strip_suffix("_A.txt").map(str::to_owned))
        .collect();
    found.sort();
    found
        .into_iter()
        .next()
        .ok_or_else(|| ingest("no *_A.txt file".into()))
}

fn read_required(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn read_ints(path: &Path, text: String) -> Result<Vec<i64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_int(path, i, l.trim()))
        .collect()
}

fn parse_int(path: &Path, line_no: usize, token: &str) -> Result<i64> {
    token
        .parse::<i64>()
        .map_err(|_| Error::format(display(path), line_no + 1, format!("not an integer: {token:?}")))
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Writes `dataset` in TU format under `dir` (created if needed), with
/// file prefix `dataset.name`. Attributes are always written explicitly.
pub fn write_tu_dataset(dataset: &GraphDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let prefix = &dataset.name;
    let mut a = String::new();
    let mut indicator = String::new();
    let mut attrs = String::new();
    let mut offset = 0;
    for (gi, g) in dataset.graphs.iter().enumerate() {
        for u in 0..g.node_count() {
            for &v in g.neighbors(u) {
                writeln!(a, "{}, {}", offset + u + 1, offset + v + 1).unwrap();
            }
            writeln!(indicator, "{}", gi + 1).unwrap();
            let row: Vec<String> = g.attributes().row(u).iter().map(|x| format!("{x:?}")).collect();
            writeln!(attrs, "{}", row.join(", ")).unwrap();
        }
        offset += g.node_count();
    }
    let labels: String = dataset.labels.iter().map(|y| format!("{y}\n")).collect();
    fs::write(dir.join(format!("{prefix}_A.txt")), a)?;
    fs::write(dir.join(format!("{prefix}_graph_indicator.txt")), indicator)?;
    fs::write(dir.join(format!("{prefix}_graph_labels.txt")), labels)?;
    fs::write(dir.join(format!("{prefix}_node_attributes.txt")), attrs)?;
    Ok(dir.to_path_buf())
}
