//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`.

use std::collections::HashMap;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use infogcl_core::augment::{aligned_nodes, apply_augmentation, round_count, AugmentationSpec};
use infogcl_core::autodiff::{Matrix, Tape};
use infogcl_core::contrast::{infonce_loss, negfree_loss, ContrastBatch, ScoreFn};
use infogcl_core::encoder::{Encoder, EncoderSpec};
use infogcl_core::graph::{generate_node_task, generate_synthetic_graphs, parse_tu_dataset, Graph, GraphDataset, NodeTaskSpec, SyntheticProcess};
use infogcl_core::infomeasure::{
    attribute_column_key, discrete_mi, graph_key, raw_summary, score_augmentation_pair, select_augmentations, topology_key, train_nce_critic,
    verify_corollary1, verify_corollary2, verify_corollary3, DiscreteJoint, NamedKeyFn, NamedKeyMap, NceCriticConfig,
    SummaryBinner, DEFAULT_BINS,
};
use infogcl_core::pipeline::{ablate_negatives, gradcheck_suite, train_and_evaluate, EvalConfig, TrainConfig, TrainData};
use infogcl_core::rng::SplitMix64;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: infogcl_core::Error) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- 1

fn gradients() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..3 {
        let entries = gradcheck_suite(seed).map_err(err)?;
        for name in ["gcn2+infonce(global_global)", "gin2+negfree(local_global)"] {
            check(entries.iter().any(|e| e.name == name), || format!("missing composed program {name}"))?;
        }
        for e in &entries {
            check(e.passed && e.max_rel_error < 1e-4 && e.checked > 0, || {
                format!("seed {seed}: {} rel error {:.3e}", e.name, e.max_rel_error)
            })?;
            worst = worst.max(e.max_rel_error);
        }
        count = entries.len();
    }
    Ok(format!("{count} programs x 3 seeds, max rel error {worst:.2e}"))
}

// ---------------------------------------------------------------- 2

fn random_joint(rows: usize, cols: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| if rng.next_f64() < 0.25 { 0.0 } else { rng.next_f64() })
                .collect()
        })
        .collect();
    if t.iter().flatten().all(|&v| v == 0.0) {
        t[0][0] = 1.0;
    }
    let total: f64 = t.iter().flatten().sum();
    for v in t.iter_mut().flatten() {
        *v /= total;
    }
    t
}

fn brute_force_mi(t: &[Vec<f64>]) -> f64 {
    let pr: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let pc: Vec<f64> = (0..t[0].len()).map(|c| t.iter().map(|r| r[c]).sum()).collect();
    let mut s = 0.0;
    for (a, row) in t.iter().enumerate() {
        for (b, &p) in row.iter().enumerate() {
            if p > 0.0 {
                s += p * (p / (pr[a] * pc[b])).ln();
            }
        }
    }
    s
}

/// Every set partition of `0..n` as a block label per element.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(i: usize, blocks: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=blocks {
            cur[i] = b;
            rec(i + 1, blocks.max(b + 1), cur, out);
        }
    }
    if n > 0 {
        rec(1, 1, &mut cur, &mut out);
    }
    out
}

fn coarsen(t: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    let r = rows.iter().max().unwrap() + 1;
    let c = cols.iter().max().unwrap() + 1;
    let mut out = vec![vec![0.0; c]; r];
    for (a, row) in t.iter().enumerate() {
        for (b, &p) in row.iter().enumerate() {
            out[rows[a]][cols[b]] += p;
        }
    }
    out
}

fn mi_oracle() -> Outcome {
    let mut rng = SplitMix64::new(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = random_joint(1 + rng.below_usize(6), 1 + rng.below_usize(6), &mut rng);
        let got = discrete_mi(&DiscreteJoint::from_rows(&t).map_err(err)?).nats;
        worst = worst.max((got - brute_force_mi(&t)).abs());
    }
    check(worst <= 1e-12, || format!("max deviation {worst:.3e}"))?;
    let mut coarsenings = 0;
    for n in 1..=5 {
        let parts = set_partitions(n);
        for _ in 0..4 {
            let t = random_joint(n, n, &mut rng);
            let full = discrete_mi(&DiscreteJoint::from_rows(&t).map_err(err)?).nats;
            for pr in &parts {
                for pc in &parts {
                    let c = coarsen(&t, pr, pc);
                    let i = discrete_mi(&DiscreteJoint::from_rows(&c).map_err(err)?).nats;
                    check(i <= full + 1e-12, || format!("coarsening raised MI {full} -> {i}"))?;
                    coarsenings += 1;
                }
            }
        }
    }
    Ok(format!("max deviation {worst:.1e} over 100 joints; {coarsenings} coarsenings monotone"))
}

// ---------------------------------------------------------------- 3

fn nce_bound() -> Outcome {
    let joint = DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).map_err(err)?;
    let r = train_nce_critic(&joint, &NceCriticConfig::default(), 3).map_err(err)?;
    let ln2 = 2f64.ln();
    check((r.exact_mi - ln2).abs() < 1e-12, || format!("exact MI {}", r.exact_mi))?;
    check(r.max_bound <= ln2 + 0.05, || format!("bound peaked at {:.4}", r.max_bound))?;
    check(r.final_bound >= 0.55, || format!("final bound {:.4}", r.final_bound))?;
    Ok(format!("final {:.4}, max {:.4}, exact {:.4}", r.final_bound, r.max_bound, ln2))
}

// ---------------------------------------------------------------- 4

fn with_column(g: &Graph, col: usize) -> Vec<i64> {
    let mut k = topology_key(g);
    k.extend(attribute_column_key(g, col));
    k
}

fn exact_checks() -> Outcome {
    let p = SyntheticProcess::two_factor();
    let views = [NamedKeyFn::new("keep-all", graph_key), NamedKeyFn::new("drop-nuisance", topology_key)];
    let r1 = verify_corollary1(&p, &views).map_err(err)?;
    let opt = r1.optimum.ok_or("no unique optimal view pair")?;
    let pair = &r1.pairs[opt];
    check((pair.i, pair.j) == (1, 1), || format!("optimal pair {}", pair.desc))?;
    check(pair.regions.c.abs() <= 1e-9, || format!("region C = {}", pair.regions.c))?;

    let vi = NamedKeyFn::new("topology+col0", |g| with_column(g, 0));
    let vj = NamedKeyFn::new("topology+col1", |g| with_column(g, 1));
    // The column key has one entry per node, six here.
    let encoders = [
        NamedKeyMap::identity(),
        NamedKeyMap::new("keep-shared", |k| k[..k.len() - 6].to_vec()),
        NamedKeyMap::new("col0-only", |k| k[k.len() - 6..].to_vec()),
        NamedKeyMap::constant(),
    ];
    let r2 = verify_corollary2(&p, &vi, &vj, &encoders).map_err(err)?;
    check(r2.optima == vec![1], || format!("encoder optima {:?}", r2.optima))?;

    let z = NamedKeyFn::new("graph", graph_key);
    let aggregations = [
        NamedKeyMap::identity(),
        NamedKeyMap::constant(),
        NamedKeyMap::new("topology-only", |k| k[..k.len() - 12].to_vec()),
    ];
    let r3 = verify_corollary3(&p, &z, &z, &aggregations).map_err(err)?;
    let last = *r3.ranking.last().unwrap();
    check(r3.aggregations[last].name == "constant", || format!("last aggregation {}", r3.aggregations[last].name))?;
    check(r3.aggregations[last].i_ci_cj.abs() <= 1e-12, || format!("constant keeps {}", r3.aggregations[last].i_ci_cj))?;
    Ok(format!(
        "views {}, C = {:.1e}; encoder {}; aggregation ranking {:?}",
        pair.desc,
        pair.regions.c,
        r2.encoders[1].name,
        r3.ranking.iter().map(|&k| r3.aggregations[k].name.as_str()).collect::<Vec<_>>()
    ))
}

// ---------------------------------------------------------------- 5

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Every view an augmentation can produce from `g`, with its probability.
fn view_outcomes(g: &Graph, spec: &AugmentationSpec) -> Vec<(Graph, f64)> {
    let n = g.node_count();
    let uniform = |gs: Vec<Graph>| {
        let p = 1.0 / gs.len() as f64;
        gs.into_iter().map(|g| (g, p)).collect::<Vec<_>>()
    };
    match spec.kind.as_str() {
        "identity" => vec![(g.clone(), 1.0)],
        "node_drop" => {
            let k = round_count(spec.ratio, n).min(n - 1);
            uniform(
                k_subsets(n, k)
                    .into_iter()
                    .map(|drop| {
                        let keep: Vec<usize> = (0..n).filter(|u| !drop.contains(u)).collect();
                        g.induced_subgraph(&keep)
                    })
                    .collect(),
            )
        }
        "attr_mask" => {
            let k = round_count(spec.ratio, n);
            uniform(
                k_subsets(n, k)
                    .into_iter()
                    .map(|rows| {
                        let mut x = g.attributes().clone();
                        for r in rows {
                            x.row_mut(r).fill(0.0);
                        }
                        g.with_attributes(x)
                    })
                    .collect(),
            )
        }
        "edge_perturb" => {
            let edges = g.edges();
            let absent: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|&(u, v)| !g.has_edge(u, v))
                .collect();
            let k = round_count(spec.ratio, edges.len()).min(absent.len());
            let mut out = Vec::new();
            for removed in k_subsets(edges.len(), k) {
                for added in k_subsets(absent.len(), k) {
                    let mut e: Vec<(usize, usize)> = (0..edges.len()).filter(|i| !removed.contains(i)).map(|i| edges[i]).collect();
                    e.extend(added.iter().map(|&a| absent[a]));
                    out.push(Graph::from_edges(n, &e, g.attributes().clone()).expect("valid"));
                }
            }
            uniform(out)
        }
        other => panic!("no exact outcomes for {other}"),
    }
}

fn entropy<K: std::hash::Hash + Eq>(m: &HashMap<K, f64>) -> f64 {
    -m.values().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

fn exact_mi(pairs: &HashMap<(usize, usize), f64>) -> f64 {
    let mut a: HashMap<usize, f64> = HashMap::new();
    let mut b: HashMap<usize, f64> = HashMap::new();
    for (&(x, y), &p) in pairs {
        *a.entry(x).or_default() += p;
        *b.entry(y).or_default() += p;
    }
    entropy(&a) + entropy(&b) - entropy(pairs)
}

/// Population score of a view pair: the per-coordinate
/// `I(v_i; y) + I(v_j; y) - I(v_i; v_j)` summed over the whole process
/// support and every augmentation outcome, averaged over coordinates.
fn exact_pair_score(p: &SyntheticProcess, binner: &SummaryBinner, a: &AugmentationSpec, b: &AugmentationSpec) -> f64 {
    let dims = binner.dims();
    let mut iy = vec![HashMap::new(); dims];
    let mut jy = vec![HashMap::new(); dims];
    let mut ij = vec![HashMap::new(); dims];
    for (f, pg, g) in p.enumerate() {
        let si: Vec<(Vec<usize>, f64)> = view_outcomes(&g, a).iter().map(|(v, q)| (binner.symbols(&raw_summary(v)), *q)).collect();
        let sj: Vec<(Vec<usize>, f64)> = view_outcomes(&g, b).iter().map(|(v, q)| (binner.symbols(&raw_summary(v)), *q)).collect();
        for (x, qx) in &si {
            for d in 0..dims {
                *iy[d].entry((x[d], f.label)).or_insert(0.0) += pg * qx;
            }
            for (y, qy) in &sj {
                for d in 0..dims {
                    *ij[d].entry((x[d], y[d])).or_insert(0.0) += pg * qx * qy;
                }
            }
        }
        for (y, qy) in &sj {
            for d in 0..dims {
                *jy[d].entry((y[d], f.label)).or_insert(0.0) += pg * qy;
            }
        }
    }
    (0..dims).map(|d| exact_mi(&iy[d]) + exact_mi(&jy[d]) - exact_mi(&ij[d])).sum::<f64>() / dims as f64
}

fn selection_oracle() -> Outcome {
    let process = SyntheticProcess::two_factor();
    let ds = generate_synthetic_graphs(&process, 2000, 5).map_err(err)?;
    let candidates = [
        AugmentationSpec::identity(),
        AugmentationSpec::node_drop(0.2),
        AugmentationSpec::edge_perturb(0.2),
        AugmentationSpec::attr_mask(0.5),
    ];
    let report = select_augmentations(&ds, &candidates, 11, DEFAULT_BINS).map_err(err)?;
    let binner = SummaryBinner::fit(&ds, DEFAULT_BINS).map_err(err)?;
    let mut truth = Vec::new();
    for i in 0..candidates.len() {
        for j in i..candidates.len() {
            truth.push((i, j, exact_pair_score(&process, &binner, &candidates[i], &candidates[j])));
        }
    }
    let best = truth.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    let optimal: Vec<&(usize, usize, f64)> = truth.iter().filter(|t| t.2 >= best - 1e-9).collect();
    check(optimal.len() == 1, || format!("ground truth has {} tied optima", optimal.len()))?;
    let (oi, oj, _) = *optimal[0];
    let chosen = report.best().ok_or("empty selection report")?;
    let expect = score_augmentation_pair(&ds, &candidates[oi], &candidates[oj], 11, DEFAULT_BINS).map_err(err)?;
    check(chosen.desc == expect.desc, || format!("selected {} but ground truth is {}", chosen.desc, expect.desc))?;

    let score_of = |a: &AugmentationSpec, b: &AugmentationSpec| -> Result<f64, String> {
        let desc = score_augmentation_pair(&ds, a, b, 11, DEFAULT_BINS).map_err(err)?.desc;
        report
            .candidates
            .iter()
            .find(|c| c.desc == desc)
            .map(|c| c.score)
            .ok_or_else(|| format!("no score for {desc}"))
    };
    let id = AugmentationSpec::identity();
    let am = AugmentationSpec::attr_mask(0.5);
    let (s_aa, s_ia, s_ii) = (score_of(&am, &am)?, score_of(&id, &am)?, score_of(&id, &id)?);
    check(s_aa >= s_ia && s_ia >= s_ii, || format!("chain broken: {s_aa:.4} / {s_ia:.4} / {s_ii:.4}"))?;
    Ok(format!(
        "selected {} (exact {:.4}, estimate {:.4}); attr_mask chain {:.3} >= {:.3} >= {:.3}",
        chosen.desc, best, chosen.score, s_aa, s_ia, s_ii
    ))
}

// ---------------------------------------------------------------- 6

fn random_graph(n: usize, d: usize, rng: &mut SplitMix64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.next_f64() < 0.35 {
                edges.push((u, v));
            }
        }
    }
    let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
    Graph::from_edges(n, &edges, x).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn invariances() -> Outcome {
    let mut rng = SplitMix64::new(6);
    let mut worst_perm = 0.0f64;
    let mut worst_batch = 0.0f64;
    for spec in [EncoderSpec::gcn(3, 8), EncoderSpec::gin(3, 8)] {
        let enc = Encoder::new(spec, 3, "").map_err(err)?;
        let params = enc.init(rng.next_u64());
        let graphs: Vec<Graph> = (0..4).map(|_| random_graph(3 + rng.below_usize(6), 3, &mut rng)).collect();
        for g in &graphs {
            let mut perm: Vec<usize> = (0..g.node_count()).collect();
            rng.shuffle(&mut perm);
            let h = g.permute(&perm);
            let a = enc.encode_graphs(&params, &[g]).map_err(err)?.remove(0);
            let b = enc.encode_graphs(&params, &[&h]).map_err(err)?.remove(0);
            worst_perm = worst_perm.max(max_abs_diff(&a.graph_embedding, &b.graph_embedding));
            for (u, &pu) in perm.iter().enumerate() {
                worst_perm = worst_perm.max(max_abs_diff(a.node_embeddings.row(u), b.node_embeddings.row(pu)));
            }
        }
        let refs: Vec<&Graph> = graphs.iter().collect();
        let together = enc.encode_graphs(&params, &refs).map_err(err)?;
        for (g, t) in graphs.iter().zip(&together) {
            let solo = enc.encode_graphs(&params, &[g]).map_err(err)?.remove(0);
            worst_batch = worst_batch.max(max_abs_diff(&solo.graph_embedding, &t.graph_embedding));
            worst_batch = worst_batch.max(max_abs_diff(solo.node_embeddings.data(), t.node_embeddings.data()));
        }
    }
    check(worst_perm <= 1e-10, || format!("permutation deviation {worst_perm:.3e}"))?;
    check(worst_batch <= 1e-10, || format!("batch/solo deviation {worst_batch:.3e}"))?;

    for trial in 0..50u64 {
        let g = random_graph(5 + rng.below_usize(8), 2, &mut rng);
        let ep = apply_augmentation(&g, &AugmentationSpec::edge_perturb(0.3), trial).map_err(err)?;
        let n = g.node_count();
        if round_count(0.3, g.edge_count()) <= n * (n - 1) / 2 - g.edge_count() {
            check(ep.graph.edge_count() == g.edge_count(), || "edge_perturb changed the edge count".into())?;
        }
        let am = apply_augmentation(&g, &AugmentationSpec::attr_mask(0.4), trial).map_err(err)?;
        let x = am.graph.attributes();
        let zeroed = (0..n).filter(|&r| x.row(r).iter().all(|&v| v == 0.0) && g.attributes().row(r).iter().any(|&v| v != 0.0)).count();
        check(zeroed == round_count(0.4, n), || format!("attr_mask zeroed {zeroed} rows"))?;
        for r in 0..n {
            let row = x.row(r);
            check(row.iter().all(|&v| v == 0.0) || row == g.attributes().row(r), || "attr_mask altered a kept row".into())?;
        }
        let nd = apply_augmentation(&g, &AugmentationSpec::node_drop(0.3), trial).map_err(err)?;
        let sg = apply_augmentation(&g, &AugmentationSpec::subgraph(0.6), trial ^ 1).map_err(err)?;
        for (a, b) in aligned_nodes(&nd, &sg) {
            let o = nd.origin_nodes[a];
            check(o == sg.origin_nodes[b], || "aligned nodes from different sources".into())?;
            check(nd.graph.attributes().row(a) == g.attributes().row(o), || "node_drop moved attributes".into())?;
        }
    }

    let mut worst_nce = 0.0f64;
    for n in [2usize, 5, 17, 64] {
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::filled(n, 4, 0.7));
        let p = tape.constant(Matrix::filled(n, 4, 0.7));
        let batch = ContrastBatch::paired(&tape, a, p, "uniform").map_err(err)?;
        let l = infonce_loss(&mut tape, &batch, &ScoreFn::cosine(0.5), None).map_err(err)?;
        worst_nce = worst_nce.max((tape.value(l).item() - (n as f64).ln()).abs());
    }
    check(worst_nce <= 1e-12, || format!("uniform InfoNCE off ln N by {worst_nce:.3e}"))?;

    for _ in 0..100 {
        let n = 1 + rng.below_usize(10);
        let mut tape = Tape::new();
        let mut m = || Matrix::from_vec(n, 3, (0..n * 3).map(|_| rng.uniform(-2.0, 2.0)).collect()).unwrap();
        let a = tape.constant(m());
        let p = tape.constant(m());
        let batch = ContrastBatch::paired(&tape, a, p, "random").map_err(err)?;
        let loss = negfree_loss(&mut tape, &batch, false).map_err(err)?;
        let l = tape.value(loss).item();
        check((-1.0 - 1e-12..=1.0 + 1e-12).contains(&l), || format!("negfree loss {l} outside [-1, 1]"))?;
    }
    Ok(format!(
        "perm {worst_perm:.1e}, batch {worst_batch:.1e}, uniform InfoNCE {worst_nce:.1e}; augmentation invariants hold"
    ))
}

// ---------------------------------------------------------------- 7

fn mutag() -> Outcome {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/MUTAG");
    let ds: GraphDataset = parse_tu_dataset(dir).map_err(|e| format!("MUTAG not available at {dir}: {e}"))?;
    let eval = EvalConfig {
        folds: 10,
        runs: 1,
        ..EvalConfig::default()
    };
    let mut means = Vec::new();
    for seed in 0..2 {
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::graph_default()
        };
        means.push(train_and_evaluate(&cfg, TrainData::Graphs(&ds), &eval).map_err(err)?.mean);
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    check(mean >= 0.80, || format!("mean accuracy {mean:.4} over runs {means:?}"))?;
    Ok(format!("mean 10-fold accuracy {mean:.4} (runs {:.4}, {:.4})", means[0], means[1]))
}

// ---------------------------------------------------------------- 8

fn ablation() -> Outcome {
    let dense = generate_synthetic_graphs(&SyntheticProcess::density(), 200, 8).map_err(err)?;
    let eval = EvalConfig {
        folds: 10,
        runs: 1,
        ..EvalConfig::default()
    };
    let started = Instant::now();
    let g = ablate_negatives(&TrainConfig::graph_default(), TrainData::Graphs(&dense), &eval).map_err(err)?;
    let graph_time = started.elapsed();
    check(g.delta.abs() <= 0.03, || {
        format!("dense graphs: |delta| = {:.4} ({:.4} vs {:.4})", g.delta.abs(), g.infonce.mean, g.negfree.mean)
    })?;

    let nodes = generate_node_task(&NodeTaskSpec::default(), 8).map_err(err)?;
    let eval = EvalConfig {
        runs: 3,
        ..EvalConfig::default()
    };
    let started = Instant::now();
    let n = ablate_negatives(&TrainConfig::node_default(), TrainData::Nodes(&nodes), &eval).map_err(err)?;
    let node_time = started.elapsed();
    check(n.delta >= 0.02, || {
        format!("node task: delta = {:.4} ({:.4} vs {:.4})", n.delta, n.infonce.mean, n.negfree.mean)
    })?;
    let arm_budget = Duration::from_secs(300);
    check(graph_time / 3 <= arm_budget && node_time / 3 <= arm_budget, || "an arm exceeded 5 min".into())?;
    Ok(format!(
        "dense delta {:+.4} ({:.3} vs {:.3}); node delta {:+.4} ({:.3} vs {:.3}, stop-gradient {:.3})",
        g.delta, g.infonce.mean, g.negfree.mean, n.delta, n.infonce.mean, n.negfree.mean, n.negfree_stop_gradient.mean
    ))
}

// ---------------------------------------------------------------- 9

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"data": {"kind": "synthetic", "process": "triangle_motif", "count": 60},
            "optimizer": {"epochs": 3, "batch_size": 16}}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_infogcl"))
            .args(["--seed", "7", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("train")
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.success(), || format!("train exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)))?;
        let read = |f: &str| fs::read(out.join(f)).map_err(|e| format!("{f}: {e}"));
        outputs.push((read("metrics.csv")?, read("checkpoint.json")?));
    }
    check(outputs[0].0 == outputs[1].0, || "metrics.csv differs".into())?;
    check(outputs[0].1 == outputs[1].1, || "checkpoint.json differs".into())?;
    Ok(format!("metrics.csv ({} B) and checkpoint.json ({} B) identical", outputs[0].0.len(), outputs[0].1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("gradient correctness", gradients, 10),
        ("MI oracle equivalence", mi_oracle, 5),
        ("NCE bound consistency", nce_bound, 60),
        ("exact view/encoder/aggregation optima", exact_checks, 30),
        ("augmentation selection oracle", selection_oracle, 120),
        ("invariance suite", invariances, 30),
        ("MUTAG desk-scale", mutag, 900),
        ("negative-sample ablation", ablation, 900),
        ("determinism", determinism, 120),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f, budget)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        let started = Instant::now();
        let mut result = f();
        let secs = started.elapsed().as_secs_f64();
        if result.is_ok() && secs > *budget as f64 {
            result = Err(format!("took {secs:.1}s, budget {budget}s"));
        }
        match result {
            Ok(detail) => println!("[{}] PASS {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[{}] FAIL {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
