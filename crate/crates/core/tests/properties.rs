use proptest::prelude::*;

use infogcl_core::augment::{aligned_nodes, apply_augmentation, make_view_pair, round_count, AugmentationSpec};
use infogcl_core::autodiff::{Matrix, Tape};
use infogcl_core::contrast::{infonce_loss, negfree_loss, ContrastBatch, ScoreFn};
use infogcl_core::encoder::{Encoder, EncoderSpec, Readout};
use infogcl_core::graph::Graph;
use infogcl_core::infomeasure::{discrete_mi, entropy, DiscreteJoint};
use infogcl_core::pipeline::stratified_folds;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            proptest::collection::vec(any::<bool>(), pairs),
            proptest::collection::vec(-1.0f64..1.0, n * 2),
        )
            .prop_map(move |(mask, attrs)| {
                let mut edges = Vec::new();
                let mut k = 0;
                for u in 0..n {
                    for v in u + 1..n {
                        if mask[k] {
                            edges.push((u, v));
                        }
                        k += 1;
                    }
                }
                Graph::from_edges(n, &edges, Matrix::from_vec(n, 2, attrs).unwrap()).unwrap()
            })
    })
}

fn joint_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, c), r).prop_map(|mut t| {
            t[0][0] += 1e-3;
            let total: f64 = t.iter().flatten().sum();
            t.iter_mut().flatten().for_each(|v| *v /= total);
            t
        })
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mi_is_bounded_by_marginal_entropies(t in joint_strategy()) {
        let j = DiscreteJoint::from_rows(&t).unwrap();
        let i = discrete_mi(&j).nats;
        prop_assert!(i >= -1e-12);
        prop_assert!(i <= entropy(&j.row_marginal()) + 1e-12);
        prop_assert!(i <= entropy(&j.col_marginal()) + 1e-12);
        prop_assert!((i - discrete_mi(&j.transpose()).nats).abs() < 1e-12);
    }

    #[test]
    fn independent_joints_have_zero_mi(
        a in proptest::collection::vec(0.01f64..1.0, 1..6),
        b in proptest::collection::vec(0.01f64..1.0, 1..6),
    ) {
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let rows: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| x * y / (sa * sb)).collect()).collect();
        prop_assert!(discrete_mi(&DiscreteJoint::from_rows(&rows).unwrap()).nats.abs() < 1e-12);
    }

    #[test]
    fn folds_partition_and_stratify(labels in proptest::collection::vec(0usize..3, 10..80), seed in any::<u64>()) {
        let k = 5;
        let present: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&y| y == c).count()).filter(|&n| n > 0).collect();
        if present.iter().any(|&n| n < k) {
            prop_assert!(stratified_folds(&labels, k, seed).is_err());
            return Ok(());
        }
        let folds = stratified_folds(&labels, k, seed).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for c in 0..3 {
            let counts: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn augmentations_keep_their_invariants(g in graph_strategy(9), ratio in 0.05f64..0.6, seed in any::<u64>()) {
        let n = g.node_count();
        let m = g.edge_count();
        let ep = apply_augmentation(&g, &AugmentationSpec::edge_perturb(ratio), seed).unwrap();
        if m > 0 && round_count(ratio, m) <= n * (n - 1) / 2 - m {
            prop_assert_eq!(ep.graph.edge_count(), m);
        }
        prop_assert_eq!(ep.graph.attributes(), g.attributes());

        let am = apply_augmentation(&g, &AugmentationSpec::attr_mask(ratio), seed).unwrap();
        let masked = (0..n).filter(|&r| am.graph.attributes().row(r) != g.attributes().row(r)).count();
        prop_assert!(masked <= round_count(ratio, n));
        for r in 0..n {
            let row = am.graph.attributes().row(r);
            prop_assert!(row == g.attributes().row(r) || row.iter().all(|&v| v == 0.0));
        }
        prop_assert_eq!(am.graph.edges(), g.edges());

        let nd = apply_augmentation(&g, &AugmentationSpec::node_drop(ratio), seed).unwrap();
        prop_assert!(nd.graph.node_count() >= 1);
        prop_assert_eq!(nd.graph.node_count(), n - round_count(ratio, n).min(n - 1));
        for (a, b) in nd.graph.edges() {
            prop_assert!(g.has_edge(nd.origin_nodes[a], nd.origin_nodes[b]));
        }
    }

    #[test]
    fn aligned_nodes_share_sources(g in graph_strategy(9), seed in any::<u64>()) {
        let (vi, vj) = make_view_pair(&g, &AugmentationSpec::node_drop(0.3), &AugmentationSpec::subgraph(0.7), seed).unwrap();
        let pairs = aligned_nodes(&vi, &vj);
        for &(a, b) in &pairs {
            prop_assert_eq!(vi.origin_nodes[a], vj.origin_nodes[b]);
        }
        let common = vi.origin_nodes.iter().filter(|o| vj.origin_nodes.contains(o)).count();
        prop_assert_eq!(pairs.len(), common);
    }

    #[test]
    fn views_are_reproducible(g in graph_strategy(8), seed in any::<u64>()) {
        for spec in [AugmentationSpec::node_drop(0.3), AugmentationSpec::subgraph(0.5), AugmentationSpec::edge_perturb(0.3)] {
            prop_assert_eq!(apply_augmentation(&g, &spec, seed).unwrap(), apply_augmentation(&g, &spec, seed).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encoders_are_permutation_equivariant(
        (g, perm) in graph_strategy(8).prop_flat_map(|g| { let n = g.node_count(); (Just(g), permutation(n)) }),
        gin in any::<bool>(),
        sum in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut spec = if gin { EncoderSpec::gin(2, 6) } else { EncoderSpec::gcn(2, 6) };
        spec.readout = if sum { Readout::Sum } else { Readout::Mean };
        let enc = Encoder::new(spec, 2, "").unwrap();
        let params = enc.init(seed);
        let a = enc.encode_graphs(&params, &[&g]).unwrap().remove(0);
        let b = enc.encode_graphs(&params, &[&g.permute(&perm)]).unwrap().remove(0);
        for (x, y) in a.graph_embedding.iter().zip(&b.graph_embedding) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        for (u, &pu) in perm.iter().enumerate() {
            for (x, y) in a.node_embeddings.row(u).iter().zip(b.node_embeddings.row(pu)) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn batching_does_not_mix_graphs(graphs in proptest::collection::vec(graph_strategy(7), 1..5), seed in any::<u64>()) {
        let enc = Encoder::new(EncoderSpec::gin(3, 5), 2, "").unwrap();
        let params = enc.init(seed);
        let refs: Vec<&Graph> = graphs.iter().collect();
        let together = enc.encode_graphs(&params, &refs).unwrap();
        for (g, t) in graphs.iter().zip(&together) {
            let solo = enc.encode_graphs(&params, &[g]).unwrap().remove(0);
            for (x, y) in solo.graph_embedding.iter().zip(&t.graph_embedding) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn contrastive_losses_stay_in_range(
        n in 2usize..12,
        values in proptest::collection::vec(-3.0f64..3.0, 2 * 12 * 4),
        tau in 0.1f64..2.0,
    ) {
        let a = Matrix::from_vec(n, 4, values[..n * 4].to_vec()).unwrap();
        let p = Matrix::from_vec(n, 4, values[48..48 + n * 4].to_vec()).unwrap();
        let mut tape = Tape::new();
        let (av, pv) = (tape.constant(a), tape.constant(p));
        let batch = ContrastBatch::paired(&tape, av, pv, "prop").unwrap();
        let nf = negfree_loss(&mut tape, &batch, false).unwrap();
        let nf = tape.value(nf).item();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&nf));
        let nce = infonce_loss(&mut tape, &batch, &ScoreFn::cosine(tau), None).unwrap();
        let nce = tape.value(nce).item();
        // Cosine scores lie in [-1/tau, 1/tau].
        let ln_n = (n as f64).ln();
        prop_assert!(nce >= ln_n - 2.0 / tau - 1e-9 && nce <= ln_n + 2.0 / tau + 1e-9);
    }
}

#[test]
fn uniform_scores_give_ln_n() {
    for n in [2usize, 3, 10, 100] {
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::filled(n, 3, -0.4));
        let p = tape.constant(Matrix::filled(n, 3, -0.4));
        let batch = ContrastBatch::paired(&tape, a, p, "uniform").unwrap();
        let l = infonce_loss(&mut tape, &batch, &ScoreFn::cosine(0.2), None).unwrap();
        assert!((tape.value(l).item() - (n as f64).ln()).abs() < 1e-12);
    }
}

#[test]
fn infonce_needs_a_negative() {
    let mut tape = Tape::new();
    let a = tape.constant(Matrix::filled(1, 3, 1.0));
    let batch = ContrastBatch::paired(&tape, a, a, "single").unwrap();
    assert!(infonce_loss(&mut tape, &batch, &ScoreFn::cosine(0.5), None).is_err());
}
