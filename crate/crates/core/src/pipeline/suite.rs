//! Gradient checks over every differentiable tape op and a few composed
//! programs. `detach` is excluded: finite differences see through it.

use std::rc::Rc;

use serde::Serialize;

use crate::autodiff::{gradcheck, Matrix, SparseMatrix, Tape, Var};
use crate::contrast::{apply_mode, combined_loss, LossKind, Mode, ModeSpec, ScoreFn};
use crate::encoder::{BoundParams, Encoder, EncoderSpec, GraphBatch};
use crate::error::Result;
use crate::graph::Graph;
use crate::rng::SplitMix64;

pub const SUITE_STEP: f64 = 1e-5;
pub const SUITE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    pub max_rel_error: f64,
    pub checked: usize,
    pub excluded_kinks: usize,
    pub passed: bool,
}

type Program = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

fn random(rows: usize, cols: usize, rng: &mut SplitMix64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// `sum(out * R)` for a fixed random `R`, so every output element gets a
/// distinct upstream gradient.
fn weighted(tape: &mut Tape, out: Var, seed: u64) -> Result<Var> {
    let (r, c) = tape.shape(out);
    let w = tape.constant(random(r, c, &mut SplitMix64::new(seed)));
    let prod = tape.mul(out, w)?;
    tape.sum_all(prod)
}

fn op_programs(rng: &mut SplitMix64) -> Vec<(&'static str, Vec<Matrix>, Program)> {
    let sparse = Rc::new(SparseMatrix::from_row_entries(
        3,
        vec![vec![(0, 0.5), (2, -1.0)], vec![], vec![(1, 2.0)], vec![(0, 1.0), (1, 1.0), (2, 1.0)]],
    ));
    let mut m = |r, c| random(r, c, rng);
    let unary = |f: fn(&mut Tape, Var) -> Result<Var>| -> Program {
        Box::new(move |t, v| {
            let o = f(t, v[0])?;
            weighted(t, o, 11)
        })
    };
    let binary = |f: fn(&mut Tape, Var, Var) -> Result<Var>| -> Program {
        Box::new(move |t, v| {
            let o = f(t, v[0], v[1])?;
            weighted(t, o, 12)
        })
    };
    vec![
        ("matmul", vec![m(3, 4), m(4, 2)], binary(Tape::matmul)),
        ("matmul_t", vec![m(3, 4), m(2, 4)], binary(Tape::matmul_t)),
        ("transpose", vec![m(3, 2)], unary(Tape::transpose)),
        ("add", vec![m(3, 2), m(3, 2)], binary(Tape::add)),
        ("add_row", vec![m(3, 2), m(1, 2)], binary(Tape::add_row)),
        ("sub", vec![m(3, 2), m(3, 2)], binary(Tape::sub)),
        ("mul", vec![m(3, 2), m(3, 2)], binary(Tape::mul)),
        (
            "scalar_mul",
            vec![m(3, 2)],
            Box::new(|t, v| {
                let o = t.scalar_mul(v[0], -1.7)?;
                weighted(t, o, 13)
            }),
        ),
        ("relu", vec![m(4, 3)], unary(Tape::relu)),
        ("sigmoid", vec![m(4, 3)], unary(Tape::sigmoid)),
        ("row_l2_normalize", vec![m(4, 3)], unary(Tape::row_l2_normalize)),
        ("log_softmax_rows", vec![m(4, 3)], unary(Tape::log_softmax_rows)),
        ("mean_rows", vec![m(4, 3)], unary(Tape::mean_rows)),
        ("sum_rows", vec![m(4, 3)], unary(Tape::sum_rows)),
        ("row_sums", vec![m(4, 3)], unary(Tape::row_sums)),
        ("sum_all", vec![m(4, 3)], unary(Tape::sum_all)),
        ("mean_all", vec![m(4, 3)], unary(Tape::mean_all)),
        (
            "concat_rows",
            vec![m(2, 3), m(1, 3)],
            Box::new(|t, v| {
                let o = t.concat_rows(&[v[0], v[1], v[0]])?;
                weighted(t, o, 14)
            }),
        ),
        (
            "gather_rows",
            vec![m(3, 2)],
            Box::new(|t, v| {
                let o = t.gather_rows(v[0], &[2, 0, 2, 1])?;
                weighted(t, o, 15)
            }),
        ),
        (
            "pick",
            vec![m(3, 4)],
            Box::new(|t, v| {
                let o = t.pick(v[0], &[3, 0, 1])?;
                weighted(t, o, 16)
            }),
        ),
        (
            "sparse_matmul",
            vec![m(3, 2)],
            Box::new(move |t, v| {
                let o = t.sparse_matmul(&sparse, v[0])?;
                weighted(t, o, 17)
            }),
        ),
    ]
}

fn fixture_graphs(rng: &mut SplitMix64) -> Vec<Graph> {
    let shapes: [(usize, &[(usize, usize)]); 3] = [
        (4, &[(0, 1), (1, 2), (2, 3)]),
        (3, &[(0, 1), (1, 2), (0, 2)]),
        (5, &[(0, 1), (0, 2), (0, 3), (3, 4)]),
    ];
    shapes
        .iter()
        .map(|&(n, e)| Graph::from_edges(n, e, random(n, 3, rng)).expect("valid fixture"))
        .collect()
}

/// An encoder + mode + loss program over its own parameters. The second
/// view keeps the topology and redraws the attributes, so the loss is away
/// from its optimum.
fn encoder_program(spec: EncoderSpec, mode: Mode, loss: LossKind, graphs: Vec<Graph>, seed: u64) -> (Vec<Matrix>, Program) {
    let mut rng = SplitMix64::new(seed);
    let others: Vec<Graph> = graphs
        .iter()
        .map(|g| g.with_attributes(random(g.node_count(), g.attr_dim(), &mut rng)))
        .collect();
    let enc = Encoder::new(spec, 3, "").expect("valid spec");
    let params = enc.init(seed);
    let names: Vec<String> = params.iter().map(|(k, _)| k.clone()).collect();
    // Random biases too: zero biases can leave a graph embedding at the
    // origin, where cosine normalization has no derivative.
    let inputs: Vec<Matrix> = params.iter().map(|(_, m)| random(m.rows(), m.cols(), &mut rng)).collect();
    let program: Program = Box::new(move |t, vars| {
        let bound = BoundParams::from_vars(names.iter().cloned().zip(vars.iter().copied()));
        let bi = GraphBatch::new(&graphs.iter().collect::<Vec<_>>())?;
        let bj = GraphBatch::new(&others.iter().collect::<Vec<_>>())?;
        let ri = enc.forward(t, &bound, &bi)?;
        let rj = enc.forward(t, &bound, &bj)?;
        let batches = apply_mode(t, &ModeSpec::new(mode), (&bi, &bj), &ri, &rj, &Vec::new())?;
        combined_loss(t, &batches, loss, &ScoreFn::cosine(0.5), None, false)
    });
    (inputs, program)
}

fn composed_programs(rng: &mut SplitMix64) -> Vec<(&'static str, Vec<Matrix>, Program)> {
    let graphs = fixture_graphs(rng);
    let gcn = EncoderSpec {
        projection_layers: 1,
        ..EncoderSpec::gcn(2, 4)
    };
    let gin = EncoderSpec {
        projection_layers: 1,
        ..EncoderSpec::gin(2, 4)
    };
    let (gcn_in, gcn_prog) = encoder_program(gcn, Mode::GlobalGlobal, LossKind::Infonce, graphs.clone(), 21);
    let (gin_in, gin_prog) = encoder_program(gin, Mode::LocalGlobal, LossKind::Negfree, graphs, 22);
    let x = random(3, 3, rng);
    let mlp: Program = Box::new(move |t, v| {
        let x = t.constant(x.clone());
        let h = t.matmul(x, v[0])?;
        let h = t.add_row(h, v[1])?;
        let h = t.relu(h)?;
        let o = t.matmul(h, v[2])?;
        let o = t.add_row(o, v[3])?;
        weighted(t, o, 23)
    });
    vec![
        ("gcn2+infonce(global_global)", gcn_in, gcn_prog),
        ("gin2+negfree(local_global)", gin_in, gin_prog),
        ("mlp3x3", vec![random(3, 3, rng), random(1, 3, rng), random(3, 3, rng), random(1, 3, rng)], mlp),
    ]
}

/// Runs every check with central differences at [`SUITE_STEP`].
pub fn gradcheck_suite(seed: u64) -> Result<Vec<SuiteEntry>> {
    let mut rng = SplitMix64::new(seed);
    let mut programs = op_programs(&mut rng);
    programs.extend(composed_programs(&mut rng));
    programs
        .into_iter()
        .map(|(name, inputs, f)| {
            let report = gradcheck(|t, v| f(t, v), &inputs, SUITE_STEP, SUITE_TOLERANCE)?;
            Ok(SuiteEntry {
                name: name.to_string(),
                max_rel_error: report.max_rel_error(),
                checked: report.inputs.iter().map(|r| r.checked).sum(),
                excluded_kinks: report.inputs.iter().map(|r| r.excluded_kinks.len()).sum(),
                passed: report.passed(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_passes() {
        let entries = gradcheck_suite(0).unwrap();
        assert_eq!(entries.len(), 24);
        for e in &entries {
            assert!(e.passed, "{} rel error {}", e.name, e.max_rel_error);
            assert!(e.checked > 0, "{} checked nothing", e.name);
        }
    }
}
