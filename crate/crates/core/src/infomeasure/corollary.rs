//! Exact checks of the view, encoder and mode optimality conditions on
//! enumerable synthetic processes.
//!
//! Views, representations and aggregations are modelled as deterministic
//! maps to integer keys, so every information quantity is an exact entropy
//! computation over the process support.

use std::sync::Arc;

use serde::Serialize;

use super::entropy_of;
use crate::error::{Error, Result};
use crate::graph::{Graph, SyntheticProcess, MAX_SUPPORT};

pub type Key = Vec<i64>;
pub type KeyFn = Arc<dyn Fn(&Graph) -> Key + Send + Sync>;
pub type KeyMap = Arc<dyn Fn(&[i64]) -> Key + Send + Sync>;

const TIE: f64 = 1e-9;

#[derive(Clone)]
pub struct NamedKeyFn {
    pub name: String,
    pub f: KeyFn,
}

impl NamedKeyFn {
    pub fn new(name: impl Into<String>, f: impl Fn(&Graph) -> Key + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }
}

#[derive(Clone)]
pub struct NamedKeyMap {
    pub name: String,
    pub f: KeyMap,
}

impl NamedKeyMap {
    pub fn new(name: impl Into<String>, f: impl Fn(&[i64]) -> Key + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn identity() -> Self {
        Self::new("identity", |k| k.to_vec())
    }

    pub fn constant() -> Self {
        Self::new("constant", |_| Vec::new())
    }
}

/// Injective encoding of a whole graph: node count, edge list, attribute bits.
pub fn graph_key(g: &Graph) -> Key {
    let mut key = topology_key(g);
    key.extend(g.attributes().data().iter().map(|v| v.to_bits() as i64));
    key
}

/// Node count followed by the sorted edge list.
pub fn topology_key(g: &Graph) -> Key {
    let mut key = vec![g.node_count() as i64];
    for (u, v) in g.edges() {
        key.push(u as i64);
        key.push(v as i64);
    }
    key
}

/// One attribute column, as raw bits.
pub fn attribute_column_key(g: &Graph, col: usize) -> Key {
    let x = g.attributes();
    (0..x.rows()).map(|r| x.get(r, col).to_bits() as i64).collect()
}

struct Support {
    probs: Vec<f64>,
    labels: Vec<usize>,
    graphs: Vec<Graph>,
}

fn enumerate(process: &SyntheticProcess) -> Result<Support> {
    if process.support_size() > MAX_SUPPORT {
        return Err(Error::Domain(format!(
            "support of {} exceeds the enumeration cap {MAX_SUPPORT}",
            process.support_size()
        )));
    }
    let mut s = Support { probs: Vec::new(), labels: Vec::new(), graphs: Vec::new() };
    for (f, p, g) in process.enumerate() {
        s.probs.push(p);
        s.labels.push(f.label);
        s.graphs.push(g);
    }
    Ok(s)
}

fn h1<A: Clone + Eq + std::hash::Hash>(a: &[A], p: &[f64]) -> f64 {
    entropy_of(a.iter().cloned().zip(p.iter().copied()))
}

fn h2<A: Clone + Eq + std::hash::Hash, B: Clone + Eq + std::hash::Hash>(a: &[A], b: &[B], p: &[f64]) -> f64 {
    entropy_of(a.iter().cloned().zip(b.iter().cloned()).zip(p.iter().copied()))
}

fn h3<A, B, C>(a: &[A], b: &[B], c: &[C], p: &[f64]) -> f64
where
    A: Clone + Eq + std::hash::Hash,
    B: Clone + Eq + std::hash::Hash,
    C: Clone + Eq + std::hash::Hash,
{
    entropy_of(
        a.iter()
            .cloned()
            .zip(b.iter().cloned())
            .zip(c.iter().cloned())
            .zip(p.iter().copied()),
    )
}

fn mi<A: Clone + Eq + std::hash::Hash, B: Clone + Eq + std::hash::Hash>(a: &[A], b: &[B], p: &[f64]) -> f64 {
    (h1(a, p) + h1(b, p) - h2(a, b, p)).max(0.0)
}

/// `I(a; b | c)`.
fn cmi<A, B, C>(a: &[A], b: &[B], c: &[C], p: &[f64]) -> f64
where
    A: Clone + Eq + std::hash::Hash,
    B: Clone + Eq + std::hash::Hash,
    C: Clone + Eq + std::hash::Hash,
{
    (h2(a, c, p) + h2(b, c, p) - h3(a, b, c, p) - h1(c, p)).max(0.0)
}

/// Venn-diagram regions for two views and the label.
///
/// `a = I(v_i; y | v_j)`, `b = I(v_j; y | v_i)`, `c = I(v_i; v_j | y)`,
/// `d = I(v_i; y) - a` (shared by all three), `e = I(G; y) - (a + b + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VennRegions {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairInfo {
    pub i: usize,
    pub j: usize,
    pub desc: String,
    pub i_vi_vj: f64,
    pub i_vi_y: f64,
    pub i_vj_y: f64,
    pub h_vi: f64,
    pub h_vj: f64,
    /// Both views keep all label information: `I(v; y) = I(G; y)`.
    pub feasible: bool,
    pub regions: VennRegions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary1Report {
    pub i_g_y: f64,
    pub h_g: f64,
    /// Unordered pairs `i <= j` of the view maps.
    pub pairs: Vec<PairInfo>,
    /// Feasible pairs minimizing `I(v_i; v_j)`, indices into `pairs`.
    pub min_shared_optima: Vec<usize>,
    /// Among `min_shared_optima`, the pair with the smallest
    /// `H(v_i) + H(v_j)`, when that is unique.
    pub optimum: Option<usize>,
}

impl Corollary1Report {
    pub fn optimum_names(&self) -> Option<&str> {
        self.optimum.map(|k| self.pairs[k].desc.as_str())
    }
}

/// Exhaustive search over pairs of view maps for the views that keep all
/// label information while sharing as little as possible.
///
/// Minimal sharing alone cannot separate a view from a deterministic
/// function of it when both carry the same shared information, so the
/// smallest total view entropy breaks the tie.
pub fn verify_corollary1(process: &SyntheticProcess, view_fns: &[NamedKeyFn]) -> Result<Corollary1Report> {
    if view_fns.is_empty() {
        return Err(Error::Domain("no view maps".into()));
    }
    let s = enumerate(process)?;
    let p = &s.probs;
    let g_keys: Vec<Key> = s.graphs.iter().map(graph_key).collect();
    let i_g_y = mi(&g_keys, &s.labels, p);
    let h_g = h1(&g_keys, p);
    let keys: Vec<Vec<Key>> = view_fns
        .iter()
        .map(|v| s.graphs.iter().map(|g| (v.f)(g)).collect())
        .collect();

    let mut pairs = Vec::new();
    for i in 0..view_fns.len() {
        for j in i..view_fns.len() {
            let (ki, kj) = (&keys[i], &keys[j]);
            let i_vi_y = mi(ki, &s.labels, p);
            let i_vj_y = mi(kj, &s.labels, p);
            let a = cmi(ki, &s.labels, kj, p);
            let b = cmi(kj, &s.labels, ki, p);
            let c = cmi(ki, kj, &s.labels, p);
            let d = i_vi_y - a;
            pairs.push(PairInfo {
                i,
                j,
                desc: format!("({}, {})", view_fns[i].name, view_fns[j].name),
                i_vi_vj: mi(ki, kj, p),
                i_vi_y,
                i_vj_y,
                h_vi: h1(ki, p),
                h_vj: h1(kj, p),
                feasible: (i_vi_y - i_g_y).abs() <= TIE && (i_vj_y - i_g_y).abs() <= TIE,
                regions: VennRegions { a, b, c, d, e: i_g_y - (a + b + d) },
            });
        }
    }
    let best = pairs
        .iter()
        .filter(|q| q.feasible)
        .map(|q| q.i_vi_vj)
        .fold(f64::INFINITY, f64::min);
    let min_shared_optima: Vec<usize> = (0..pairs.len())
        .filter(|&k| pairs[k].feasible && pairs[k].i_vi_vj <= best + TIE)
        .collect();
    let smallest = min_shared_optima
        .iter()
        .map(|&k| pairs[k].h_vi + pairs[k].h_vj)
        .fold(f64::INFINITY, f64::min);
    let finalists: Vec<usize> = min_shared_optima
        .iter()
        .copied()
        .filter(|&k| pairs[k].h_vi + pairs[k].h_vj <= smallest + TIE)
        .collect();
    Ok(Corollary1Report {
        i_g_y,
        h_g,
        pairs,
        min_shared_optima,
        optimum: (finalists.len() == 1).then(|| finalists[0]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncoderInfo {
    pub name: String,
    /// `I(f(v_i*); v_j*)`.
    pub i_f_vj: f64,
    /// `I(f(v_i*); v_i*)`, which equals `H(f(v_i*))`.
    pub i_f_vi: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary2Report {
    pub i_vi_vj: f64,
    pub encoders: Vec<EncoderInfo>,
    /// Feasible encoders minimizing `I(f(v_i*); v_i*)`.
    pub optima: Vec<usize>,
}

/// Feasible encoders keep everything the optimal views share; the optimum
/// keeps the least of view i beyond that.
pub fn verify_corollary2(
    process: &SyntheticProcess,
    vi_star: &NamedKeyFn,
    vj_star: &NamedKeyFn,
    encoder_fns: &[NamedKeyMap],
) -> Result<Corollary2Report> {
    let s = enumerate(process)?;
    let p = &s.probs;
    let ki: Vec<Key> = s.graphs.iter().map(|g| (vi_star.f)(g)).collect();
    let kj: Vec<Key> = s.graphs.iter().map(|g| (vj_star.f)(g)).collect();
    let i_vi_vj = mi(&ki, &kj, p);
    let encoders: Vec<EncoderInfo> = encoder_fns
        .iter()
        .map(|e| {
            let z: Vec<Key> = ki.iter().map(|k| (e.f)(k)).collect();
            let i_f_vj = mi(&z, &kj, p);
            EncoderInfo {
                name: e.name.clone(),
                i_f_vj,
                i_f_vi: mi(&z, &ki, p),
                feasible: (i_f_vj - i_vi_vj).abs() <= TIE,
            }
        })
        .collect();
    let best = encoders
        .iter()
        .filter(|e| e.feasible)
        .map(|e| e.i_f_vi)
        .fold(f64::INFINITY, f64::min);
    let optima = (0..encoders.len())
        .filter(|&k| encoders[k].feasible && encoders[k].i_f_vi <= best + TIE)
        .collect();
    Ok(Corollary2Report { i_vi_vj, encoders, optima })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationInfo {
    pub name: String,
    /// `I(c(z_i*); c(z_j*))`.
    pub i_ci_cj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary3Report {
    pub aggregations: Vec<AggregationInfo>,
    /// Indices sorted by `I` descending, ties by name.
    pub ranking: Vec<usize>,
    /// Every aggregation within tolerance of the maximum.
    pub optima: Vec<usize>,
}

/// Ranks aggregations (applied to both representations) by how much
/// information the aggregated pair still shares.
pub fn verify_corollary3(
    process: &SyntheticProcess,
    zi_star: &NamedKeyFn,
    zj_star: &NamedKeyFn,
    aggregation_fns: &[NamedKeyMap],
) -> Result<Corollary3Report> {
    let s = enumerate(process)?;
    let p = &s.probs;
    let zi: Vec<Key> = s.graphs.iter().map(|g| (zi_star.f)(g)).collect();
    let zj: Vec<Key> = s.graphs.iter().map(|g| (zj_star.f)(g)).collect();
    let aggregations: Vec<AggregationInfo> = aggregation_fns
        .iter()
        .map(|c| {
            let ci: Vec<Key> = zi.iter().map(|k| (c.f)(k)).collect();
            let cj: Vec<Key> = zj.iter().map(|k| (c.f)(k)).collect();
            AggregationInfo { name: c.name.clone(), i_ci_cj: mi(&ci, &cj, p) }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..aggregations.len()).collect();
    ranking.sort_by(|&x, &y| {
        let (a, b) = (&aggregations[x], &aggregations[y]);
        if (a.i_ci_cj - b.i_ci_cj).abs() <= TIE {
            a.name.cmp(&b.name)
        } else {
            b.i_ci_cj.total_cmp(&a.i_ci_cj)
        }
    });
    let best = aggregations.iter().map(|a| a.i_ci_cj).fold(f64::NEG_INFINITY, f64::max);
    let optima = (0..aggregations.len())
        .filter(|&k| aggregations[k].i_ci_cj >= best - TIE)
        .collect();
    Ok(Corollary3Report { aggregations, ranking, optima })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_view_shares_everything() {
        let p = SyntheticProcess::two_factor();
        let r = verify_corollary1(&p, &[NamedKeyFn::new("identity", graph_key)]).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert!(r.pairs[0].feasible);
        assert!((r.pairs[0].i_vi_vj - r.h_g).abs() < 1e-12);
        // 32 equally likely graphs.
        assert!((r.h_g - 32f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn regions_reconstruct_mutual_informations() {
        let p = SyntheticProcess::two_factor();
        let views = [
            NamedKeyFn::new("keep-all", graph_key),
            NamedKeyFn::new("col0", |g| attribute_column_key(g, 0)),
            NamedKeyFn::new("topology+col1", |g| {
                let mut k = topology_key(g);
                k.extend(attribute_column_key(g, 1));
                k
            }),
        ];
        let r = verify_corollary1(&p, &views).unwrap();
        for q in &r.pairs {
            let v = q.regions;
            assert!((v.a + v.d - q.i_vi_y).abs() < 1e-12);
            assert!((v.b + v.d - q.i_vj_y).abs() < 1e-12);
            assert!((v.c + v.d - q.i_vi_vj).abs() < 1e-12);
            assert!(q.i_vi_y <= r.i_g_y + 1e-12);
        }
    }

    #[test]
    fn aggregation_ranking_ties_by_name() {
        let p = SyntheticProcess::two_factor();
        let z = NamedKeyFn::new("topology", topology_key);
        let r = verify_corollary3(
            &p,
            &z,
            &z,
            &[NamedKeyMap::identity(), NamedKeyMap::constant(), NamedKeyMap::new("copy", |k| k.to_vec())],
        )
        .unwrap();
        assert_eq!(r.ranking, vec![2, 0, 1]);
        assert_eq!(r.optima, vec![0, 2]);
        assert_eq!(r.aggregations[1].i_ci_cj, 0.0);
    }
}
