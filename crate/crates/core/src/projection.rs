//! Latent projection of DAGs onto MAGs, edge visibility, Markov equivalence
//! and an exhaustive PAG oracle for small graphs.

use crate::error::{Error, Result};
use crate::graph::{mask_to_vec, vec_to_mask, GraphKind, Mark, MixedGraph, TripleStatus};
use crate::separation::{for_each_simple_path, is_separated};

/// Node limit for [`markov_equivalent`].
pub const EQUIVALENCE_LIMIT: usize = 10;
/// Node limit for [`pag_oracle`].
pub const PAG_ORACLE_LIMIT: usize = 5;

/// A DAG with its nodes split into observed and latent sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub dag: MixedGraph,
    pub observed: Vec<usize>,
    pub latent: Vec<usize>,
}

impl ProjectionSpec {
    pub fn new(dag: MixedGraph, latent: &[&str]) -> Result<Self> {
        dag.require_kind(GraphKind::Dag)?;
        let latent_idx = dag.require_all(latent)?;
        let mask = vec_to_mask(dag.n(), &latent_idx);
        let observed = (0..dag.n()).filter(|&v| !mask[v]).collect();
        Ok(ProjectionSpec { dag, observed, latent: mask_to_vec(&mask) })
    }

    pub fn observed_names(&self) -> Vec<String> {
        self.dag.names_of(&self.observed)
    }

    pub fn latent_names(&self) -> Vec<String> {
        self.dag.names_of(&self.latent)
    }
}

/// Whether an inducing path relative to `u` joins `x` and `y`: every
/// non-endpoint is in `u` or is a collider, and every collider is an ancestor
/// of `x` or `y`.
///
/// Decided through the equivalent separation criterion: such a path exists iff
/// `x` and `y` are m-connected given `An({x, y}) \ (u ∪ {x, y})`.
pub fn inducing_path_exists(g: &MixedGraph, x: usize, y: usize, u: &[usize]) -> Result<bool> {
    validate_inducing_args(g, x, y, u)?;
    if g.is_adjacent(x, y) {
        return Ok(true);
    }
    let in_u = vec_to_mask(g.n(), u);
    let z: Vec<usize> =
        mask_to_vec(&g.ancestor_mask(&[x, y])).into_iter().filter(|&v| v != x && v != y && !in_u[v]).collect();
    Ok(!is_separated(g, x, y, &z))
}

fn validate_inducing_args(g: &MixedGraph, x: usize, y: usize, u: &[usize]) -> Result<()> {
    g.check_index(x)?;
    g.check_index(y)?;
    for &v in u {
        g.check_index(v)?;
    }
    if x == y {
        return Err(Error::InvalidQuery("inducing path endpoints coincide".into()));
    }
    if u.contains(&x) || u.contains(&y) {
        return Err(Error::InvalidQuery("latent set contains an endpoint".into()));
    }
    if g.has_circles() {
        let (i, _, _, j) = g.edges().into_iter().find(|&(_, a, b, _)| a == Mark::Circle || b == Mark::Circle).unwrap();
        return Err(Error::CircleMark(g.name(i).into(), g.name(j).into()));
    }
    Ok(())
}

/// Inducing-path check by enumerating simple paths. Exponential; for tests
/// and small graphs.
pub fn inducing_path_exists_bruteforce(g: &MixedGraph, x: usize, y: usize, u: &[usize]) -> Result<bool> {
    validate_inducing_args(g, x, y, u)?;
    let in_u = vec_to_mask(g.n(), u);
    let anc = g.ancestor_mask(&[x, y]);
    let mut found = false;
    for_each_simple_path(g, x, y, &mut |p| {
        let ok = p.windows(3).all(|t| {
            let collider = g.triple_status(t[0], t[1], t[2]) == TripleStatus::Collider;
            (in_u[t[1]] || collider) && (!collider || anc[t[1]])
        });
        found |= ok;
        ok
    });
    Ok(found)
}

/// Latent projection of a DAG onto its observed nodes.
///
/// Observed `x`, `y` are adjacent iff an inducing path relative to the latent
/// set joins them; the edge gets a tail at `x` iff `x ∈ An(y)` in the DAG and an
/// arrowhead otherwise.
pub fn dag_to_mag(spec: &ProjectionSpec) -> MixedGraph {
    let dag = &spec.dag;
    let obs = &spec.observed;
    let mut mag = MixedGraph::empty(obs.iter().map(|&v| dag.name(v))).expect("unique names");
    let ancestors: Vec<Vec<bool>> = obs.iter().map(|&v| dag.ancestor_mask(&[v])).collect();
    for a in 0..obs.len() {
        for b in (a + 1)..obs.len() {
            let (x, y) = (obs[a], obs[b]);
            if !inducing_path_exists(dag, x, y, &spec.latent).expect("validated spec") {
                continue;
            }
            let x_anc_y = ancestors[b][x];
            let y_anc_x = ancestors[a][y];
            let mark_x = if x_anc_y { Mark::Tail } else { Mark::Arrow };
            let mark_y = if y_anc_x { Mark::Tail } else { Mark::Arrow };
            mag.set_edge(a, mark_x, mark_y, b);
        }
    }
    mag
}

fn visibility(g: &MixedGraph, vi: usize, vj: usize) -> bool {
    let is_parent_of_j = |c: usize| g.is_directed(c, vj);
    let outside = |k: usize| k != vj && !g.is_adjacent(k, vj);
    let n = g.n();
    let mut queued = vec![false; n];
    let mut queue = Vec::new();
    for a in g.neighbors(vi) {
        if g.mark_at(a, vi) != Some(Mark::Arrow) {
            continue;
        }
        if outside(a) {
            return true;
        }
        if is_parent_of_j(a) && g.mark_at(vi, a) == Some(Mark::Arrow) && !queued[a] {
            queued[a] = true;
            queue.push(a);
        }
    }
    // colliders on a collider path into vi, all parents of vj
    while let Some(c) = queue.pop() {
        for b in g.neighbors(c) {
            if b == vi || g.mark_at(b, c) != Some(Mark::Arrow) {
                continue;
            }
            if outside(b) {
                return true;
            }
            if is_parent_of_j(b) && g.mark_at(c, b) == Some(Mark::Arrow) && !queued[b] {
                queued[b] = true;
                queue.push(b);
            }
        }
    }
    false
}

/// Visibility of `vi --> vj` in a MAG.
pub fn is_visible(m: &MixedGraph, vi: usize, vj: usize) -> Result<bool> {
    m.check_index(vi)?;
    m.check_index(vj)?;
    if !m.is_adjacent(vi, vj) {
        return Err(Error::MissingEdge(m.name(vi).into(), m.name(vj).into()));
    }
    if !m.is_directed(vi, vj) {
        return Err(Error::NotDirected(m.name(vi).into(), m.name(vj).into()));
    }
    Ok(visibility(m, vi, vj))
}

/// Definite visibility of `vi --> vj` in a PAG: the visibility conditions must
/// hold using only marks already present in the PAG.
pub fn is_definitely_visible(p: &MixedGraph, vi: usize, vj: usize) -> Result<bool> {
    is_visible(p, vi, vj)
}

/// Whether two MAGs entail the same m-separations.
pub fn markov_equivalent(m1: &MixedGraph, m2: &MixedGraph) -> Result<bool> {
    if m1.names() != m2.names() {
        return Err(Error::NodeSetMismatch(format!("{:?} vs {:?}", m1.names(), m2.names())));
    }
    if m1.n() > EQUIVALENCE_LIMIT {
        return Err(Error::TooLarge { nodes: m1.n(), limit: EQUIVALENCE_LIMIT });
    }
    Ok(SeparationModel::of(m1).matches(m2))
}

/// Complete table of m-separation statements `(x, y | z)` of a graph.
pub(crate) struct SeparationModel {
    n: usize,
    bits: Vec<bool>,
}

impl SeparationModel {
    pub(crate) fn of(g: &MixedGraph) -> Self {
        let n = g.n();
        let mut bits = Vec::new();
        for_each_statement(n, |x, y, z| {
            bits.push(is_separated(g, x, y, z));
            true
        });
        SeparationModel { n, bits }
    }

    pub(crate) fn matches(&self, g: &MixedGraph) -> bool {
        debug_assert_eq!(g.n(), self.n);
        let mut idx = 0;
        let mut ok = true;
        for_each_statement(self.n, |x, y, z| {
            ok = is_separated(g, x, y, z) == self.bits[idx];
            idx += 1;
            ok
        });
        ok
    }
}

/// Enumerates `(x, y, z)` with `x < y` and `z` ranging over subsets of the
/// remaining nodes, stopping when `f` returns false.
fn for_each_statement(n: usize, mut f: impl FnMut(usize, usize, &[usize]) -> bool) {
    let mut z = Vec::with_capacity(n);
    for x in 0..n {
        for y in (x + 1)..n {
            let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
            for bits in 0u32..(1 << rest.len()) {
                z.clear();
                z.extend(rest.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).map(|(_, &v)| v));
                if !f(x, y, &z) {
                    return;
                }
            }
        }
    }
}

/// `true` for ancestral and maximal graphs.
pub(crate) fn is_mag(g: &MixedGraph) -> bool {
    g.ancestral_violation().is_none() && crate::separation::first_inseparable_pair(g).is_none()
}

/// All MAGs Markov equivalent to `m`, enumerated over the skeleton of `m`.
pub fn equivalence_class(m: &MixedGraph) -> Result<Vec<MixedGraph>> {
    if m.n() > PAG_ORACLE_LIMIT {
        return Err(Error::TooLarge { nodes: m.n(), limit: PAG_ORACLE_LIMIT });
    }
    m.require_kind(GraphKind::Mag)?;
    let model = SeparationModel::of(m);
    let pairs: Vec<(usize, usize)> = m.edges().into_iter().map(|(i, _, _, j)| (i, j)).collect();
    const STATES: [(Mark, Mark); 3] =
        [(Mark::Tail, Mark::Arrow), (Mark::Arrow, Mark::Tail), (Mark::Arrow, Mark::Arrow)];
    let mut members = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    let mut cand = m.clone();
    for code in 0..total {
        let mut c = code;
        for &(i, j) in &pairs {
            let (mi, mj) = STATES[c % 3];
            c /= 3;
            cand.set_edge(i, mi, mj, j);
        }
        if is_mag(&cand) && model.matches(&cand) {
            members.push(cand.clone());
        }
    }
    Ok(members)
}

/// PAG of the Markov equivalence class of `m`, by exhaustive enumeration.
///
/// A mark is kept when every member of the class agrees on it and replaced by
/// a circle otherwise.
pub fn pag_oracle(m: &MixedGraph) -> Result<MixedGraph> {
    let class = equivalence_class(m)?;
    Ok(merge_class(m, &class))
}

pub(crate) fn merge_class(m: &MixedGraph, class: &[MixedGraph]) -> MixedGraph {
    let mut pag = m.clone();
    for (i, _, _, j) in m.edges() {
        for (a, b) in [(i, j), (j, i)] {
            let first = class[0].mark_at(a, b);
            if class.iter().any(|g| g.mark_at(a, b) != first) {
                pag.set_mark(a, b, Mark::Circle);
            }
        }
    }
    pag
}
