//! d-separation, m-separation and D-SEP sets.
//!
//! The fast test walks `(node, entered-through-arrowhead)` states: a walk may
//! pass a non-collider outside `Z`, or a collider lying in `An(Z)`. Such a walk
//! exists iff an m-connecting path exists. Witness paths are then recovered by
//! a depth-first search restricted to `An({x, y} ∪ Z)`, which contains every
//! node of any m-connecting path.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{mask_to_vec, vec_to_mask, GraphKind, Mark, MixedGraph, Path, TripleStatus};

/// Node limit for exhaustive path enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SepQuery {
    pub x: usize,
    pub y: usize,
    pub z: Vec<usize>,
}

impl SepQuery {
    pub fn new(x: usize, y: usize, z: impl Into<Vec<usize>>) -> Self {
        SepQuery { x, y, z: z.into() }
    }

    pub fn by_name(g: &MixedGraph, x: &str, y: &str, z: &[&str]) -> Result<Self> {
        Ok(SepQuery { x: g.require(x)?, y: g.require(y)?, z: g.require_all(z)? })
    }

    fn validate(&self, g: &MixedGraph) -> Result<()> {
        g.check_index(self.x)?;
        g.check_index(self.y)?;
        for &v in &self.z {
            g.check_index(v)?;
        }
        if self.x == self.y {
            return Err(Error::InvalidQuery(format!("x and y are both `{}`", g.name(self.x))));
        }
        if self.z.contains(&self.x) || self.z.contains(&self.y) {
            return Err(Error::InvalidQuery("conditioning set contains an endpoint".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SepResult {
    pub separated: bool,
    /// m-connecting path, present iff not separated.
    pub witness: Option<Path>,
}

fn require_oriented(g: &MixedGraph) -> Result<()> {
    for (i, mi, mj, j) in g.edges() {
        if mi == Mark::Circle || mj == Mark::Circle {
            return Err(Error::CircleMark(g.name(i).into(), g.name(j).into()));
        }
    }
    Ok(())
}

/// d-separation in a DAG.
pub fn d_separated(g: &MixedGraph, q: &SepQuery) -> Result<SepResult> {
    g.require_kind(GraphKind::Dag)?;
    q.validate(g)?;
    Ok(separation_with_witness(g, q.x, q.y, &q.z))
}

/// m-separation in an ancestral graph.
pub fn m_separated(g: &MixedGraph, q: &SepQuery) -> Result<SepResult> {
    require_oriented(g)?;
    q.validate(g)?;
    Ok(separation_with_witness(g, q.x, q.y, &q.z))
}

fn separation_with_witness(g: &MixedGraph, x: usize, y: usize, z: &[usize]) -> SepResult {
    if is_separated(g, x, y, z) {
        SepResult { separated: true, witness: None }
    } else {
        let witness = connecting_path(g, x, y, z).expect("an m-connecting walk implies an m-connecting path");
        SepResult { separated: false, witness: Some(witness) }
    }
}

/// Separation decision only, no validation. The graph must carry no circle marks.
pub(crate) fn is_separated(g: &MixedGraph, x: usize, y: usize, z: &[usize]) -> bool {
    let n = g.n();
    let in_z = vec_to_mask(n, z);
    let an_z = g.ancestor_mask(z);
    // visited[2 * v + into]
    let mut visited = vec![false; 2 * n];
    let mut queue = VecDeque::new();
    for u in g.neighbors(x) {
        let into = g.mark_at(x, u) == Some(Mark::Arrow);
        let s = 2 * u + into as usize;
        if !visited[s] {
            visited[s] = true;
            queue.push_back((u, into));
        }
    }
    while let Some((v, into)) = queue.pop_front() {
        if v == y {
            return false;
        }
        for w in g.neighbors(v) {
            let collider = into && g.mark_at(w, v) == Some(Mark::Arrow);
            let open = if collider { an_z[v] } else { !in_z[v] };
            if !open {
                continue;
            }
            let w_into = g.mark_at(v, w) == Some(Mark::Arrow);
            let s = 2 * w + w_into as usize;
            if !visited[s] {
                visited[s] = true;
                queue.push_back((w, w_into));
            }
        }
    }
    true
}

/// Depth-first search for a simple m-connecting path.
fn connecting_path(g: &MixedGraph, x: usize, y: usize, z: &[usize]) -> Option<Path> {
    let n = g.n();
    let in_z = vec_to_mask(n, z);
    let an_z = g.ancestor_mask(z);
    let mut seeds = z.to_vec();
    seeds.extend([x, y]);
    let allowed = g.ancestor_mask(&seeds);
    let mut on_path = vec![false; n];
    let mut path = vec![x];
    on_path[x] = true;

    fn dfs(
        g: &MixedGraph,
        y: usize,
        allowed: &[bool],
        in_z: &[bool],
        an_z: &[bool],
        on_path: &mut [bool],
        path: &mut Vec<usize>,
    ) -> bool {
        let v = *path.last().unwrap();
        if v == y {
            return true;
        }
        for w in g.neighbors(v) {
            if on_path[w] || !allowed[w] {
                continue;
            }
            if path.len() >= 2 {
                let u = path[path.len() - 2];
                let collider = g.mark_at(u, v) == Some(Mark::Arrow) && g.mark_at(w, v) == Some(Mark::Arrow);
                let open = if collider { an_z[v] } else { !in_z[v] };
                if !open {
                    continue;
                }
            }
            on_path[w] = true;
            path.push(w);
            if dfs(g, y, allowed, in_z, an_z, on_path, path) {
                return true;
            }
            path.pop();
            on_path[w] = false;
        }
        false
    }

    if dfs(g, y, &allowed, &in_z, &an_z, &mut on_path, &mut path) {
        Some(Path::new(g, path).expect("dfs builds simple paths"))
    } else {
        None
    }
}

/// Reference m-separation: enumerates every simple path and applies the
/// blocking rules literally. Limited to [`BRUTE_FORCE_LIMIT`] nodes.
pub fn m_separated_bruteforce(g: &MixedGraph, q: &SepQuery) -> Result<SepResult> {
    if g.n() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { nodes: g.n(), limit: BRUTE_FORCE_LIMIT });
    }
    require_oriented(g)?;
    q.validate(g)?;
    let n = g.n();
    let in_z = vec_to_mask(n, &q.z);
    let descendants: Vec<Vec<bool>> = (0..n).map(|v| g.descendant_mask(&[v])).collect();
    let blocked_at = |a: usize, b: usize, c: usize| -> bool {
        match g.triple_status(a, b, c) {
            TripleStatus::Collider => !(0..n).any(|d| descendants[b][d] && in_z[d]),
            _ => in_z[b],
        }
    };
    let mut found = None;
    for_each_simple_path(g, q.x, q.y, &mut |p| {
        if p.windows(3).all(|t| !blocked_at(t[0], t[1], t[2])) {
            found = Some(p.to_vec());
            true
        } else {
            false
        }
    });
    Ok(match found {
        Some(p) => SepResult { separated: false, witness: Some(Path::new(g, p)?) },
        None => SepResult { separated: true, witness: None },
    })
}

/// Calls `visit` on every simple path from `x` to `y` until it returns `true`.
pub(crate) fn for_each_simple_path(g: &MixedGraph, x: usize, y: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(
        g: &MixedGraph,
        y: usize,
        on: &mut [bool],
        path: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        let v = *path.last().unwrap();
        if v == y {
            return visit(path);
        }
        for w in g.neighbors(v) {
            if on[w] {
                continue;
            }
            on[w] = true;
            path.push(w);
            let stop = rec(g, y, on, path, visit);
            path.pop();
            on[w] = false;
            if stop {
                return true;
            }
        }
        false
    }
    let mut on = vec![false; g.n()];
    on[x] = true;
    let mut path = vec![x];
    rec(g, y, &mut on, &mut path, visit);
}

/// `D-SEP(x, y)`: nodes other than `x` joined to `x` by a collider path whose
/// nodes all lie in `An(x) ∪ An(y)`.
pub fn d_sep_set(m: &MixedGraph, x: usize, y: usize) -> Result<Vec<usize>> {
    m.check_index(x)?;
    m.check_index(y)?;
    require_oriented(m)?;
    if x == y {
        return Err(Error::InvalidQuery("x and y coincide".into()));
    }
    if m.is_adjacent(x, y) {
        return Err(Error::AdjacentPair(m.name(x).into(), m.name(y).into()));
    }
    let n = m.n();
    let anc = m.ancestor_mask(&[x, y]);
    let mut member = vec![false; n];
    // visited[2 * v + into]: reached v with an arrowhead at v iff `into`
    let mut visited = vec![false; 2 * n];
    let mut queue = VecDeque::new();
    for v in m.neighbors(x) {
        if anc[v] {
            member[v] = true;
            let into = m.mark_at(x, v) == Some(Mark::Arrow);
            if !visited[2 * v + into as usize] {
                visited[2 * v + into as usize] = true;
                queue.push_back((v, into));
            }
        }
    }
    while let Some((v, into)) = queue.pop_front() {
        if !into {
            continue;
        }
        for w in m.neighbors(v) {
            if w == x || !anc[w] || m.mark_at(w, v) != Some(Mark::Arrow) {
                continue;
            }
            member[w] = true;
            let w_into = m.mark_at(v, w) == Some(Mark::Arrow);
            let s = 2 * w + w_into as usize;
            if !visited[s] {
                visited[s] = true;
                queue.push_back((w, w_into));
            }
        }
    }
    Ok(mask_to_vec(&member))
}

/// First non-adjacent pair (in node order) that no set m-separates.
///
/// In an ancestral graph a non-adjacent pair is m-separable iff it is
/// m-separated by `An({a, b}) \ {a, b}`.
pub(crate) fn first_inseparable_pair(g: &MixedGraph) -> Option<(usize, usize)> {
    for a in 0..g.n() {
        for b in (a + 1)..g.n() {
            if g.is_adjacent(a, b) {
                continue;
            }
            let mut z = mask_to_vec(&g.ancestor_mask(&[a, b]));
            z.retain(|&v| v != a && v != b);
            if !is_separated(g, a, b, &z) {
                return Some((a, b));
            }
        }
    }
    None
}
