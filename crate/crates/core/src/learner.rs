//! Constraint-based PAG learning in the FCI family.
//!
//! Skeleton search is order-independent: adjacency sets are frozen at the start
//! of every conditioning-set size and removals are applied after the level
//! completes. Candidate conditioning sets are enumerated in lexicographic node
//! order and the first separating set found is recorded.
//!
//! By default the Possible-D-SEP stage is skipped (conditioning sets stay within
//! adjacency neighbourhoods, as in RFCI-style searches). Orientation applies the
//! rules R1-R4 and R8-R10; R5-R7 only matter under selection bias, which is not
//! modelled here.

use std::collections::{BTreeMap, HashSet, VecDeque};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::ci::{CiTest, FisherZ};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Mark, MixedGraph};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerConfig {
    pub alpha: f64,
    /// Largest conditioning set tried; `None` for no bound.
    pub max_cond_size: Option<usize>,
    pub use_possible_dsep: bool,
    pub conservative_colliders: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { alpha: 0.05, max_cond_size: Some(3), use_possible_dsep: false, conservative_colliders: false }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    fn allows(&self, size: usize) -> bool {
        self.max_cond_size.is_none_or(|m| size <= m)
    }
}

/// Separating sets recorded for removed edges, keyed by unordered pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SepsetTable(BTreeMap<(usize, usize), Vec<usize>>);

impl SepsetTable {
    fn key(i: usize, j: usize) -> (usize, usize) {
        (i.min(j), i.max(j))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.0.get(&Self::key(i, j)).map(Vec::as_slice)
    }

    pub fn insert(&mut self, i: usize, j: usize, set: Vec<usize>) {
        self.0.insert(Self::key(i, j), set);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.0.iter()
    }
}

/// Calls `f` on every `k`-subset of `items` in lexicographic order until it
/// returns `Ok(true)`.
fn for_each_subset(items: &[usize], k: usize, mut f: impl FnMut(&[usize]) -> Result<bool>) -> Result<bool> {
    if k > items.len() {
        return Ok(false);
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        if f(&buf)? {
            return Ok(true);
        }
        // advance
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(false);
            }
            pos -= 1;
            if idx[pos] < items.len() - k + pos {
                idx[pos] += 1;
                for q in pos + 1..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

fn complete_circle_graph(names: &[String]) -> Result<MixedGraph> {
    let mut g = MixedGraph::empty(names)?;
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            g.set_edge(i, Mark::Circle, Mark::Circle, j);
        }
    }
    Ok(g)
}

/// First separating set of `(i, j)` drawn from the frozen neighbourhoods.
fn find_sepset(test: &dyn CiTest, adj: &[Vec<usize>], i: usize, j: usize, level: usize) -> Result<Option<Vec<usize>>> {
    for (a, b) in [(i, j), (j, i)] {
        let cands: Vec<usize> = adj[a].iter().copied().filter(|&v| v != b).collect();
        let mut found = None;
        for_each_subset(&cands, level, |k| {
            if test.test(i, j, k)?.independent {
                found = Some(k.to_vec());
                Ok(true)
            } else {
                Ok(false)
            }
        })?;
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// Adjacency search from the complete graph. Returns an all-circle skeleton and
/// the separating sets of removed edges.
pub fn learn_skeleton(test: &dyn CiTest, config: &LearnerConfig) -> Result<(MixedGraph, SepsetTable)> {
    config.validate()?;
    let mut g = complete_circle_graph(test.variables())?;
    let mut sepsets = SepsetTable::default();
    let n = g.n();
    let mut level = 0;
    while config.allows(level) {
        let adj: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).collect()).collect();
        let pairs: Vec<(usize, usize)> = g
            .edges()
            .into_iter()
            .map(|(i, _, _, j)| (i, j))
            .filter(|&(i, j)| adj[i].len() > level || adj[j].len() > level)
            .collect();
        if pairs.is_empty() {
            break;
        }
        #[cfg(feature = "parallel")]
        let iter = pairs.par_iter();
        #[cfg(not(feature = "parallel"))]
        let iter = pairs.iter();
        let found: Vec<Option<Vec<usize>>> =
            iter.map(|&(i, j)| find_sepset(test, &adj, i, j, level)).collect::<Result<_>>()?;
        for (&(i, j), set) in pairs.iter().zip(found) {
            if let Some(set) = set {
                g.remove_edge(i, j);
                sepsets.insert(i, j, set);
            }
        }
        level += 1;
    }
    Ok((g, sepsets))
}

/// Unshielded triples `(i, k, j)` with `i < j`.
fn unshielded_triples(g: &MixedGraph) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 0..g.n() {
        let nb: Vec<usize> = g.neighbors(k).collect();
        for (a, &i) in nb.iter().enumerate() {
            for &j in &nb[a + 1..] {
                if !g.is_adjacent(i, j) {
                    out.push((i, k, j));
                }
            }
        }
    }
    out
}

/// Orients every unshielded triple `i - k - j` with `k` outside the recorded
/// separating set of `(i, j)` as `i *-> k <-* j`.
pub fn orient_v_structures(skeleton: &MixedGraph, sepsets: &SepsetTable) -> MixedGraph {
    let mut g = skeleton.clone();
    for (i, k, j) in unshielded_triples(skeleton) {
        let in_sepset = sepsets.get(i, j).is_some_and(|s| s.contains(&k));
        if !in_sepset {
            g.set_mark(i, k, Mark::Arrow);
            g.set_mark(j, k, Mark::Arrow);
        }
    }
    g
}

/// Collider decision for an unshielded triple using every separating set
/// found among subsets of the neighbourhoods of `i` and `j`.
fn conservative_status(
    test: &dyn CiTest,
    g: &MixedGraph,
    config: &LearnerConfig,
    (i, k, j): (usize, usize, usize),
) -> Result<Option<bool>> {
    let mut with_k = false;
    let mut without_k = false;
    for (a, b) in [(i, j), (j, i)] {
        let cands: Vec<usize> = g.neighbors(a).filter(|&v| v != b).collect();
        let mut size = 0;
        while size <= cands.len() && config.allows(size) {
            for_each_subset(&cands, size, |s| {
                if test.test(i, j, s)?.independent {
                    if s.contains(&k) {
                        with_k = true;
                    } else {
                        without_k = true;
                    }
                }
                Ok(with_k && without_k)
            })?;
            size += 1;
        }
    }
    Ok(match (with_k, without_k) {
        (true, true) => None,
        (true, false) => Some(false),
        (false, true) => Some(true),
        // no separating set among neighbours: fall back to the recorded one
        (false, false) => Some(true),
    })
}

/// `Possible-D-SEP(x)` in a partially oriented graph: nodes reachable by a path
/// on which every interior node is a collider or lies in a triangle.
pub fn possible_d_sep(g: &MixedGraph, x: usize) -> Vec<usize> {
    let n = g.n();
    let mut member = vec![false; n];
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut queue = VecDeque::new();
    for b in g.neighbors(x) {
        member[b] = true;
        seen.insert((x, b));
        queue.push_back((x, b));
    }
    while let Some((a, b)) = queue.pop_front() {
        for c in g.neighbors(b) {
            if c == a || c == x {
                continue;
            }
            let collider = g.mark_at(a, b) == Some(Mark::Arrow) && g.mark_at(c, b) == Some(Mark::Arrow);
            if (collider || g.is_adjacent(a, c)) && seen.insert((b, c)) {
                member[c] = true;
                queue.push_back((b, c));
            }
        }
    }
    (0..n).filter(|&v| member[v]).collect()
}

fn possible_d_sep_stage(
    test: &dyn CiTest,
    g: &mut MixedGraph,
    sepsets: &mut SepsetTable,
    config: &LearnerConfig,
) -> Result<()> {
    let pds: Vec<Vec<usize>> = (0..g.n()).map(|v| possible_d_sep(g, v)).collect();
    for (i, _, _, j) in g.edges() {
        'sides: for (a, b) in [(i, j), (j, i)] {
            let cands: Vec<usize> = pds[a].iter().copied().filter(|&v| v != b && v != a).collect();
            let mut size = 1;
            while size <= cands.len() && config.allows(size) {
                let mut found = None;
                for_each_subset(&cands, size, |s| {
                    if test.test(i, j, s)?.independent {
                        found = Some(s.to_vec());
                        Ok(true)
                    } else {
                        Ok(false)
                    }
                })?;
                if let Some(s) = found {
                    g.remove_edge(i, j);
                    sepsets.insert(i, j, s);
                    break 'sides;
                }
                size += 1;
            }
        }
    }
    Ok(())
}

struct Orienter<'a> {
    g: MixedGraph,
    sepsets: &'a SepsetTable,
    ambiguous: HashSet<(usize, usize, usize)>,
}

impl Orienter<'_> {
    fn mark(&self, other: usize, at: usize) -> Option<Mark> {
        self.g.mark_at(other, at)
    }

    fn is_ambiguous(&self, a: usize, b: usize, c: usize) -> bool {
        self.ambiguous.contains(&(a.min(c), b, a.max(c)))
    }

    /// Edge `a - b` may be part of a potentially directed path from `a` to `b`.
    fn pd(&self, a: usize, b: usize) -> bool {
        self.g.is_adjacent(a, b) && self.mark(b, a) != Some(Mark::Arrow) && self.mark(a, b) != Some(Mark::Tail)
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        self.g.neighbors(v).collect()
    }

    fn run(&mut self) {
        loop {
            let changed = self.r1() | self.r2() | self.r3() | self.r4() | self.r8() | self.r9() | self.r10();
            if !changed {
                break;
            }
        }
    }

    /// a *-> b o-* c, a and c not adjacent => b --> c
    fn r1(&mut self) -> bool {
        let mut changed = false;
        for b in 0..self.g.n() {
            let nb = self.neighbors(b);
            for &a in &nb {
                if self.mark(a, b) != Some(Mark::Arrow) {
                    continue;
                }
                for &c in &nb {
                    if c == a || self.g.is_adjacent(a, c) || self.mark(c, b) != Some(Mark::Circle) {
                        continue;
                    }
                    if self.is_ambiguous(a, b, c) {
                        continue;
                    }
                    self.g.set_mark(c, b, Mark::Tail);
                    self.g.set_mark(b, c, Mark::Arrow);
                    changed = true;
                }
            }
        }
        changed
    }

    /// a --> b *-> c or a *-> b --> c, with a *-o c => a *-> c
    fn r2(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.g.n() {
            for c in self.neighbors(a) {
                if self.mark(a, c) != Some(Mark::Circle) {
                    continue;
                }
                let fire = self.neighbors(a).into_iter().any(|b| {
                    b != c
                        && self.g.is_adjacent(b, c)
                        && ((self.g.is_directed(a, b) && self.mark(b, c) == Some(Mark::Arrow))
                            || (self.mark(a, b) == Some(Mark::Arrow) && self.g.is_directed(b, c)))
                });
                if fire {
                    self.g.set_mark(a, c, Mark::Arrow);
                    changed = true;
                }
            }
        }
        changed
    }

    /// a *-> b <-* c, a *-o t o-* c, a and c not adjacent, t *-o b => t *-> b
    fn r3(&mut self) -> bool {
        let mut changed = false;
        for b in 0..self.g.n() {
            let nb = self.neighbors(b);
            for &t in &nb {
                if self.mark(t, b) != Some(Mark::Circle) {
                    continue;
                }
                let fire = nb.iter().enumerate().any(|(x, &a)| {
                    nb[x + 1..].iter().any(|&c| {
                        a != t
                            && c != t
                            && !self.g.is_adjacent(a, c)
                            && self.mark(a, b) == Some(Mark::Arrow)
                            && self.mark(c, b) == Some(Mark::Arrow)
                            && self.mark(a, t) == Some(Mark::Circle)
                            && self.mark(c, t) == Some(Mark::Circle)
                    })
                });
                if fire {
                    self.g.set_mark(t, b, Mark::Arrow);
                    changed = true;
                }
            }
        }
        changed
    }

    /// Discriminating path rule.
    fn r4(&mut self) -> bool {
        let mut changed = false;
        let n = self.g.n();
        for c in 0..n {
            for b in self.neighbors(c) {
                if self.mark(c, b) != Some(Mark::Circle) {
                    continue;
                }
                for a in self.neighbors(b) {
                    if a == c || self.mark(b, a) != Some(Mark::Arrow) || !self.g.is_directed(a, c) {
                        continue;
                    }
                    let Some(theta) = self.discriminating_end(a, b, c) else { continue };
                    let Some(sep) = self.sepsets.get(theta, c) else { continue };
                    if sep.contains(&b) {
                        self.g.set_mark(c, b, Mark::Tail);
                        self.g.set_mark(b, c, Mark::Arrow);
                    } else {
                        self.g.set_mark(a, b, Mark::Arrow);
                        self.g.set_mark(c, b, Mark::Arrow);
                        self.g.set_mark(b, c, Mark::Arrow);
                    }
                    changed = true;
                    break;
                }
            }
        }
        changed
    }

    /// Far end `theta` of a discriminating path `<theta, .., a, b, c>` for `b`.
    fn discriminating_end(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        let n = self.g.n();
        let mut visited = vec![false; n];
        visited[a] = true;
        visited[b] = true;
        visited[c] = true;
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for t in self.neighbors(v) {
                if visited[t] || self.mark(t, v) != Some(Mark::Arrow) {
                    continue;
                }
                if !self.g.is_adjacent(t, c) {
                    return Some(t);
                }
                if self.g.is_directed(t, c) && self.mark(v, t) == Some(Mark::Arrow) {
                    visited[t] = true;
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// a o-> c with a --> b --> c or a -o b --> c => a --> c
    fn r8(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.g.n() {
            for c in self.neighbors(a) {
                if self.mark(c, a) != Some(Mark::Circle) || self.mark(a, c) != Some(Mark::Arrow) {
                    continue;
                }
                let fire = self.neighbors(a).into_iter().any(|b| {
                    b != c
                        && self.g.is_directed(b, c)
                        && self.mark(b, a) == Some(Mark::Tail)
                        && matches!(self.mark(a, b), Some(Mark::Arrow) | Some(Mark::Circle))
                });
                if fire {
                    self.g.set_mark(c, a, Mark::Tail);
                    changed = true;
                }
            }
        }
        changed
    }

    /// Whether an uncovered potentially directed path `<.., prev, cur, .., target>`
    /// continues from `cur` to `target`.
    fn upd_path_exists(&self, prev: usize, cur: usize, target: usize, on: &mut Vec<bool>) -> bool {
        for next in self.neighbors(cur) {
            if on[next] || self.g.is_adjacent(prev, next) || !self.pd(cur, next) {
                continue;
            }
            if next == target {
                return true;
            }
            on[next] = true;
            let found = self.upd_path_exists(cur, next, target, on);
            on[next] = false;
            if found {
                return true;
            }
        }
        false
    }

    /// a o-> c with an uncovered p.d. path <a, b, .., c>, b not adjacent to c => a --> c
    fn r9(&mut self) -> bool {
        let mut changed = false;
        let n = self.g.n();
        for a in 0..n {
            for c in self.neighbors(a) {
                if self.mark(c, a) != Some(Mark::Circle) || self.mark(a, c) != Some(Mark::Arrow) {
                    continue;
                }
                let fire = self.neighbors(a).into_iter().any(|b| {
                    if b == c || self.g.is_adjacent(b, c) || !self.pd(a, b) {
                        return false;
                    }
                    let mut on = vec![false; n];
                    on[a] = true;
                    on[b] = true;
                    self.upd_path_exists(a, b, c, &mut on)
                });
                if fire {
                    self.g.set_mark(c, a, Mark::Tail);
                    changed = true;
                }
            }
        }
        changed
    }

    /// Second nodes of uncovered p.d. paths from `a` to `target`.
    fn first_steps(&self, a: usize, target: usize) -> Vec<usize> {
        let n = self.g.n();
        self.neighbors(a)
            .into_iter()
            .filter(|&m| {
                if !self.pd(a, m) {
                    return false;
                }
                if m == target {
                    return true;
                }
                let mut on = vec![false; n];
                on[a] = true;
                on[m] = true;
                self.upd_path_exists(a, m, target, &mut on)
            })
            .collect()
    }

    /// a o-> c, b --> c <-- t, uncovered p.d. paths from a to b and to t whose
    /// second nodes are distinct and non-adjacent => a --> c
    fn r10(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.g.n() {
            for c in self.neighbors(a) {
                if self.mark(c, a) != Some(Mark::Circle) || self.mark(a, c) != Some(Mark::Arrow) {
                    continue;
                }
                let parents: Vec<usize> =
                    self.neighbors(c).into_iter().filter(|&p| p != a && self.g.is_directed(p, c)).collect();
                let mut fire = false;
                'pairs: for (x, &b) in parents.iter().enumerate() {
                    for &t in &parents[x + 1..] {
                        let m1 = self.first_steps(a, b);
                        if m1.is_empty() {
                            continue;
                        }
                        let m2 = self.first_steps(a, t);
                        for &mu in &m1 {
                            for &om in &m2 {
                                if mu != om && !self.g.is_adjacent(mu, om) {
                                    fire = true;
                                    break 'pairs;
                                }
                            }
                        }
                    }
                }
                if fire {
                    self.g.set_mark(c, a, Mark::Tail);
                    changed = true;
                }
            }
        }
        changed
    }
}

/// Applies the orientation rules to a fixpoint.
pub fn apply_orientation_rules(g: &MixedGraph, sepsets: &SepsetTable) -> MixedGraph {
    let mut o = Orienter { g: g.clone(), sepsets, ambiguous: HashSet::new() };
    o.run();
    o.g
}

/// Full search: skeleton, optional Possible-D-SEP pruning, colliders, rules.
pub fn learn_pag(test: &dyn CiTest, config: &LearnerConfig) -> Result<MixedGraph> {
    Ok(learn_pag_with_sepsets(test, config)?.0)
}

pub fn learn_pag_with_sepsets(test: &dyn CiTest, config: &LearnerConfig) -> Result<(MixedGraph, SepsetTable)> {
    let (mut skeleton, mut sepsets) = learn_skeleton(test, config)?;
    if config.use_possible_dsep {
        let oriented = orient_v_structures(&skeleton, &sepsets);
        let mut pruned = oriented.clone();
        possible_d_sep_stage(test, &mut pruned, &mut sepsets, config)?;
        for (i, _, _, j) in pruned.edges() {
            skeleton.set_edge(i, Mark::Circle, Mark::Circle, j);
        }
        for (i, _, _, j) in skeleton.edges() {
            if !pruned.is_adjacent(i, j) {
                skeleton.remove_edge(i, j);
            }
        }
    }
    let mut ambiguous = HashSet::new();
    let oriented = if config.conservative_colliders {
        let mut g = skeleton.clone();
        for triple in unshielded_triples(&skeleton) {
            match conservative_status(test, &skeleton, config, triple)? {
                Some(true) => {
                    let in_sepset = sepsets.get(triple.0, triple.2).is_some_and(|s| s.contains(&triple.1));
                    if !in_sepset {
                        g.set_mark(triple.0, triple.1, Mark::Arrow);
                        g.set_mark(triple.2, triple.1, Mark::Arrow);
                    }
                }
                Some(false) => {}
                None => {
                    ambiguous.insert(triple);
                }
            }
        }
        g
    } else {
        orient_v_structures(&skeleton, &sepsets)
    };
    let mut o = Orienter { g: oriented, sepsets: &sepsets, ambiguous };
    o.run();
    let pag = o.g;
    Ok((pag, sepsets))
}

/// Fisher-z backed search over every column of `data`.
pub fn learn_pag_from_data(data: &Dataset, config: &LearnerConfig) -> Result<MixedGraph> {
    let test = FisherZ::new(data, config.alpha)?;
    learn_pag(&test, config)
}
