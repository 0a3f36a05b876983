//! Mixed graphs with per-endpoint marks.
//!
//! One representation covers DAGs, MAGs and PAGs. Every edge stores the mark
//! found at each of its two endpoints: a tail (`-`), an arrowhead (`>`/`<`)
//! or a circle (`o`).
//!
//! Ancestor and descendant sets are **reflexive**: `v` is always a member of
//! its own ancestors and descendants. All set-valued results are returned as
//! node indices sorted in construction order.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Dag,
    Mag,
    Pag,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Dag => "DAG",
            GraphKind::Mag => "MAG",
            GraphKind::Pag => "PAG",
        })
    }
}

/// An edge as given to [`MixedGraph::new`]: `(a, mark at a, mark at b, b)`.
pub type EdgeSpec<S> = (S, Mark, Mark, S);

#[derive(Clone, Debug)]
pub struct MixedGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// `marks[i * n + j]` is the mark at `j` on the edge between `i` and `j`.
    marks: Vec<Option<Mark>>,
}

impl PartialEq for MixedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.marks == other.marks
    }
}

impl Eq for MixedGraph {}

/// Parents, children, spouses, adjacents, ancestors and descendants of a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relations {
    pub parents: Vec<usize>,
    pub children: Vec<usize>,
    pub spouses: Vec<usize>,
    pub adjacents: Vec<usize>,
    pub ancestors: Vec<usize>,
    pub descendants: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleStatus {
    Collider,
    DefiniteNonCollider,
    Uncertain,
}

/// A sequence of distinct nodes, successive ones adjacent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(g: &MixedGraph, nodes: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least one edge".into()));
        }
        let mut seen = vec![false; g.n()];
        for &v in &nodes {
            if v >= g.n() {
                return Err(Error::InvalidPath(format!("node index {v} out of range")));
            }
            if seen[v] {
                return Err(Error::InvalidPath(format!("node `{}` repeats", g.name(v))));
            }
            seen[v] = true;
        }
        for w in nodes.windows(2) {
            if !g.is_adjacent(w[0], w[1]) {
                return Err(Error::InvalidPath(format!("`{}` and `{}` are not adjacent", g.name(w[0]), g.name(w[1]))));
            }
        }
        Ok(Path(nodes))
    }

    pub fn from_names(g: &MixedGraph, names: &[&str]) -> Result<Self> {
        let nodes = names.iter().map(|s| g.require(s)).collect::<Result<Vec<_>>>()?;
        Path::new(g, nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    /// Renders the path with its edge marks, e.g. `S --> W <-- U --> Y`.
    pub fn render(&self, g: &MixedGraph) -> String {
        let mut out = g.name(self.0[0]).to_string();
        for w in self.0.windows(2) {
            let (a, b) = (w[0], w[1]);
            let left = match g.mark_at(b, a) {
                Some(Mark::Arrow) => '<',
                Some(Mark::Circle) => 'o',
                _ => '-',
            };
            let right = match g.mark_at(a, b) {
                Some(Mark::Arrow) => '>',
                Some(Mark::Circle) => 'o',
                _ => '-',
            };
            out.push_str(&format!(" {left}-{right} {}", g.name(b)));
        }
        out
    }
}

/// First violation found by [`MixedGraph::check_kind`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KindViolation {
    /// Edge carrying a circle mark in a DAG or MAG.
    CircleMark(usize, usize),
    /// DAG edge that is not `a --> b`.
    NotDirected(usize, usize),
    /// Node sequence of a directed cycle, first node repeated at the end.
    DirectedCycle(Vec<usize>),
    /// `a <-> b` with `b` an ancestor of `a`.
    AlmostDirectedCycle(usize, usize),
    /// Non-adjacent pair not m-separated by any set.
    NotMaximal(usize, usize),
}

impl KindViolation {
    pub fn describe(&self, g: &MixedGraph) -> String {
        match self {
            KindViolation::CircleMark(a, b) => {
                format!("circle mark on edge {}-{}", g.name(*a), g.name(*b))
            }
            KindViolation::NotDirected(a, b) => {
                format!("edge {}-{} is not directed", g.name(*a), g.name(*b))
            }
            KindViolation::DirectedCycle(c) => {
                format!("directed cycle <{}>", c.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join(","))
            }
            KindViolation::AlmostDirectedCycle(a, b) => format!(
                "almost directed cycle: {} <-> {} with {} an ancestor of {}",
                g.name(*a),
                g.name(*b),
                g.name(*b),
                g.name(*a)
            ),
            KindViolation::NotMaximal(a, b) => {
                format!("non-adjacent pair {}, {} cannot be m-separated", g.name(*a), g.name(*b))
            }
        }
    }
}

impl MixedGraph {
    pub fn new<S, I, E>(nodes: I, edges: E) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = S>,
        E: IntoIterator<Item = EdgeSpec<S>>,
    {
        let mut g = MixedGraph::empty(nodes)?;
        for (a, ma, mb, b) in edges {
            let i = g.require(a.as_ref())?;
            let j = g.require(b.as_ref())?;
            g.try_add_edge(i, ma, mb, j)?;
        }
        Ok(g)
    }

    /// Graph with the given nodes and no edges.
    pub fn empty<S, I>(nodes: I) -> Result<Self>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = S>,
    {
        let mut names = Vec::new();
        let mut index = HashMap::new();
        for s in nodes {
            let s = s.as_ref();
            if s.is_empty() {
                return Err(Error::EmptyNodeName);
            }
            if index.insert(s.to_string(), names.len()).is_some() {
                return Err(Error::DuplicateNode(s.to_string()));
            }
            names.push(s.to_string());
        }
        let n = names.len();
        Ok(MixedGraph { names, index, marks: vec![None; n * n] })
    }

    pub(crate) fn try_add_edge(&mut self, i: usize, mi: Mark, mj: Mark, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::SelfLoop(self.names[i].clone()));
        }
        if self.is_adjacent(i, j) {
            return Err(Error::DuplicateEdge(self.names[i].clone(), self.names[j].clone()));
        }
        self.set_edge(i, mi, mj, j);
        Ok(())
    }

    pub(crate) fn set_edge(&mut self, i: usize, mi: Mark, mj: Mark, j: usize) {
        let n = self.n();
        self.marks[j * n + i] = Some(mi);
        self.marks[i * n + j] = Some(mj);
    }

    /// Sets the mark at `at` on the existing edge between `other` and `at`.
    pub(crate) fn set_mark(&mut self, other: usize, at: usize, m: Mark) {
        let n = self.n();
        debug_assert!(self.marks[other * n + at].is_some());
        self.marks[other * n + at] = Some(m);
    }

    pub(crate) fn remove_edge(&mut self, i: usize, j: usize) {
        let n = self.n();
        self.marks[i * n + j] = None;
        self.marks[j * n + i] = None;
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn require_all<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|s| self.require(s.as_ref())).collect()
    }

    pub(crate) fn check_index(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownNode(format!("#{v}")))
        }
    }

    pub fn names_of(&self, set: &[usize]) -> Vec<String> {
        set.iter().map(|&v| self.names[v].clone()).collect()
    }

    /// Mark at `at` on the edge between `other` and `at`, if the edge exists.
    #[inline]
    pub fn mark_at(&self, other: usize, at: usize) -> Option<Mark> {
        self.marks[other * self.n() + at]
    }

    #[inline]
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.mark_at(a, b).is_some()
    }

    /// `a --> b`.
    #[inline]
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.mark_at(b, a) == Some(Mark::Tail) && self.mark_at(a, b) == Some(Mark::Arrow)
    }

    /// `a <-> b`.
    #[inline]
    pub fn is_bidirected(&self, a: usize, b: usize) -> bool {
        self.mark_at(b, a) == Some(Mark::Arrow) && self.mark_at(a, b) == Some(Mark::Arrow)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&u| self.is_adjacent(v, u))
    }

    /// All edges `(i, mark at i, mark at j, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, Mark, Mark, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                if let (Some(mi), Some(mj)) = (self.mark_at(j, i), self.mark_at(i, j)) {
                    out.push((i, mi, mj, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.marks.iter().filter(|m| m.is_some()).count() / 2
    }

    pub fn has_circles(&self) -> bool {
        self.marks.contains(&Some(Mark::Circle))
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.is_directed(u, v)).collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.is_directed(v, u)).collect()
    }

    pub fn spouses(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.is_bidirected(v, u)).collect()
    }

    /// Reflexive ancestor mask of a seed set.
    pub fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, |g, u, v| g.is_directed(u, v))
    }

    /// Reflexive descendant mask of a seed set.
    pub fn descendant_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.closure(seeds, |g, u, v| g.is_directed(v, u))
    }

    /// Nodes `u` reaching a seed through steps `step(u, v)` where `v` is already reached.
    #[allow(clippy::needless_range_loop)]
    fn closure(&self, seeds: &[usize], step: impl Fn(&Self, usize, usize) -> bool) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seeds {
            if !mask[s] {
                mask[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for u in 0..self.n() {
                if !mask[u] && step(self, u, v) {
                    mask[u] = true;
                    queue.push_back(u);
                }
            }
        }
        mask
    }

    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        mask_to_vec(&self.ancestor_mask(&[v]))
    }

    pub fn descendants(&self, v: usize) -> Vec<usize> {
        mask_to_vec(&self.descendant_mask(&[v]))
    }

    pub fn relations(&self, v: usize) -> Result<Relations> {
        self.check_index(v)?;
        Ok(Relations {
            parents: self.parents(v),
            children: self.children(v),
            spouses: self.spouses(v),
            adjacents: self.neighbors(v).collect(),
            ancestors: self.ancestors(v),
            descendants: self.descendants(v),
        })
    }

    /// Nodes with a possibly directed path into one of `targets` (reflexive).
    ///
    /// A path `v = v0, v1, .., vk` is possibly directed when no edge `vi - vi+1`
    /// has an arrowhead at `vi`.
    pub fn possible_ancestors(&self, targets: &[usize]) -> Result<Vec<usize>> {
        for &t in targets {
            self.check_index(t)?;
        }
        let mask = self.closure(targets, |g, u, v| matches!(g.mark_at(v, u), Some(m) if m != Mark::Arrow));
        Ok(mask_to_vec(&mask))
    }

    /// Status of the interior node `path[i]`.
    pub fn classify_triple(&self, path: &Path, i: usize) -> Result<TripleStatus> {
        let p = path.nodes();
        if i == 0 || i + 1 >= p.len() {
            return Err(Error::NotInterior { index: i, len: p.len() });
        }
        Ok(self.triple_status(p[i - 1], p[i], p[i + 1]))
    }

    pub(crate) fn triple_status(&self, a: usize, b: usize, c: usize) -> TripleStatus {
        let ma = self.mark_at(a, b);
        let mc = self.mark_at(c, b);
        match (ma, mc) {
            (Some(Mark::Arrow), Some(Mark::Arrow)) => TripleStatus::Collider,
            (Some(Mark::Tail), _) | (_, Some(Mark::Tail)) => TripleStatus::DefiniteNonCollider,
            (Some(Mark::Circle), Some(Mark::Circle)) if !self.is_adjacent(a, c) => TripleStatus::DefiniteNonCollider,
            _ => TripleStatus::Uncertain,
        }
    }

    /// Some directed cycle, as a node sequence closed by its first node.
    pub fn find_directed_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.n();
        let mut state = vec![0u8; n];
        let mut stack_path: Vec<usize> = Vec::new();
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut iters: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            stack_path.push(root);
            while let Some(&mut (v, ref mut next)) = iters.last_mut() {
                let mut advanced = false;
                while *next < n {
                    let u = *next;
                    *next += 1;
                    if self.is_directed(v, u) {
                        if state[u] == 1 {
                            let pos = stack_path.iter().position(|&x| x == u).unwrap();
                            let mut cycle = stack_path[pos..].to_vec();
                            cycle.push(u);
                            return Some(cycle);
                        }
                        if state[u] == 0 {
                            state[u] = 1;
                            stack_path.push(u);
                            iters.push((u, 0));
                            advanced = true;
                            break;
                        }
                    }
                }
                if !advanced {
                    state[v] = 2;
                    stack_path.pop();
                    iters.pop();
                }
            }
        }
        None
    }

    /// Ancestral-graph check: no circles, no directed or almost directed cycle.
    pub fn ancestral_violation(&self) -> Option<KindViolation> {
        for (i, mi, mj, j) in self.edges() {
            if mi == Mark::Circle || mj == Mark::Circle {
                return Some(KindViolation::CircleMark(i, j));
            }
        }
        if let Some(c) = self.find_directed_cycle() {
            return Some(KindViolation::DirectedCycle(c));
        }
        for (i, mi, mj, j) in self.edges() {
            if mi == Mark::Arrow && mj == Mark::Arrow {
                if self.ancestor_mask(&[i])[j] {
                    return Some(KindViolation::AlmostDirectedCycle(i, j));
                }
                if self.ancestor_mask(&[j])[i] {
                    return Some(KindViolation::AlmostDirectedCycle(j, i));
                }
            }
        }
        None
    }

    /// Checks the structural requirements of `kind` and reports the first violation.
    ///
    /// PAGs are only checked syntactically (every endpoint carries some mark), which
    /// always holds by construction.
    pub fn check_kind(&self, kind: GraphKind) -> std::result::Result<(), KindViolation> {
        match kind {
            GraphKind::Dag => {
                for (i, mi, mj, j) in self.edges() {
                    if mi == Mark::Circle || mj == Mark::Circle {
                        return Err(KindViolation::CircleMark(i, j));
                    }
                    if !(mi == Mark::Tail && mj == Mark::Arrow || mi == Mark::Arrow && mj == Mark::Tail) {
                        return Err(KindViolation::NotDirected(i, j));
                    }
                }
                match self.find_directed_cycle() {
                    Some(c) => Err(KindViolation::DirectedCycle(c)),
                    None => Ok(()),
                }
            }
            GraphKind::Mag => {
                if let Some(v) = self.ancestral_violation() {
                    return Err(v);
                }
                if let Some((a, b)) = crate::separation::first_inseparable_pair(self) {
                    return Err(KindViolation::NotMaximal(a, b));
                }
                Ok(())
            }
            GraphKind::Pag => Ok(()),
        }
    }

    /// Like [`check_kind`](Self::check_kind), as an [`Error`].
    pub fn require_kind(&self, kind: GraphKind) -> Result<()> {
        self.check_kind(kind).map_err(|v| Error::Kind { kind: kind.to_string(), violation: v.describe(self) })
    }

    /// Subgraph induced by `keep`, in original node order.
    pub fn induced(&self, keep: &[usize]) -> MixedGraph {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut g = MixedGraph::empty(keep.iter().map(|&v| self.names[v].as_str())).expect("names already unique");
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                if let (Some(mi), Some(mj)) = (self.mark_at(j, i), self.mark_at(i, j)) {
                    g.set_edge(a, mi, mj, b);
                }
            }
        }
        g
    }

    /// Parses the text graph format.
    ///
    /// ```text
    /// nodes: S W Y U
    /// # comment
    /// S --> W
    /// U --> W
    /// W <-> Y
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut graph: Option<MixedGraph> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let g = match graph.as_mut() {
                None => {
                    let rest = line.strip_prefix("nodes:").ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: "expected `nodes: ...` declaration first".into(),
                    })?;
                    graph = Some(
                        MixedGraph::empty(rest.split_whitespace())
                            .map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?,
                    );
                    continue;
                }
                Some(g) => g,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Parse { line: lineno, msg: format!("expected `A <edge> B`, got `{line}`") });
            }
            let (ma, mb) = parse_edge_token(toks[1])
                .ok_or_else(|| Error::Parse { line: lineno, msg: format!("unknown edge token `{}`", toks[1]) })?;
            let err = |e: Error| Error::Parse { line: lineno, msg: e.to_string() };
            let i = g.require(toks[0]).map_err(err)?;
            let j = g.require(toks[2]).map_err(err)?;
            g.try_add_edge(i, ma, mb, j).map_err(err)?;
        }
        graph.ok_or(Error::Parse { line: 0, msg: "missing `nodes:` declaration".into() })
    }
}

fn parse_edge_token(tok: &str) -> Option<(Mark, Mark)> {
    let b = tok.as_bytes();
    if b.len() != 3 || b[1] != b'-' {
        return None;
    }
    let left = match b[0] {
        b'<' => Mark::Arrow,
        b'o' => Mark::Circle,
        b'-' => Mark::Tail,
        _ => return None,
    };
    let right = match b[2] {
        b'>' => Mark::Arrow,
        b'o' => Mark::Circle,
        b'-' => Mark::Tail,
        _ => return None,
    };
    Some((left, right))
}

fn edge_token(left: Mark, right: Mark) -> String {
    let l = match left {
        Mark::Arrow => '<',
        Mark::Circle => 'o',
        Mark::Tail => '-',
    };
    let r = match right {
        Mark::Arrow => '>',
        Mark::Circle => 'o',
        Mark::Tail => '-',
    };
    format!("{l}-{r}")
}

fn is_canonical(left: Mark, right: Mark) -> bool {
    use Mark::*;
    matches!((left, right), (Tail, Arrow) | (Arrow, Arrow) | (Circle, Arrow) | (Circle, Circle) | (Arrow, Circle))
}

impl fmt::Display for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nodes:")?;
        for name in &self.names {
            write!(f, " {name}")?;
        }
        writeln!(f)?;
        for (i, mi, mj, j) in self.edges() {
            let (a, ma, mb, b) =
                if is_canonical(mi, mj) || !is_canonical(mj, mi) { (i, mi, mj, j) } else { (j, mj, mi, i) };
            writeln!(f, "{} {} {}", self.names[a], edge_token(ma, mb), self.names[b])?;
        }
        Ok(())
    }
}

pub(crate) fn mask_to_vec(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

pub(crate) fn vec_to_mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}
