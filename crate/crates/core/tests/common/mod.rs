#![allow(dead_code)]

use aivip::{Mark, MixedGraph, ProjectionSpec};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("V{i}")).collect()
}

/// DAG over `V0..V(n-1)` with a random causal order and edge probability `p`.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, p: f64) -> MixedGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let names = names(n);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(p) {
                edges.push((names[order[a]].as_str(), Mark::Tail, Mark::Arrow, names[order[b]].as_str()));
            }
        }
    }
    MixedGraph::new(names.iter().map(String::as_str), edges).unwrap()
}

/// Random DAG over `n_obs + n_lat` nodes with `n_lat` latents chosen uniformly.
pub fn random_latent_dag<R: Rng>(rng: &mut R, n_obs: usize, n_lat: usize, p: f64) -> ProjectionSpec {
    let n = n_obs + n_lat;
    let dag = random_dag(rng, n, p);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let latent: Vec<String> = idx[..n_lat].iter().map(|&v| dag.name(v).to_string()).collect();
    let latent: Vec<&str> = latent.iter().map(String::as_str).collect();
    ProjectionSpec::new(dag, &latent).unwrap()
}

/// Ancestral (not necessarily maximal) graph: forward edges in a random order,
/// each directed or bidirected, retried until no almost directed cycle exists.
pub fn random_ancestral_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> MixedGraph {
    loop {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let names = names(n);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random_bool(p) {
                    let head = if rng.random_bool(0.3) { Mark::Arrow } else { Mark::Tail };
                    edges.push((names[order[a]].as_str(), head, Mark::Arrow, names[order[b]].as_str()));
                }
            }
        }
        let g = MixedGraph::new(names.iter().map(String::as_str), edges).unwrap();
        if g.ancestral_violation().is_none() {
            return g;
        }
    }
}

/// Every subset of `items`, as sorted vectors.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1u32 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

pub fn sep(g: &MixedGraph, x: usize, y: usize, z: &[usize]) -> bool {
    aivip::m_separated(g, &aivip::SepQuery::new(x, y, z.to_vec())).unwrap().separated
}

/// MAG obtained by projecting a random latent DAG.
pub fn random_mag<R: Rng>(rng: &mut R, n_obs: usize, n_lat: usize, p: f64) -> MixedGraph {
    aivip::dag_to_mag(&random_latent_dag(rng, n_obs, n_lat, p))
}

/// A latent DAG with `W --> Y`, `W <-- U --> Y` (`U` latent), an instrument
/// candidate `S` that is a parent of `W` or shares a latent parent with it,
/// and `W` having `Y` as its only child. Extra observed nodes `X*` and latents
/// `L*` are wired at random in a causal order ending with `W, Y`.
pub struct IvInstance {
    pub spec: ProjectionSpec,
    pub w: usize,
    pub y: usize,
    pub s: usize,
    /// Observed nodes other than `S`, `W` and `Y`.
    pub x: Vec<usize>,
}

/// Random latent DAG with `W -> Y`, `W <- U -> Y` and `S` an ancestor or
/// spouse of `W`. With `closed_treatment` the parents of `W` are exactly `S`
/// and `U`.
pub fn random_iv_instance<R: Rng>(rng: &mut R, n_x: usize, n_lat: usize, p: f64, closed_treatment: bool) -> IvInstance {
    let mut pre: Vec<String> = vec!["S".into()];
    pre.extend((0..n_x).map(|k| format!("X{k}")));
    pre.extend((0..n_lat).map(|k| format!("L{k}")));
    pre.push("U".into());
    pre.shuffle(rng);
    let spouse = !closed_treatment && rng.random_bool(0.3);
    if spouse {
        pre.insert(0, "US".into());
    }
    let mut order = pre.clone();
    order.push("W".into());
    order.push("Y".into());
    let mut edges: Vec<(String, String)> =
        vec![("W".into(), "Y".into()), ("U".into(), "W".into()), ("U".into(), "Y".into())];
    if spouse {
        edges.push(("US".into(), "S".into()));
        edges.push(("US".into(), "W".into()));
    } else {
        edges.push(("S".into(), "W".into()));
    }
    for a in 0..order.len() {
        for b in (a + 1)..order.len() {
            let (from, to) = (&order[a], &order[b]);
            if from == "W" || from == "US" || to == "US" || (closed_treatment && to == "W") {
                continue;
            }
            if edges.iter().any(|(f, t)| f == from && t == to) {
                continue;
            }
            if rng.random_bool(p) {
                edges.push((from.clone(), to.clone()));
            }
        }
    }
    let dag = MixedGraph::new(
        order.iter().map(String::as_str),
        edges.iter().map(|(a, b)| (a.as_str(), Mark::Tail, Mark::Arrow, b.as_str())),
    )
    .unwrap();
    let mut latent: Vec<&str> = vec!["U"];
    let lat_names: Vec<String> = (0..n_lat).map(|k| format!("L{k}")).collect();
    latent.extend(lat_names.iter().map(String::as_str));
    if spouse {
        latent.push("US");
    }
    let spec = ProjectionSpec::new(dag, &latent).unwrap();
    let g = &spec.dag;
    let (w, y, s) = (g.require("W").unwrap(), g.require("Y").unwrap(), g.require("S").unwrap());
    let x = spec.observed.iter().copied().filter(|&v| v != w && v != y && v != s).collect();
    IvInstance { spec, w, y, s, x }
}

/// First subset of `inst.x` (by increasing size) that makes `S` an ancestral
/// instrument in the DAG.
pub fn ancestral_iv_set(inst: &IvInstance) -> Option<Vec<usize>> {
    let roles = aivip::IvRoles { w: inst.w, y: inst.y, s: inst.s };
    let mut all = subsets(&inst.x);
    all.sort_by_key(Vec::len);
    all.into_iter().find(|z| aivip::is_ancestral_iv_dag(&inst.spec.dag, &roles, z).unwrap())
}

/// Maps node indices of `from` to the same-named nodes of `to`.
pub fn translate(from: &MixedGraph, to: &MixedGraph, set: &[usize]) -> Vec<usize> {
    set.iter().map(|&v| to.require(from.name(v)).unwrap()).collect()
}
