//! Instrument validity in DAGs and conditioning-set discovery in MAGs and PAGs.

use crate::error::{Error, Result};
use crate::graph::{GraphKind, Mark, MixedGraph};
use crate::projection::is_visible;
use crate::separation::{d_sep_set, is_separated};

/// Treatment, outcome and candidate instrument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IvRoles {
    pub w: usize,
    pub y: usize,
    pub s: usize,
}

impl IvRoles {
    pub fn by_name(g: &MixedGraph, w: &str, y: &str, s: &str) -> Result<Self> {
        let roles = IvRoles { w: g.require(w)?, y: g.require(y)?, s: g.require(s)? };
        roles.validate(g)?;
        Ok(roles)
    }

    pub fn validate(&self, g: &MixedGraph) -> Result<()> {
        for v in [self.w, self.y, self.s] {
            g.check_index(v)?;
        }
        if self.w == self.y || self.w == self.s || self.y == self.s {
            return Err(Error::InvalidRoles(format!(
                "treatment `{}`, outcome `{}` and instrument `{}` must be distinct",
                g.name(self.w),
                g.name(self.y),
                g.name(self.s)
            )));
        }
        Ok(())
    }
}

fn validate_z(g: &MixedGraph, roles: &IvRoles, z: &[usize]) -> Result<()> {
    for &v in z {
        g.check_index(v)?;
        if v == roles.w || v == roles.y || v == roles.s {
            return Err(Error::InvalidConditioningSet(format!(
                "`{}` is the treatment, outcome or instrument",
                g.name(v)
            )));
        }
    }
    Ok(())
}

/// The DAG with the edge `w --> y` removed.
fn without_direct_effect(g: &MixedGraph, roles: &IvRoles) -> MixedGraph {
    let mut cut = g.clone();
    if g.is_directed(roles.w, roles.y) {
        cut.remove_edge(roles.w, roles.y);
    }
    cut
}

/// Standard instrument: `s` causes `w`, and once `w --> y` is removed no path
/// between `s` and `y` is open given the empty set. An open path in that graph
/// is either a directed path from `s` to `y` avoiding the edge `w --> y`
/// (exclusion violated) or a path through a common cause (exogeneity violated).
pub fn is_standard_iv(g: &MixedGraph, roles: &IvRoles) -> Result<bool> {
    g.require_kind(GraphKind::Dag)?;
    roles.validate(g)?;
    let causes_w = g.ancestor_mask(&[roles.w])[roles.s];
    let cut = without_direct_effect(g, roles);
    Ok(causes_w && is_separated(&cut, roles.s, roles.y, &[]))
}

/// Conditional instrument given `z`.
pub fn is_conditional_iv(g: &MixedGraph, roles: &IvRoles, z: &[usize]) -> Result<bool> {
    g.require_kind(GraphKind::Dag)?;
    roles.validate(g)?;
    validate_z(g, roles, z)?;
    let relevant = !is_separated(g, roles.s, roles.w, z);
    let cut = without_direct_effect(g, roles);
    let excluded = is_separated(&cut, roles.s, roles.y, z);
    let de_y = g.descendant_mask(&[roles.y]);
    let pretreatment = z.iter().all(|&v| !de_y[v]);
    Ok(relevant && excluded && pretreatment)
}

/// Ancestral instrument given `z`: a conditional instrument whose conditioning
/// set lies in `An(y) ∪ An(s)`.
pub fn is_ancestral_iv_dag(g: &MixedGraph, roles: &IvRoles, z: &[usize]) -> Result<bool> {
    if !is_conditional_iv(g, roles, z)? {
        return Ok(false);
    }
    let an = g.ancestor_mask(&[roles.y, roles.s]);
    Ok(z.iter().all(|&v| an[v]))
}

/// Replaces the `w`-`y` edge by `w <-> y` and drops any `s`-`y` edge.
///
/// The `w`-`y` edge must be able to carry an effect of `w` on `y` (no arrowhead
/// at `w`, no tail at `y`). A fully directed `w --> y` must not be (definitely)
/// visible.
pub fn manipulate(g: &MixedGraph, roles: &IvRoles) -> Result<MixedGraph> {
    roles.validate(g)?;
    let (w, y, s) = (roles.w, roles.y, roles.s);
    let (Some(at_w), Some(at_y)) = (g.mark_at(y, w), g.mark_at(w, y)) else {
        return Err(Error::MissingEdge(g.name(w).into(), g.name(y).into()));
    };
    if at_w == Mark::Arrow || at_y == Mark::Tail {
        return Err(Error::NotPossibleParent(g.name(w).into(), g.name(y).into()));
    }
    if g.is_directed(w, y) && is_visible(g, w, y)? {
        return Err(Error::VisibleEdge(g.name(w).into(), g.name(y).into()));
    }
    let mut out = g.clone();
    out.set_edge(w, Mark::Arrow, Mark::Arrow, y);
    out.remove_edge(s, y);
    Ok(out)
}

/// `D-SEP(s, y)` in the manipulated MAG, without `w`, `s` and `y`.
pub fn conditioning_set_mag(m: &MixedGraph, roles: &IvRoles) -> Result<Vec<usize>> {
    if m.has_circles() {
        return Err(Error::Kind { kind: GraphKind::Mag.to_string(), violation: "circle marks present".into() });
    }
    let manipulated = manipulate(m, roles)?;
    let mut z = d_sep_set(&manipulated, roles.s, roles.y)?;
    z.retain(|&v| v != roles.w && v != roles.s && v != roles.y);
    Ok(z)
}

/// `PossAn({s, y}) \ {w, s, y}` in the manipulated PAG.
pub fn conditioning_set_pag(p: &MixedGraph, roles: &IvRoles) -> Result<Vec<usize>> {
    let manipulated = manipulate(p, roles)?;
    let mut z = manipulated.possible_ancestors(&[roles.s, roles.y])?;
    z.retain(|&v| v != roles.w && v != roles.s && v != roles.y);
    Ok(z)
}
