//! Browser bindings for the static demo page in `www/`. Each export takes the
//! text graph format and returns plain text for display.

use aivip::{
    conditioning_set_mag, conditioning_set_pag, dag_to_mag, m_separated, IvRoles, MixedGraph, ProjectionSpec, SepQuery,
};
use wasm_bindgen::prelude::*;

fn words(list: &str) -> Vec<&str> {
    list.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
}

pub fn project_text(graph: &str, latent: &str) -> aivip::Result<String> {
    let dag = MixedGraph::parse(graph)?;
    Ok(dag_to_mag(&ProjectionSpec::new(dag, &words(latent))?).to_string())
}

pub fn msep_text(graph: &str, x: &str, y: &str, z: &str) -> aivip::Result<String> {
    let g = MixedGraph::parse(graph)?;
    let r = m_separated(&g, &SepQuery::by_name(&g, x.trim(), y.trim(), &words(z))?)?;
    Ok(match r.witness {
        Some(p) => format!("separated=false\nwitness={}\n", p.render(&g)),
        None => "separated=true\n".to_string(),
    })
}

/// `kind` is `mag` (D-SEP rule) or anything else for the PAG rule.
pub fn discover_text(graph: &str, kind: &str, treatment: &str, outcome: &str, iv: &str) -> aivip::Result<String> {
    let g = MixedGraph::parse(graph)?;
    let roles = IvRoles::by_name(&g, treatment.trim(), outcome.trim(), iv.trim())?;
    let z = if kind.eq_ignore_ascii_case("mag") {
        conditioning_set_mag(&g, &roles)?
    } else {
        conditioning_set_pag(&g, &roles)?
    };
    Ok(format!("z={}\n", g.names_of(&z).join(",")))
}

fn js<T>(r: aivip::Result<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Latent projection of a DAG onto its observed nodes.
#[wasm_bindgen]
pub fn project(graph: &str, latent: &str) -> Result<String, JsError> {
    js(project_text(graph, latent))
}

#[wasm_bindgen]
pub fn msep(graph: &str, x: &str, y: &str, z: &str) -> Result<String, JsError> {
    js(msep_text(graph, x, y, z))
}

#[wasm_bindgen]
pub fn discover(graph: &str, kind: &str, treatment: &str, outcome: &str, iv: &str) -> Result<String, JsError> {
    js(discover_text(graph, kind, treatment, outcome, iv))
}
