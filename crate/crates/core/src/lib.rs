//! Discovery of conditioning sets for ancestral instrumental variables from
//! observational data with latent confounders, and two-stage effect estimation.
//!
//! Graphs of every kind (DAG, MAG, PAG) share one [`MixedGraph`] type with
//! per-endpoint marks. Ancestor and descendant sets are reflexive: every node
//! is its own ancestor and descendant.
//!
//! ```
//! use aivip::{dag_to_mag, MixedGraph, ProjectionSpec};
//!
//! let dag = MixedGraph::parse("nodes: S W Y U\nS --> W\nW --> Y\nU --> W\nU --> Y").unwrap();
//! let mag = dag_to_mag(&ProjectionSpec::new(dag, &["U"]).unwrap());
//! assert_eq!(mag.to_string(), "nodes: S W Y\nS --> W\nS --> Y\nW --> Y\n");
//! ```

pub mod ci;
pub mod data;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod iv;
pub mod learner;
pub mod projection;
pub mod separation;
pub mod simulation;

pub use ci::{CiDecision, CiTest, FisherZ, OracleTest};
pub use data::{format_sig, Dataset};
pub use error::{Error, Result};
pub use estimator::{
    aivip, aivip_with_test, bias, ols, roles_by_name, tsls, tslsciv, two_stage, wald_estimate, EstimateResult,
    EstimatorSpec, FirstStage, Method, OlsFit,
};
pub use graph::{EdgeSpec, GraphKind, KindViolation, Mark, MixedGraph, Path, Relations, TripleStatus};
pub use iv::{
    conditioning_set_mag, conditioning_set_pag, is_ancestral_iv_dag, is_conditional_iv, is_standard_iv, manipulate,
    IvRoles,
};
pub use learner::{
    apply_orientation_rules, learn_pag, learn_pag_from_data, learn_pag_with_sepsets, learn_skeleton,
    orient_v_structures, possible_d_sep, LearnerConfig, SepsetTable,
};
pub use projection::{
    dag_to_mag, equivalence_class, inducing_path_exists, inducing_path_exists_bruteforce, is_definitely_visible,
    is_visible, markov_equivalent, pag_oracle, ProjectionSpec,
};
pub use separation::{d_sep_set, d_separated, m_separated, m_separated_bruteforce, SepQuery, SepResult};
pub use simulation::{
    generate, generate_with_latents, oracle_conditioning_set, replication_seed, run_benchmark, true_dag, BenchMethod,
    BenchmarkConfig, BenchmarkReport, BenchmarkRow, Group, SimSpec, Variant, BETA_TRUE,
};
