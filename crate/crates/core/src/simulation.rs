//! Synthetic benchmark generators with latent confounding and the bias
//! benchmark runner.
//!
//! Observed columns are `S, X1..X(3+k), W, Y` where `k` is the number of noise
//! covariates. Latent columns `U, U1, U2` (and `U3` for group II) are emitted
//! only on request.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::ci::OracleTest;
use crate::data::{format_sig, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{aivip, bias, expit, roles_by_name, tsls, tslsciv, two_stage, EstimatorSpec};
use crate::graph::{Mark, MixedGraph};
use crate::iv::{conditioning_set_pag, IvRoles};
use crate::learner::{learn_pag, LearnerConfig};
use crate::projection::ProjectionSpec;

/// True effect of `W` on `Y` in both groups.
pub const BETA_TRUE: f64 = 2.0;

/// Standard deviation of the additive `ε` terms.
const EPS_SD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    /// `S` causes `W` directly.
    I,
    /// `S` and `W` share a latent cause `U3`; no directed path `S -> W`.
    II,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::I => "I",
            Group::II => "II",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(Group::I),
            "II" | "2" => Ok(Group::II),
            _ => Err(Error::InvalidArgument(format!("unknown group `{s}` (expected I or II)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    /// The outcome has no `X1` term, so `X1` is a pure collider.
    #[default]
    Consistent,
    /// The outcome carries `2 * X1`.
    PaperLiteral,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Consistent => "consistent",
            Variant::PaperLiteral => "paper_literal",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Variant::Consistent),
            "paper_literal" => Ok(Variant::PaperLiteral),
            _ => Err(Error::InvalidArgument(format!("unknown variant `{s}` (expected consistent or paper_literal)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimSpec {
    pub group: Group,
    pub n: usize,
    pub seed: u64,
    pub variant: Variant,
    pub noise_covariates: usize,
    /// Common pairwise correlation of the noise covariates.
    pub noise_correlation: f64,
}

impl SimSpec {
    pub fn new(group: Group, n: usize, seed: u64) -> Self {
        SimSpec { group, n, seed, variant: Variant::Consistent, noise_covariates: 20, noise_correlation: 0.2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 100 {
            return Err(Error::InvalidArgument(format!("n = {} below the minimum of 100", self.n)));
        }
        if !(0.0..1.0).contains(&self.noise_correlation) {
            return Err(Error::InvalidArgument(format!("noise correlation {} outside [0, 1)", self.noise_correlation)));
        }
        Ok(())
    }
}

fn observed_names(noise: usize) -> Vec<String> {
    let mut names = vec!["S".to_string()];
    names.extend((1..=3 + noise).map(|k| format!("X{k}")));
    names.push("W".into());
    names.push("Y".into());
    names
}

fn latent_names(group: Group) -> Vec<&'static str> {
    match group {
        Group::I => vec!["U", "U1", "U2"],
        Group::II => vec!["U", "U1", "U2", "U3"],
    }
}

/// Generating DAG with its observed/latent split.
pub fn true_dag(group: Group, variant: Variant, noise_covariates: usize) -> ProjectionSpec {
    let latent = latent_names(group);
    let mut nodes = observed_names(noise_covariates);
    nodes.extend(latent.iter().map(|s| s.to_string()));
    let mut edges = vec![
        ("U2", "S"),
        ("U2", "X3"),
        ("S", "X1"),
        ("X2", "X1"),
        ("U1", "X1"),
        ("U1", "Y"),
        ("X3", "Y"),
        ("U", "W"),
        ("U", "Y"),
        ("W", "Y"),
    ];
    match group {
        Group::I => edges.push(("S", "W")),
        Group::II => edges.extend([("U3", "S"), ("U3", "W")]),
    }
    if variant == Variant::PaperLiteral {
        edges.push(("X1", "Y"));
    }
    let edges: Vec<_> = edges.into_iter().map(|(a, b)| (a, Mark::Tail, Mark::Arrow, b)).collect();
    let names: Vec<&str> = nodes.iter().map(String::as_str).collect();
    let dag = MixedGraph::new(names, edges).expect("static benchmark DAG");
    ProjectionSpec::new(dag, &latent).expect("static benchmark DAG")
}

/// Observed columns only.
pub fn generate(spec: &SimSpec) -> Result<Dataset> {
    generate_inner(spec, false)
}

/// Observed columns followed by the latent ones.
pub fn generate_with_latents(spec: &SimSpec) -> Result<Dataset> {
    generate_inner(spec, true)
}

fn generate_inner(spec: &SimSpec, latents: bool) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let eps = Normal::new(0.0, EPS_SD).expect("positive sd");
    let normal = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };

    let u: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let u1 = normal(&mut rng);
    let u2 = normal(&mut rng);
    let u3 = match spec.group {
        Group::I => None,
        Group::II => Some(normal(&mut rng)),
    };
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let base = rng.sample::<f64, _>(StandardNormal) + 0.8 * u2[i] + rng.sample(eps);
            base + u3.as_ref().map_or(0.0, |u3| 0.8 * u3[i])
        })
        .collect();
    let x2 = normal(&mut rng);
    let x1: Vec<f64> = (0..n).map(|i| 0.3 + s[i] + x2[i] + u1[i] + rng.sample(eps)).collect();
    let x3: Vec<f64> = (0..n).map(|i| rng.sample::<f64, _>(StandardNormal) + 0.8 * u2[i] + rng.sample(eps)).collect();

    let rho = spec.noise_correlation;
    let shared = normal(&mut rng);
    let noise: Vec<Vec<f64>> = (0..spec.noise_covariates)
        .map(|_| {
            (0..n).map(|i| rho.sqrt() * shared[i] + (1.0 - rho).sqrt() * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();

    let w: Vec<f64> = (0..n)
        .map(|i| {
            let logit = match &u3 {
                None => -(1.0 - 2.0 * u[i] - 2.0 * s[i]),
                Some(u3) => -(1.0 - 2.0 * u[i] - 2.0 * u3[i]),
            };
            if rng.random::<f64>() < expit(logit) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = 2.0 + BETA_TRUE * w[i] + 2.0 * u[i] + 2.0 * u1[i] + 2.0 * x3[i];
            if spec.variant == Variant::PaperLiteral {
                v += 2.0 * x1[i];
            }
            v + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();

    let mut names = observed_names(spec.noise_covariates);
    let mut columns = vec![s, x1, x2, x3];
    columns.extend(noise);
    columns.push(w);
    columns.push(y);
    if latents {
        names.extend(latent_names(spec.group).into_iter().map(String::from));
        columns.push(u);
        columns.push(u1);
        columns.push(u2);
        columns.extend(u3);
    }
    Dataset::new(names, columns)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchMethod {
    Aivip,
    Tsls,
    Tslsciv,
    /// Two-stage with the conditioning set found from the true graph.
    OracleZ,
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchMethod::Aivip => "aivip",
            BenchMethod::Tsls => "tsls",
            BenchMethod::Tslsciv => "tslsciv",
            BenchMethod::OracleZ => "oracle_z",
        })
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aivip" => Ok(BenchMethod::Aivip),
            "tsls" => Ok(BenchMethod::Tsls),
            "tslsciv" => Ok(BenchMethod::Tslsciv),
            "oracle_z" | "oracle" => Ok(BenchMethod::OracleZ),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub groups: Vec<Group>,
    pub sizes: Vec<usize>,
    pub methods: Vec<BenchMethod>,
    pub replications: usize,
    pub seed: u64,
    pub variant: Variant,
    pub noise_covariates: usize,
    pub learner: LearnerConfig,
}

impl BenchmarkConfig {
    pub fn new(
        groups: Vec<Group>,
        sizes: Vec<usize>,
        methods: Vec<BenchMethod>,
        replications: usize,
        seed: u64,
    ) -> Self {
        BenchmarkConfig {
            groups,
            sizes,
            methods,
            replications,
            seed,
            variant: Variant::Consistent,
            noise_covariates: 20,
            learner: LearnerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub group: Group,
    pub n: usize,
    pub method: BenchMethod,
    /// Mean over successful replications; NaN when every replication failed.
    pub mean_bias_pct: f64,
    /// Successful replications.
    pub reps: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn row(&self, group: Group, n: usize, method: BenchMethod) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.group == group && r.n == n && r.method == method)
    }

    /// CSV with columns `group,n,method,mean_bias_pct,reps`.
    pub fn write_csv<W: Write>(&self, writer: W, precision: usize) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["group", "n", "method", "mean_bias_pct", "reps"])?;
        for r in &self.rows {
            wtr.write_record([
                r.group.to_string(),
                r.n.to_string(),
                r.method.to_string(),
                format_sig(r.mean_bias_pct, precision),
                r.reps.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Seed of replication `rep` (splitmix64 of `seed ^ rep`).
pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    let mut z = (seed ^ rep as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Conditioning set found by the oracle-backed learner on the true graph.
pub fn oracle_conditioning_set(group: Group, variant: Variant, noise_covariates: usize) -> Result<Vec<String>> {
    let spec = true_dag(group, variant, noise_covariates);
    let pag = learn_pag(&OracleTest::new(&spec), &LearnerConfig::default())?;
    let roles = IvRoles::by_name(&pag, "W", "Y", "S")?;
    Ok(pag.names_of(&conditioning_set_pag(&pag, &roles)?))
}

fn run_method(
    method: BenchMethod,
    data: &Dataset,
    roles: &IvRoles,
    oracle_z: &[usize],
    learner: &LearnerConfig,
) -> Result<f64> {
    let r = match method {
        BenchMethod::Aivip => aivip(data, roles, learner, &EstimatorSpec::default())?,
        BenchMethod::Tsls => tsls(data, roles)?,
        BenchMethod::Tslsciv => tslsciv(data, roles)?,
        BenchMethod::OracleZ => two_stage(data, roles, oracle_z, &EstimatorSpec::default())?,
    };
    bias(r.beta_hat, BETA_TRUE)
}

/// Mean bias per (group, size, method) cell. Each replication generates one
/// dataset shared by every method. Estimator failures are recorded in the
/// cell rather than aborting the run.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.replications == 0 {
        return Err(Error::InvalidArgument("at least one replication is required".into()));
    }
    if config.groups.is_empty() || config.sizes.is_empty() || config.methods.is_empty() {
        return Err(Error::InvalidArgument("groups, sizes and methods must be non-empty".into()));
    }
    config.learner.validate()?;
    let mut rows = Vec::new();
    for &group in &config.groups {
        let oracle_names = if config.methods.contains(&BenchMethod::OracleZ) {
            oracle_conditioning_set(group, config.variant, config.noise_covariates)?
        } else {
            Vec::new()
        };
        for &n in &config.sizes {
            let run_rep = |rep: usize| -> Result<Vec<Result<f64>>> {
                let spec = SimSpec {
                    variant: config.variant,
                    noise_covariates: config.noise_covariates,
                    ..SimSpec::new(group, n, replication_seed(config.seed, rep))
                };
                let data = generate(&spec)?;
                let roles = roles_by_name(&data, "W", "Y", "S")?;
                let oracle_z: Vec<usize> = oracle_names.iter().map(|s| data.index_of(s)).collect::<Result<_>>()?;
                Ok(config.methods.iter().map(|&m| run_method(m, &data, &roles, &oracle_z, &config.learner)).collect())
            };
            #[cfg(feature = "parallel")]
            let results: Vec<Vec<Result<f64>>> =
                (0..config.replications).into_par_iter().map(run_rep).collect::<Result<_>>()?;
            #[cfg(not(feature = "parallel"))]
            let results: Vec<Vec<Result<f64>>> = (0..config.replications).map(run_rep).collect::<Result<_>>()?;
            for (k, &method) in config.methods.iter().enumerate() {
                let mut ok = Vec::new();
                let mut failures = Vec::new();
                for (rep, per_rep) in results.iter().enumerate() {
                    match &per_rep[k] {
                        Ok(b) => ok.push(*b),
                        Err(e) => failures.push(format!("replication {rep}: {e}")),
                    }
                }
                let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 };
                rows.push(BenchmarkRow { group, n, method, mean_bias_pct: mean, reps: ok.len(), failures });
            }
        }
    }
    Ok(BenchmarkReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iv::is_ancestral_iv_dag;
    use crate::projection::{dag_to_mag, is_visible};

    #[test]
    fn group_one_consistent_has_ancestral_iv() {
        let spec = true_dag(Group::I, Variant::Consistent, 20);
        let g = &spec.dag;
        let roles = IvRoles::by_name(g, "W", "Y", "S").unwrap();
        let x3 = g.require("X3").unwrap();
        assert!(is_ancestral_iv_dag(g, &roles, &[x3]).unwrap());
        assert!(!is_ancestral_iv_dag(g, &roles, &[]).unwrap());
    }

    #[test]
    fn literal_variant_opens_path_through_x1() {
        let spec = true_dag(Group::I, Variant::PaperLiteral, 20);
        let g = &spec.dag;
        let roles = IvRoles::by_name(g, "W", "Y", "S").unwrap();
        let x3 = g.require("X3").unwrap();
        assert!(!is_ancestral_iv_dag(g, &roles, &[x3]).unwrap());
    }

    #[test]
    fn group_two_projects_to_spouse() {
        let spec = true_dag(Group::II, Variant::Consistent, 2);
        let g = &spec.dag;
        let (s, w) = (g.require("S").unwrap(), g.require("W").unwrap());
        assert!(!g.ancestor_mask(&[w])[s]);
        let mag = dag_to_mag(&spec);
        let (s, w) = (mag.require("S").unwrap(), mag.require("W").unwrap());
        assert!(mag.is_bidirected(s, w));
    }

    #[test]
    fn group_one_projection_has_invisible_treatment_edge() {
        let mag = dag_to_mag(&true_dag(Group::I, Variant::Consistent, 3));
        let (s, w, y) = (mag.require("S").unwrap(), mag.require("W").unwrap(), mag.require("Y").unwrap());
        assert!(mag.is_directed(w, y));
        assert!(!is_visible(&mag, w, y).unwrap());
        assert!(mag.is_directed(s, y));
    }

    #[test]
    fn shape_and_determinism() {
        let spec = SimSpec::new(Group::I, 100, 7);
        let a = generate(&spec).unwrap();
        assert_eq!(a.n_rows(), 100);
        assert_eq!(a.n_cols(), 26);
        assert_eq!(a.names()[0], "S");
        assert_eq!(a.names()[24], "W");
        assert_eq!(a.names()[25], "Y");
        assert_eq!(a, generate(&spec).unwrap());
        assert!(a.column(24).iter().all(|&v| v == 0.0 || v == 1.0));
        let b = generate(&SimSpec::new(Group::I, 100, 8)).unwrap();
        assert_ne!(a, b);
        assert!(generate(&SimSpec::new(Group::I, 99, 7)).is_err());
        let wide = generate_with_latents(&SimSpec::new(Group::II, 100, 7)).unwrap();
        assert_eq!(wide.n_cols(), 30);
        assert_eq!(wide.names()[29], "U3");
    }

    #[test]
    fn outcome_residual_is_centred() {
        let spec = SimSpec::new(Group::I, 10_000, 1);
        let d = generate_with_latents(&spec).unwrap();
        let col = |s: &str| d.column_by_name(s).unwrap();
        let (w, y, u, u1, x3) = (col("W"), col("Y"), col("U"), col("U1"), col("X3"));
        let resid: Vec<f64> =
            (0..spec.n).map(|i| y[i] - (2.0 + 2.0 * w[i] + 2.0 * u[i] + 2.0 * u1[i] + 2.0 * x3[i])).collect();
        let mean = resid.iter().sum::<f64>() / spec.n as f64;
        let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (spec.n - 1) as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd / (spec.n as f64).sqrt());
        assert!((sd - 1.0).abs() < 0.05);
    }

    #[test]
    fn replication_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replication_seed(1, r)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn zero_replications_rejected() {
        let cfg = BenchmarkConfig::new(vec![Group::I], vec![2000], vec![BenchMethod::Tsls], 0, 1);
        assert!(run_benchmark(&cfg).is_err());
    }

    #[test]
    fn enum_parsing() {
        assert_eq!("II".parse::<Group>().unwrap(), Group::II);
        assert!("III".parse::<Group>().is_err());
        assert_eq!("paper_literal".parse::<Variant>().unwrap(), Variant::PaperLiteral);
        assert_eq!("tslsciv".parse::<BenchMethod>().unwrap(), BenchMethod::Tslsciv);
    }
}
