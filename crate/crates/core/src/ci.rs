//! Conditional-independence tests: Fisher-z on partial correlations and a
//! d-separation oracle over a known latent DAG.
//!
//! Binary columns (the treatment) go through the same Fisher-z test; this is
//! the usual approximation for mixed data in constraint-based search.

use nalgebra::DMatrix;
use statrs::function::erf::erfc;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::projection::ProjectionSpec;
use crate::separation::is_separated;

/// Correlations are clamped to this magnitude before the z-transform.
const R_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiDecision {
    pub independent: bool,
    /// Absent for the oracle.
    pub p_value: Option<f64>,
    pub statistic: f64,
}

/// A conditional-independence test over a fixed, named set of variables.
pub trait CiTest: Sync {
    fn variables(&self) -> &[String];

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> Result<CiDecision>;
}

fn check_args(n_vars: usize, i: usize, j: usize, cond: &[usize]) -> Result<()> {
    if i >= n_vars || j >= n_vars || cond.iter().any(|&k| k >= n_vars) {
        return Err(Error::InvalidQuery("variable index out of range".into()));
    }
    if i == j {
        return Err(Error::InvalidQuery("a variable is not tested against itself".into()));
    }
    if cond.contains(&i) || cond.contains(&j) {
        return Err(Error::InvalidQuery("conditioning set contains a tested variable".into()));
    }
    Ok(())
}

/// Fisher-z test. The correlation matrix is computed once at construction.
#[derive(Clone, Debug)]
pub struct FisherZ {
    names: Vec<String>,
    corr: DMatrix<f64>,
    n: usize,
    alpha: f64,
}

impl FisherZ {
    pub fn new(data: &Dataset, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
        }
        let n = data.n_rows();
        let p = data.n_cols();
        let centered: Vec<Vec<f64>> = data
            .columns()
            .iter()
            .map(|c| {
                let mean = c.iter().sum::<f64>() / n as f64;
                c.iter().map(|v| v - mean).collect()
            })
            .collect();
        let mut cov = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let s: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
                cov[(a, b)] = s;
                cov[(b, a)] = s;
            }
        }
        let sd: Vec<f64> = (0..p).map(|a| cov[(a, a)].sqrt()).collect();
        if let Some(a) = (0..p).find(|&a| sd[a] <= 1e-12 * (n as f64).sqrt()) {
            return Err(Error::DegenerateColumns(format!("column `{}` is constant", data.names()[a])));
        }
        let corr = DMatrix::from_fn(p, p, |a, b| cov[(a, b)] / (sd[a] * sd[b]));
        Ok(FisherZ { names: data.names().to_vec(), corr, n, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn partial_correlation(&self, i: usize, j: usize, cond: &[usize]) -> Result<f64> {
        check_args(self.names.len(), i, j, cond)?;
        if cond.is_empty() {
            return Ok(self.corr[(i, j)]);
        }
        let mut idx = vec![i, j];
        idx.extend_from_slice(cond);
        let k = idx.len();
        let sub = DMatrix::from_fn(k, k, |a, b| self.corr[(idx[a], idx[b])]);
        let degenerate = || {
            Error::DegenerateColumns(format!(
                "correlation submatrix of {:?} is singular",
                idx.iter().map(|&v| self.names[v].as_str()).collect::<Vec<_>>()
            ))
        };
        let chol = sub.cholesky().ok_or_else(degenerate)?;
        let prec = chol.inverse();
        let denom = (prec[(0, 0)] * prec[(1, 1)]).sqrt();
        if !denom.is_finite() || denom <= 0.0 {
            return Err(degenerate());
        }
        Ok(-prec[(0, 1)] / denom)
    }
}

impl CiTest for FisherZ {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> Result<CiDecision> {
        let needed = cond.len() + 3;
        if self.n <= needed {
            return Err(Error::InsufficientSamples { n: self.n, needed });
        }
        let r = self.partial_correlation(i, j, cond)?.clamp(-R_CLAMP, R_CLAMP);
        let z = 0.5 * ((1.0 + r) / (1.0 - r)).ln() * ((self.n - needed) as f64).sqrt();
        let p = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
        Ok(CiDecision { independent: p > self.alpha, p_value: Some(p), statistic: z })
    }
}

/// Answers independence queries among the observed nodes of a latent DAG by
/// d-separation in the full DAG.
#[derive(Clone, Debug)]
pub struct OracleTest {
    dag: MixedGraph,
    observed: Vec<usize>,
    names: Vec<String>,
}

impl OracleTest {
    pub fn new(spec: &ProjectionSpec) -> Self {
        OracleTest { dag: spec.dag.clone(), observed: spec.observed.clone(), names: spec.observed_names() }
    }

    pub fn dag(&self) -> &MixedGraph {
        &self.dag
    }
}

impl CiTest for OracleTest {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> Result<CiDecision> {
        check_args(self.names.len(), i, j, cond)?;
        let z: Vec<usize> = cond.iter().map(|&k| self.observed[k]).collect();
        let independent = is_separated(&self.dag, self.observed[i], self.observed[j], &z);
        Ok(CiDecision { independent, p_value: None, statistic: if independent { 0.0 } else { 1.0 } })
    }
}
