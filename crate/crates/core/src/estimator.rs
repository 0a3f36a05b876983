//! Effect estimation: Wald ratio, the two-stage conditional-IV estimator and
//! the TSLS / TSLSCIV baselines, plus the full discovery-then-estimate pipeline.
//!
//! The outcome stage uses the identity link only.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::ci::CiTest;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::iv::{conditioning_set_pag, IvRoles};
use crate::learner::{learn_pag, LearnerConfig};

/// Least-squares fit with an intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FirstStage {
    /// Linear probability model for a binary treatment.
    #[default]
    Linear,
    /// Logistic regression fitted by IRLS; the treatment must be 0/1.
    Logistic,
}

/// Second-stage specification. `interactions` lists columns of `z` whose
/// products with the fitted treatment enter the outcome regression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimatorSpec {
    pub first_stage: FirstStage,
    pub interactions: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Wald,
    TwoStage,
    Tsls,
    Tslsciv,
    Aivip,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wald => "wald",
            Method::TwoStage => "two_stage",
            Method::Tsls => "tsls",
            Method::Tslsciv => "tslsciv",
            Method::Aivip => "aivip",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub beta_hat: f64,
    pub z_used: Vec<String>,
    /// First-stage coefficient of the instrument (log-odds scale for a
    /// logistic first stage).
    pub sigma_sw: f64,
    /// Reduced-form coefficient of the instrument; Wald ratio only.
    pub sigma_sy: Option<f64>,
    /// Coefficients of the interaction terms, in `EstimatorSpec` order.
    pub interaction_coefs: Vec<f64>,
    pub method: Method,
}

/// Regression of `y` on `x` plus intercept; returns `[intercept, x...]`.
fn least_squares(y: &[f64], x: &[&[f64]], labels: &dyn Fn(usize) -> String) -> Result<Vec<f64>> {
    let n = y.len();
    let p = x.len() + 1;
    if n <= p {
        return Err(Error::InsufficientSamples { n, needed: p });
    }
    let design = DMatrix::from_fn(n, p, |r, c| if c == 0 { 1.0 } else { x[c - 1][r] });
    let norms: Vec<f64> = (0..p).map(|c| design.column(c).norm()).collect();
    let qr = design.qr();
    let r = qr.r();
    for c in 0..p {
        if r[(c, c)].abs() <= 1e-9 * norms[c].max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficient(if c == 0 { "intercept".into() } else { labels(c - 1) }));
        }
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let beta =
        r.solve_upper_triangular(&qty.rows(0, p).into_owned()).ok_or_else(|| Error::RankDeficient("design".into()))?;
    Ok(beta.iter().copied().collect())
}

pub fn ols(data: &Dataset, y: usize, x: &[usize]) -> Result<OlsFit> {
    let cols: Vec<&[f64]> = x.iter().map(|&k| data.column(k)).collect();
    let beta = least_squares(data.column(y), &cols, &|c| data.names()[x[c]].clone())?;
    Ok(OlsFit { intercept: beta[0], coefficients: beta[1..].to_vec() })
}

/// Logistic regression with intercept by iteratively reweighted least squares.
fn logistic(y: &[f64], x: &[&[f64]]) -> Result<Vec<f64>> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument("logistic first stage needs a 0/1 treatment".into()));
    }
    let n = y.len();
    let p = x.len() + 1;
    if n <= p {
        return Err(Error::InsufficientSamples { n, needed: p });
    }
    let design = DMatrix::from_fn(n, p, |r, c| if c == 0 { 1.0 } else { x[c - 1][r] });
    let mut beta = DVector::zeros(p);
    for _ in 0..100 {
        let eta = &design * &beta;
        let mu = eta.map(expit);
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-12));
        let grad = design.transpose() * (DVector::from_column_slice(y) - &mu);
        let mut weighted = design.clone();
        for (r, wr) in w.iter().enumerate() {
            weighted.row_mut(r).scale_mut(*wr);
        }
        let info = design.transpose() * weighted;
        let step =
            info.cholesky().ok_or_else(|| Error::RankDeficient("logistic information matrix".into()))?.solve(&grad);
        beta += &step;
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::WeakInstrument("logistic first stage diverged".into()));
        }
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(beta.iter().copied().collect())
}

pub(crate) fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_roles(data: &Dataset, roles: &IvRoles) -> Result<()> {
    let p = data.n_cols();
    if roles.w >= p || roles.y >= p || roles.s >= p {
        return Err(Error::InvalidRoles("role index out of range".into()));
    }
    if roles.w == roles.y || roles.w == roles.s || roles.y == roles.s {
        return Err(Error::InvalidRoles("treatment, outcome and instrument must be distinct".into()));
    }
    Ok(())
}

/// Resolves treatment, outcome and instrument columns by name.
pub fn roles_by_name(data: &Dataset, w: &str, y: &str, s: &str) -> Result<IvRoles> {
    let roles = IvRoles { w: data.index_of(w)?, y: data.index_of(y)?, s: data.index_of(s)? };
    check_roles(data, &roles)?;
    Ok(roles)
}

/// `slope(y ~ s) / slope(w ~ s)`.
pub fn wald_estimate(data: &Dataset, roles: &IvRoles) -> Result<EstimateResult> {
    check_roles(data, roles)?;
    let s = data.column(roles.s);
    let label = |_: usize| data.names()[roles.s].clone();
    let sigma_sw = match least_squares(data.column(roles.w), &[s], &label) {
        Ok(b) => b[1],
        Err(Error::RankDeficient(_)) => {
            return Err(Error::WeakInstrument(format!("`{}` has no variation", data.names()[roles.s])))
        }
        Err(e) => return Err(e),
    };
    if sigma_sw.abs() < 1e-8 {
        return Err(Error::WeakInstrument(format!("|sigma_sw| = {:e} below 1e-8", sigma_sw.abs())));
    }
    let sigma_sy = least_squares(data.column(roles.y), &[s], &label)?[1];
    Ok(EstimateResult {
        beta_hat: sigma_sy / sigma_sw,
        z_used: Vec::new(),
        sigma_sw,
        sigma_sy: Some(sigma_sy),
        interaction_coefs: Vec::new(),
        method: Method::Wald,
    })
}

/// Stage one fits `E(w | s, z)`; stage two regresses `y` on the fitted
/// treatment, its interactions and `z`. The coefficient of the fitted
/// treatment is the effect estimate.
pub fn two_stage(data: &Dataset, roles: &IvRoles, z: &[usize], spec: &EstimatorSpec) -> Result<EstimateResult> {
    check_roles(data, roles)?;
    for (k, &v) in z.iter().enumerate() {
        if v >= data.n_cols() {
            return Err(Error::InvalidConditioningSet(format!("column index {v} out of range")));
        }
        if v == roles.w || v == roles.y || v == roles.s {
            return Err(Error::InvalidConditioningSet(format!(
                "`{}` is the treatment, outcome or instrument",
                data.names()[v]
            )));
        }
        if z[..k].contains(&v) {
            return Err(Error::InvalidConditioningSet(format!("`{}` listed twice", data.names()[v])));
        }
    }
    if let Some(&v) = spec.interactions.iter().find(|v| !z.contains(v)) {
        return Err(Error::InvalidArgument(format!("interaction column {v} is not in the conditioning set")));
    }
    let names = data.names();
    let mut stage1: Vec<&[f64]> = vec![data.column(roles.s)];
    stage1.extend(z.iter().map(|&v| data.column(v)));
    let stage1_label = |c: usize| if c == 0 { names[roles.s].clone() } else { names[z[c - 1]].clone() };
    let w = data.column(roles.w);
    let n = data.n_rows();
    let (coef, w_hat): (Vec<f64>, Vec<f64>) = match spec.first_stage {
        FirstStage::Linear => {
            let b = least_squares(w, &stage1, &stage1_label)?;
            let fit = (0..n).map(|r| b[0] + stage1.iter().zip(&b[1..]).map(|(c, bk)| c[r] * bk).sum::<f64>()).collect();
            (b, fit)
        }
        FirstStage::Logistic => {
            let b = logistic(w, &stage1)?;
            let fit = (0..n)
                .map(|r| expit(b[0] + stage1.iter().zip(&b[1..]).map(|(c, bk)| c[r] * bk).sum::<f64>()))
                .collect();
            (b, fit)
        }
    };
    let mean = w_hat.iter().sum::<f64>() / n as f64;
    let var = w_hat.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var < 1e-10 {
        return Err(Error::WeakInstrument(format!("fitted treatment variance {var:e} below 1e-10")));
    }
    let products: Vec<Vec<f64>> =
        spec.interactions.iter().map(|&v| w_hat.iter().zip(data.column(v)).map(|(a, b)| a * b).collect()).collect();
    let mut stage2: Vec<&[f64]> = vec![&w_hat];
    stage2.extend(products.iter().map(Vec::as_slice));
    stage2.extend(z.iter().map(|&v| data.column(v)));
    let k = spec.interactions.len();
    let stage2_label = |c: usize| {
        if c == 0 {
            format!("fitted {}", names[roles.w])
        } else if c <= k {
            format!("fitted {} x {}", names[roles.w], names[spec.interactions[c - 1]])
        } else {
            names[z[c - 1 - k]].clone()
        }
    };
    let b = least_squares(data.column(roles.y), &stage2, &stage2_label)?;
    Ok(EstimateResult {
        beta_hat: b[1],
        z_used: z.iter().map(|&v| names[v].clone()).collect(),
        sigma_sw: coef[1],
        sigma_sy: None,
        interaction_coefs: b[2..2 + k].to_vec(),
        method: Method::TwoStage,
    })
}

/// Two-stage estimate ignoring all covariates.
pub fn tsls(data: &Dataset, roles: &IvRoles) -> Result<EstimateResult> {
    let mut r = two_stage(data, roles, &[], &EstimatorSpec::default())?;
    r.method = Method::Tsls;
    Ok(r)
}

/// Two-stage estimate conditioning on every column other than the roles.
pub fn tslsciv(data: &Dataset, roles: &IvRoles) -> Result<EstimateResult> {
    check_roles(data, roles)?;
    let z: Vec<usize> = (0..data.n_cols()).filter(|&v| v != roles.w && v != roles.y && v != roles.s).collect();
    let mut r = two_stage(data, roles, &z, &EstimatorSpec::default())?;
    r.method = Method::Tslsciv;
    Ok(r)
}

/// Learns a PAG with `test`, finds the conditioning set and runs the two-stage
/// estimator. The variables of `test` must be the columns of `data`, in order.
pub fn aivip_with_test(
    data: &Dataset,
    roles: &IvRoles,
    test: &dyn CiTest,
    config: &LearnerConfig,
    spec: &EstimatorSpec,
) -> Result<(EstimateResult, MixedGraph)> {
    check_roles(data, roles)?;
    if test.variables() != data.names() {
        return Err(Error::NodeSetMismatch("test variables differ from dataset columns".into()));
    }
    let pag = learn_pag(test, config)?;
    if !connected(&pag, roles.s, roles.w) {
        return Err(Error::WeakInstrument(format!(
            "`{}` is unconnected to `{}` in the learned PAG",
            pag.name(roles.s),
            pag.name(roles.w)
        )));
    }
    let z = conditioning_set_pag(&pag, roles)?;
    let mut r = two_stage(data, roles, &z, spec)?;
    r.method = Method::Aivip;
    Ok((r, pag))
}

/// [`aivip_with_test`] with a Fisher-z test at `config.alpha`.
pub fn aivip(data: &Dataset, roles: &IvRoles, config: &LearnerConfig, spec: &EstimatorSpec) -> Result<EstimateResult> {
    let test = crate::ci::FisherZ::new(data, config.alpha)?;
    Ok(aivip_with_test(data, roles, &test, config, spec)?.0)
}

fn connected(g: &MixedGraph, a: usize, b: usize) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![a];
    seen[a] = true;
    while let Some(v) = stack.pop() {
        if v == b {
            return true;
        }
        for u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    false
}

/// `|(beta_hat - beta_true) / beta_true| * 100`.
pub fn bias(beta_hat: f64, beta_true: f64) -> Result<f64> {
    if beta_true == 0.0 {
        return Err(Error::InvalidArgument("bias undefined for a zero true effect".into()));
    }
    Ok(((beta_hat - beta_true) / beta_true).abs() * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn dataset(cols: Vec<(&str, Vec<f64>)>) -> Dataset {
        let (names, columns): (Vec<_>, Vec<_>) = cols.into_iter().map(|(n, c)| (n.to_string(), c)).unzip();
        Dataset::new(names, columns).unwrap()
    }

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// s -> w -> y with u confounding w and y.
    fn confounded(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = normals(&mut rng, n);
        let u = normals(&mut rng, n);
        let e1 = normals(&mut rng, n);
        let e2 = normals(&mut rng, n);
        let w: Vec<f64> = (0..n).map(|i| s[i] + u[i] + e1[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| 2.0 * w[i] + u[i] + e2[i]).collect();
        dataset(vec![("S", s), ("W", w), ("Y", y)])
    }

    #[test]
    fn ols_exact_and_noisy() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let d = dataset(vec![("x", x.clone()), ("y", x.iter().map(|v| 3.0 * v).collect())]);
        let fit = ols(&d, 1, &[0]).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normals(&mut rng, 10_000);
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v + 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
        let fit = ols(&dataset(vec![("x", x), ("y", y)]), 1, &[0]).unwrap();
        assert!((fit.intercept - 1.0).abs() < 0.01);
        assert!((fit.coefficients[0] - 2.0).abs() < 0.01);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let d = dataset(vec![("a", x.clone()), ("b", x.clone()), ("y", x)]);
        assert!(matches!(ols(&d, 2, &[0, 1]), Err(Error::RankDeficient(c)) if c == "b"));
    }

    #[test]
    fn wald_recovers_effect_under_confounding() {
        let d = confounded(50_000, 11);
        let roles = roles_by_name(&d, "W", "Y", "S").unwrap();
        let r = wald_estimate(&d, &roles).unwrap();
        assert!((r.beta_hat - 2.0).abs() < 0.05, "{}", r.beta_hat);
        assert!(r.sigma_sy.is_some());
        let naive = ols(&d, 2, &[1]).unwrap().coefficients[0];
        assert!(naive - 2.0 > 0.2);
    }

    #[test]
    fn wald_matches_ols_without_confounding() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let s = normals(&mut rng, n);
        let w: Vec<f64> = s.iter().map(|v| v + rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = w.iter().map(|v| 1.5 * v + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
        let d = dataset(vec![("S", s), ("W", w), ("Y", y)]);
        let roles = roles_by_name(&d, "W", "Y", "S").unwrap();
        let wald = wald_estimate(&d, &roles).unwrap().beta_hat;
        let slope = ols(&d, 2, &[1]).unwrap().coefficients[0];
        assert!((wald - slope).abs() < 0.01);
    }

    #[test]
    fn constant_instrument_is_weak() {
        let d = dataset(vec![
            ("S", vec![1.0; 10]),
            ("W", (0..10).map(f64::from).collect()),
            ("Y", (0..10).map(|i| f64::from(i).sqrt()).collect()),
        ]);
        let roles = roles_by_name(&d, "W", "Y", "S").unwrap();
        assert!(matches!(wald_estimate(&d, &roles), Err(Error::WeakInstrument(_))));
    }

    #[test]
    fn two_stage_without_z_is_wald() {
        let d = confounded(5000, 2);
        let roles = roles_by_name(&d, "W", "Y", "S").unwrap();
        let a = two_stage(&d, &roles, &[], &EstimatorSpec::default()).unwrap().beta_hat;
        let b = wald_estimate(&d, &roles).unwrap().beta_hat;
        assert!((a - b).abs() < 1e-8);
        assert_eq!(tsls(&d, &roles).unwrap().method, Method::Tsls);
    }

    #[test]
    fn two_stage_rejects_role_columns_in_z() {
        let d = confounded(100, 2);
        let roles = roles_by_name(&d, "W", "Y", "S").unwrap();
        assert!(matches!(
            two_stage(&d, &roles, &[1], &EstimatorSpec::default()),
            Err(Error::InvalidConditioningSet(_))
        ));
        let spec = EstimatorSpec { interactions: vec![0], ..Default::default() };
        assert!(two_stage(&d, &roles, &[], &spec).is_err());
    }

    #[test]
    fn interactions_and_logistic_first_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20_000;
        let s = normals(&mut rng, n);
        let z = normals(&mut rng, n);
        let u = normals(&mut rng, n);
        let w: Vec<f64> = (0..n).map(|i| if rng.random::<f64>() < expit(s[i] + u[i]) { 1.0 } else { 0.0 }).collect();
        let y: Vec<f64> = (0..n).map(|i| 2.0 * w[i] + z[i] + u[i] + rng.sample::<f64, _>(StandardNormal)).collect();
        let d = dataset(vec![("S", s), ("Z", z), ("U", u), ("W", w), ("Y", y)]);
        let roles = roles_by_name(&d, "W", "Y", "S").unwrap();
        let spec = EstimatorSpec { first_stage: FirstStage::Logistic, interactions: vec![] };
        let r = two_stage(&d, &roles, &[1], &spec).unwrap();
        assert!(r.sigma_sw > 0.5);
        let spec = EstimatorSpec { first_stage: FirstStage::Linear, interactions: vec![1] };
        let r = two_stage(&d, &roles, &[1], &spec).unwrap();
        assert_eq!(r.interaction_coefs.len(), 1);
        assert!(r.interaction_coefs[0].abs() < 0.5);
        assert!((r.beta_hat - 2.0).abs() < 0.3, "{}", r.beta_hat);
        let bad = EstimatorSpec { first_stage: FirstStage::Logistic, interactions: vec![] };
        let roles = roles_by_name(&d, "Y", "W", "S").unwrap();
        assert!(matches!(two_stage(&d, &roles, &[], &bad), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bias_formula() {
        assert_eq!(bias(3.0, 2.0).unwrap(), 50.0);
        assert_eq!(bias(2.0, 2.0).unwrap(), 0.0);
        assert!((bias(1.7, 2.0).unwrap() - 15.0).abs() < 1e-12);
        assert_eq!(bias(-3.0, -2.0).unwrap(), 50.0);
        assert!(bias(1.0, 0.0).is_err());
    }
}
