//! Maximum-likelihood fitting of OLS, logistic and probit regression.
//!
//! Binomial models are fitted by Newton's method on the log-likelihood with
//! step-halving. The probit Hessian is negative definite everywhere, so the
//! same update works for both links; the returned covariance is the inverse
//! observed information at the optimum.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "gaussian")]
    Gaussian,
    #[serde(rename = "logit")]
    BinomialLogit,
    #[serde(rename = "probit")]
    BinomialProbit,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gaussian, Family::BinomialLogit, Family::BinomialProbit];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::BinomialLogit => "logit",
            Family::BinomialProbit => "probit",
        }
    }

    pub fn is_binomial(&self) -> bool {
        !matches!(self, Family::Gaussian)
    }

    /// Latent residual variance of the link: pi^2/3 for logit, 1 for probit.
    pub fn link_variance(&self) -> Option<f64> {
        match self {
            Family::Gaussian => None,
            Family::BinomialLogit => Some(PI * PI / 3.0),
            Family::BinomialProbit => Some(1.0),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" | "ols" | "linear" => Ok(Family::Gaussian),
            "logit" | "logistic" => Ok(Family::BinomialLogit),
            "probit" => Ok(Family::BinomialProbit),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("design matrix is singular or ill-conditioned (condition number {0:.3e})")]
    SingularDesign(f64),
    #[error("binomial response has a single class")]
    SingleClass,
    #[error("complete separation detected")]
    Separation,
    #[error("Newton iterations did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("residual sum of squares is zero; dispersion is degenerate")]
    DegenerateDispersion { beta_hat: Vec<f64> },
    #[error("{0} requires a {1} family")]
    WrongFamily(&'static str, &'static str),
}

/// Design matrix, response and family.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    family: Family,
    names: Vec<String>,
}

pub const INTERCEPT: &str = "intercept";

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, family: Family, names: Vec<String>) -> Result<Self, GlmError> {
        let bad = |s: String| Err(GlmError::InvalidData(s));
        if x.nrows() != y.len() {
            return bad(format!("{} rows in X but {} responses", x.nrows(), y.len()));
        }
        if names.len() != x.ncols() {
            return bad(format!("{} names for {} columns", names.len(), x.ncols()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return bad(format!("duplicate column name `{n}`"));
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return bad("non-finite value".into());
        }
        if family.is_binomial() && y.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return bad("binomial response must be 0 or 1".into());
        }
        Ok(Self { x, y, family, names })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, name: &str) -> Option<DVector<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.x.column(j).into_owned())
    }

    /// Prepend an intercept column named [`INTERCEPT`].
    pub fn with_intercept(&self) -> Result<Self, GlmError> {
        let n = self.n();
        let x = self.x.clone().insert_column(0, 1.0);
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(self.names.iter().cloned());
        debug_assert_eq!(x.nrows(), n);
        Self::new(x, self.y.clone(), self.family, names)
    }

    /// Replace the design while keeping response and family.
    pub fn with_design(&self, x: DMatrix<f64>, names: Vec<String>) -> Result<Self, GlmError> {
        Self::new(x, self.y.clone(), self.family, names)
    }

    pub fn with_family(&self, family: Family) -> Result<Self, GlmError> {
        Self::new(self.x.clone(), self.y.clone(), family, self.names.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub beta_hat: DVector<f64>,
    pub cov_beta: DMatrix<f64>,
    /// Residual variance for OLS, 1 for binomial models.
    pub dispersion: f64,
    pub n: usize,
    pub p: usize,
    pub family: Family,
    pub converged: bool,
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.beta_hat[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationConfig {
    /// Fitted probabilities closer than this to 0 or 1 count as degenerate.
    pub prob_eps: f64,
    /// Coefficient magnitude treated as divergence when not converged.
    pub max_abs_beta: f64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            prob_eps: 1e-8,
            max_abs_beta: 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub max_condition: f64,
    pub separation: SeparationConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            grad_tol: 1e-8,
            max_condition: 1e12,
            separation: SeparationConfig::default(),
        }
    }
}

/// One accepted Newton iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub beta: DVector<f64>,
    pub log_likelihood: f64,
    pub grad_norm: f64,
    /// Largest distance of any fitted probability from {0, 1}.
    pub max_bound_distance: f64,
}

/// Fit by family.
pub fn fit(d: &Dataset, opts: &FitOptions) -> Result<FitResult, GlmError> {
    match d.family() {
        Family::Gaussian => fit_ols(d, opts),
        _ => fit_binomial(d, opts),
    }
}

fn check_shape(d: &Dataset) -> Result<(), GlmError> {
    if d.n() <= d.p() {
        return Err(GlmError::InvalidData(format!(
            "need more observations than coefficients (n = {}, p = {})",
            d.n(),
            d.p()
        )));
    }
    Ok(())
}

fn guarded_gram(d: &Dataset, opts: &FitOptions) -> Result<DMatrix<f64>, GlmError> {
    let xtx = d.x().transpose() * d.x();
    let cond = linalg::condition_number_sym(&xtx);
    if cond.is_nan() || cond >= opts.max_condition {
        return Err(GlmError::SingularDesign(cond));
    }
    Ok(xtx)
}

pub fn fit_ols(d: &Dataset, opts: &FitOptions) -> Result<FitResult, GlmError> {
    if d.family() != Family::Gaussian {
        return Err(GlmError::WrongFamily("fit_ols", "gaussian"));
    }
    check_shape(d)?;
    let xtx = guarded_gram(d, opts)?;
    let x = d.x();
    let y = d.y();
    let chol = xtx.clone().cholesky().ok_or(GlmError::SingularDesign(f64::INFINITY))?;
    let beta = chol.solve(&(x.transpose() * y));
    let resid = y - x * &beta;
    let rss = resid.norm_squared();
    let (n, p) = (d.n(), d.p());
    if rss <= 1e-24 * y.norm_squared().max(1.0) {
        return Err(GlmError::DegenerateDispersion {
            beta_hat: beta.iter().copied().collect(),
        });
    }
    let phi = rss / (n - p) as f64;
    let cov = linalg::symmetrize(&(chol.inverse() * phi));
    let sigma2_ml = rss / n as f64;
    let ll = -0.5 * n as f64 * ((2.0 * PI * sigma2_ml).ln() + 1.0);
    Ok(FitResult {
        names: d.names().to_vec(),
        beta_hat: beta,
        cov_beta: cov,
        dispersion: phi,
        n,
        p,
        family: Family::Gaussian,
        converged: true,
        log_likelihood: ll,
        iterations: 1,
    })
}

/// `log Phi(x)` without underflow for very negative `x`.
fn log_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        (0.5 * erfc(-x / SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotics.
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Inverse Mills ratio `phi(x) / Phi(x)`.
fn mills(x: f64) -> f64 {
    if x > -30.0 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        pdf / (0.5 * erfc(-x / SQRT_2))
    } else {
        let x2 = x * x;
        -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2))
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-observation log-likelihood, score weight and observed information weight.
fn bernoulli_terms(family: Family, y: f64, eta: f64) -> (f64, f64, f64) {
    match family {
        Family::BinomialLogit => {
            let p = logistic(eta);
            let ll = y * eta - softplus(eta);
            (ll, y - p, p * (1.0 - p))
        }
        Family::BinomialProbit => {
            // Signed margin: y = 1 uses Phi(eta), y = 0 uses Phi(-eta).
            let (s, t) = if y == 1.0 { (1.0, eta) } else { (-1.0, -eta) };
            let lam = mills(t);
            (log_norm_cdf(t), s * lam, lam * (t + lam))
        }
        Family::Gaussian => unreachable!("gaussian is fitted in closed form"),
    }
}

fn fitted_prob(family: Family, eta: f64) -> f64 {
    match family {
        Family::BinomialLogit => logistic(eta),
        _ => 0.5 * erfc(-eta / SQRT_2),
    }
}

struct Eval {
    ll: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
    bound: f64,
}

fn evaluate(d: &Dataset, beta: &DVector<f64>) -> Eval {
    let x = d.x();
    let eta = x * beta;
    let (n, p) = (d.n(), d.p());
    let mut ll = 0.0;
    let mut u = DVector::zeros(n);
    let mut w = DVector::zeros(n);
    let mut bound = 0.0_f64;
    for i in 0..n {
        let (l, ui, wi) = bernoulli_terms(d.family(), d.y()[i], eta[i]);
        ll += l;
        u[i] = ui;
        w[i] = wi;
        let pr = fitted_prob(d.family(), eta[i]);
        bound = bound.max(pr.min(1.0 - pr));
    }
    let score = x.transpose() * &u;
    let mut xw = x.clone();
    for i in 0..n {
        xw.row_mut(i).scale_mut(w[i]);
    }
    let info = linalg::symmetrize(&(x.transpose() * xw));
    debug_assert_eq!(info.nrows(), p);
    Eval { ll, score, info, bound }
}

/// Log-likelihood of a binomial model at `beta`.
pub fn binomial_log_likelihood(d: &Dataset, beta: &DVector<f64>) -> f64 {
    evaluate(d, beta).ll
}

/// Newton iterations with step-halving; returns the accepted iterates.
pub fn newton_trace(d: &Dataset, opts: &FitOptions) -> Result<(Vec<IterationTrace>, bool), GlmError> {
    let p = d.p();
    let mut beta = DVector::zeros(p);
    let mut ev = evaluate(d, &beta);
    let mut trace = vec![IterationTrace {
        beta: beta.clone(),
        log_likelihood: ev.ll,
        grad_norm: ev.score.amax(),
        max_bound_distance: ev.bound,
    }];
    for _ in 0..opts.max_iter {
        if ev.score.amax() < opts.grad_tol {
            return Ok((trace, true));
        }
        let chol = match ev.info.clone().cholesky() {
            Some(c) => c,
            // Information collapses only when every fitted probability hits a bound.
            None => return Ok((trace, false)),
        };
        let step = chol.solve(&ev.score);
        // Close to the optimum the change in log-likelihood is below its rounding error.
        let slack = 64.0 * f64::EPSILON * (1.0 + ev.ll.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            let cev = evaluate(d, &cand);
            if cev.ll.is_finite() && cev.ll >= ev.ll - slack {
                accepted = Some((cand, cev));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((b, e)) => {
                beta = b;
                ev = e;
            }
            // No ascent possible at double precision: stationary point.
            None => return Ok((trace, ev.score.amax() < opts.grad_tol.sqrt())),
        }
        trace.push(IterationTrace {
            beta: beta.clone(),
            log_likelihood: ev.ll,
            grad_norm: ev.score.amax(),
            max_bound_distance: ev.bound,
        });
    }
    let converged = ev.score.amax() < opts.grad_tol;
    Ok((trace, converged))
}

/// Heuristic separation check over a Newton trace.
///
/// Fires when all fitted probabilities of some iterate are within
/// `prob_eps` of {0, 1}, or when the last iterate has a coefficient larger
/// than `max_abs_beta` without the gradient having converged.
pub fn detect_separation(d: &Dataset, trace: &[IterationTrace], cfg: &SeparationConfig, grad_tol: f64) -> bool {
    debug_assert!(d.family().is_binomial());
    if trace.iter().any(|t| t.max_bound_distance < cfg.prob_eps) {
        return true;
    }
    match trace.last() {
        Some(last) => last.beta.amax() > cfg.max_abs_beta && (last.grad_norm.is_nan() || last.grad_norm >= grad_tol),
        None => false,
    }
}

pub fn fit_binomial(d: &Dataset, opts: &FitOptions) -> Result<FitResult, GlmError> {
    if !d.family().is_binomial() {
        return Err(GlmError::WrongFamily("fit_binomial", "binomial"));
    }
    check_shape(d)?;
    let ones = d.y().iter().filter(|v| **v == 1.0).count();
    if ones == 0 || ones == d.n() {
        return Err(GlmError::SingleClass);
    }
    guarded_gram(d, opts)?;
    let (trace, converged) = newton_trace(d, opts)?;
    if detect_separation(d, &trace, &opts.separation, opts.grad_tol) {
        return Err(GlmError::Separation);
    }
    if !converged {
        return Err(GlmError::NotConverged(opts.max_iter));
    }
    let last = trace.last().expect("trace holds the starting point");
    let beta = last.beta.clone();
    let ev = evaluate(d, &beta);
    let cov = linalg::spd_inverse(&ev.info).ok_or(GlmError::SingularDesign(f64::INFINITY))?;
    Ok(FitResult {
        names: d.names().to_vec(),
        beta_hat: beta,
        cov_beta: cov,
        dispersion: 1.0,
        n: d.n(),
        p: d.p(),
        family: d.family(),
        converged,
        log_likelihood: ev.ll,
        iterations: trace.len() - 1,
    })
}

/// McKelvey-Zavoina R^2 from the variance of the linear predictor.
pub fn mz_r2_from_variance(var_linear: f64, family: Family) -> Option<f64> {
    let link = family.link_variance()?;
    Some(var_linear / (var_linear + link))
}

/// McKelvey-Zavoina R^2 of a binomial fit on its design.
pub fn mz_r2(fit: &FitResult, x: &DMatrix<f64>) -> Result<f64, GlmError> {
    if !fit.family.is_binomial() {
        return Err(GlmError::WrongFamily("mz_r2", "binomial"));
    }
    let eta = x * &fit.beta_hat;
    Ok(mz_r2_from_variance(sample_variance(eta.as_slice()), fit.family).expect("binomial"))
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn dataset(cols: &[&[f64]], y: &[f64], family: Family) -> Dataset {
        let n = y.len();
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        let names = (0..cols.len()).map(|j| format!("c{j}")).collect();
        Dataset::new(x, DVector::from_row_slice(y), family, names).unwrap()
    }

    #[test]
    fn ols_hand_example() {
        // Normal equations: [3 3; 3 5] b = [2; 3] -> b = (1/6, 1/2).
        let d = dataset(
            &[&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]],
            &[0.0, 1.0, 1.0],
            Family::Gaussian,
        );
        let f = fit_ols(&d, &FitOptions::default()).unwrap();
        assert!((f.beta_hat[0] - 1.0 / 6.0).abs() < 1e-12);
        assert!((f.beta_hat[1] - 0.5).abs() < 1e-12);
        // RSS = 1/6, phi = RSS / (n - p) = 1/6.
        assert!((f.dispersion - 1.0 / 6.0).abs() < 1e-12);
        let xtx_inv = DMatrix::from_row_slice(2, 2, &[5.0, -3.0, -3.0, 3.0]) / 6.0;
        assert!((&f.cov_beta - xtx_inv * f.dispersion).amax() < 1e-14);
    }

    #[test]
    fn ols_constant_response_is_degenerate() {
        let d = dataset(&[&[1.0, 1.0, 1.0, 1.0]], &[2.5, 2.5, 2.5, 2.5], Family::Gaussian);
        match fit_ols(&d, &FitOptions::default()) {
            Err(GlmError::DegenerateDispersion { beta_hat }) => assert!((beta_hat[0] - 2.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = [0.3, 1.0, -0.5, 2.0, 0.1];
        let d = dataset(&[&[1.0; 5], &x, &x], &[1.0, 0.0, 2.0, 1.5, 0.2], Family::Gaussian);
        assert!(matches!(
            fit_ols(&d, &FitOptions::default()),
            Err(GlmError::SingularDesign(_))
        ));
    }

    #[test]
    fn symmetric_binomial_data_gives_zero() {
        let d = dataset(
            &[&[1.0; 4], &[0.0, 0.0, 1.0, 1.0]],
            &[0.0, 1.0, 0.0, 1.0],
            Family::BinomialLogit,
        );
        let f = fit_binomial(&d, &FitOptions::default()).unwrap();
        assert!(f.beta_hat.amax() < 1e-10);
        let f = fit_binomial(&d.with_family(Family::BinomialProbit).unwrap(), &FitOptions::default()).unwrap();
        assert!(f.beta_hat.amax() < 1e-10);
    }

    #[test]
    fn intercept_only_links() {
        let d = dataset(&[&[1.0; 4]], &[1.0, 1.0, 1.0, 0.0], Family::BinomialLogit);
        let f = fit_binomial(&d, &FitOptions::default()).unwrap();
        assert!((f.beta_hat[0] - 3f64.ln()).abs() < 1e-9);
        let f = fit_binomial(&d.with_family(Family::BinomialProbit).unwrap(), &FitOptions::default()).unwrap();
        let q = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.75);
        assert!((f.beta_hat[0] - q).abs() < 1e-9);
        assert!((q - 0.674_489_750_196_081_7).abs() < 1e-12);
    }

    #[test]
    fn separation_cases() {
        let one = [1.0; 4];
        let sep = dataset(
            &[&one, &[0.0, 1.0, 2.0, 3.0]],
            &[0.0, 0.0, 1.0, 1.0],
            Family::BinomialLogit,
        );
        let opts = FitOptions::default();
        let (trace, _) = newton_trace(&sep, &opts).unwrap();
        assert!(detect_separation(&sep, &trace, &opts.separation, opts.grad_tol));
        assert_eq!(fit_binomial(&sep, &opts).unwrap_err(), GlmError::Separation);
        let sep_probit = sep.with_family(Family::BinomialProbit).unwrap();
        assert_eq!(fit_binomial(&sep_probit, &opts).unwrap_err(), GlmError::Separation);

        let mixed = dataset(
            &[&one, &[0.0, 1.0, 2.0, 3.0]],
            &[0.0, 1.0, 0.0, 1.0],
            Family::BinomialLogit,
        );
        let (trace, conv) = newton_trace(&mixed, &opts).unwrap();
        assert!(conv);
        assert!(!detect_separation(&mixed, &trace, &opts.separation, opts.grad_tol));

        let single = dataset(&[&one], &[1.0; 4], Family::BinomialLogit);
        assert_eq!(fit_binomial(&single, &opts).unwrap_err(), GlmError::SingleClass);
    }

    #[test]
    fn mz_r2_values() {
        assert_eq!(mz_r2_from_variance(1.0, Family::BinomialProbit), Some(0.5));
        assert_eq!(mz_r2_from_variance(0.0, Family::BinomialLogit), Some(0.0));
        let v = PI * PI / 3.0;
        assert!((mz_r2_from_variance(v, Family::BinomialLogit).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(mz_r2_from_variance(1.0, Family::Gaussian), None);
    }

    #[test]
    fn dataset_validation() {
        let x = DMatrix::from_element(3, 1, 1.0);
        let y = DVector::from_row_slice(&[0.0, 0.5, 1.0]);
        assert!(Dataset::new(x.clone(), y.clone(), Family::BinomialLogit, vec!["a".into()]).is_err());
        assert!(Dataset::new(x.clone(), y.clone(), Family::Gaussian, vec!["a".into()]).is_ok());
        let y_nan = DVector::from_row_slice(&[0.0, f64::NAN, 1.0]);
        assert!(Dataset::new(x, y_nan, Family::Gaussian, vec!["a".into()]).is_err());
    }

    #[test]
    fn probit_tail_helpers_are_smooth() {
        for x in [-29.9, -30.0, -30.1] {
            assert!((mills(x) - (-x)).abs() < 0.05);
        }
        let a = log_norm_cdf(-29.999);
        let b = log_norm_cdf(-30.001);
        assert!((a - b).abs() < 0.1);
    }
}
