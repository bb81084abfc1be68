//! Adjusted fractional Bayes factors for informative hypotheses.
//!
//! Fit and complexity are the posterior and adjusted-prior mass of the
//! admissible region. Equality constraints contribute density ratios at the
//! boundary; mixed systems multiply those by conditional inequality
//! probabilities.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{CoefDistribution, DistError, DistKind, EtaDistribution};
use crate::glm::{Family, FitResult};
use crate::hypothesis::{transform_constraints, Alternative, ConstraintSystem, HypothesisError};
use crate::linalg;

pub const DEFAULT_MC_DRAWS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BfError {
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("fraction b must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("fit and complexity are both zero; the Bayes factor is undefined")]
    Undefined,
    #[error("complexity {0} is not inside (0, 1)")]
    ComplexityOutOfRange(f64),
    #[error("records come from different studies (`{0}` vs `{1}`)")]
    StudyMismatch(String, String),
    #[error("all posterior model weights are zero")]
    AllZeroWeights,
    #[error("conflicting infinite log Bayes factors")]
    ConflictingSentinels,
    #[error("{0} prior probabilities for {1} Bayes factors")]
    PriorLength(usize, usize),
    #[error("at least one Monte Carlo draw is required")]
    NoDraws,
}

/// How the fraction `b` was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FractionRule {
    /// `b = (p + 1) / n`, with `p` counting every coefficient.
    LinearModelP1OverN,
    /// `b = J / n` with `J` independent constraints.
    GlmJOverN {
        j: usize,
    },
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionSpec {
    b: f64,
    rule: FractionRule,
}

impl FractionSpec {
    pub fn explicit(b: f64) -> Result<Self, BfError> {
        Self::checked(b, FractionRule::Explicit)
    }

    pub fn linear_model(n: usize, p: usize) -> Result<Self, BfError> {
        Self::checked((p + 1) as f64 / n as f64, FractionRule::LinearModelP1OverN)
    }

    pub fn glm(n: usize, j: usize) -> Result<Self, BfError> {
        let j = j.max(1);
        Self::checked(j as f64 / n as f64, FractionRule::GlmJOverN { j })
    }

    /// The default rule for a fit's family.
    pub fn auto(fit: &FitResult, j: usize) -> Result<Self, BfError> {
        match fit.family {
            Family::Gaussian => Self::linear_model(fit.n, fit.p),
            _ => Self::glm(fit.n, j),
        }
    }

    fn checked(b: f64, rule: FractionRule) -> Result<Self, BfError> {
        if !(b > 0.0 && b < 1.0) {
            return Err(BfError::InvalidFraction(b));
        }
        Ok(Self { b, rule })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn rule(&self) -> FractionRule {
        self.rule
    }
}

/// Rank of the union of all constraint rows over the model coefficients, at least 1.
pub fn independent_constraint_count<'a>(
    systems: impl IntoIterator<Item = &'a ConstraintSystem>,
    coef_names: &[String],
) -> Result<usize, BfError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for h in systems {
        let (m, _) = h.embed(coef_names)?;
        for i in 0..m.nrows() {
            rows.push(m.row(i).iter().copied().collect());
        }
    }
    if rows.is_empty() {
        return Ok(1);
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), coef_names.len(), |i, j| rows[i][j]);
    Ok(linalg::rank(&m).max(1))
}

/// Minimum-norm point on the boundary of `h`, over the model coefficients.
///
/// The flag is `false` when the boundary equations are inconsistent, in
/// which case the least-squares solution is returned.
pub fn adjustment_center(h: &ConstraintSystem, coef_names: &[String]) -> Result<(DVector<f64>, bool), BfError> {
    let (m, r) = h.embed(coef_names)?;
    Ok(linalg::min_norm_solve(&m, &r))
}

/// Adjusted fractional prior: scale `cov / b`, centred at `center`.
pub fn build_prior(fit: &FitResult, frac: &FractionSpec, center: &DVector<f64>) -> Result<CoefDistribution, BfError> {
    if !(frac.b() > 0.0 && frac.b() < 1.0) {
        return Err(BfError::InvalidFraction(frac.b()));
    }
    let scale = &fit.cov_beta / frac.b();
    let kind = match fit.family {
        Family::Gaussian => DistKind::StudentT { df: 1.0 },
        _ => DistKind::Normal,
    };
    Ok(CoefDistribution::new(kind, center.clone(), scale)?)
}

/// Large-sample posterior of the coefficients.
pub fn build_posterior(fit: &FitResult) -> Result<CoefDistribution, BfError> {
    let kind = match fit.family {
        Family::Gaussian => DistKind::StudentT {
            df: (fit.n - fit.p) as f64,
        },
        _ => DistKind::Normal,
    };
    Ok(CoefDistribution::new(kind, fit.beta_hat.clone(), fit.cov_beta.clone())?)
}

/// `P(eta > 0)` componentwise, with its Monte Carlo standard error.
///
/// One-dimensional problems use the exact CDF and report a zero error.
pub fn prob_region<R: Rng + ?Sized>(eta: &CoefDistribution, draws: usize, rng: &mut R) -> Result<(f64, f64), BfError> {
    match eta.dim() {
        0 => Ok((1.0, 0.0)),
        1 => Ok((eta.univariate_positive_prob()?, 0.0)),
        _ => {
            if draws == 0 {
                return Err(BfError::NoDraws);
            }
            let sampler = eta.sampler()?;
            Ok(mc_estimate(sampler.count_positive(draws, rng), draws))
        }
    }
}

/// Same as [`prob_region`] but always sampling, also in one dimension.
pub fn prob_region_mc<R: Rng + ?Sized>(
    eta: &CoefDistribution,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64), BfError> {
    if draws == 0 {
        return Err(BfError::NoDraws);
    }
    let sampler = eta.sampler()?;
    Ok(mc_estimate(sampler.count_positive(draws, rng), draws))
}

fn mc_estimate(hits: usize, draws: usize) -> (f64, f64) {
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

/// Density of the equality block of `eta` at zero.
pub fn density_at_equality(eta_eq: &CoefDistribution) -> Result<f64, BfError> {
    Ok(eta_eq.density(&DVector::zeros(eta_eq.dim()))?)
}

/// Result of evaluating one hypothesis against one posterior/prior pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    /// Posterior probability of the region, times the boundary density when
    /// the hypothesis has equalities.
    pub fit: f64,
    pub complexity: f64,
    pub log_bf_iu: f64,
    /// `None` for hypotheses with equality constraints.
    pub log_bf_ic: Option<f64>,
    pub mc_se_fit: f64,
    pub mc_se_complexity: f64,
    /// Draws per Monte Carlo probability; 0 when every path was exact.
    pub mc_draws: usize,
    pub diagnostics: Vec<String>,
}

impl Evidence {
    pub fn log_bf(&self, alternative: Alternative) -> Option<f64> {
        match alternative {
            Alternative::Unconstrained => Some(self.log_bf_iu),
            Alternative::Complement => self.log_bf_ic,
        }
    }

    /// Delta-method standard error of `log_bf_iu` from the Monte Carlo errors.
    pub fn mc_se_log_bf_iu(&self) -> f64 {
        rel_se(self.mc_se_fit, self.fit).hypot(rel_se(self.mc_se_complexity, self.complexity))
    }

    /// Delta-method standard error of `log_bf_ic`.
    pub fn mc_se_log_bf_ic(&self) -> f64 {
        let f = rel_se(self.mc_se_fit, self.fit) + rel_se(self.mc_se_fit, 1.0 - self.fit);
        let c = rel_se(self.mc_se_complexity, self.complexity) + rel_se(self.mc_se_complexity, 1.0 - self.complexity);
        f.hypot(c)
    }

    /// Evidence for the complement: fit `1 - f` and complexity `1 - c`.
    pub fn complement(&self) -> Result<Evidence, BfError> {
        if self.log_bf_ic.is_none() {
            return Err(HypothesisError::EqualityComplementUnsupported.into());
        }
        let (f, c) = (1.0 - self.fit, 1.0 - self.complexity);
        Ok(Evidence {
            fit: f,
            complexity: c,
            log_bf_iu: log_ratio(f, c)?,
            log_bf_ic: self.log_bf_ic.map(|v| -v),
            mc_se_fit: self.mc_se_fit,
            mc_se_complexity: self.mc_se_complexity,
            mc_draws: self.mc_draws,
            diagnostics: Vec::new(),
        })
    }

    pub fn mc_se_log_bf(&self, alternative: Alternative) -> f64 {
        match alternative {
            Alternative::Unconstrained => self.mc_se_log_bf_iu(),
            Alternative::Complement => self.mc_se_log_bf_ic(),
        }
    }
}

fn rel_se(se: f64, v: f64) -> f64 {
    if se == 0.0 {
        0.0
    } else if v > 0.0 {
        se / v
    } else {
        f64::INFINITY
    }
}

/// `ln(f / c)` with infinite sentinels.
pub fn log_ratio(f: f64, c: f64) -> Result<f64, BfError> {
    if f.is_nan() || c.is_nan() || f < 0.0 || c < 0.0 {
        return Err(BfError::Undefined);
    }
    match (f > 0.0, c > 0.0) {
        (false, false) => Err(BfError::Undefined),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        (true, true) => Ok(f.ln() - c.ln()),
    }
}

/// `ln BF_ic = ln[(f / c) / ((1 - f) / (1 - c))]`.
pub fn bf_ic(fit: f64, complexity: f64) -> Result<f64, BfError> {
    if !(complexity > 0.0 && complexity < 1.0) {
        return Err(BfError::ComplexityOutOfRange(complexity));
    }
    if !(0.0..=1.0).contains(&fit) {
        return Err(BfError::Undefined);
    }
    if fit == 1.0 {
        return Ok(f64::INFINITY);
    }
    if fit == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((fit.ln() - complexity.ln()) - ((-fit).ln_1p() - (-complexity).ln_1p()))
}

/// Evaluate `h` given posterior and adjusted prior over `coef_names`.
pub fn bf_iu<R: Rng + ?Sized>(
    posterior: &CoefDistribution,
    prior: &CoefDistribution,
    h: &ConstraintSystem,
    coef_names: &[String],
    draws: usize,
    rng: &mut R,
) -> Result<Evidence, BfError> {
    let post = transform_constraints(h, coef_names, posterior)?;
    let pri = transform_constraints(h, coef_names, prior)?;
    let mut diagnostics = Vec::new();
    let used_mc = h.n_ineq() > 1;

    let (fit, se_f, complexity, se_c) = if h.has_equalities() {
        let (df, pf, sf) = mixed_part(&post, draws, rng)?;
        let (dc, pc, sc) = mixed_part(&pri, draws, rng)?;
        (df * pf, df * sf, dc * pc, dc * sc)
    } else {
        let (pf, sf) = prob_region(post.joint(), draws, rng)?;
        let (pc, sc) = prob_region(pri.joint(), draws, rng)?;
        (pf, sf, pc, sc)
    };

    let log_bf_iu = log_ratio(fit, complexity)?;
    if log_bf_iu == f64::INFINITY {
        diagnostics.push("complexity is zero; log BF is +inf".to_string());
    }
    let log_bf_ic = if h.has_equalities() {
        None
    } else if complexity > 0.0 && complexity < 1.0 {
        let v = bf_ic(fit, complexity)?;
        if v.is_infinite() {
            diagnostics.push(format!("fit is {fit}; log BF against the complement is {v}"));
        }
        Some(v)
    } else {
        diagnostics.push(format!("complexity {complexity} leaves the complement undefined"));
        Some(f64::NAN)
    };

    Ok(Evidence {
        fit,
        complexity,
        log_bf_iu,
        log_bf_ic,
        mc_se_fit: se_f,
        mc_se_complexity: se_c,
        mc_draws: if used_mc { draws } else { 0 },
        diagnostics,
    })
}

/// Boundary density, conditional inequality probability and its error.
fn mixed_part<R: Rng + ?Sized>(eta: &EtaDistribution, draws: usize, rng: &mut R) -> Result<(f64, f64, f64), BfError> {
    let dens = density_at_equality(&eta.equality_marginal())?;
    if eta.n_ineq() == 0 {
        return Ok((dens, 1.0, 0.0));
    }
    let cond = eta.inequality_given_equalities()?;
    let (p, se) = prob_region(&cond, draws, rng)?;
    Ok((dens, p, se))
}

/// Evaluation settings for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub mc_draws: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mc_draws: DEFAULT_MC_DRAWS,
        }
    }
}

/// Full pipeline for one hypothesis on one fitted model.
pub fn evaluate<R: Rng + ?Sized>(
    fit: &FitResult,
    h: &ConstraintSystem,
    frac: &FractionSpec,
    opts: &EvalOptions,
    rng: &mut R,
) -> Result<Evidence, BfError> {
    let (center, consistent) = adjustment_center(h, &fit.names)?;
    let posterior = build_posterior(fit)?;
    let prior = build_prior(fit, frac, &center)?;
    let mut ev = bf_iu(&posterior, &prior, h, &fit.names, opts.mc_draws, rng)?;
    if !consistent {
        ev.diagnostics
            .push("boundary equations are inconsistent; prior centred at the least-squares point".into());
    }
    ev.diagnostics.extend(h.warnings().iter().cloned());
    Ok(ev)
}

/// `ln BF_ij = ln BF_iu - ln BF_ju`, with a diagnostic when a sentinel is involved.
pub fn bf_between(a: &EvidenceRecord, b: &EvidenceRecord) -> Result<(f64, Option<String>), BfError> {
    if a.study_id != b.study_id {
        return Err(BfError::StudyMismatch(a.study_id.clone(), b.study_id.clone()));
    }
    log_bf_between(a.log_bf_iu, b.log_bf_iu)
}

pub fn log_bf_between(log_i: f64, log_j: f64) -> Result<(f64, Option<String>), BfError> {
    if log_i.is_nan() || log_j.is_nan() {
        return Err(BfError::Undefined);
    }
    if log_i.is_infinite() && log_i == log_j {
        return Err(BfError::ConflictingSentinels);
    }
    let v = log_i - log_j;
    let diag = (log_i.is_infinite() || log_j.is_infinite()).then(|| format!("infinite log BF involved; result {v}"));
    Ok((v, diag))
}

/// Posterior model probabilities from log Bayes factors against a common
/// reference (the alternative slot carries 0).
pub fn pmps(log_bfs: &[f64], priors: &[f64]) -> Result<Vec<f64>, BfError> {
    if log_bfs.len() != priors.len() {
        return Err(BfError::PriorLength(priors.len(), log_bfs.len()));
    }
    if log_bfs.iter().any(|v| v.is_nan()) {
        return Err(BfError::Undefined);
    }
    let logw: Vec<f64> = log_bfs.iter().zip(priors).map(|(b, p)| b + p.ln()).collect();
    let inf: Vec<bool> = log_bfs.iter().map(|v| *v == f64::INFINITY).collect();
    if inf.iter().any(|x| *x) {
        // Hypotheses with unbounded support split the mass by prior weight.
        let tot: f64 = priors.iter().zip(&inf).filter(|(_, i)| **i).map(|(p, _)| p).sum();
        return Ok(priors
            .iter()
            .zip(&inf)
            .map(|(p, i)| if *i { p / tot } else { 0.0 })
            .collect());
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(BfError::AllZeroWeights);
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let tot: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / tot).collect())
}

/// Serialized per-study evidence for one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub study_id: String,
    pub hypothesis: String,
    pub alternative: Alternative,
    #[serde(with = "sentinel")]
    pub fit: f64,
    #[serde(with = "sentinel")]
    pub complexity: f64,
    #[serde(with = "sentinel")]
    pub log_bf_iu: f64,
    #[serde(with = "sentinel_opt")]
    pub log_bf_ic: Option<f64>,
    #[serde(with = "sentinel")]
    pub mc_se_fit: f64,
    #[serde(with = "sentinel")]
    pub mc_se_complexity: f64,
    pub mc_draws: usize,
    pub family: Family,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EvidenceRecord {
    pub fn new(
        study_id: impl Into<String>,
        hypothesis: impl Into<String>,
        alternative: Alternative,
        ev: &Evidence,
        family: Family,
        n: usize,
    ) -> Self {
        Self {
            study_id: study_id.into(),
            hypothesis: hypothesis.into(),
            alternative,
            fit: ev.fit,
            complexity: ev.complexity,
            log_bf_iu: ev.log_bf_iu,
            log_bf_ic: ev.log_bf_ic,
            mc_se_fit: ev.mc_se_fit,
            mc_se_complexity: ev.mc_se_complexity,
            mc_draws: ev.mc_draws,
            family,
            n,
            warnings: ev.diagnostics.clone(),
        }
    }

    /// Log BF against this record's own alternative.
    pub fn log_bf(&self) -> Option<f64> {
        match self.alternative {
            Alternative::Unconstrained => Some(self.log_bf_iu),
            Alternative::Complement => self.log_bf_ic,
        }
    }
}

/// Floats as JSON numbers, with `"inf"`, `"-inf"` and `"nan"` strings for
/// non-finite values.
pub mod sentinel {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn to_repr(v: f64) -> Option<&'static str> {
        if v == f64::INFINITY {
            Some("inf")
        } else if v == f64::NEG_INFINITY {
            Some("-inf")
        } else if v.is_nan() {
            Some("nan")
        } else {
            None
        }
    }

    pub fn parse_text(s: &str) -> Option<f64> {
        match s {
            "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
            "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
            "nan" | "NaN" => Some(f64::NAN),
            _ => s.parse().ok(),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match to_repr(*v) {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(*v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => parse_text(&t).ok_or_else(|| serde::de::Error::custom(format!("bad number `{t}`"))),
        }
    }
}

pub mod sentinel_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) => super::sentinel::serialize(x, s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(v)) => Ok(Some(v)),
            Some(Repr::Text(t)) => super::sentinel::parse_text(&t)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad number `{t}`"))),
        }
    }
}

pub mod sentinel_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        struct One(f64);
        impl serde::Serialize for One {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::sentinel::serialize(&self.0, s)
            }
        }
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&One(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(v) => Ok(v),
                Repr::Text(t) => {
                    super::sentinel::parse_text(&t).ok_or_else(|| serde::de::Error::custom(format!("bad number `{t}`")))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn normal(mean: &[f64], cov: DMatrix<f64>) -> CoefDistribution {
        CoefDistribution::normal(DVector::from_row_slice(mean), cov).unwrap()
    }

    #[test]
    fn formula_arithmetic() {
        assert!((log_ratio(0.9, 0.5).unwrap().exp() - 1.8).abs() < 1e-12);
        assert!((bf_ic(0.9, 0.5).unwrap().exp() - 9.0).abs() < 1e-12);
        assert!(bf_ic(0.3, 0.3).unwrap().abs() < 1e-15);
        assert_eq!(bf_ic(1.0, 0.5).unwrap(), f64::INFINITY);
        assert_eq!(bf_ic(0.0, 0.5).unwrap(), f64::NEG_INFINITY);
        assert_eq!(log_ratio(0.5, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(log_ratio(0.0, 0.0).unwrap_err(), BfError::Undefined);
    }

    #[test]
    fn savage_dickey_ratio() {
        let h = ConstraintSystem::parse("b = 0").unwrap();
        let post = normal(&[0.0], DMatrix::identity(1, 1));
        let prior = normal(&[0.0], DMatrix::from_element(1, 1, 2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ev = bf_iu(&post, &prior, &h, &names(&["b"]), 10, &mut rng).unwrap();
        assert!((ev.log_bf_iu.exp() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(ev.log_bf_ic, None);
        assert_eq!(ev.mc_draws, 0);
    }

    #[test]
    fn boundary_center() {
        let n = names(&["b1", "b2"]);
        let (c, ok) = adjustment_center(&ConstraintSystem::parse("b1>0 & b2>0.5").unwrap(), &n).unwrap();
        assert!(ok);
        assert!((c[0]).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
        let (c, _) = adjustment_center(&ConstraintSystem::parse("b1 > 0.2").unwrap(), &names(&["b1"])).unwrap();
        assert!((c[0] - 0.2).abs() < 1e-12);
        let (c, _) = adjustment_center(
            &ConstraintSystem::parse("b4<b5<b6").unwrap(),
            &names(&["b4", "b5", "b6"]),
        )
        .unwrap();
        assert!(c.amax() < 1e-12);
    }

    #[test]
    fn region_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = normal(&[0.0], DMatrix::identity(1, 1));
        assert_eq!(prob_region(&d, 100, &mut rng).unwrap(), (0.5, 0.0));
        let d = normal(&[1.645], DMatrix::identity(1, 1));
        let (p, _) = prob_region(&d, 100, &mut rng).unwrap();
        assert!((p - 0.950_015_094_460_4).abs() < 1e-9);

        // Full ordering of three exchangeable normals has probability 1/6.
        let h = ConstraintSystem::parse("b1<b2<b3").unwrap();
        let nm = names(&["b1", "b2", "b3"]);
        let eta = transform_constraints(&h, &nm, &normal(&[0.0; 3], DMatrix::identity(3, 3))).unwrap();
        let (p, se) = prob_region(eta.joint(), 100_000, &mut rng).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 3.5 * se, "p = {p}, se = {se}");
    }

    #[test]
    fn complexity_is_scale_invariant() {
        let h = ConstraintSystem::parse("b1<b2<b3").unwrap();
        let nm = names(&["b1", "b2", "b3"]);
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 2.0, 0.2, 0.1, 0.2, 1.5]);
        let base = CoefDistribution::student_t(DVector::zeros(3), cov, 1.0).unwrap();
        let (p1, se1) = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            prob_region(
                transform_constraints(&h, &nm, &base).unwrap().joint(),
                100_000,
                &mut rng,
            )
            .unwrap()
        };
        let (p2, se2) = {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let big = base.scaled(37.0);
            prob_region(transform_constraints(&h, &nm, &big).unwrap().joint(), 100_000, &mut rng).unwrap()
        };
        assert!((p1 - p2).abs() < 3.0 * se1.hypot(se2));
        // With a shared stream the orthant count is identical for any scale.
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let e1 = transform_constraints(&h, &nm, &base).unwrap();
        let e2 = transform_constraints(&h, &nm, &base.scaled(0.01)).unwrap();
        assert_eq!(
            prob_region(e1.joint(), 20_000, &mut a).unwrap(),
            prob_region(e2.joint(), 20_000, &mut b).unwrap()
        );
        let one = CoefDistribution::student_t(DVector::zeros(1), DMatrix::from_element(1, 1, 4.0), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            prob_region(&one, 1, &mut rng).unwrap().0,
            prob_region(&one.scaled(9.0), 1, &mut rng).unwrap().0
        );
    }

    #[test]
    fn mixed_without_equalities_matches_inequality_path() {
        let h = ConstraintSystem::parse("b1 > 0 & b2 > b1").unwrap();
        let nm = names(&["b1", "b2"]);
        let post = normal(&[0.3, 0.5], DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]));
        let prior = normal(&[0.0, 0.0], DMatrix::identity(2, 2) * 5.0);
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let ev = bf_iu(&post, &prior, &h, &nm, 5_000, &mut a).unwrap();
        let (pf, _) = prob_region(transform_constraints(&h, &nm, &post).unwrap().joint(), 5_000, &mut b).unwrap();
        let (pc, _) = prob_region(transform_constraints(&h, &nm, &prior).unwrap().joint(), 5_000, &mut b).unwrap();
        assert_eq!(ev.fit.to_bits(), pf.to_bits());
        assert_eq!(ev.complexity.to_bits(), pc.to_bits());
    }

    #[test]
    fn mixed_hypothesis_factorizes() {
        // Independent coordinates: density of b1 at 0 times P(b2 > 0).
        let h = ConstraintSystem::parse("b1 = 0 & b2 > 0").unwrap();
        let nm = names(&["b1", "b2"]);
        let post = normal(&[0.0, 1.0], DMatrix::identity(2, 2));
        let prior = normal(&[0.0, 0.0], DMatrix::identity(2, 2) * 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ev = bf_iu(&post, &prior, &h, &nm, 10, &mut rng).unwrap();
        let expect_f = 0.398_942_280_401_432_7 * crate::dist::std_normal_cdf(1.0);
        let expect_c = 0.282_094_791_773_878_14 * 0.5;
        assert!((ev.fit - expect_f).abs() < 1e-12);
        assert!((ev.complexity - expect_c).abs() < 1e-12);
    }

    #[test]
    fn complement_fits_sum_to_one() {
        let h = ConstraintSystem::parse("b > 0").unwrap();
        let post = normal(&[0.4], DMatrix::identity(1, 1));
        let prior = normal(&[0.0], DMatrix::identity(1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ev = bf_iu(&post, &prior, &h, &names(&["b"]), 10, &mut rng).unwrap();
        let comp = ev.complement().unwrap();
        let fc = comp.fit;
        assert_eq!(ev.fit + fc, 1.0);
        assert_eq!(ev.complexity + comp.complexity, 1.0);
        assert_eq!(comp.log_bf_ic, ev.log_bf_ic.map(|v| -v));
        let direct = (ev.fit / ev.complexity) / (fc / (1.0 - ev.complexity));
        assert!((ev.log_bf_ic.unwrap() - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn pmp_cases() {
        let p = pmps(&[7f64.ln(), 0.0], &[0.5, 0.5]).unwrap();
        assert!((p[0] - 0.875).abs() < 1e-15);
        assert_eq!(pmps(&[0.3], &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(pmps(&[f64::INFINITY, 0.0], &[0.5, 0.5]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(pmps(&[f64::NEG_INFINITY], &[1.0]).unwrap_err(), BfError::AllZeroWeights);
        let big = pmps(&[800.0, 1000.0, 0.0], &[0.2, 0.3, 0.5]).unwrap();
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(big[1] > 0.999_999);
    }

    #[test]
    fn transitivity_and_sentinels() {
        let (v, d) = log_bf_between(6f64.ln(), 3f64.ln()).unwrap();
        assert!((v.exp() - 2.0).abs() < 1e-12 && d.is_none());
        assert_eq!(log_bf_between(0.7, 0.7).unwrap().0, 0.0);
        let (v, d) = log_bf_between(1.0, f64::INFINITY).unwrap();
        assert_eq!(v.exp(), 0.0);
        assert!(d.is_some());
    }

    #[test]
    fn record_json_round_trip() {
        let ev = Evidence {
            fit: 1.0,
            complexity: 0.5,
            log_bf_iu: 2f64.ln(),
            log_bf_ic: Some(f64::INFINITY),
            mc_se_fit: 0.0,
            mc_se_complexity: 0.0,
            mc_draws: 0,
            diagnostics: vec![],
        };
        let r = EvidenceRecord::new("s1", "H1", Alternative::Complement, &ev, Family::BinomialLogit, 40);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.starts_with(r#"{"study_id":"s1","hypothesis":"H1","alternative":"complement","fit":1.0"#));
        assert!(s.contains(r#""log_bf_ic":"inf""#));
        let back: EvidenceRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.log_bf(), Some(f64::INFINITY));
    }

    #[test]
    fn fraction_rules() {
        let f = FractionSpec::linear_model(100, 7).unwrap();
        assert!((f.b() - 0.08).abs() < 1e-15);
        assert_eq!(
            FractionSpec::glm(50, 0).unwrap().rule(),
            FractionRule::GlmJOverN { j: 1 }
        );
        assert!(FractionSpec::explicit(1.0).is_err());
        let nm = names(&["intercept", "b1", "b2", "b3"]);
        let hs = [
            ConstraintSystem::parse("b1 > b2").unwrap(),
            ConstraintSystem::parse("b2 > b1").unwrap(),
            ConstraintSystem::parse("b3 = 0").unwrap(),
        ];
        assert_eq!(independent_constraint_count(hs.iter(), &nm).unwrap(), 2);
    }
}
