//! Informative hypotheses as normalized linear constraint systems.
//!
//! A hypothesis holds iff `R_e b = r_e` and `R_i b > r_i` over the named
//! coefficients. Strings such as `"b4 < b5 < b6"`, `"{b2, b3, b4} > 0"` or
//! `"0 < {b1 = b2} < b3"` are accepted; see [`parser`] for the grammar.

pub mod parser;

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{CoefDistribution, DistError, EtaDistribution};
use crate::linalg;
use parser::RowKind;
pub use parser::{ParseError, ParseErrorKind};

/// Two normalized rows closer than this (elementwise) are duplicates.
const DUP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypothesisError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("the complement of a hypothesis with equality constraints is not supported")]
    EqualityComplementUnsupported,
    #[error("parameter `{0}` is not a coefficient of the fitted model")]
    UnknownParameter(String),
    #[error("equality constraints are redundant under this distribution (singular transform)")]
    RankDeficientEquality,
    #[error("distribution error: {0}")]
    Dist(#[from] DistError),
    #[error("invalid hypothesis set: {0}")]
    InvalidSet(String),
}

/// Normalized equality/inequality constraints over named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    param_names: Vec<String>,
    eq_matrix: DMatrix<f64>,
    eq_rhs: DVector<f64>,
    ineq_matrix: DMatrix<f64>,
    ineq_rhs: DVector<f64>,
    warnings: Vec<String>,
}

fn same_row(a: &[f64], ra: f64, b: &[f64], rb: f64) -> bool {
    (ra - rb).abs() <= DUP_TOL && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DUP_TOL)
}

impl ConstraintSystem {
    /// Parse a hypothesis string.
    pub fn parse(text: &str) -> Result<Self, HypothesisError> {
        let parsed = parser::parse_rows(text)?;
        let text_index: HashMap<&str, usize> = parsed
            .text_order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        // Column order: first appearance walking equality rows, then inequality
        // rows, each row's terms in text order. Printing walks rows the same way,
        // which makes parse(print(h)) reproduce the column order.
        let mut ordered: Vec<&parser::RawRow> = parsed.rows.iter().filter(|r| r.kind == RowKind::Equality).collect();
        ordered.extend(parsed.rows.iter().filter(|r| r.kind == RowKind::Inequality));
        let mut names: Vec<String> = Vec::new();
        for row in &ordered {
            let mut terms: Vec<&str> = row.expr.terms.iter().map(|(n, _)| n.as_str()).collect();
            terms.sort_by_key(|n| text_index[n]);
            for n in terms {
                if !names.iter().any(|m| m == n) {
                    names.push(n.to_string());
                }
            }
        }
        let col: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let p = names.len();

        let dense = |row: &parser::RawRow| {
            let mut v = vec![0.0; p];
            for (n, c) in &row.expr.terms {
                v[col[n.as_str()]] += c;
            }
            (v, -row.expr.constant)
        };

        let mut warnings = Vec::new();
        let mut eq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut ineq_rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &ordered {
            let (mut v, mut r) = dense(row);
            match row.kind {
                RowKind::Equality => {
                    let lead = *v.iter().find(|c| **c != 0.0).expect("row has a nonzero term");
                    v.iter_mut().for_each(|c| *c /= lead);
                    r = r / lead + 0.0;
                    if eq_rows.iter().any(|(w, s)| same_row(w, *s, &v, r)) {
                        continue;
                    }
                    if !eq_rows.is_empty() {
                        let k = eq_rows.len();
                        let mut m = DMatrix::zeros(k + 1, p);
                        let mut aug = DMatrix::zeros(k + 1, p + 1);
                        for (i, (w, s)) in eq_rows.iter().chain(std::iter::once(&(v.clone(), r))).enumerate() {
                            for j in 0..p {
                                m[(i, j)] = w[j];
                                aug[(i, j)] = w[j];
                            }
                            aug[(i, p)] = *s;
                        }
                        if linalg::rank(&m) <= k {
                            if linalg::rank(&aug) > k {
                                warnings.push(format!(
                                    "equality at position {} is inconsistent with earlier equalities and was dropped",
                                    row.position
                                ));
                            }
                            continue;
                        }
                    }
                    eq_rows.push((v, r));
                }
                RowKind::Inequality => {
                    let scale = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                    v.iter_mut().for_each(|c| *c /= scale);
                    r = r / scale + 0.0;
                    if ineq_rows.iter().any(|(w, s)| same_row(w, *s, &v, r)) {
                        continue;
                    }
                    ineq_rows.push((v, r));
                }
            }
        }

        let to_mat = |rows: &[(Vec<f64>, f64)]| {
            let m = DMatrix::from_fn(rows.len(), p, |i, j| rows[i].0[j]);
            let r = DVector::from_iterator(rows.len(), rows.iter().map(|(_, s)| *s));
            (m, r)
        };
        let (eq_matrix, eq_rhs) = to_mat(&eq_rows);
        let (ineq_matrix, ineq_rhs) = to_mat(&ineq_rows);
        Ok(Self {
            param_names: names,
            eq_matrix,
            eq_rhs,
            ineq_matrix,
            ineq_rhs,
            warnings,
        })
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn eq_matrix(&self) -> &DMatrix<f64> {
        &self.eq_matrix
    }

    pub fn eq_rhs(&self) -> &DVector<f64> {
        &self.eq_rhs
    }

    pub fn ineq_matrix(&self) -> &DMatrix<f64> {
        &self.ineq_matrix
    }

    pub fn ineq_rhs(&self) -> &DVector<f64> {
        &self.ineq_rhs
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn n_eq(&self) -> usize {
        self.eq_matrix.nrows()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_matrix.nrows()
    }

    pub fn has_equalities(&self) -> bool {
        self.n_eq() > 0
    }

    /// Stack `[R_e; R_i]` and `[r_e; r_i]`.
    pub fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.param_names.len();
        let k = self.n_eq() + self.n_ineq();
        let m = DMatrix::from_fn(k, p, |i, j| {
            if i < self.n_eq() {
                self.eq_matrix[(i, j)]
            } else {
                self.ineq_matrix[(i - self.n_eq(), j)]
            }
        });
        let r = DVector::from_iterator(k, self.eq_rhs.iter().chain(self.ineq_rhs.iter()).copied());
        (m, r)
    }

    /// Re-express the constraint matrices over an ordered list of model
    /// coefficients. Coefficients absent from the hypothesis get zero columns.
    pub fn embed(&self, coef_names: &[String]) -> Result<(DMatrix<f64>, DVector<f64>), HypothesisError> {
        let (m, r) = self.stacked();
        let mut full = DMatrix::zeros(m.nrows(), coef_names.len());
        for (j, name) in self.param_names.iter().enumerate() {
            let k = coef_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| HypothesisError::UnknownParameter(name.clone()))?;
            for i in 0..m.nrows() {
                full[(i, k)] = m[(i, j)];
            }
        }
        Ok((full, r))
    }

    /// The inequality-only part of this system.
    pub fn inequality_part(&self) -> Self {
        Self {
            eq_matrix: DMatrix::zeros(0, self.param_names.len()),
            eq_rhs: DVector::zeros(0),
            ..self.clone()
        }
    }
}

fn write_row(f: &mut fmt::Formatter<'_>, names: &[String], row: &[f64]) -> fmt::Result {
    let mut first = true;
    for (name, &c) in names.iter().zip(row) {
        if c == 0.0 {
            continue;
        }
        let mag = c.abs();
        if first {
            if c < 0.0 {
                f.write_str("-")?;
            }
        } else if c < 0.0 {
            f.write_str(" - ")?;
        } else {
            f.write_str(" + ")?;
        }
        if mag == 1.0 {
            write!(f, "{name}")?;
        } else {
            write!(f, "{mag}*{name}")?;
        }
        first = false;
    }
    Ok(())
}

/// Canonical text form: equalities then inequalities, joined by `&`.
impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sep = "";
        let parts = [
            (&self.eq_matrix, &self.eq_rhs, "="),
            (&self.ineq_matrix, &self.ineq_rhs, ">"),
        ];
        for (m, r, rel) in parts {
            for i in 0..m.nrows() {
                f.write_str(sep)?;
                let row: Vec<f64> = m.row(i).iter().copied().collect();
                write_row(f, &self.param_names, &row)?;
                write!(f, " {rel} {}", r[i])?;
                sep = " & ";
            }
        }
        Ok(())
    }
}

/// Marker for "not H": fit and complexity become `1 - f` and `1 - c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Complement {
    pub of: ConstraintSystem,
}

pub fn complement(h: &ConstraintSystem) -> Result<Complement, HypothesisError> {
    if h.has_equalities() {
        return Err(HypothesisError::EqualityComplementUnsupported);
    }
    Ok(Complement { of: h.clone() })
}

/// Which hypothesis an informative hypothesis is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    Unconstrained,
    Complement,
}

impl Alternative {
    pub fn as_str(&self) -> &'static str {
        match self {
            Alternative::Unconstrained => "unconstrained",
            Alternative::Complement => "complement",
        }
    }

    /// Label of the alternative's slot in a hypothesis set.
    pub fn slot_label(&self) -> &'static str {
        match self {
            Alternative::Unconstrained => "Hu",
            Alternative::Complement => "Hc",
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Alternative {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unconstrained" | "u" | "Hu" => Ok(Alternative::Unconstrained),
            "complement" | "c" | "Hc" => Ok(Alternative::Complement),
            other => Err(format!("unknown alternative `{other}`")),
        }
    }
}

/// A labelled set of hypotheses plus the alternative slot.
///
/// `prior_probs` has one entry per hypothesis followed by the alternative's.
#[derive(Debug, Clone)]
pub struct HypothesisSet {
    pub hypotheses: Vec<(String, ConstraintSystem)>,
    pub alternative: Alternative,
    pub prior_probs: Vec<f64>,
}

impl HypothesisSet {
    /// Equal prior probabilities over the hypotheses and the alternative.
    pub fn uniform(
        hypotheses: Vec<(String, ConstraintSystem)>,
        alternative: Alternative,
    ) -> Result<Self, HypothesisError> {
        let m = hypotheses.len() + 1;
        Self::with_priors(hypotheses, alternative, vec![1.0 / m as f64; m])
    }

    pub fn with_priors(
        hypotheses: Vec<(String, ConstraintSystem)>,
        alternative: Alternative,
        prior_probs: Vec<f64>,
    ) -> Result<Self, HypothesisError> {
        let invalid = |s: String| Err(HypothesisError::InvalidSet(s));
        if hypotheses.is_empty() {
            return invalid("no hypotheses".into());
        }
        for (i, (label, _)) in hypotheses.iter().enumerate() {
            if label == alternative.slot_label() || hypotheses[..i].iter().any(|(l, _)| l == label) {
                return invalid(format!("duplicate label `{label}`"));
            }
        }
        if alternative == Alternative::Complement {
            if hypotheses.len() != 1 {
                return invalid("a complement alternative requires exactly one hypothesis".into());
            }
            complement(&hypotheses[0].1)?;
        }
        if prior_probs.len() != hypotheses.len() + 1 {
            return invalid(format!(
                "expected {} prior probabilities, got {}",
                hypotheses.len() + 1,
                prior_probs.len()
            ));
        }
        if prior_probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return invalid("prior probabilities must be positive".into());
        }
        let total: f64 = prior_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("prior probabilities sum to {total}, not 1"));
        }
        Ok(Self {
            hypotheses,
            alternative,
            prior_probs,
        })
    }

    /// Labels including the alternative slot, in prior-probability order.
    pub fn labels(&self) -> Vec<String> {
        self.hypotheses
            .iter()
            .map(|(l, _)| l.clone())
            .chain(std::iter::once(self.alternative.slot_label().to_string()))
            .collect()
    }
}

/// Map a coefficient distribution to `eta = R b - r` for the hypothesis's
/// rows, equality rows first.
///
/// `coef_names` orders the coefficients of `dist`.
pub fn transform_constraints(
    h: &ConstraintSystem,
    coef_names: &[String],
    dist: &CoefDistribution,
) -> Result<EtaDistribution, HypothesisError> {
    let (r, rhs) = h.embed(coef_names)?;
    let joint = dist.affine(&r, &rhs);
    let eta = EtaDistribution::new(joint, h.n_eq());
    if h.has_equalities() && linalg::cholesky_lower(eta.equality_marginal().scale()).is_none() {
        return Err(HypothesisError::RankDeficientEquality);
    }
    Ok(eta)
}
