//! Bayesian evidence synthesis: posterior model probabilities updated study
//! by study from per-study Bayes factors.
//!
//! Cumulative sums are recomputed from the trail in study-id order, so the
//! state after a set of studies does not depend on the order of insertion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bf::{self, BfError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("no value for hypothesis `{0}`")]
    MissingLabel(String),
    #[error("unknown hypothesis `{0}`")]
    UnknownLabel(String),
    #[error("study `{0}` was already added")]
    DuplicateStudy(String),
    #[error("both +inf and -inf log Bayes factors for `{0}`")]
    ConflictingSentinels(String),
    #[error("states have different hypotheses or priors")]
    Incompatible,
    #[error("invalid prior probabilities: {0}")]
    InvalidPriors(String),
    #[error(transparent)]
    Bf(#[from] BfError),
}

/// Log Bayes factors of one study, aligned with [`SynthesisState::labels`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailEntry {
    pub study_id: String,
    #[serde(with = "crate::bf::sentinel_vec")]
    pub log_bf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisState {
    labels: Vec<String>,
    prior_probs: Vec<f64>,
    cumulative: Vec<f64>,
    pmps: Vec<f64>,
    trail: Vec<TrailEntry>,
}

/// Sum of log Bayes factors; `+inf` and `-inf` together are an error.
pub fn aggregate_log_bf(values: &[f64]) -> Result<f64, SynthesisError> {
    let pos = values.contains(&f64::INFINITY);
    let neg = values.contains(&f64::NEG_INFINITY);
    match (pos, neg) {
        (true, true) => Err(SynthesisError::ConflictingSentinels(String::new())),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        (false, false) => Ok(values.iter().sum()),
    }
}

impl SynthesisState {
    /// `labels` lists every hypothesis, the alternative slot last.
    pub fn new(labels: Vec<String>, prior_probs: Vec<f64>) -> Result<Self, SynthesisError> {
        if labels.is_empty() || labels.len() != prior_probs.len() {
            return Err(SynthesisError::InvalidPriors(format!(
                "{} labels, {} prior probabilities",
                labels.len(),
                prior_probs.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(SynthesisError::InvalidPriors(format!("duplicate label `{l}`")));
            }
        }
        if prior_probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(SynthesisError::InvalidPriors("probabilities must be positive".into()));
        }
        let total: f64 = prior_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SynthesisError::InvalidPriors(format!("probabilities sum to {total}")));
        }
        let k = labels.len();
        Ok(Self {
            labels,
            pmps: prior_probs.clone(),
            prior_probs,
            cumulative: vec![0.0; k],
            trail: Vec::new(),
        })
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self, SynthesisError> {
        let k = labels.len().max(1);
        Self::new(labels, vec![1.0 / k as f64; k])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prior_probs(&self) -> &[f64] {
        &self.prior_probs
    }

    pub fn cumulative_log_bf(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn pmps(&self) -> &[f64] {
        &self.pmps
    }

    pub fn study_count(&self) -> usize {
        self.trail.len()
    }

    pub fn trail(&self) -> &[TrailEntry] {
        &self.trail
    }

    pub fn cumulative_for(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.cumulative[i])
    }

    pub fn pmp_for(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.pmps[i])
    }

    /// Add one study. Labels without a value must be the reference slot,
    /// which is the last label and carries log BF 0.
    pub fn update(&mut self, study_id: &str, values: &[(String, f64)]) -> Result<(), SynthesisError> {
        if self.trail.iter().any(|t| t.study_id == study_id) {
            return Err(SynthesisError::DuplicateStudy(study_id.to_string()));
        }
        for (l, _) in values {
            if !self.labels.contains(l) {
                return Err(SynthesisError::UnknownLabel(l.clone()));
            }
        }
        let last = self.labels.len() - 1;
        let mut row = Vec::with_capacity(self.labels.len());
        for (i, label) in self.labels.iter().enumerate() {
            match values.iter().find(|(l, _)| l == label) {
                Some((_, v)) => row.push(*v),
                None if i == last => row.push(0.0),
                None => return Err(SynthesisError::MissingLabel(label.clone())),
            }
        }
        let pos = self.trail.partition_point(|t| t.study_id.as_str() < study_id);
        self.trail.insert(
            pos,
            TrailEntry {
                study_id: study_id.to_string(),
                log_bf: row,
            },
        );
        if let Err(e) = self.recompute() {
            self.trail.remove(pos);
            self.recompute().expect("previous state was valid");
            return Err(e);
        }
        Ok(())
    }

    fn recompute(&mut self) -> Result<(), SynthesisError> {
        let mut cumulative = Vec::with_capacity(self.labels.len());
        for (i, label) in self.labels.iter().enumerate() {
            let col: Vec<f64> = self.trail.iter().map(|t| t.log_bf[i]).collect();
            cumulative.push(aggregate_log_bf(&col).map_err(|_| SynthesisError::ConflictingSentinels(label.clone()))?);
        }
        let pmps = bf::pmps(&cumulative, &self.prior_probs)?;
        self.cumulative = cumulative;
        self.pmps = pmps;
        Ok(())
    }

    /// Combine two states over disjoint studies.
    pub fn merge(&self, other: &SynthesisState) -> Result<SynthesisState, SynthesisError> {
        if self.labels != other.labels || self.prior_probs != other.prior_probs {
            return Err(SynthesisError::Incompatible);
        }
        let mut out = self.clone();
        for t in &other.trail {
            let values: Vec<(String, f64)> = out.labels.iter().cloned().zip(t.log_bf.iter().copied()).collect();
            out.update(&t.study_id, &values)?;
        }
        Ok(out)
    }

    pub fn summary(&self) -> SynthesisSummary {
        SynthesisSummary {
            labels: self.labels.clone(),
            prior_probs: self.prior_probs.clone(),
            studies: self.study_count(),
            aggregated_log_bf: self.cumulative.clone(),
            pmps: self.pmps.clone(),
            trail: self.trail.clone(),
        }
    }
}

/// JSON form of a synthesis result. Vectors are aligned with `labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub labels: Vec<String>,
    pub prior_probs: Vec<f64>,
    pub studies: usize,
    #[serde(with = "crate::bf::sentinel_vec")]
    pub aggregated_log_bf: Vec<f64>,
    pub pmps: Vec<f64>,
    pub trail: Vec<TrailEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels() -> Vec<String> {
        vec!["H1".into(), "Hu".into()]
    }

    fn add(s: &mut SynthesisState, id: &str, v: f64) {
        s.update(id, &[("H1".to_string(), v)]).unwrap();
    }

    #[test]
    fn worked_aggregate() {
        let mut s = SynthesisState::uniform(labels()).unwrap();
        for (i, bf) in [0.2f64, 2.0, 2.0].iter().enumerate() {
            add(&mut s, &format!("s{i}"), bf.ln());
        }
        assert!((s.cumulative_for("H1").unwrap().exp() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn three_caps() {
        let mut s = SynthesisState::uniform(labels()).unwrap();
        for i in 0..3 {
            add(&mut s, &format!("s{i}"), 2f64.ln());
        }
        assert!((s.pmp_for("H1").unwrap() - 8.0 / 9.0).abs() < 1e-12);
        assert!((s.cumulative_for("H1").unwrap() - 8f64.ln()).abs() < 1e-12);
        assert!((8f64.ln() - 2.079).abs() < 1e-3);
    }

    #[test]
    fn empty_state_keeps_priors() {
        let s = SynthesisState::new(vec!["H1".into(), "H2".into(), "Hu".into()], vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(s.pmps(), &[0.5, 0.3, 0.2]);
        assert_eq!(s.study_count(), 0);
    }

    #[test]
    fn aggregation_rules() {
        assert_eq!(aggregate_log_bf(&[0.5, 0.5, 0.5]).unwrap(), 1.5);
        assert_eq!(aggregate_log_bf(&[1.0, f64::NEG_INFINITY]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(aggregate_log_bf(&[f64::INFINITY, 2.0]).unwrap(), f64::INFINITY);
        assert!(aggregate_log_bf(&[f64::INFINITY, f64::NEG_INFINITY]).is_err());
    }

    #[test]
    fn errors() {
        let mut s = SynthesisState::uniform(vec!["H1".into(), "H2".into(), "Hu".into()]).unwrap();
        assert_eq!(
            s.update("a", &[("H1".into(), 0.1)]).unwrap_err(),
            SynthesisError::MissingLabel("H2".into())
        );
        s.update("a", &[("H1".into(), 0.1), ("H2".into(), 0.0)]).unwrap();
        assert!(matches!(
            s.update("a", &[("H1".into(), 0.1), ("H2".into(), 0.0)]),
            Err(SynthesisError::DuplicateStudy(_))
        ));
        assert!(matches!(
            s.update("b", &[("H9".into(), 0.1)]),
            Err(SynthesisError::UnknownLabel(_))
        ));
        let mut t = SynthesisState::uniform(labels()).unwrap();
        add(&mut t, "x", f64::INFINITY);
        assert!(t.update("y", &[("H1".into(), f64::NEG_INFINITY)]).is_err());
        assert_eq!(t.study_count(), 1);
        assert_eq!(t.pmps(), &[1.0, 0.0]);
    }

    #[test]
    fn merge_equals_sequential() {
        let mut a = SynthesisState::uniform(labels()).unwrap();
        let mut b = SynthesisState::uniform(labels()).unwrap();
        let mut all = SynthesisState::uniform(labels()).unwrap();
        for (i, v) in [0.3, -1.2, 0.7, 0.05].iter().enumerate() {
            let id = format!("s{i}");
            if i % 2 == 0 {
                add(&mut a, &id, *v)
            } else {
                add(&mut b, &id, *v)
            }
            add(&mut all, &id, *v);
        }
        assert_eq!(a.merge(&b).unwrap(), all);
        assert_eq!(b.merge(&a).unwrap(), all);
    }

    proptest! {
        #[test]
        fn order_invariance(vals in proptest::collection::vec(-5.0f64..5.0, 1..20), seed in any::<u64>()) {
            let mut order: Vec<usize> = (0..vals.len()).collect();
            let mut x = seed;
            for i in (1..order.len()).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (x >> 33) as usize % (i + 1));
            }
            let mut s1 = SynthesisState::uniform(labels()).unwrap();
            let mut s2 = SynthesisState::uniform(labels()).unwrap();
            for (i, v) in vals.iter().enumerate() {
                add(&mut s1, &format!("{i:03}"), *v);
            }
            for &i in &order {
                add(&mut s2, &format!("{i:03}"), vals[i]);
            }
            prop_assert_eq!(s1.pmps(), s2.pmps());
            prop_assert_eq!(s1.cumulative_log_bf(), s2.cumulative_log_bf());
        }

        #[test]
        fn product_consistency(vals in proptest::collection::vec(-3.0f64..3.0, 1..30)) {
            let mut s = SynthesisState::uniform(labels()).unwrap();
            for (i, v) in vals.iter().enumerate() {
                add(&mut s, &format!("{i:03}"), *v);
            }
            let product: f64 = vals.iter().map(|v| v.exp()).product();
            let agg = s.cumulative_for("H1").unwrap().exp();
            prop_assert!((agg - product).abs() <= 1e-12 * product.max(agg));
            prop_assert!((s.pmps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn uniform_priors_rank_like_pmps(a in -4.0f64..4.0, b in -4.0f64..4.0) {
            let mut s = SynthesisState::uniform(vec!["H1".into(), "H2".into(), "Hu".into()]).unwrap();
            s.update("x", &[("H1".into(), a), ("H2".into(), b)]).unwrap();
            let c = s.cumulative_log_bf();
            let p = s.pmps();
            for i in 0..3 {
                for j in 0..3 {
                    if c[i] > c[j] { prop_assert!(p[i] >= p[j]); }
                }
            }
        }
    }
}
