//! Synthetic study data: correlated normal predictors, coefficients
//! calibrated to a target R², and outcomes drawn per family.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::std_normal_cdf;
use crate::glm::{self, Dataset, Family, FitOptions, GlmError, INTERCEPT};
use crate::io::{self, IoError};
use crate::linalg;

pub const DEFAULT_WEIGHTS: [f64; 6] = [0.0, 1.0, 1.0, 1.0, 2.0, 3.0];
pub const DEFAULT_RHO: f64 = 0.3;
pub const SEPARATION_REDRAW_CAP: usize = 100;
pub const PART1_N: [usize; 6] = [25, 50, 100, 200, 400, 800];
pub const PART1_R2: [f64; 3] = [0.02, 0.09, 0.25];
pub const PART2_N: [usize; 2] = [25, 200];
pub const PART2_R2: f64 = 0.09;
pub const PART2_MAX_STUDIES: usize = 150;
pub const SCALE_COLUMN: &str = "scale";

#[derive(Debug, Error)]
pub enum SimGenError {
    #[error("invalid data generation settings: {0}")]
    InvalidSpec(String),
    #[error("separation persisted after {0} redraws")]
    PersistentSeparation(usize),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("column `{0}` has fewer than 3 distinct values")]
    TooFewDistinct(String),
    #[error("column `{0}` already exists")]
    NameCollision(String),
    #[error("a scale score needs at least two columns")]
    TooFewColumns,
    #[error("unknown simulation {0}; expected 1..=11")]
    UnknownSim(u32),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Population design for one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataGenSpec {
    pub family: Family,
    pub n: usize,
    pub r2: f64,
    pub weights: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
}

impl DataGenSpec {
    pub fn new(family: Family, n: usize, r2: f64, seed: u64) -> Self {
        Self {
            family,
            n,
            r2,
            weights: DEFAULT_WEIGHTS.to_vec(),
            rho: DEFAULT_RHO,
            seed,
        }
    }

    pub fn p(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<(), SimGenError> {
        let bad = |s: &str| Err(SimGenError::InvalidSpec(s.to_string()));
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return bad("r2 must lie in (0, 1)");
        }
        if self.weights.is_empty() || self.weights.iter().all(|w| *w == 0.0) {
            return bad("weights must contain a nonzero entry");
        }
        if self.n <= self.p() + 1 {
            return bad("n must exceed the number of coefficients");
        }
        if linalg::cholesky_lower(&self.predictor_cov()).is_none() {
            return bad("predictor covariance is not positive definite");
        }
        Ok(())
    }

    /// Unit variances with common covariance `rho`.
    pub fn predictor_cov(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { self.rho })
    }

    /// Predictor names `b1..bp`, matching the coefficient names in hypotheses.
    pub fn predictor_names(&self) -> Vec<String> {
        (1..=self.p()).map(|i| format!("b{i}")).collect()
    }
}

/// Variance of the linear predictor that yields `r2` on the family's scale.
pub fn var_linear_predictor(family: Family, r2: f64) -> f64 {
    match family {
        Family::Gaussian => r2,
        Family::BinomialLogit => r2 * (PI * PI / 3.0) / (1.0 - r2),
        Family::BinomialProbit => r2 / (1.0 - r2),
    }
}

/// `1'(a a' ∘ Σ)1`, the variance of `a'x`.
pub fn quadratic_form_denominator(a: &[f64], cov: &DMatrix<f64>) -> f64 {
    let outer = DMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j]);
    outer.component_mul(cov).sum()
}

pub fn compute_beta(spec: &DataGenSpec) -> DVector<f64> {
    let denom = quadratic_form_denominator(&spec.weights, &spec.predictor_cov());
    let k = (var_linear_predictor(spec.family, spec.r2) / denom).sqrt();
    DVector::from_iterator(spec.p(), spec.weights.iter().map(|a| a * k))
}

/// Draw predictors and outcome once, without a separation check.
pub fn draw_dataset<R: Rng + ?Sized>(spec: &DataGenSpec, rng: &mut R) -> Result<Dataset, SimGenError> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p());
    let l = linalg::cholesky_lower(&spec.predictor_cov()).expect("validated");
    let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = z * l.transpose();
    let beta = compute_beta(spec);
    let eta = &x * &beta;
    let y = match spec.family {
        Family::Gaussian => {
            let noise = Normal::new(0.0, (1.0 - spec.r2).sqrt()).expect("positive sd");
            DVector::from_iterator(n, eta.iter().map(|m| m + noise.sample(rng)))
        }
        fam => DVector::from_iterator(
            n,
            eta.iter().map(|e| {
                let pr = match fam {
                    Family::BinomialLogit => 1.0 / (1.0 + (-e).exp()),
                    _ => std_normal_cdf(*e),
                };
                Bernoulli::new(pr).expect("probability in [0, 1]").sample(rng) as u8 as f64
            }),
        ),
    };
    Ok(Dataset::new(x, y, spec.family, spec.predictor_names())?)
}

/// The generator determined by `spec.seed`.
pub fn spec_rng(spec: &DataGenSpec) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(spec.seed)
}

/// Draw until `accept` succeeds, at most [`SEPARATION_REDRAW_CAP`] times.
///
/// `accept` returns `Ok(None)` to request a redraw. The count of redraws is
/// returned with the accepted value.
pub fn draw_until<R, T, F>(spec: &DataGenSpec, rng: &mut R, mut accept: F) -> Result<(T, usize), SimGenError>
where
    R: Rng + ?Sized,
    F: FnMut(Dataset) -> Result<Option<T>, SimGenError>,
{
    for attempt in 0..SEPARATION_REDRAW_CAP {
        let d = draw_dataset(spec, rng)?;
        if let Some(v) = accept(d)? {
            return Ok((v, attempt));
        }
    }
    Err(SimGenError::PersistentSeparation(SEPARATION_REDRAW_CAP))
}

/// Draw a dataset, redrawing binomial data whose intercept-plus-predictors
/// fit is separated (or has a single outcome class).
pub fn gen_dataset<R: Rng + ?Sized>(spec: &DataGenSpec, rng: &mut R) -> Result<(Dataset, usize), SimGenError> {
    let opts = FitOptions::default();
    draw_until(spec, rng, |d| {
        if !spec.family.is_binomial() {
            return Ok(Some(d));
        }
        match glm::fit(&d.with_intercept()?, &opts) {
            Ok(_) => Ok(Some(d)),
            Err(GlmError::Separation | GlmError::SingleClass) => Ok(None),
            Err(e) => Err(e.into()),
        }
    })
}

fn column_index(d: &Dataset, column: &str) -> Result<usize, SimGenError> {
    d.names()
        .iter()
        .position(|n| n == column)
        .ok_or_else(|| SimGenError::MissingColumn(column.to_string()))
}

/// Group sizes for `n` observations in three groups; the remainder goes to
/// the lowest groups first.
pub fn tertile_sizes(n: usize) -> [usize; 3] {
    let (q, r) = (n / 3, n % 3);
    [q + (r > 0) as usize, q + (r > 1) as usize, q]
}

/// Replace `column` by low/medium/high indicators from its within-sample rank.
///
/// Ties keep their original order. Any intercept column is removed, giving a
/// cell-means coding.
pub fn tertile_categorize(d: &Dataset, column: &str) -> Result<Dataset, SimGenError> {
    let j = column_index(d, column)?;
    let v: Vec<f64> = d.x().column(j).iter().copied().collect();
    let mut distinct = v.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(SimGenError::TooFewDistinct(column.to_string()));
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
    let sizes = tertile_sizes(v.len());
    let mut group = vec![0usize; v.len()];
    for (rank, &i) in order.iter().enumerate() {
        group[i] = if rank < sizes[0] {
            0
        } else if rank < sizes[0] + sizes[1] {
            1
        } else {
            2
        };
    }
    let labels = ["low", "medium", "high"];
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (k, name) in d.names().iter().enumerate() {
        if name == INTERCEPT {
            continue;
        }
        if k == j {
            for (g, l) in labels.iter().enumerate() {
                let new = format!("{column}_{l}");
                if d.names().contains(&new) {
                    return Err(SimGenError::NameCollision(new));
                }
                cols.push(DVector::from_iterator(
                    v.len(),
                    group.iter().map(|x| (*x == g) as u8 as f64),
                ));
                names.push(new);
            }
        } else {
            cols.push(d.x().column(k).into_owned());
            names.push(name.clone());
        }
    }
    Ok(d.with_design(DMatrix::from_columns(&cols), names)?)
}

/// Replace `columns` by their row-wise mean, named `name`, placed where the
/// first of them was.
pub fn scale_score(d: &Dataset, columns: &[&str], name: &str) -> Result<Dataset, SimGenError> {
    if columns.len() < 2 {
        return Err(SimGenError::TooFewColumns);
    }
    let idx = columns
        .iter()
        .map(|c| column_index(d, c))
        .collect::<Result<Vec<_>, _>>()?;
    if d.names().iter().any(|n| n == name) && !columns.contains(&name) {
        return Err(SimGenError::NameCollision(name.to_string()));
    }
    let score = DVector::from_fn(d.n(), |i, _| {
        idx.iter().map(|j| d.x()[(i, *j)]).sum::<f64>() / idx.len() as f64
    });
    let first = *idx.iter().min().expect("non-empty");
    let mut cols = Vec::new();
    let mut names = Vec::new();
    for (k, n) in d.names().iter().enumerate() {
        if k == first {
            cols.push(score.clone());
            names.push(name.to_string());
        } else if !idx.contains(&k) {
            cols.push(d.x().column(k).into_owned());
            names.push(n.clone());
        }
    }
    Ok(d.with_design(DMatrix::from_columns(&cols), names)?)
}

/// How the generated predictors enter the analysis model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// Intercept plus all predictors.
    Standard,
    /// Cell-means coding of one predictor's tertiles, no intercept.
    Tertiles { column: String },
    /// Mean of several predictors as one scale variable, plus intercept.
    Scale { columns: Vec<String> },
}

impl ModelSpec {
    /// Analysis design from a generated dataset.
    pub fn design(&self, d: &Dataset) -> Result<Dataset, SimGenError> {
        match self {
            ModelSpec::Standard => Ok(d.with_intercept()?),
            ModelSpec::Tertiles { column } => tertile_categorize(d, column),
            ModelSpec::Scale { columns } => {
                let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
                Ok(scale_score(d, &cols, SCALE_COLUMN)?.with_intercept()?)
            }
        }
    }
}

/// One study of a simulation iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub spec: DataGenSpec,
    pub model: ModelSpec,
    /// `(label, hypothesis text)` pairs evaluated on this study.
    pub hypotheses: Vec<(String, String)>,
}

/// Settings shared by every study of a simulation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanCell {
    pub n: usize,
    pub r2: f64,
    /// Number of studies for simulations 9 to 11.
    pub studies: usize,
    /// Evaluate the components of simulation 11's hypothesis separately.
    pub decomposed: bool,
}

pub fn is_part2(sim_id: u32) -> bool {
    (9..=11).contains(&sim_id)
}

pub fn sim_hypotheses(sim_id: u32, decomposed: bool) -> Result<Vec<(String, String)>, SimGenError> {
    let one = |s: &str| vec![("H".to_string() + &sim_id.to_string(), s.to_string())];
    Ok(match sim_id {
        1 | 2 => one("b4 < b5 < b6"),
        3 => one("b6 > 0"),
        4 => one("b6_low < b6_medium < b6_high"),
        5 => one("scale > 0"),
        6 => one("{b2, b3, b4} > 0"),
        7 => one("{b2, b3, b4} < 0"),
        8 => one("{b1, b2, b3} > 0"),
        9 => one("b2 > 0"),
        10 => one("b1 > 0"),
        11 if decomposed => ["a", "b", "c"]
            .iter()
            .zip(["b2 > 0", "b3 > 0", "b4 > 0"])
            .map(|(s, h)| (format!("H11{s}"), h.to_string()))
            .collect(),
        11 => one("{b2, b3, b4} > 0"),
        other => return Err(SimGenError::UnknownSim(other)),
    })
}

/// Studies of one iteration. `plan_rng` picks the small study in simulation 2;
/// `seeds` gives the data seed of each study index.
pub fn study_plan<R: Rng + ?Sized>(
    sim_id: u32,
    cell: &PlanCell,
    plan_rng: &mut R,
    seeds: impl Fn(usize) -> u64,
) -> Result<Vec<StudyPlan>, SimGenError> {
    let hypotheses = sim_hypotheses(sim_id, cell.decomposed)?;
    let model = match sim_id {
        4 => ModelSpec::Tertiles { column: "b6".into() },
        5 => ModelSpec::Scale {
            columns: vec!["b2".into(), "b3".into(), "b4".into()],
        },
        _ => ModelSpec::Standard,
    };
    let plan = |i: usize, family: Family, n: usize| StudyPlan {
        spec: DataGenSpec::new(family, n, cell.r2, seeds(i)),
        model: model.clone(),
        hypotheses: hypotheses.clone(),
    };
    if is_part2(sim_id) {
        return Ok((0..cell.studies).map(|i| plan(i, Family::Gaussian, cell.n)).collect());
    }
    let small = (sim_id == 2).then(|| plan_rng.random_range(0..3usize));
    Ok(Family::ALL
        .iter()
        .enumerate()
        .map(|(i, f)| plan(i, *f, if small == Some(i) { 25 } else { cell.n }))
        .collect())
}

/// Audit record written next to a persisted dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: DataGenSpec,
    pub beta: Vec<f64>,
    pub redraws: usize,
    pub model: ModelSpec,
    pub file: String,
}

/// Write `<stem>.csv` and `<stem>.json` into `dir`.
pub fn persist_dataset(
    dir: &Path,
    stem: &str,
    d: &Dataset,
    spec: &DataGenSpec,
    model: &ModelSpec,
    redraws: usize,
) -> Result<(), SimGenError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let f = std::fs::File::create(&csv_path).map_err(|e| IoError::io(&csv_path, e))?;
    io::write_dataset(d, std::io::BufWriter::new(f))?;
    let manifest = DatasetManifest {
        spec: spec.clone(),
        beta: compute_beta(spec).iter().copied().collect(),
        redraws,
        model: model.clone(),
        file: format!("{stem}.csv"),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(IoError::from)?;
    std::fs::write(&json_path, text + "\n").map_err(|e| IoError::io(&json_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(cols: &[&[f64]], names: &[&str]) -> Dataset {
        let n = cols[0].len();
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Dataset::new(
            x,
            DVector::from_fn(n, |i, _| i as f64),
            Family::Gaussian,
            names.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn denominator_by_hand() {
        let spec = DataGenSpec::new(Family::Gaussian, 100, 0.09, 0);
        let d = quadratic_form_denominator(&spec.weights, &spec.predictor_cov());
        assert!((d - 30.4).abs() < 1e-12);
    }

    #[test]
    fn beta_ratios_are_exact() {
        for fam in Family::ALL {
            for r2 in PART1_R2 {
                let b = compute_beta(&DataGenSpec::new(fam, 100, r2, 0));
                assert_eq!(b[0], 0.0);
                assert_eq!(b[4], 2.0 * b[1]);
                assert_eq!(b[5], 3.0 * b[1]);
                assert_eq!(b[1], b[2]);
                assert_eq!(b[2], b[3]);
            }
        }
    }

    #[test]
    fn tertiles() {
        assert_eq!(tertile_sizes(7), [3, 2, 2]);
        assert_eq!(tertile_sizes(8), [3, 3, 2]);
        assert_eq!(tertile_sizes(6), [2, 2, 2]);
        let d = ds(&[&[1.0; 6], &[4.0, 1.0, 6.0, 2.0, 5.0, 3.0]], &[INTERCEPT, "v"]);
        let t = tertile_categorize(&d, "v").unwrap();
        assert_eq!(t.names(), ["v_low", "v_medium", "v_high"]);
        let groups: Vec<usize> = (0..6)
            .map(|i| (0..3).find(|g| t.x()[(i, *g)] == 1.0).unwrap())
            .collect();
        assert_eq!(groups, vec![1, 0, 2, 0, 2, 1]);
        let c = ds(&[&[2.0; 6]], &["v"]);
        assert!(matches!(
            tertile_categorize(&c, "v"),
            Err(SimGenError::TooFewDistinct(_))
        ));
    }

    #[test]
    fn scale_scores() {
        let d = ds(
            &[&[1.0, 0.0, 5.0], &[2.0, 0.0, 5.0], &[3.0, 0.0, 5.0], &[9.0, 9.0, 9.0]],
            &["x2", "x3", "x4", "x5"],
        );
        let s = scale_score(&d, &["x2", "x3", "x4"], "scale").unwrap();
        assert_eq!(s.names(), ["scale", "x5"]);
        assert_eq!(s.column("scale").unwrap().as_slice(), &[2.0, 0.0, 5.0]);
        assert!(matches!(scale_score(&d, &["x2"], "s"), Err(SimGenError::TooFewColumns)));
        assert!(matches!(
            scale_score(&d, &["x2", "x3"], "x5"),
            Err(SimGenError::NameCollision(_))
        ));
    }

    #[test]
    fn deterministic_generation() {
        let spec = DataGenSpec::new(Family::BinomialProbit, 60, 0.09, 5);
        let a = gen_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = gen_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plans() {
        let cell = PlanCell {
            n: 100,
            r2: 0.09,
            studies: 4,
            decomposed: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = study_plan(1, &cell, &mut rng, |i| i as u64).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|s| s.spec.n == 100 && s.hypotheses[0].1 == "b4 < b5 < b6"));
        let p = study_plan(2, &cell, &mut rng, |i| i as u64).unwrap();
        assert_eq!(p.iter().filter(|s| s.spec.n == 25).count(), 1);
        let p = study_plan(9, &cell, &mut rng, |i| i as u64).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|s| s.spec.family == Family::Gaussian));
        let d = PlanCell {
            decomposed: true,
            ..cell
        };
        let p = study_plan(11, &d, &mut rng, |i| i as u64).unwrap();
        let hs: Vec<&str> = p[0].hypotheses.iter().map(|h| h.1.as_str()).collect();
        assert_eq!(hs, ["b2 > 0", "b3 > 0", "b4 > 0"]);
        assert!(study_plan(12, &cell, &mut rng, |i| i as u64).is_err());
    }
}
