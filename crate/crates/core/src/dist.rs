//! Multivariate Normal and Student-t distributions over coefficients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("scale matrix is not symmetric positive-definite")]
    NotPositiveDefinite,
    #[error("degrees of freedom must be positive, got {0}")]
    BadDf(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    Normal,
    StudentT { df: f64 },
}

/// Location-scale family over a coefficient vector.
///
/// For `StudentT` the `scale` is the scale matrix, not the covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefDistribution {
    kind: DistKind,
    mean: DVector<f64>,
    scale: DMatrix<f64>,
}

impl CoefDistribution {
    pub fn new(kind: DistKind, mean: DVector<f64>, scale: DMatrix<f64>) -> Result<Self, DistError> {
        if let DistKind::StudentT { df } = kind {
            if df.is_nan() || df <= 0.0 {
                return Err(DistError::BadDf(df));
            }
        }
        if scale.nrows() != mean.len() || scale.ncols() != mean.len() {
            return Err(DistError::Dimension {
                expected: mean.len(),
                got: scale.nrows(),
            });
        }
        if linalg::cholesky_lower(&scale).is_none() {
            return Err(DistError::NotPositiveDefinite);
        }
        Ok(Self { kind, mean, scale })
    }

    pub fn normal(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, DistError> {
        Self::new(DistKind::Normal, mean, cov)
    }

    pub fn student_t(mean: DVector<f64>, scale: DMatrix<f64>, df: f64) -> Result<Self, DistError> {
        Self::new(DistKind::StudentT { df }, mean, scale)
    }

    /// Skips the positive-definiteness check; used for transformed
    /// distributions that are validated when consumed.
    pub fn normal_unchecked(mean: DVector<f64>, scale: DMatrix<f64>) -> Self {
        Self {
            kind: DistKind::Normal,
            mean,
            scale,
        }
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn df(&self) -> Option<f64> {
        match self.kind {
            DistKind::Normal => None,
            DistKind::StudentT { df } => Some(df),
        }
    }

    /// Distribution of `R x - shift`. The result is not re-validated.
    pub fn affine(&self, r: &DMatrix<f64>, shift: &DVector<f64>) -> Self {
        let mean = r * &self.mean - shift;
        let scale = linalg::symmetrize(&(r * &self.scale * r.transpose()));
        Self {
            kind: self.kind,
            mean,
            scale,
        }
    }

    /// Same distribution with its scale matrix multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            kind: self.kind,
            mean: self.mean.clone(),
            scale: &self.scale * s,
        }
    }

    /// Marginal over a contiguous block of components.
    pub fn marginal(&self, start: usize, len: usize) -> Self {
        Self {
            kind: self.kind,
            mean: self.mean.rows(start, len).into_owned(),
            scale: self.scale.view((start, start), (len, len)).into_owned(),
        }
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64, DistError> {
        if x.len() != self.dim() {
            return Err(DistError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let l = linalg::cholesky_lower(&self.scale).ok_or(DistError::NotPositiveDefinite)?;
        let k = self.dim() as f64;
        let d = x - &self.mean;
        let m = linalg::mahalanobis_sq(&l, &d);
        let log_det = linalg::log_det_from_cholesky(&l);
        Ok(match self.kind {
            DistKind::Normal => -0.5 * (k * (2.0 * std::f64::consts::PI).ln() + log_det + m),
            DistKind::StudentT { df } => {
                ln_gamma(0.5 * (df + k))
                    - ln_gamma(0.5 * df)
                    - 0.5 * k * (df * std::f64::consts::PI).ln()
                    - 0.5 * log_det
                    - 0.5 * (df + k) * (m / df).ln_1p()
            }
        })
    }

    pub fn density(&self, x: &DVector<f64>) -> Result<f64, DistError> {
        self.log_density(x).map(f64::exp)
    }

    /// Conditional distribution of the trailing components given that the
    /// leading `k` components equal `value`.
    ///
    /// For Student-t the conditional is again Student-t with `df + k`
    /// degrees of freedom and the Schur complement inflated by
    /// `(df + d) / (df + k)`, where `d` is the Mahalanobis distance of `value`.
    pub fn condition_leading(&self, k: usize, value: &DVector<f64>) -> Result<Self, DistError> {
        let n = self.dim();
        let rest = n - k;
        if k == 0 {
            return Ok(self.clone());
        }
        let s11 = self.scale.view((0, 0), (k, k)).into_owned();
        let s12 = self.scale.view((0, k), (k, rest)).into_owned();
        let s22 = self.scale.view((k, k), (rest, rest)).into_owned();
        let l = linalg::cholesky_lower(&s11).ok_or(DistError::NotPositiveDefinite)?;
        let chol = nalgebra::Cholesky::new(s11).ok_or(DistError::NotPositiveDefinite)?;
        let d = value - self.mean.rows(0, k);
        let a = chol.solve(&s12); // S11^-1 S12
        let mean = self.mean.rows(k, rest) + a.transpose() * &d;
        let schur = linalg::symmetrize(&(s22 - s12.transpose() * &a));
        Ok(match self.kind {
            DistKind::Normal => Self {
                kind: DistKind::Normal,
                mean,
                scale: schur,
            },
            DistKind::StudentT { df } => {
                let m = linalg::mahalanobis_sq(&l, &d);
                let kk = k as f64;
                Self {
                    kind: DistKind::StudentT { df: df + kk },
                    mean,
                    scale: schur * ((df + m) / (df + kk)),
                }
            }
        })
    }

    /// Exact `P(x > 0)` for a one-dimensional distribution.
    pub fn univariate_positive_prob(&self) -> Result<f64, DistError> {
        if self.dim() != 1 {
            return Err(DistError::Dimension {
                expected: 1,
                got: self.dim(),
            });
        }
        let s2 = self.scale[(0, 0)];
        if !s2.is_finite() || s2 <= 0.0 {
            return Err(DistError::NotPositiveDefinite);
        }
        let m = self.mean[0];
        if m == 0.0 {
            return Ok(0.5);
        }
        let z = m / s2.sqrt();
        Ok(match self.kind {
            DistKind::Normal => std_normal_cdf(z),
            DistKind::StudentT { df } => StudentsT::new(0.0, 1.0, df).map_err(|_| DistError::BadDf(df))?.cdf(z),
        })
    }

    pub fn sampler(&self) -> Result<Sampler, DistError> {
        let chol = linalg::cholesky_lower(&self.scale).ok_or(DistError::NotPositiveDefinite)?;
        let chi = match self.kind {
            DistKind::StudentT { df } if df != 1.0 => Some(ChiSquared::new(df).map_err(|_| DistError::BadDf(df))?),
            _ => None,
        };
        Ok(Sampler {
            kind: self.kind,
            mean: self.mean.clone(),
            chol,
            chi,
        })
    }
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws from a [`CoefDistribution`] through its Cholesky factor.
///
/// Student-t draws are `mean + L z / sqrt(w / df)` with `w ~ chi2(df)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: DistKind,
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    chi: Option<ChiSquared<f64>>,
}

impl Sampler {
    fn mixing_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistKind::Normal => 1.0,
            DistKind::StudentT { df } => {
                let w = match &self.chi {
                    Some(chi) => chi.sample(rng),
                    None => {
                        // chi2(1) is a squared standard normal.
                        let z: f64 = rng.sample(StandardNormal);
                        z * z
                    }
                };
                (w / df).sqrt()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let k = self.mean.len();
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = self.mixing_scale(rng);
        &self.mean + (&self.chol * z) / s
    }

    /// Number of `draws` samples whose components are all strictly positive.
    pub fn count_positive<R: Rng + ?Sized>(&self, draws: usize, rng: &mut R) -> usize {
        let k = self.mean.len();
        let mut z = vec![0.0; k];
        let mut hits = 0;
        for _ in 0..draws {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let s = self.mixing_scale(rng);
            // mean + L z / s > 0  <=>  s * mean + L z > 0 since s > 0.
            let ok = (0..k).all(|i| {
                let lz: f64 = z
                    .iter()
                    .take(i + 1)
                    .enumerate()
                    .map(|(j, zj)| self.chol[(i, j)] * zj)
                    .sum();
                s * self.mean[i] + lz > 0.0
            });
            hits += ok as usize;
        }
        hits
    }
}

/// Joint distribution of the constraint values `eta`, equality rows first.
#[derive(Debug, Clone)]
pub struct EtaDistribution {
    joint: CoefDistribution,
    n_eq: usize,
}

impl EtaDistribution {
    pub fn new(joint: CoefDistribution, n_eq: usize) -> Self {
        Self { joint, n_eq }
    }

    pub fn joint(&self) -> &CoefDistribution {
        &self.joint
    }

    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn n_ineq(&self) -> usize {
        self.joint.dim() - self.n_eq
    }

    pub fn equality_marginal(&self) -> CoefDistribution {
        self.joint.marginal(0, self.n_eq)
    }

    pub fn inequality_marginal(&self) -> CoefDistribution {
        self.joint.marginal(self.n_eq, self.n_ineq())
    }

    /// Inequality block conditioned on all equality constraints holding.
    pub fn inequality_given_equalities(&self) -> Result<CoefDistribution, DistError> {
        self.joint.condition_leading(self.n_eq, &DVector::zeros(self.n_eq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn reference_densities() {
        let n1 = CoefDistribution::normal(v(&[0.0]), DMatrix::identity(1, 1)).unwrap();
        assert!((n1.density(&v(&[0.0])).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let n2 = CoefDistribution::normal(v(&[0.0]), DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert!((n2.density(&v(&[0.0])).unwrap() - 0.282_094_791_773_878_14).abs() < 1e-15);
        let c = CoefDistribution::student_t(v(&[0.0]), DMatrix::identity(1, 1), 1.0).unwrap();
        assert!((c.density(&v(&[0.0])).unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-14);
    }

    #[test]
    fn bivariate_normal_density_matches_formula() {
        let rho: f64 = 0.4;
        let s = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let d = CoefDistribution::normal(v(&[0.0, 0.0]), s).unwrap();
        let (x, y) = (0.3, -0.7);
        let q = (x * x - 2.0 * rho * x * y + y * y) / (1.0 - rho * rho);
        let expect = (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * (1.0 - rho * rho).sqrt());
        assert!((d.density(&v(&[x, y])).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            CoefDistribution::normal(v(&[0.0, 0.0]), DMatrix::from_element(2, 2, 1.0)).unwrap_err(),
            DistError::NotPositiveDefinite
        );
        assert_eq!(
            CoefDistribution::student_t(v(&[0.0]), DMatrix::identity(1, 1), 0.0).unwrap_err(),
            DistError::BadDf(0.0)
        );
    }

    #[test]
    fn univariate_probabilities() {
        let d = CoefDistribution::normal(v(&[1.645]), DMatrix::identity(1, 1)).unwrap();
        assert!((d.univariate_positive_prob().unwrap() - 0.950_015_094_460_4).abs() < 1e-9);
        let t = CoefDistribution::student_t(v(&[1.0]), DMatrix::identity(1, 1), 1.0).unwrap();
        // Cauchy: 1/2 + atan(1)/pi = 3/4.
        assert!((t.univariate_positive_prob().unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn normal_conditioning_matches_schur_complement() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let d = CoefDistribution::normal(v(&[1.0, -1.0]), s).unwrap();
        let c = d.condition_leading(1, &v(&[0.0])).unwrap();
        assert!((c.mean()[0] - (-1.0 + -0.3)).abs() < 1e-15);
        assert!((c.scale()[(0, 0)] - (1.0 - 0.18)).abs() < 1e-15);
    }

    #[test]
    fn t_conditioning_is_ratio_of_densities() {
        // The conditional density equals joint / marginal at any point.
        let s = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]);
        let d = CoefDistribution::student_t(v(&[0.3, -0.2]), s, 4.0).unwrap();
        let c = d.condition_leading(1, &v(&[0.0])).unwrap();
        for y in [-1.0, 0.0, 0.7] {
            let joint = d.density(&v(&[0.0, y])).unwrap();
            let marg = d.marginal(0, 1).density(&v(&[0.0])).unwrap();
            assert!((c.density(&v(&[y])).unwrap() - joint / marg).abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_moments() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let d = CoefDistribution::normal(v(&[1.0, -2.0]), s.clone()).unwrap();
        let sampler = d.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mut mean = DVector::zeros(2);
        let mut cov = DMatrix::zeros(2, 2);
        let draws: Vec<_> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        for x in &draws {
            mean += x;
        }
        mean /= n as f64;
        for x in &draws {
            let c = x - &mean;
            cov += &c * c.transpose();
        }
        cov /= (n - 1) as f64;
        assert!((mean[0] - 1.0).abs() < 0.01 && (mean[1] + 2.0).abs() < 0.01);
        assert!((cov - s).amax() < 0.03);
    }

    #[test]
    fn orthant_count_matches_symmetry() {
        let d = CoefDistribution::normal(v(&[0.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let p = d.sampler().unwrap().count_positive(n, &mut rng) as f64 / n as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.25 * 0.75 / n as f64).sqrt());
    }
}
