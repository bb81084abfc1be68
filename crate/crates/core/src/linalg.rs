//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative tolerance used when deciding numerical rank.
pub const RANK_TOL: f64 = 1e-10;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() != m.ncols() || m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let chol = m.clone().cholesky()?;
    let l = chol.l();
    if l.diagonal().iter().any(|d| *d <= 0.0 || !d.is_finite()) {
        return None;
    }
    Some(l)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Ratio of largest to smallest eigenvalue of a symmetric matrix.
///
/// Returns `f64::INFINITY` when the smallest eigenvalue is not positive.
pub fn condition_number_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 || !min.is_finite() || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Numerical rank from the singular values, relative to the largest one.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * max).count()
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// The flag is `true` when the residual vanishes, i.e. the system is consistent.
pub fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    if a.nrows() == 0 {
        return (DVector::zeros(a.ncols()), true);
    }
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    let eps = RANK_TOL * max.max(f64::MIN_POSITIVE);
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let resid = (a * &x - b).amax();
    let scale = 1.0 + b.amax();
    (x, resid <= 1e-9 * scale)
}

/// Log-determinant from a lower Cholesky factor.
pub fn log_det_from_cholesky(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Squared Mahalanobis distance `x' S^-1 x` given the lower factor of `S`.
pub fn mahalanobis_sq(l: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let z = l
        .solve_lower_triangular(x)
        .expect("cholesky factor has a positive diagonal");
    z.norm_squared()
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    Some(symmetrize(&chol.inverse()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_of_underdetermined_system() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let (x, ok) = min_norm_solve(&a, &b);
        assert!(ok);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_system_is_flagged() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 1.0]);
        let (x, ok) = min_norm_solve(&a, &b);
        assert!(!ok);
        assert!((x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_and_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(rank(&m), 1);
        assert!(condition_number_sym(&m).is_infinite() || condition_number_sym(&m) > 1e12);
        assert_eq!(rank(&DMatrix::<f64>::identity(3, 3)), 3);
    }
}
