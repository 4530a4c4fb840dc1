//! The rank-one generalized eigenproblem `Delta Delta^T nu = lambda W nu`.
//!
//! With a rank-one left-hand side the only nonzero eigenvalue is
//! `Delta^T W^{-1} Delta` and its eigenvector is `W^{-1} Delta`, so the problem
//! reduces to one symmetric positive-definite solve. [`brute_force_geig`]
//! solves the general symmetric-definite problem and serves as an oracle.

use faer::linalg::solvers::Solve;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KdaError, Result};

/// Largest tolerated condition estimate of the (equilibrated) within-class matrix.
pub const MAX_CONDITION: f64 = 1e14;

/// Below this norm the moment-difference vector is treated as zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Relative ridge used for sample fits when none is supplied.
pub const SAMPLE_RIDGE_FACTOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    /// Separation ratio; the top generalized eigenvalue.
    pub lambda: f64,
    /// Unit-norm eigenvector, largest-magnitude entry positive. Zero when degenerate.
    pub nu: DVector<f64>,
    pub degenerate: bool,
    pub ridge_used: f64,
    /// 1-norm condition estimate of the diagonally equilibrated `W + ridge I`.
    pub condition: f64,
}

/// `factor * trace(W) / dim`, the default ridge for sample fits.
pub fn trace_scaled_ridge(w: &DMatrix<f64>, factor: f64) -> f64 {
    if w.nrows() == 0 {
        return 0.0;
    }
    factor * w.trace() / w.nrows() as f64
}

/// Flips `v` so its largest-magnitude entry is positive.
pub fn orient(v: &mut DVector<f64>) {
    if let Some((k, _)) = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0))) {
        if v[k] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Solves `Delta Delta^T nu = lambda (W + ridge I) nu` in closed form.
pub fn rank_one_geig(delta: &DVector<f64>, w: &DMatrix<f64>, ridge: f64) -> Result<EigenSolution> {
    let n = delta.len();
    if w.nrows() != n || w.ncols() != n {
        return Err(KdaError::DimensionMismatch { expected: n, got: w.nrows() });
    }
    if !(ridge >= 0.0) {
        return Err(KdaError::InvalidArgument(format!("ridge {ridge} must be non-negative")));
    }
    if delta.norm() < DEGENERATE_NORM {
        return Ok(EigenSolution {
            lambda: 0.0,
            nu: DVector::zeros(n),
            degenerate: true,
            ridge_used: ridge,
            condition: f64::NAN,
        });
    }

    let singular = |condition: f64| KdaError::SingularWithinClass { ridge, condition };

    // Symmetric diagonal equilibration: S (W + ridge I) S has unit diagonal.
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = w[(i, i)] + ridge;
        if !(d > 0.0 && d.is_finite()) {
            return Err(singular(f64::INFINITY));
        }
        scale.push(1.0 / d.sqrt());
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| {
        let v = if i == j { w[(i, i)] + ridge } else { 0.5 * (w[(i, j)] + w[(j, i)]) };
        v * scale[i] * scale[j]
    });
    let llt = a.llt(faer::Side::Lower).map_err(|_| singular(f64::INFINITY))?;
    let condition = one_norm(&a) * inverse_one_norm_estimate(&llt, n);
    if !(condition <= MAX_CONDITION) {
        return Err(singular(condition));
    }

    let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| delta[i] * scale[i]);
    let y = llt.solve(&rhs);
    let mut nu = DVector::from_fn(n, |i, _| y[(i, 0)] * scale[i]);
    let lambda = delta.dot(&nu).max(0.0);
    let norm = nu.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(singular(condition));
    }
    nu /= norm;
    orient(&mut nu);
    Ok(EigenSolution { lambda, nu, degenerate: false, ridge_used: ridge, condition })
}

fn one_norm(a: &faer::Mat<f64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Hager's estimate of `||A^{-1}||_1` for symmetric `A` from its Cholesky factor.
fn inverse_one_norm_estimate(llt: &faer::linalg::solvers::Llt<f64>, n: usize) -> f64 {
    let solve = |v: &[f64]| -> Vec<f64> {
        let rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| v[i]);
        let out = llt.solve(&rhs);
        (0..n).map(|i| out[(i, 0)]).collect()
    };
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x);
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let sign: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = solve(&sign);
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    estimate
}

/// All generalized eigenpairs of `B nu = lambda W nu` for symmetric `B` and
/// symmetric positive-definite `W`, eigenvalues descending.
///
/// Whitens with the Cholesky factor `W = L L^T`, diagonalises
/// `L^{-1} B L^{-T}`, and maps eigenvectors back through `L^{-T}`. Returned
/// eigenvectors are scaled to unit Euclidean norm with the same sign
/// convention as [`rank_one_geig`].
pub fn brute_force_geig(b: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = w.nrows();
    if w.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(KdaError::DimensionMismatch { expected: n, got: b.nrows() });
    }
    let chol = w.clone().cholesky().ok_or(KdaError::NotPositiveDefinite)?;
    let l = chol.l();
    let left = l.solve_lower_triangular(b).ok_or(KdaError::NotPositiveDefinite)?;
    let mut c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or(KdaError::NotPositiveDefinite)?
        .transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let lt = l.transpose();
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        values[k] = eig.eigenvalues[i];
        let y = eig.eigenvectors.column(i).into_owned();
        let mut v = lt.solve_upper_triangular(&y).ok_or(KdaError::NotPositiveDefinite)?;
        v /= v.norm();
        orient(&mut v);
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scenario_one_linear_solution() {
        let delta = DVector::from_vec(vec![1.6, 2.1]);
        let sol = rank_one_geig(&delta, &DMatrix::identity(2, 2), 0.0).unwrap();
        assert_abs_diff_eq!(sol.lambda, 6.97, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.nu[0], 0.6060, epsilon = 1e-4);
        assert_abs_diff_eq!(sol.nu[1], 0.7954, epsilon = 1e-4);
        assert!(!sol.degenerate);
    }

    #[test]
    fn zero_delta_is_degenerate() {
        let sol = rank_one_geig(&DVector::zeros(3), &DMatrix::identity(3, 3), 0.0).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.lambda, 0.0);
        assert_eq!(sol.nu, DVector::zeros(3));
    }

    #[test]
    fn unit_vector_identity() {
        let sol = rank_one_geig(&DVector::from_vec(vec![1.0, 0.0, 0.0]), &DMatrix::identity(3, 3), 0.0).unwrap();
        assert_abs_diff_eq!(sol.lambda, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.nu, DVector::from_vec(vec![1.0, 0.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn sign_convention() {
        let sol = rank_one_geig(&DVector::from_vec(vec![-3.0, 1.0]), &DMatrix::identity(2, 2), 0.0).unwrap();
        assert!(sol.nu[0] > 0.0);
        assert!(sol.nu[1] < 0.0);
    }

    #[test]
    fn singular_within_class_is_reported() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = rank_one_geig(&DVector::from_vec(vec![1.0, 0.0]), &w, 0.0).unwrap_err();
        assert!(matches!(err, KdaError::SingularWithinClass { ridge, .. } if ridge == 0.0));
        let ok = rank_one_geig(&DVector::from_vec(vec![1.0, 0.0]), &w, 1e-3).unwrap();
        assert!(ok.lambda > 0.0);

        let zero = DMatrix::zeros(2, 2);
        assert!(rank_one_geig(&DVector::from_vec(vec![1.0, -1.0]), &zero, 0.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            rank_one_geig(&DVector::from_vec(vec![1.0]), &DMatrix::identity(2, 2), 0.0),
            Err(KdaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn brute_force_trivial_cases() {
        let (vals, _) = brute_force_geig(&DMatrix::zeros(3, 3), &DMatrix::identity(3, 3)).unwrap();
        assert!(vals.iter().all(|&v| v.abs() < 1e-15));
        let (vals, _) = brute_force_geig(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3)).unwrap();
        assert!(vals.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(brute_force_geig(&DMatrix::identity(2, 2), &not_pd), Err(KdaError::NotPositiveDefinite)));
    }

    #[test]
    fn ridge_default_scales_with_trace() {
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        assert_abs_diff_eq!(trace_scaled_ridge(&w, 1e-8), 3e-8, epsilon = 1e-22);
    }
}
