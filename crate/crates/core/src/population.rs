//! Population discriminants for polynomial kernels and the truncated
//! Gaussian kernel.
//!
//! For the homogeneous kernel of degree `d` the discriminant is a polynomial
//! over the monomials `x^j`, `|j| = d`; for the inhomogeneous kernel (and the
//! Gaussian kernel truncated at degree `N`) it runs over `1 <= |j| <= d`. In
//! both cases the coefficients solve `Delta Delta^T nu = lambda W nu` with
//! moment differences `Delta` and pooled monomial covariances `W`.

use serde::{Deserialize, Serialize};

use crate::eigen::rank_one_geig;
use crate::error::{KdaError, Result};
use crate::moments::{MomentTable, TwoClassProblem, MAX_MOMENT_DEGREE};
use crate::multiindex::{enumerate, DegreeSpec, IndexSet, PowerTable};
use crate::scoring::Discriminant;

/// Largest polynomial degree (or truncation degree) a population fit accepts.
pub const MAX_FIT_DEGREE: u32 = MAX_MOMENT_DEGREE / 2;

/// Which fit produced a [`DiscriminantModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Homogeneous { degree: u32 },
    Inhomogeneous { degree: u32 },
    GaussianTruncated { bandwidth: f64, truncation: u32 },
    /// Fitted from the sample moments of a labelled data set.
    SampleMoments { degree: u32, homogeneous: bool },
}

/// A polynomial discriminant `f(x) = sum_j nu_j x^j` over a monomial basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantModel {
    pub basis: IndexSet,
    pub nu: Vec<f64>,
    pub lambda: f64,
    pub degenerate: bool,
    pub ridge: f64,
    pub provenance: Provenance,
}

impl DiscriminantModel {
    /// Coefficient of the monomial `x^j`, zero if `j` is outside the basis.
    pub fn coefficient(&self, j: &crate::multiindex::MultiIndex) -> f64 {
        self.basis.position(j).map_or(0.0, |k| self.nu[k])
    }
}

impl Discriminant for DiscriminantModel {
    fn input_dim(&self) -> usize {
        self.basis.dim()
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let powers = PowerTable::new(x, self.basis.max_degree());
        self.basis.iter().zip(&self.nu).map(|(j, &c)| c * powers.monomial(j)).sum()
    }
}

/// Fits over an arbitrary basis from precomputed moments.
pub fn fit_from_moments(
    table: &MomentTable,
    basis: &IndexSet,
    ridge: f64,
    provenance: Provenance,
) -> Result<DiscriminantModel> {
    let delta = table.delta(basis)?;
    let w = table.pooled_covariance(basis)?;
    let sol = rank_one_geig(&delta.values, &w.matrix, ridge)?;
    Ok(DiscriminantModel {
        basis: basis.clone(),
        nu: sol.nu.iter().copied().collect(),
        lambda: sol.lambda,
        degenerate: sol.degenerate,
        ridge: sol.ridge_used,
        provenance,
    })
}

fn check_degree(d: u32) -> Result<()> {
    if d == 0 {
        return Err(KdaError::InvalidArgument("degree must be at least 1".into()));
    }
    if d > MAX_FIT_DEGREE {
        return Err(KdaError::DegreeTooLarge { degree: d, max: MAX_FIT_DEGREE });
    }
    Ok(())
}

pub fn fit_homogeneous(problem: &TwoClassProblem, d: u32) -> Result<DiscriminantModel> {
    fit_homogeneous_with_ridge(problem, d, 0.0)
}

pub fn fit_homogeneous_with_ridge(problem: &TwoClassProblem, d: u32, ridge: f64) -> Result<DiscriminantModel> {
    check_degree(d)?;
    let table = MomentTable::for_degree(problem, d)?;
    let basis = enumerate(problem.dim(), DegreeSpec::Exact(d));
    fit_from_moments(&table, &basis, ridge, Provenance::Homogeneous { degree: d })
}

pub fn fit_inhomogeneous(problem: &TwoClassProblem, d: u32) -> Result<DiscriminantModel> {
    fit_inhomogeneous_with_ridge(problem, d, 0.0)
}

pub fn fit_inhomogeneous_with_ridge(problem: &TwoClassProblem, d: u32, ridge: f64) -> Result<DiscriminantModel> {
    check_degree(d)?;
    let table = MomentTable::for_degree(problem, d)?;
    let basis = enumerate(problem.dim(), DegreeSpec::Range(d));
    fit_from_moments(&table, &basis, ridge, Provenance::Inhomogeneous { degree: d })
}

/// Gaussian-kernel discriminant from the Hermite representation truncated at
/// degree `n`.
///
/// Matching the coefficients of each `H~_i(x_omega)` in the truncated
/// eigen-equation leaves the moment system over `1 <= |j| <= n`, so the
/// coefficients do not depend on the bandwidth; it is kept in the provenance.
pub fn fit_gaussian_truncated(problem: &TwoClassProblem, omega: f64, n: u32) -> Result<DiscriminantModel> {
    fit_gaussian_truncated_with_ridge(problem, omega, n, 0.0)
}

pub fn fit_gaussian_truncated_with_ridge(
    problem: &TwoClassProblem,
    omega: f64,
    n: u32,
    ridge: f64,
) -> Result<DiscriminantModel> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(KdaError::InvalidArgument(format!("bandwidth {omega} must be positive")));
    }
    check_degree(n)?;
    let table = MomentTable::for_degree(problem, n)?;
    let basis = enumerate(problem.dim(), DegreeSpec::Range(n));
    fit_from_moments(&table, &basis, ridge, Provenance::GaussianTruncated { bandwidth: omega, truncation: n })
}

/// `(N, lambda_N)` for `N = 1..=n_max`, all from one moment table.
pub fn lambda_curve(problem: &TwoClassProblem, n_max: u32) -> Result<Vec<(u32, f64)>> {
    lambda_curve_with_ridge(problem, n_max, 0.0)
}

pub fn lambda_curve_with_ridge(problem: &TwoClassProblem, n_max: u32, ridge: f64) -> Result<Vec<(u32, f64)>> {
    check_degree(n_max)?;
    let table = MomentTable::for_degree(problem, n_max)?;
    (1..=n_max)
        .map(|n| {
            let basis = enumerate(problem.dim(), DegreeSpec::Range(n));
            let model = fit_from_moments(&table, &basis, ridge, Provenance::Inhomogeneous { degree: n })?;
            Ok((n, model.lambda))
        })
        .collect()
}

/// `sum_j nu_j x^j`.
pub fn evaluate(model: &DiscriminantModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;
    use crate::scoring::{grid_eval, GridSpec};
    use approx::assert_abs_diff_eq;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn up_to_sign(got: &[f64], want: &[f64], tol: f64) -> bool {
        let same = got.iter().zip(want).all(|(a, b)| (a - b).abs() <= tol);
        let flip = got.iter().zip(want).all(|(a, b)| (a + b).abs() <= tol);
        same || flip
    }

    #[test]
    fn scenario_one_linear() {
        let m = fit_homogeneous(&TwoClassProblem::scenario1(), 1).unwrap();
        assert!(up_to_sign(&m.nu, &[0.6060, 0.7954], 1e-4));
        assert_abs_diff_eq!(m.lambda, 6.97, epsilon = 1e-12);
    }

    #[test]
    fn scenario_two_quadratic_and_degenerate_linear() {
        let s2 = TwoClassProblem::scenario2();
        let q = fit_homogeneous(&s2, 2).unwrap();
        assert!(up_to_sign(&q.nu, &[0.7071, 0.0, -0.7071], 1e-4));
        let l = fit_homogeneous(&s2, 1).unwrap();
        assert!(l.degenerate);
        assert_eq!(l.lambda, 0.0);
    }

    #[test]
    fn inhomogeneous_examples() {
        let s1 = TwoClassProblem::scenario1();
        let m2 = fit_inhomogeneous(&s1, 2).unwrap();
        assert!(up_to_sign(&m2.nu, &[0.6060, 0.7954, 0.0, 0.0, 0.0], 1e-4));
        let m4 = fit_inhomogeneous(&s1, 4).unwrap();
        for j in enumerate(2, DegreeSpec::Exact(4)).iter() {
            assert!(m4.coefficient(j).abs() < 5e-5);
        }
        let s2 = fit_inhomogeneous(&TwoClassProblem::scenario2(), 3).unwrap();
        assert!(up_to_sign(&s2.nu, &[0.0, 0.0, 0.7071, 0.0, -0.7071, 0.0, 0.0, 0.0, 0.0], 1e-4));
    }

    #[test]
    fn truncated_gaussian_equals_inhomogeneous() {
        let s1 = TwoClassProblem::scenario1();
        let g = fit_gaussian_truncated(&s1, 1.0, 4).unwrap();
        let p = fit_inhomogeneous(&s1, 4).unwrap();
        assert_abs_diff_eq!(g.lambda, p.lambda, epsilon = 1e-12);
        assert!(up_to_sign(&g.nu, &p.nu, 1e-12));
        assert_eq!(g.provenance, Provenance::GaussianTruncated { bandwidth: 1.0, truncation: 4 });
        assert!(fit_gaussian_truncated(&TwoClassProblem::scenario2(), 1.0, 1).unwrap().degenerate);
        assert!(fit_gaussian_truncated(&s1, 0.0, 2).is_err());
    }

    #[test]
    fn lambda_curve_for_identical_classes_is_zero() {
        let s1 = TwoClassProblem::scenario1();
        let same = TwoClassProblem::new(s1.class1.clone(), s1.class1.clone()).unwrap();
        let curve = lambda_curve(&same, 6).unwrap();
        assert!(curve.iter().all(|&(_, l)| l == 0.0));
    }

    #[test]
    fn evaluate_examples() {
        let q = fit_homogeneous(&TwoClassProblem::scenario2(), 2).unwrap();
        assert_abs_diff_eq!(evaluate(&q, &[1.0, 1.0]).unwrap(), 0.0, epsilon = 1e-15);
        let deg = fit_homogeneous(&TwoClassProblem::scenario2(), 3).unwrap();
        assert_eq!(evaluate(&deg, &[0.4, 2.0]).unwrap(), 0.0);
        let lin = fit_homogeneous(&TwoClassProblem::scenario1(), 1).unwrap();
        let v = evaluate(&lin, &[1.6, 2.1]).unwrap();
        assert_abs_diff_eq!(v.abs(), 0.6060 * 1.6 + 0.7954 * 2.1, epsilon = 1e-3);
        assert!(evaluate(&lin, &[1.0]).is_err());
    }

    #[test]
    fn grid_examples() {
        let lin = fit_homogeneous(&TwoClassProblem::scenario1(), 1).unwrap();
        let g = grid_eval(&lin, &GridSpec::square(-1.0, 1.0, 3)).unwrap();
        // Linear in each coordinate: the centre is the average of opposite cells.
        assert_abs_diff_eq!(g.at(1, 1), 0.5 * (g.at(0, 0) + g.at(2, 2)), epsilon = 1e-15);
        assert_abs_diff_eq!(g.at(1, 1), 0.0, epsilon = 1e-15);

        let q = fit_homogeneous(&TwoClassProblem::scenario2(), 2).unwrap();
        let g = grid_eval(&q, &GridSpec::square(-2.0, 2.0, 5)).unwrap();
        // x1^2 - x2^2 up to sign: positive on the x1 axis, negative on the x2 axis.
        let s = g.at(4, 2).signum();
        assert_eq!(g.at(0, 2).signum(), s);
        assert_eq!(g.at(2, 0).signum(), -s);
        assert_eq!(g.at(2, 4).signum(), -s);

        let inh = fit_inhomogeneous(&TwoClassProblem::scenario1(), 2).unwrap();
        let g = grid_eval(&inh, &GridSpec::square(-1.0, 1.0, 1)).unwrap();
        assert_eq!(g.scores, vec![0.0]);
    }

    #[test]
    fn coefficient_lookup() {
        let m = fit_inhomogeneous(&TwoClassProblem::scenario2(), 2).unwrap();
        assert_abs_diff_eq!(m.coefficient(&mi(&[2, 0])).abs(), 0.7071, epsilon = 1e-4);
        assert_eq!(m.coefficient(&mi(&[5, 0])), 0.0);
    }

    #[test]
    fn degree_limits() {
        let s1 = TwoClassProblem::scenario1();
        assert!(matches!(fit_inhomogeneous(&s1, 21), Err(KdaError::DegreeTooLarge { .. })));
        assert!(fit_homogeneous(&s1, 0).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let m = fit_inhomogeneous(&TwoClassProblem::scenario1(), 3).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: DiscriminantModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
