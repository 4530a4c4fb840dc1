//! Analytic moments and fits against sampling-based oracles.

use kda_core::eigen::brute_force_geig;
use kda_core::moments::{raw_moment, raw_moment_estimate, MomentTable};
use kda_core::multiindex::enumerate;
use kda_core::population::{fit_from_moments, fit_inhomogeneous, Provenance};
use kda_core::{ClassSpec, DegreeSpec, MultiIndex, TwoClassProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn diagonal_moments_match_monte_carlo() {
    const DRAWS: usize = 1_000_000;
    let mean = [0.6, -1.2];
    let var = [1.0, 0.2];
    let class = ClassSpec::diagonal_gaussian(mean.to_vec(), var.to_vec(), 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts: Vec<[f64; 2]> = (0..DRAWS)
        .map(|_| {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            [mean[0] + var[0].sqrt() * z0, mean[1] + var[1].sqrt() * z1]
        })
        .collect();
    for j in enumerate(2, DegreeSpec::Range(6)).iter() {
        let e = j.exponents();
        let vals: Vec<f64> = pts.iter().map(|x| x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32)).collect();
        let m = vals.iter().sum::<f64>() / DRAWS as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (DRAWS - 1) as f64).sqrt();
        let se = sd / (DRAWS as f64).sqrt();
        let exact = raw_moment(&class, j).unwrap();
        assert!((m - exact).abs() <= 4.0 * se, "{}: MC {m} vs {exact} (se {se})", j.term_name());
    }
}

#[test]
fn full_covariance_estimates_cover_exact_moments() {
    // A diagonal covariance through the full-covariance path gives an
    // independent estimate of moments known exactly.
    let mean = vec![0.3, -0.5];
    let var = vec![1.5, 0.4];
    let exact = ClassSpec::diagonal_gaussian(mean.clone(), var.clone(), 0.5).unwrap();
    let full = ClassSpec::full_gaussian(mean, DMatrix::from_diagonal(&DVector::from_vec(var)), 0.5).unwrap();
    for j in enumerate(2, DegreeSpec::Range(4)).iter() {
        let want = raw_moment(&exact, j).unwrap();
        let est = raw_moment_estimate(&full, j).unwrap();
        let tol = 5.0 * est.std_error + 1e-9 * want.abs().max(1.0);
        assert!((est.value - want).abs() <= tol, "{}: {:?} vs {want}", j.term_name(), est);
    }
}

#[test]
fn correlated_second_moment() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
    let class = ClassSpec::full_gaussian(vec![1.0, 2.0], cov, 0.5).unwrap();
    let est = raw_moment_estimate(&class, &MultiIndex::new(vec![1, 1])).unwrap();
    // E[X1 X2] = cov + mu1 mu2
    assert!((est.value - 2.6).abs() < 5.0 * est.std_error + 1e-6, "{est:?}");
}

#[test]
fn population_lambda_matches_quadrature_oracle() {
    let s1 = TwoClassProblem::scenario1();
    let quad = |c: &ClassSpec| {
        let (mu, cov) = c.distribution.gaussian_parameters().unwrap();
        ClassSpec::full_gaussian(mu.iter().copied().collect(), cov, c.prior).unwrap()
    };
    let oracle_problem = TwoClassProblem::new(quad(&s1.class1), quad(&s1.class2)).unwrap();
    for d in 1..=3 {
        let exact = fit_inhomogeneous(&s1, d).unwrap();
        let table = MomentTable::for_degree(&oracle_problem, d).unwrap();
        let basis = enumerate(2, DegreeSpec::Range(d));
        let approx = fit_from_moments(&table, &basis, 0.0, Provenance::Inhomogeneous { degree: d }).unwrap();
        let rel = (approx.lambda - exact.lambda).abs() / exact.lambda;
        assert!(rel < 1e-3, "d={d}: {} vs {}", approx.lambda, exact.lambda);

        // The brute-force solver on the same system returns the same pair.
        let delta = table.delta(&basis).unwrap().values;
        let w = table.pooled_covariance(&basis).unwrap().matrix;
        let (values, vectors) = brute_force_geig(&(&delta * delta.transpose()), &w).unwrap();
        assert!((values[0] - approx.lambda).abs() < 1e-8 * values[0].max(1.0));
        let nu = DVector::from_vec(approx.nu.clone());
        assert!((nu - vectors.column(0)).amax() < 1e-6);
    }
}
