//! Random Fourier feature approximation of the Gaussian-kernel discriminant.
//!
//! Features are drawn from `w ~ N(0, omega^-2 I)`. The cosine variant uses
//! `sqrt(2) cos(w^T x + b)` with `b ~ U(0, 2 pi)`; the pair variant uses
//! `(cos w^T x, sin w^T x)`. Internally every feature component is a "slot"
//! `a cos(w^T x + b)`, a sine being a cosine shifted by `-pi/2`, so both
//! variants share one set of moment formulas.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eigen::rank_one_geig;
use crate::error::{KdaError, Result};
use crate::moments::{ClassSpec, Distribution, TwoClassProblem};
use crate::multiindex::check_len;
use crate::scoring::Discriminant;

/// Absolute ridge added to the feature covariance when none is given.
pub const RFF_DEFAULT_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RffVariant {
    SinCosPairs,
    #[default]
    PhaseShiftedCos,
}

impl RffVariant {
    /// Feature components per frequency.
    pub fn width(self) -> usize {
        match self {
            RffVariant::SinCosPairs => 2,
            RffVariant::PhaseShiftedCos => 1,
        }
    }
}

impl std::str::FromStr for RffVariant {
    type Err = KdaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sincos" | "sin-cos" | "sin_cos_pairs" => Ok(RffVariant::SinCosPairs),
            "cos" | "phase-shifted-cos" | "phase_shifted_cos" => Ok(RffVariant::PhaseShiftedCos),
            _ => Err(KdaError::InvalidArgument(format!("unknown feature variant '{s}'"))),
        }
    }
}

/// What is stored when features are serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RffSpec {
    pub dim: usize,
    pub num_features: usize,
    pub bandwidth: f64,
    pub variant: RffVariant,
    pub seed: u64,
}

/// A draw of `D` random frequencies (and phases for the cosine variant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RffSpec", try_from = "RffSpec")]
pub struct RffFeatures {
    spec: RffSpec,
    frequencies: Vec<Vec<f64>>,
    phases: Vec<f64>,
}

impl From<RffFeatures> for RffSpec {
    fn from(f: RffFeatures) -> RffSpec {
        f.spec
    }
}

impl TryFrom<RffSpec> for RffFeatures {
    type Error = KdaError;
    fn try_from(s: RffSpec) -> Result<Self> {
        sample_features(s.dim, s.num_features, s.bandwidth, s.variant, s.seed)
    }
}

/// Draws features. Each frequency (then its phase) is drawn in turn from one
/// seeded stream, so the first `D'` features of a draw of size `D` equal a
/// draw of size `D'`.
pub fn sample_features(p: usize, d: usize, omega: f64, variant: RffVariant, seed: u64) -> Result<RffFeatures> {
    if d == 0 || p == 0 {
        return Err(KdaError::InvalidArgument("need at least one feature and one input dimension".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(KdaError::InvalidArgument(format!("bandwidth {omega} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frequencies = Vec::with_capacity(d);
    let mut phases = Vec::new();
    for _ in 0..d {
        let w: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal) / omega).collect();
        frequencies.push(w);
        if variant == RffVariant::PhaseShiftedCos {
            phases.push(rng.gen_range(0.0..2.0 * PI));
        }
    }
    let spec = RffSpec { dim: p, num_features: d, bandwidth: omega, variant, seed };
    Ok(RffFeatures { spec, frequencies, phases })
}

#[derive(Debug, Clone, Copy)]
struct Slot<'a> {
    w: &'a [f64],
    b: f64,
    amp: f64,
}

impl RffFeatures {
    pub fn spec(&self) -> &RffSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn num_features(&self) -> usize {
        self.spec.num_features
    }

    pub fn variant(&self) -> RffVariant {
        self.spec.variant
    }

    pub fn frequencies(&self) -> &[Vec<f64>] {
        &self.frequencies
    }

    /// Phases; empty for the pair variant.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Length of the feature vector: `D` or `2D`.
    pub fn width(&self) -> usize {
        self.spec.num_features * self.spec.variant.width()
    }

    /// The first `d` features of this draw.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.num_features() {
            return Err(KdaError::InvalidArgument(format!(
                "cannot truncate {} features to {d}",
                self.num_features()
            )));
        }
        let mut spec = self.spec;
        spec.num_features = d;
        Ok(RffFeatures {
            spec,
            frequencies: self.frequencies[..d].to_vec(),
            phases: self.phases[..self.phases.len().min(d)].to_vec(),
        })
    }

    fn slots(&self) -> Vec<Slot<'_>> {
        let mut out = Vec::with_capacity(self.width());
        for (i, w) in self.frequencies.iter().enumerate() {
            match self.spec.variant {
                RffVariant::PhaseShiftedCos => out.push(Slot { w, b: self.phases[i], amp: SQRT_2 }),
                RffVariant::SinCosPairs => {
                    out.push(Slot { w, b: 0.0, amp: 1.0 });
                    out.push(Slot { w, b: -FRAC_PI_2, amp: 1.0 });
                }
            }
        }
        out
    }

    fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for (i, w) in self.frequencies.iter().enumerate() {
            let t = dot(w, x);
            match self.spec.variant {
                RffVariant::PhaseShiftedCos => out.push(SQRT_2 * (t + self.phases[i]).cos()),
                RffVariant::SinCosPairs => {
                    let (s, c) = t.sin_cos();
                    out.push(c);
                    out.push(s);
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Concatenated feature vector `z(x)`, unscaled.
pub fn feature_eval(features: &RffFeatures, x: &[f64]) -> Result<Vec<f64>> {
    check_len(features.dim(), x.len())?;
    Ok(features.eval_unchecked(x))
}

/// The map `Z_D(x) = z(x) / sqrt(D)`, whose inner products estimate the kernel.
pub fn feature_map(features: &RffFeatures, x: &[f64]) -> Result<Vec<f64>> {
    let scale = 1.0 / (features.num_features() as f64).sqrt();
    Ok(feature_eval(features, x)?.into_iter().map(|v| v * scale).collect())
}

/// Monte Carlo kernel estimate `(1/D) sum_i z_i(x)^T z_i(u)`.
pub fn kernel_mc_check(features: &RffFeatures, x: &[f64], u: &[f64]) -> Result<f64> {
    let zx = feature_eval(features, x)?;
    let zu = feature_eval(features, u)?;
    Ok(dot(&zx, &zu) / features.num_features() as f64)
}

/// `E[cos(w^T X + b)]` for `X ~ N(mu, sigma)`.
pub fn cos_expectation(mu: &[f64], sigma: &DMatrix<f64>, w: &[f64], b: f64) -> f64 {
    let wv = DVector::from_column_slice(w);
    let quad = (sigma * &wv).dot(&wv);
    (-0.5 * quad).exp() * (dot(w, mu) + b).cos()
}

/// Feature means and second moments for one class.
struct ClassFeatureMoments {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

fn gaussian_feature_moments(slots: &[Slot<'_>], mu: &DVector<f64>, sigma: &DMatrix<f64>) -> ClassFeatureMoments {
    let m = slots.len();
    let mu = mu.as_slice();
    let mean = DVector::from_fn(m, |i, _| slots[i].amp * cos_expectation(mu, sigma, slots[i].w, slots[i].b));
    let mut covariance = DMatrix::zeros(m, m);
    let mut diff = vec![0.0; mu.len()];
    let mut sum = vec![0.0; mu.len()];
    for i in 0..m {
        for j in 0..=i {
            let (si, sj) = (slots[i], slots[j]);
            for k in 0..mu.len() {
                diff[k] = si.w[k] - sj.w[k];
                sum[k] = si.w[k] + sj.w[k];
            }
            // cos A cos B = (cos(A - B) + cos(A + B)) / 2
            let second = 0.5
                * si.amp
                * sj.amp
                * (cos_expectation(mu, sigma, &diff, si.b - sj.b) + cos_expectation(mu, sigma, &sum, si.b + sj.b));
            let c = second - mean[i] * mean[j];
            covariance[(i, j)] = c;
            covariance[(j, i)] = c;
        }
    }
    ClassFeatureMoments { mean, covariance }
}

fn empirical_feature_moments(features: &RffFeatures, sample: &DMatrix<f64>) -> ClassFeatureMoments {
    let n = sample.nrows();
    let m = features.width();
    let mut z = DMatrix::zeros(n, m);
    for r in 0..n {
        let x: Vec<f64> = sample.row(r).iter().copied().collect();
        for (c, v) in features.eval_unchecked(&x).into_iter().enumerate() {
            z[(r, c)] = v;
        }
    }
    let mean = z.row_mean().transpose();
    for mut row in z.row_iter_mut() {
        row -= mean.transpose();
    }
    let covariance = z.tr_mul(&z) / n as f64;
    ClassFeatureMoments { mean, covariance }
}

fn class_feature_moments(features: &RffFeatures, class: &ClassSpec) -> ClassFeatureMoments {
    match &class.distribution {
        Distribution::Empirical { sample } => empirical_feature_moments(features, sample),
        dist => {
            let (mu, sigma) = dist.gaussian_parameters().expect("non-empirical classes are Gaussian");
            gaussian_feature_moments(&features.slots(), &mu, &sigma)
        }
    }
}

/// Fitted random-feature discriminant `f_D(x) = (1/D) nu^T z(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffModel {
    pub features: RffFeatures,
    pub nu: Vec<f64>,
    pub lambda: f64,
    pub degenerate: bool,
    pub ridge: f64,
}

impl Discriminant for RffModel {
    fn input_dim(&self) -> usize {
        self.features.dim()
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        dot(&self.nu, &self.features.eval_unchecked(x)) / self.features.num_features() as f64
    }
}

/// Fits the random-feature eigenproblem. Gaussian classes use closed-form
/// feature moments, empirical classes use sample averages. `ridge = None`
/// uses [`RFF_DEFAULT_RIDGE`].
pub fn fit_population(problem: &TwoClassProblem, features: &RffFeatures, ridge: Option<f64>) -> Result<RffModel> {
    check_len(features.dim(), problem.dim())?;
    let ridge = ridge.unwrap_or(RFF_DEFAULT_RIDGE);
    let m1 = class_feature_moments(features, &problem.class1);
    let m2 = class_feature_moments(features, &problem.class2);
    let delta = &m1.mean - &m2.mean;
    let w = m1.covariance * problem.class1.prior + m2.covariance * problem.class2.prior;
    let sol = rank_one_geig(&delta, &w, ridge)?;
    Ok(RffModel {
        features: features.clone(),
        nu: sol.nu.iter().copied().collect(),
        lambda: sol.lambda,
        degenerate: sol.degenerate,
        ridge,
    })
}

pub fn evaluate(model: &RffModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

/// `lambda_D` for nested prefixes of one feature draw of size `max(ds)`.
pub fn lambda_d_curve(
    problem: &TwoClassProblem,
    omega: f64,
    variant: RffVariant,
    seed: u64,
    ds: &[usize],
    ridge: Option<f64>,
) -> Result<Vec<(usize, f64)>> {
    let d_max = ds.iter().copied().max().ok_or_else(|| KdaError::InvalidArgument("no feature counts".into()))?;
    let all = sample_features(problem.dim(), d_max, omega, variant, seed)?;
    ds.iter()
        .map(|&d| Ok((d, fit_population(problem, &all.truncated(d)?, ridge)?.lambda)))
        .collect()
}
