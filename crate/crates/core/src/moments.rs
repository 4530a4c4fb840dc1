//! Class distributions and their polynomial moments.
//!
//! Raw moments `E[X^j]` are the stored quantity. Moment differences and
//! pooled covariances over any [`IndexSet`] are assembled from a
//! [`MomentTable`] holding every raw moment up to twice the set's degree.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{KdaError, Result};
use crate::multiindex::{enumerate, DegreeSpec, IndexSet, MultiIndex, PowerTable};

/// Highest raw-moment degree a table will hold.
pub const MAX_MOMENT_DEGREE: u32 = 40;

/// Points per quasi-Monte-Carlo replicate for full-covariance Gaussians.
pub const QMC_POINTS: usize = 4096;
/// Independent random shifts of the point set; the spread of replicate means
/// gives the standard error.
pub const QMC_REPLICATES: usize = 16;

const DEFAULT_QMC_SEED: u64 = 0x6b64_615f_716d_6321;

/// Distribution of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    DiagonalGaussian { mean: Vec<f64>, variance: Vec<f64> },
    FullGaussian {
        mean: Vec<f64>,
        covariance: DMatrix<f64>,
        #[serde(default = "default_qmc_seed")]
        seed: u64,
    },
    /// Rows are observations.
    Empirical { sample: DMatrix<f64> },
}

fn default_qmc_seed() -> u64 {
    DEFAULT_QMC_SEED
}

impl Distribution {
    pub fn dim(&self) -> usize {
        match self {
            Distribution::DiagonalGaussian { mean, .. } | Distribution::FullGaussian { mean, .. } => mean.len(),
            Distribution::Empirical { sample } => sample.ncols(),
        }
    }

    /// Mean vector and covariance matrix, when the class is Gaussian.
    pub fn gaussian_parameters(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        match self {
            Distribution::DiagonalGaussian { mean, variance } => Some((
                DVector::from_column_slice(mean),
                DMatrix::from_diagonal(&DVector::from_column_slice(variance)),
            )),
            Distribution::FullGaussian { mean, covariance, .. } => {
                Some((DVector::from_column_slice(mean), covariance.clone()))
            }
            Distribution::Empirical { .. } => None,
        }
    }
}

/// A class distribution together with its prior probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub distribution: Distribution,
    pub prior: f64,
}

impl ClassSpec {
    pub fn diagonal_gaussian(mean: Vec<f64>, variance: Vec<f64>, prior: f64) -> Result<Self> {
        if mean.len() != variance.len() {
            return Err(KdaError::DimensionMismatch { expected: mean.len(), got: variance.len() });
        }
        if mean.is_empty() {
            return Err(KdaError::InvalidArgument("class dimension must be positive".into()));
        }
        if variance.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(KdaError::InvalidArgument("variances must be positive and finite".into()));
        }
        Self::checked(Distribution::DiagonalGaussian { mean, variance }, prior)
    }

    pub fn full_gaussian(mean: Vec<f64>, covariance: DMatrix<f64>, prior: f64) -> Result<Self> {
        let p = mean.len();
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(KdaError::DimensionMismatch { expected: p, got: covariance.nrows() });
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax().max(1.0) {
            return Err(KdaError::InvalidArgument("covariance must be symmetric".into()));
        }
        if covariance.clone().cholesky().is_none() {
            return Err(KdaError::NotPositiveDefinite);
        }
        Self::checked(Distribution::FullGaussian { mean, covariance, seed: DEFAULT_QMC_SEED }, prior)
    }

    pub fn empirical(sample: DMatrix<f64>, prior: f64) -> Result<Self> {
        if sample.nrows() == 0 || sample.ncols() == 0 {
            return Err(KdaError::InvalidArgument("empirical sample must be nonempty".into()));
        }
        Self::checked(Distribution::Empirical { sample }, prior)
    }

    fn checked(distribution: Distribution, prior: f64) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(KdaError::InvalidArgument(format!("prior {prior} must lie in (0, 1)")));
        }
        Ok(ClassSpec { distribution, prior })
    }

    pub fn dim(&self) -> usize {
        self.distribution.dim()
    }
}

/// Two classes with priors summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoClassProblem {
    pub class1: ClassSpec,
    pub class2: ClassSpec,
}

impl TwoClassProblem {
    pub fn new(class1: ClassSpec, class2: ClassSpec) -> Result<Self> {
        if class1.dim() != class2.dim() {
            return Err(KdaError::DimensionMismatch { expected: class1.dim(), got: class2.dim() });
        }
        if (class1.prior + class2.prior - 1.0).abs() > 1e-12 {
            return Err(KdaError::InvalidArgument(format!(
                "priors {} and {} do not sum to one",
                class1.prior, class2.prior
            )));
        }
        Ok(TwoClassProblem { class1, class2 })
    }

    /// Equal priors, common identity covariance, means (0.6, 0.9) and (-1.0, -1.2).
    pub fn scenario1() -> Self {
        TwoClassProblem {
            class1: ClassSpec::diagonal_gaussian(vec![0.6, 0.9], vec![1.0, 1.0], 0.5).unwrap(),
            class2: ClassSpec::diagonal_gaussian(vec![-1.0, -1.2], vec![1.0, 1.0], 0.5).unwrap(),
        }
    }

    /// Equal priors, zero means, covariances diag(2, 0.2) and diag(0.2, 2).
    pub fn scenario2() -> Self {
        TwoClassProblem {
            class1: ClassSpec::diagonal_gaussian(vec![0.0, 0.0], vec![2.0, 0.2], 0.5).unwrap(),
            class2: ClassSpec::diagonal_gaussian(vec![0.0, 0.0], vec![0.2, 2.0], 0.5).unwrap(),
        }
    }

    /// Scenario presets by number.
    pub fn scenario(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::scenario1()),
            2 => Ok(Self::scenario2()),
            _ => Err(KdaError::InvalidArgument(format!("unknown scenario {id}; expected 1 or 2"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.class1.dim()
    }

    pub fn classes(&self) -> [&ClassSpec; 2] {
        [&self.class1, &self.class2]
    }

    /// The same problem with the class roles exchanged.
    pub fn swapped(&self) -> Self {
        TwoClassProblem { class1: self.class2.clone(), class2: self.class1.clone() }
    }
}

/// `E[X^k]` for `X ~ N(mu, var)`.
pub fn gaussian_raw_moment_1d(mu: f64, var: f64, k: u32) -> f64 {
    gaussian_moments_1d(mu, var, k)[k as usize]
}

/// `E[X^0], ..., E[X^k]` for `X ~ N(mu, var)` by `m_k = mu m_{k-1} + (k-1) var m_{k-2}`.
pub fn gaussian_moments_1d(mu: f64, var: f64, k: u32) -> Vec<f64> {
    let mut m = Vec::with_capacity(k as usize + 1);
    m.push(1.0);
    if k >= 1 {
        m.push(mu);
    }
    for i in 2..=k as usize {
        let next = mu * m[i - 1] + (i as f64 - 1.0) * var * m[i - 2];
        m.push(next);
    }
    m
}

/// A moment value with its Monte Carlo standard error (zero for exact paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// `E[X^j]` for one class.
///
/// Diagonal Gaussians use the one-dimensional recurrence per coordinate;
/// empirical classes average the monomial over the sample; full-covariance
/// Gaussians use a seeded randomised quasi-Monte-Carlo estimate.
pub fn raw_moment(class: &ClassSpec, j: &MultiIndex) -> Result<f64> {
    raw_moment_estimate(class, j).map(|m| m.value)
}

pub fn raw_moment_estimate(class: &ClassSpec, j: &MultiIndex) -> Result<MomentEstimate> {
    if j.dim() != class.dim() {
        return Err(KdaError::DimensionMismatch { expected: class.dim(), got: j.dim() });
    }
    match &class.distribution {
        Distribution::DiagonalGaussian { mean, variance } => {
            let value = j
                .exponents()
                .iter()
                .zip(mean.iter().zip(variance))
                .map(|(&e, (&mu, &var))| gaussian_raw_moment_1d(mu, var, e))
                .product();
            Ok(MomentEstimate { value, std_error: 0.0 })
        }
        Distribution::Empirical { sample } => {
            let value = rows(sample).map(|x| PowerTable::new(&x, j.degree()).monomial(j)).sum::<f64>()
                / sample.nrows() as f64;
            Ok(MomentEstimate { value, std_error: 0.0 })
        }
        Distribution::FullGaussian { mean, covariance, seed } => {
            let cloud = qmc_gaussian_cloud(mean, covariance, *seed)?;
            let per_rep: Vec<f64> = (0..QMC_REPLICATES)
                .map(|r| {
                    let block = cloud.rows(r * QMC_POINTS, QMC_POINTS);
                    (0..QMC_POINTS)
                        .map(|i| {
                            let x: Vec<f64> = block.row(i).iter().copied().collect();
                            PowerTable::new(&x, j.degree()).monomial(j)
                        })
                        .sum::<f64>()
                        / QMC_POINTS as f64
                })
                .collect();
            let r = QMC_REPLICATES as f64;
            let value = per_rep.iter().sum::<f64>() / r;
            let var = per_rep.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (r - 1.0);
            Ok(MomentEstimate { value, std_error: (var / r).sqrt() })
        }
    }
}

fn rows(m: &DMatrix<f64>) -> impl Iterator<Item = Vec<f64>> + '_ {
    (0..m.nrows()).map(move |i| m.row(i).iter().copied().collect())
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&q| q * q <= c).all(|&q| c % q != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// Randomly shifted Halton points mapped through `mu + L z`, one block of
/// [`QMC_POINTS`] rows per replicate.
fn qmc_gaussian_cloud(mean: &[f64], covariance: &DMatrix<f64>, seed: u64) -> Result<DMatrix<f64>> {
    let p = mean.len();
    let chol = covariance.clone().cholesky().ok_or(KdaError::NotPositiveDefinite)?;
    let l = chol.l();
    let bases = first_primes(p);
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = QMC_POINTS * QMC_REPLICATES;
    let mut cloud = DMatrix::zeros(total, p);
    for r in 0..QMC_REPLICATES {
        let shift: Vec<f64> = (0..p).map(|_| rng.gen::<f64>()).collect();
        for i in 0..QMC_POINTS {
            let z = DVector::from_iterator(
                p,
                (0..p).map(|k| {
                    let u = (radical_inverse(i as u64 + 1, bases[k]) + shift[k]).fract();
                    std_normal.inverse_cdf(u.clamp(1e-16, 1.0 - 1e-16))
                }),
            );
            let x = &l * z;
            for k in 0..p {
                cloud[(r * QMC_POINTS + i, k)] = mean[k] + x[k];
            }
        }
    }
    Ok(cloud)
}

/// Raw moments of one class, plus the points when the class is (or is
/// represented by) a finite point cloud.
#[derive(Debug, Clone)]
struct ClassMoments {
    raw: HashMap<MultiIndex, f64>,
    cloud: Option<DMatrix<f64>>,
}

impl ClassMoments {
    fn build(class: &ClassSpec, max_degree: u32) -> Result<Self> {
        let p = class.dim();
        let mut all: Vec<MultiIndex> = vec![MultiIndex::zero(p)];
        all.extend(enumerate(p, DegreeSpec::Range(max_degree)).indices().iter().cloned());
        match &class.distribution {
            Distribution::DiagonalGaussian { mean, variance } => {
                let per_coord: Vec<Vec<f64>> = mean
                    .iter()
                    .zip(variance)
                    .map(|(&mu, &var)| gaussian_moments_1d(mu, var, max_degree))
                    .collect();
                let raw = all
                    .into_iter()
                    .map(|j| {
                        let v = j.exponents().iter().enumerate().map(|(k, &e)| per_coord[k][e as usize]).product();
                        (j, v)
                    })
                    .collect();
                Ok(ClassMoments { raw, cloud: None })
            }
            Distribution::Empirical { sample } => Ok(Self::from_cloud(sample.clone(), all, max_degree)),
            Distribution::FullGaussian { mean, covariance, seed } => {
                let cloud = qmc_gaussian_cloud(mean, covariance, *seed)?;
                Ok(Self::from_cloud(cloud, all, max_degree))
            }
        }
    }

    fn from_cloud(cloud: DMatrix<f64>, all: Vec<MultiIndex>, max_degree: u32) -> Self {
        let mut sums = vec![0.0; all.len()];
        for x in rows(&cloud) {
            let table = PowerTable::new(&x, max_degree);
            for (s, j) in sums.iter_mut().zip(&all) {
                *s += table.monomial(j);
            }
        }
        let n = cloud.nrows() as f64;
        let raw = all.into_iter().zip(sums).map(|(j, s)| (j, s / n)).collect();
        ClassMoments { raw, cloud: Some(cloud) }
    }

    fn get(&self, j: &MultiIndex) -> f64 {
        self.raw[j]
    }

    fn covariance(&self, idx: &IndexSet) -> DMatrix<f64> {
        let m = idx.len();
        match &self.cloud {
            // Centred features avoid the cancellation in E[X^{i+j}] - E[X^i]E[X^j]
            // for high-degree sample moments.
            Some(cloud) => {
                let n = cloud.nrows();
                let means: Vec<f64> = idx.iter().map(|j| self.get(j)).collect();
                let mut f = DMatrix::zeros(n, m);
                for (r, x) in rows(cloud).enumerate() {
                    let table = PowerTable::new(&x, idx.max_degree());
                    for (c, j) in idx.iter().enumerate() {
                        f[(r, c)] = table.monomial(j) - means[c];
                    }
                }
                let mut cov = f.tr_mul(&f) / n as f64;
                symmetrize(&mut cov);
                cov
            }
            None => {
                let mut cov = DMatrix::zeros(m, m);
                for (a, i) in idx.iter().enumerate() {
                    for (b, j) in idx.iter().enumerate().skip(a) {
                        let v = self.get(&i.add(j)) - self.get(i) * self.get(j);
                        cov[(a, b)] = v;
                        cov[(b, a)] = v;
                    }
                }
                cov
            }
        }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for a in 0..n {
        for b in (a + 1)..n {
            let v = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
}

/// Raw moments of both classes for every `|j| <= max_degree`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    dim: usize,
    max_degree: u32,
    priors: [f64; 2],
    classes: [ClassMoments; 2],
}

impl MomentTable {
    pub fn new(problem: &TwoClassProblem, max_degree: u32) -> Result<Self> {
        if max_degree > MAX_MOMENT_DEGREE {
            return Err(KdaError::DegreeTooLarge { degree: max_degree, max: MAX_MOMENT_DEGREE });
        }
        Ok(MomentTable {
            dim: problem.dim(),
            max_degree,
            priors: [problem.class1.prior, problem.class2.prior],
            classes: [
                ClassMoments::build(&problem.class1, max_degree)?,
                ClassMoments::build(&problem.class2, max_degree)?,
            ],
        })
    }

    /// Table sufficient for covariances over indices of degree up to `degree`.
    pub fn for_degree(problem: &TwoClassProblem, degree: u32) -> Result<Self> {
        Self::new(problem, 2 * degree)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `E_class[X^j]`, `class` in {1, 2}.
    pub fn moment(&self, class: u8, j: &MultiIndex) -> Option<f64> {
        let c = match class {
            1 => &self.classes[0],
            2 => &self.classes[1],
            _ => return None,
        };
        c.raw.get(j).copied()
    }

    fn check(&self, idx: &IndexSet, needed: u32) -> Result<()> {
        if idx.dim() != self.dim {
            return Err(KdaError::DimensionMismatch { expected: self.dim, got: idx.dim() });
        }
        if needed > self.max_degree {
            return Err(KdaError::DegreeTooLarge { degree: needed, max: self.max_degree });
        }
        Ok(())
    }

    pub fn delta(&self, idx: &IndexSet) -> Result<DeltaVector> {
        self.check(idx, idx.max_degree())?;
        let values = DVector::from_iterator(
            idx.len(),
            idx.iter().map(|j| self.classes[0].get(j) - self.classes[1].get(j)),
        );
        Ok(DeltaVector { basis: idx.clone(), values })
    }

    pub fn pooled_covariance(&self, idx: &IndexSet) -> Result<PooledCovariance> {
        let analytic = self.classes.iter().any(|c| c.cloud.is_none());
        self.check(idx, if analytic { 2 * idx.max_degree() } else { idx.max_degree() })?;
        let matrix =
            self.classes[0].covariance(idx) * self.priors[0] + self.classes[1].covariance(idx) * self.priors[1];
        Ok(PooledCovariance { basis: idx.clone(), matrix })
    }
}

/// `Delta_j = E_1[X^j] - E_2[X^j]` over an index set.
#[derive(Debug, Clone)]
pub struct DeltaVector {
    pub basis: IndexSet,
    pub values: DVector<f64>,
}

/// `W_ij = pi_1 Cov_1[X^i, X^j] + pi_2 Cov_2[X^i, X^j]` over an index set.
#[derive(Debug, Clone)]
pub struct PooledCovariance {
    pub basis: IndexSet,
    pub matrix: DMatrix<f64>,
}

pub fn delta_vector(problem: &TwoClassProblem, idx: &IndexSet) -> Result<DeltaVector> {
    MomentTable::new(problem, idx.max_degree())?.delta(idx)
}

pub fn pooled_covariance(problem: &TwoClassProblem, idx: &IndexSet) -> Result<PooledCovariance> {
    MomentTable::for_degree(problem, idx.max_degree())?.pooled_covariance(idx)
}
