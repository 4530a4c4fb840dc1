//! Sample kernel discriminant analysis.
//!
//! The discriminant is `f(x) = sum_i alpha_i K(x_i, x)` where `alpha` is the
//! leading generalized eigenvector of `B_n alpha = lambda W_n alpha`, with
//! `B_n = (K1 - K2)(K1 - K2)^T` built from class-averaged kernel columns and
//! `W_n` the pooled within-class scatter of the kernel columns. `W_n` has rank
//! at most `n - 2`, so a small ridge is always added.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eigen::{rank_one_geig, trace_scaled_ridge, SAMPLE_RIDGE_FACTOR};
use crate::error::{KdaError, Result};
use crate::kernels::{kernel_eval_unchecked, KernelSpec};
use crate::moments::{ClassSpec, MomentTable, TwoClassProblem};
use crate::multiindex::{check_len, enumerate, DegreeSpec};
use crate::par::{self, Execution};
use crate::population::{fit_from_moments, DiscriminantModel, Provenance};
use crate::scoring::Discriminant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ClassLabel {
    One,
    Two,
}

impl From<ClassLabel> for u8 {
    fn from(l: ClassLabel) -> u8 {
        match l {
            ClassLabel::One => 1,
            ClassLabel::Two => 2,
        }
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = KdaError;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ClassLabel::One),
            2 => Ok(ClassLabel::Two),
            _ => Err(KdaError::InvalidArgument(format!("class label {v} is not 1 or 2"))),
        }
    }
}

impl ClassLabel {
    pub fn other(self) -> Self {
        match self {
            ClassLabel::One => ClassLabel::Two,
            ClassLabel::Two => ClassLabel::One,
        }
    }
}

/// Points (rows) with class labels; both classes nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    points: DMatrix<f64>,
    labels: Vec<ClassLabel>,
}

impl LabeledSample {
    pub fn new(points: DMatrix<f64>, labels: Vec<ClassLabel>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return Err(KdaError::DimensionMismatch { expected: points.nrows(), got: labels.len() });
        }
        if points.ncols() == 0 {
            return Err(KdaError::InvalidArgument("points must have at least one feature".into()));
        }
        for (label, code) in [(ClassLabel::One, 1), (ClassLabel::Two, 2)] {
            if !labels.contains(&label) {
                return Err(KdaError::EmptyClass(code));
            }
        }
        Ok(LabeledSample { points, labels })
    }

    /// Draws `n1` and `n2` points from the Gaussian classes of `problem`.
    pub fn draw(problem: &TwoClassProblem, n1: usize, n2: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = problem.dim();
        let mut rows: Vec<f64> = Vec::with_capacity((n1 + n2) * p);
        let mut labels = Vec::with_capacity(n1 + n2);
        for (class, n, label) in [(&problem.class1, n1, ClassLabel::One), (&problem.class2, n2, ClassLabel::Two)] {
            let (mean, cov) = class.distribution.gaussian_parameters().ok_or_else(|| {
                KdaError::InvalidArgument("sampling requires Gaussian class distributions".into())
            })?;
            let l = cov.cholesky().ok_or(KdaError::NotPositiveDefinite)?.l();
            for _ in 0..n {
                let z = DVector::from_iterator(p, (0..p).map(|_| StandardNormal.sample(&mut rng)));
                let x = &mean + &l * z;
                rows.extend(x.iter());
                labels.push(label);
            }
        }
        Self::new(DMatrix::from_row_slice(n1 + n2, p, &rows), labels)
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn class_indices(&self, label: ClassLabel) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == label).map(|(i, _)| i).collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let p = self.dim();
        let points = DMatrix::from_fn(idx.len(), p, |r, c| self.points[(idx[r], c)]);
        Self::new(points, idx.iter().map(|&i| self.labels[i]).collect())
    }

    /// Both classes as empirical distributions with priors `n_l / n`.
    pub fn empirical_problem(&self) -> Result<TwoClassProblem> {
        let n = self.len() as f64;
        let class = |label| {
            let idx = self.class_indices(label);
            let pts = DMatrix::from_fn(idx.len(), self.dim(), |r, c| self.points[(idx[r], c)]);
            ClassSpec::empirical(pts, idx.len() as f64 / n)
        };
        let c1 = class(ClassLabel::One)?;
        let mut c2 = class(ClassLabel::Two)?;
        // Keep the priors summing to one exactly.
        c2.prior = 1.0 - c1.prior;
        TwoClassProblem::new(c1, c2)
    }
}

/// Gram matrix `[K(x_i, x_j)]` of the rows of `points`.
pub fn kernel_matrix(points: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    kernel_matrix_with(points, spec, Execution::default())
}

pub fn kernel_matrix_with(points: &DMatrix<f64>, spec: &KernelSpec, exec: Execution) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = points.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| points.row(i).iter().copied().collect()).collect();
    let mut data = vec![0.0; n * n];
    par::for_each_chunk(exec, &mut data, n.max(1), |i, out| {
        for (j, cell) in out.iter_mut().enumerate() {
            *cell = kernel_eval_unchecked(spec, &rows[i], &rows[j]);
        }
    });
    // Symmetric, so the row-major buffer is also the column-major one.
    Ok(DMatrix::from_vec(n, n, data))
}

/// Class-mean kernel difference `K1 - K2` and pooled within-class scatter `W_n`.
fn mean_difference_and_within(k: &DMatrix<f64>, sample: &LabeledSample) -> (DVector<f64>, DMatrix<f64>) {
    let n = sample.len();
    let mut means = Vec::with_capacity(2);
    let mut w = DMatrix::zeros(n, n);
    for label in [ClassLabel::One, ClassLabel::Two] {
        let idx = sample.class_indices(label);
        let nl = idx.len();
        let mut centred = DMatrix::from_fn(n, nl, |r, c| k[(r, idx[c])]);
        let mean = centred.column_mean();
        for mut col in centred.column_iter_mut() {
            col -= &mean;
        }
        // (n_l / n) K_l (I / n_l - J / n_l^2) K_l^T = C_l C_l^T / n
        w.gemm(1.0 / n as f64, &centred, &centred.transpose(), 1.0);
        means.push(mean);
    }
    let mut sym = w.clone();
    sym += w.transpose();
    sym *= 0.5;
    (&means[0] - &means[1], sym)
}

/// `(B_n, W_n)` for a labelled sample.
pub fn between_within(sample: &LabeledSample, spec: &KernelSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let k = kernel_matrix(sample.points(), spec)?;
    let (delta, w) = mean_difference_and_within(&k, sample);
    let b = &delta * delta.transpose();
    Ok((b, w))
}

/// Threshold on oriented scores: predict class 1 when `orientation * f(x) > threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    /// `+1` or `-1`, chosen so class 1 has the higher mean oriented score.
    pub orientation: f64,
    pub threshold: f64,
    pub training_error: f64,
}

impl ThresholdRule {
    pub fn predict(&self, score: f64) -> ClassLabel {
        if self.orientation * score > self.threshold {
            ClassLabel::One
        } else {
            ClassLabel::Two
        }
    }
}

/// Fitted sample discriminant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleKdaModel {
    pub training_points: Vec<Vec<f64>>,
    pub kernel: KernelSpec,
    pub alpha: Vec<f64>,
    pub lambda: f64,
    pub ridge: f64,
    pub degenerate: bool,
    pub threshold: Option<ThresholdRule>,
}

impl Discriminant for SampleKdaModel {
    fn input_dim(&self) -> usize {
        self.training_points.first().map_or(0, Vec::len)
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.training_points
            .iter()
            .zip(&self.alpha)
            .map(|(xi, &a)| a * kernel_eval_unchecked(&self.kernel, xi, x))
            .sum()
    }
}

impl SampleKdaModel {
    pub fn classify(&self, points: &[Vec<f64>], truth: Option<&[ClassLabel]>) -> Result<Classification> {
        let rule = self.threshold.ok_or(KdaError::ThresholdUnset)?;
        classify_with(self, &rule, points, truth)
    }
}

/// Fits the dual problem. `ridge = None` uses `1e-8 * trace(W_n) / n`.
pub fn fit(sample: &LabeledSample, spec: &KernelSpec, ridge: Option<f64>) -> Result<SampleKdaModel> {
    if sample.len() < 2 {
        return Err(KdaError::InvalidArgument("sample KDA needs at least two points".into()));
    }
    let k = kernel_matrix(sample.points(), spec)?;
    let (delta, w) = mean_difference_and_within(&k, sample);
    drop(k);
    let ridge = ridge.unwrap_or_else(|| trace_scaled_ridge(&w, SAMPLE_RIDGE_FACTOR));
    let sol = rank_one_geig(&delta, &w, ridge)?;
    Ok(SampleKdaModel {
        training_points: sample.rows(),
        kernel: *spec,
        alpha: sol.nu.iter().copied().collect(),
        lambda: sol.lambda,
        ridge: sol.ridge_used,
        degenerate: sol.degenerate,
        threshold: None,
    })
}

/// Fits a polynomial kernel through sample moments instead of the `n x n`
/// dual problem. Class priors are the class proportions.
pub fn fit_moment_space(sample: &LabeledSample, spec: &KernelSpec, ridge: f64) -> Result<DiscriminantModel> {
    let (basis_spec, homogeneous, degree) = match *spec {
        KernelSpec::HomoPoly { degree } => (DegreeSpec::Exact(degree), true, degree),
        KernelSpec::InhomoPoly { degree } => (DegreeSpec::Range(degree), false, degree),
        KernelSpec::Gaussian { .. } => {
            return Err(KdaError::InvalidArgument("moment-space fits need a polynomial kernel".into()))
        }
    };
    spec.validate()?;
    let problem = sample.empirical_problem()?;
    let table = MomentTable::new(&problem, degree)?;
    let basis = enumerate(sample.dim(), basis_spec);
    fit_from_moments(&table, &basis, ridge, Provenance::SampleMoments { degree, homogeneous })
}

pub fn score(model: &SampleKdaModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

/// Chooses the cut minimising the training 0-1 error over the midpoints of
/// sorted distinct scores plus one cut below and one above all scores.
/// Among equal errors the cut of smallest magnitude wins.
pub fn threshold_from_scores(scores: &[f64], labels: &[ClassLabel]) -> Result<ThresholdRule> {
    check_len(scores.len(), labels.len())?;
    let (mut s1, mut n1, mut s2, mut n2) = (0.0, 0usize, 0.0, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match l {
            ClassLabel::One => {
                s1 += s;
                n1 += 1;
            }
            ClassLabel::Two => {
                s2 += s;
                n2 += 1;
            }
        }
    }
    if n1 == 0 {
        return Err(KdaError::EmptyClass(1));
    }
    if n2 == 0 {
        return Err(KdaError::EmptyClass(2));
    }
    let orientation = if s1 / n1 as f64 >= s2 / n2 as f64 { 1.0 } else { -1.0 };
    let mut pairs: Vec<(f64, ClassLabel)> = scores.iter().map(|&s| orientation * s).zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Cut below everything: all predicted class 1, so every class-2 point is wrong.
    let lowest = pairs[0].0;
    let highest = pairs[pairs.len() - 1].0;
    let mut best_cut = lowest - 1.0;
    let mut errors = n2;
    let mut best_errors = errors;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            match pairs[i].1 {
                ClassLabel::One => errors += 1,
                ClassLabel::Two => errors -= 1,
            }
            i += 1;
        }
        let cut = if i < pairs.len() { 0.5 * (v + pairs[i].0) } else { highest + 1.0 };
        if errors < best_errors || (errors == best_errors && cut.abs() < best_cut.abs()) {
            best_errors = errors;
            best_cut = cut;
        }
    }
    Ok(ThresholdRule {
        orientation,
        threshold: best_cut,
        training_error: best_errors as f64 / pairs.len() as f64,
    })
}

/// Sets `model.threshold` from its training scores and returns the cut.
pub fn choose_threshold(model: &mut SampleKdaModel, sample: &LabeledSample) -> Result<f64> {
    let scores = model.score_many(&sample.rows())?;
    let rule = threshold_from_scores(&scores, sample.labels())?;
    model.threshold = Some(rule);
    Ok(rule.threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub n1: usize,
    pub n2: usize,
    /// Class-1 points predicted as class 2.
    pub missed1: usize,
    /// Class-2 points predicted as class 1.
    pub missed2: usize,
}

impl Confusion {
    pub fn error1(&self) -> f64 {
        self.missed1 as f64 / self.n1 as f64
    }

    pub fn error2(&self) -> f64 {
        self.missed2 as f64 / self.n2 as f64
    }

    pub fn overall(&self) -> f64 {
        (self.missed1 + self.missed2) as f64 / (self.n1 + self.n2) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub scores: Vec<f64>,
    pub predicted: Vec<ClassLabel>,
    pub confusion: Option<Confusion>,
}

pub fn classify_with<D: Discriminant + ?Sized>(
    model: &D,
    rule: &ThresholdRule,
    points: &[Vec<f64>],
    truth: Option<&[ClassLabel]>,
) -> Result<Classification> {
    let scores = model.score_many(points)?;
    let predicted: Vec<ClassLabel> = scores.iter().map(|&s| rule.predict(s)).collect();
    let confusion = match truth {
        None => None,
        Some(t) => {
            check_len(points.len(), t.len())?;
            let mut c = Confusion { n1: 0, n2: 0, missed1: 0, missed2: 0 };
            for (&p, &y) in predicted.iter().zip(t) {
                match y {
                    ClassLabel::One => {
                        c.n1 += 1;
                        c.missed1 += usize::from(p != y);
                    }
                    ClassLabel::Two => {
                        c.n2 += 1;
                        c.missed2 += usize::from(p != y);
                    }
                }
            }
            Some(c)
        }
    };
    Ok(Classification { scores, predicted, confusion })
}

pub fn classify(model: &SampleKdaModel, points: &[Vec<f64>], truth: Option<&[ClassLabel]>) -> Result<Classification> {
    model.classify(points, truth)
}
