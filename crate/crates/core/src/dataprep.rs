//! Spam-email preprocessing: CSV ingestion, zero replacement, logit/log
//! transforms, correlation-matrix PCA and a stratified train/test split.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::orient;
use crate::error::{KdaError, Result};
use crate::sample::{ClassLabel, LabeledSample};

/// Word and character percentage columns, in `[0, 100]`.
pub const PERCENT_COLUMNS: usize = 54;
/// Capital-run-length columns, at least 1.
pub const LENGTH_COLUMNS: usize = 3;
pub const FEATURE_COLUMNS: usize = PERCENT_COLUMNS + LENGTH_COLUMNS;

/// Parsed spam table. Spam is class one, regular mail class two.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub features: DMatrix<f64>,
    pub labels: Vec<ClassLabel>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn spam_fraction(&self) -> f64 {
        self.labels.iter().filter(|&&l| l == ClassLabel::One).count() as f64 / self.len() as f64
    }
}

pub fn load_spambase(path: impl AsRef<Path>) -> Result<RawTable> {
    parse_spambase(std::fs::File::open(path)?)
}

/// Parses comma-separated rows of 57 features and a trailing 0/1 label.
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_spambase<R: Read>(reader: R) -> Result<RawTable> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| KdaError::Parse { line: lineno, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != FEATURE_COLUMNS + 1 {
            return Err(err(format!("expected {} fields, found {}", FEATURE_COLUMNS + 1, fields.len())));
        }
        for (c, f) in fields[..FEATURE_COLUMNS].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| err(format!("column {}: '{f}' is not a number", c + 1)))?;
            let ok = if c < PERCENT_COLUMNS { (0.0..=100.0).contains(&v) } else { v >= 1.0 && v.is_finite() };
            if !ok {
                return Err(err(format!("column {}: value {v} out of range", c + 1)));
            }
            values.push(v);
        }
        labels.push(match fields[FEATURE_COLUMNS] {
            "1" => ClassLabel::One,
            "0" => ClassLabel::Two,
            other => return Err(err(format!("label '{other}' is not 0 or 1"))),
        });
    }
    if labels.is_empty() {
        return Err(KdaError::Parse { line: 0, message: "no data rows".into() });
    }
    Ok(RawTable { features: DMatrix::from_row_slice(labels.len(), FEATURE_COLUMNS, &values), labels })
}

/// Replaces zeros by half the smallest positive value. Returns the new values
/// and the fill, or `None` when no value is positive.
pub fn zero_replace(values: &[f64]) -> Option<(Vec<f64>, f64)> {
    let min_pos = values.iter().copied().filter(|&v| v > 0.0).min_by(f64::total_cmp)?;
    let fill = 0.5 * min_pos;
    Some((values.iter().map(|&v| if v > 0.0 { v } else { fill }).collect(), fill))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformPolicy {
    /// Logit of the percentage columns, natural log of the length columns.
    #[default]
    LogitLog,
    /// Logit everywhere; length columns are first divided by `max + fill`.
    LogitAll,
}

impl std::str::FromStr for TransformPolicy {
    type Err = KdaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit-log" => Ok(TransformPolicy::LogitLog),
            "logit-all" => Ok(TransformPolicy::LogitAll),
            _ => Err(KdaError::InvalidArgument(format!("unknown transform policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnTransform {
    /// `logit(clamp(v, fill, 100 - fill) / 100)`
    PercentLogit { fill: f64 },
    Log,
    /// `logit(v / scale)`
    ScaledLogit { scale: f64 },
}

impl ColumnTransform {
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            ColumnTransform::PercentLogit { fill } => {
                let v = if v > 0.0 { v } else { fill };
                logit(v.clamp(fill, 100.0 - fill) / 100.0)
            }
            ColumnTransform::Log => v.ln(),
            ColumnTransform::ScaledLogit { scale } => logit(v / scale),
        }
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Fitted per-column transforms; all-zero columns are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransforms {
    pub policy: TransformPolicy,
    /// Indices into the raw columns of the kept columns.
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    pub transforms: Vec<ColumnTransform>,
}

impl ColumnTransforms {
    pub fn fit(table: &RawTable, policy: TransformPolicy) -> Self {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut transforms = Vec::new();
        for c in 0..table.features.ncols() {
            let col: Vec<f64> = table.features.column(c).iter().copied().collect();
            if c < PERCENT_COLUMNS {
                match zero_replace(&col) {
                    Some((_, fill)) => {
                        kept.push(c);
                        transforms.push(ColumnTransform::PercentLogit { fill });
                    }
                    None => dropped.push(c),
                }
            } else {
                kept.push(c);
                transforms.push(match policy {
                    TransformPolicy::LogitLog => ColumnTransform::Log,
                    TransformPolicy::LogitAll => {
                        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
                        ColumnTransform::ScaledLogit { scale: max + 0.5 * min }
                    }
                });
            }
        }
        ColumnTransforms { policy, kept, dropped, transforms }
    }

    pub fn apply(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(features.nrows(), self.kept.len(), |r, k| {
            self.transforms[k].apply(features[(r, self.kept[k])])
        })
    }
}

pub fn transform(table: &RawTable, policy: TransformPolicy) -> (ColumnTransforms, DMatrix<f64>) {
    let t = ColumnTransforms::fit(table, policy);
    let m = t.apply(&table.features);
    (t, m)
}

/// Principal components of the correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor `n - 1`).
    pub sds: Vec<f64>,
    /// Column `k` is the `k`-th loading vector.
    pub loadings: DMatrix<f64>,
    /// Share of total variance per retained component.
    pub explained: Vec<f64>,
}

impl PcaModel {
    pub fn total_explained(&self) -> f64 {
        self.explained.iter().sum()
    }
}

pub fn pca_fit(matrix: &DMatrix<f64>, k: usize) -> Result<PcaModel> {
    let (n, q) = matrix.shape();
    if n < 2 {
        return Err(KdaError::InvalidArgument("PCA needs at least two rows".into()));
    }
    if k == 0 || k > q.min(n - 1) {
        return Err(KdaError::InvalidArgument(format!("cannot keep {k} components of {q} columns")));
    }
    let mut means = Vec::with_capacity(q);
    let mut sds = Vec::with_capacity(q);
    for (c, col) in matrix.column_iter().enumerate() {
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(KdaError::ZeroVariance { column: c });
        }
        means.push(mean);
        sds.push(sd);
    }
    let z = standardize(matrix, &means, &sds);
    let corr = z.tr_mul(&z) / (n - 1) as f64;
    let corr = (&corr + corr.transpose()) * 0.5;
    let eig = corr.symmetric_eigen();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().sum();
    let mut loadings = DMatrix::zeros(q, k);
    let mut explained = Vec::with_capacity(k);
    for (j, &i) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        orient(&mut v);
        loadings.set_column(j, &v);
        explained.push(eig.eigenvalues[i].max(0.0) / total);
    }
    Ok(PcaModel { means, sds, loadings, explained })
}

fn standardize(matrix: &DMatrix<f64>, means: &[f64], sds: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(matrix.nrows(), matrix.ncols(), |r, c| (matrix[(r, c)] - means[c]) / sds[c])
}

pub fn pca_scores(model: &PcaModel, matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if matrix.ncols() != model.means.len() {
        return Err(KdaError::DimensionMismatch { expected: model.means.len(), got: matrix.ncols() });
    }
    Ok(standardize(matrix, &model.means, &model.sds) * &model.loadings)
}

/// Stratified split indices, each list ascending.
pub fn split_indices(labels: &[ClassLabel], train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(KdaError::InvalidArgument(format!("train fraction {train_frac} must lie in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, code) in [(ClassLabel::One, 1u8), (ClassLabel::Two, 2u8)] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        let n_train = (train_frac * idx.len() as f64).round() as usize;
        if n_train == 0 || n_train == idx.len() {
            return Err(KdaError::EmptyClass(code));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(sample: &LabeledSample, train_frac: f64, seed: u64) -> Result<(LabeledSample, LabeledSample)> {
    let (train, test) = split_indices(sample.labels(), train_frac, seed)?;
    Ok((sample.select(&train)?, sample.select(&test)?))
}

/// Transform, PCA and split in one go.
#[derive(Debug, Clone)]
pub struct PreparedSpam {
    pub transforms: ColumnTransforms,
    pub pca: PcaModel,
    /// Scores of all rows, `n x k`.
    pub scores: DMatrix<f64>,
    pub train: LabeledSample,
    pub test: LabeledSample,
}

pub fn prepare_spam(
    table: &RawTable,
    policy: TransformPolicy,
    components: usize,
    train_frac: f64,
    seed: u64,
) -> Result<PreparedSpam> {
    let (transforms, matrix) = transform(table, policy);
    let pca = pca_fit(&matrix, components)?;
    let scores = pca_scores(&pca, &matrix)?;
    let all = LabeledSample::new(scores.clone(), table.labels.clone())?;
    let (train, test) = split(&all, train_frac, seed)?;
    Ok(PreparedSpam { transforms, pca, scores, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn row(label: u8, fill: f64) -> String {
        let mut f: Vec<String> = (0..PERCENT_COLUMNS).map(|_| fill.to_string()).collect();
        f.extend(["1".to_string(), "2".to_string(), "3".to_string()]);
        f.push(label.to_string());
        f.join(",")
    }

    #[test]
    fn parses_rows_and_labels() {
        let text = format!("{}\n{}\n\n{}\n", row(1, 0.5), row(0, 0.0), row(0, 12.0));
        let t = parse_spambase(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.labels, vec![ClassLabel::One, ClassLabel::Two, ClassLabel::Two]);
        assert_abs_diff_eq!(t.spam_fraction(), 1.0 / 3.0);
        assert_eq!(t.features[(2, 56)], 3.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_spambase("".as_bytes()), Err(KdaError::Parse { .. })));
        let short: Vec<&str> = vec!["0"; 57];
        let text = format!("{}\n{}\n", row(1, 0.0), short.join(","));
        assert!(matches!(parse_spambase(text.as_bytes()), Err(KdaError::Parse { line: 2, .. })));
        let bad = row(1, 0.0).replacen("0", "x", 1);
        assert!(matches!(parse_spambase(bad.as_bytes()), Err(KdaError::Parse { line: 1, .. })));
        let bad_label = row(3, 0.0);
        assert!(matches!(parse_spambase(bad_label.as_bytes()), Err(KdaError::Parse { line: 1, .. })));
    }

    #[test]
    fn zero_replace_examples() {
        assert_eq!(zero_replace(&[0.0, 2.0, 4.0]).unwrap().0, vec![1.0, 2.0, 4.0]);
        assert_eq!(zero_replace(&[3.0, 5.0]).unwrap().0, vec![3.0, 5.0]);
        assert_eq!(zero_replace(&[0.0, 0.0, 0.5]).unwrap(), (vec![0.25, 0.25, 0.5], 0.25));
        assert!(zero_replace(&[0.0, 0.0]).is_none());
        let once = zero_replace(&[0.0, 0.3, 7.0]).unwrap().0;
        assert_eq!(zero_replace(&once).unwrap().0, once);
    }

    #[test]
    fn transform_examples() {
        let pct = ColumnTransform::PercentLogit { fill: 0.01 };
        assert_abs_diff_eq!(pct.apply(50.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pct.apply(25.0), -1.0986123, epsilon = 1e-7);
        assert_abs_diff_eq!(pct.apply(100.0), -pct.apply(0.0), epsilon = 1e-9);
        assert!(pct.apply(100.0).is_finite());
        assert_eq!(ColumnTransform::Log.apply(1.0), 0.0);
    }

    #[test]
    fn all_zero_percent_columns_are_dropped() {
        let mut m = DMatrix::from_element(4, FEATURE_COLUMNS, 0.0);
        for r in 0..4 {
            m[(r, 0)] = r as f64;
            for c in PERCENT_COLUMNS..FEATURE_COLUMNS {
                m[(r, c)] = 1.0 + r as f64;
            }
        }
        let table = RawTable {
            features: m,
            labels: vec![ClassLabel::One, ClassLabel::Two, ClassLabel::One, ClassLabel::Two],
        };
        for policy in [TransformPolicy::LogitLog, TransformPolicy::LogitAll] {
            let (t, out) = transform(&table, policy);
            assert_eq!(t.kept.len(), 1 + LENGTH_COLUMNS);
            assert_eq!(t.dropped.len(), PERCENT_COLUMNS - 1);
            assert!(out.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn pca_on_axis_aligned_data() {
        // Columns uncorrelated with distinct scales: correlation matrix is I.
        let m = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, -1.0, 5.0, 1.0, -5.0, -1.0, -5.0]);
        let p = pca_fit(&m, 2).unwrap();
        let abs = p.loadings.abs();
        assert!((abs[(0, 0)] - 1.0).abs() < 1e-12 || (abs[(1, 0)] - 1.0).abs() < 1e-12);
        assert_abs_diff_eq!(p.total_explained(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pca_scores_are_centred_and_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = DMatrix::from_fn(300, 5, |_, _| rng.gen::<f64>());
        let mix = DMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.3 * (i + j) as f64 });
        let m = base * mix;
        let p = pca_fit(&m, 5).unwrap();
        assert_abs_diff_eq!(p.total_explained(), 1.0, epsilon = 1e-12);
        assert!(p.explained.windows(2).all(|w| w[0] >= w[1]));
        let s = pca_scores(&p, &m).unwrap();
        for c in 0..5 {
            assert!(s.column(c).mean().abs() < 1e-10);
        }
        let cov = s.tr_mul(&s);
        for i in 0..5 {
            for j in 0..i {
                assert!((cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt()).abs() < 1e-10);
            }
        }
        let gram = p.loadings.tr_mul(&p.loadings);
        assert!((gram - DMatrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 2.0, 3.0, 2.0]);
        assert!(matches!(pca_fit(&m, 1), Err(KdaError::ZeroVariance { column: 1 })));
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<ClassLabel> =
            (0..101).map(|i| if i % 3 == 0 { ClassLabel::One } else { ClassLabel::Two }).collect();
        let a = split_indices(&labels, 0.6, 7).unwrap();
        assert_eq!(a, split_indices(&labels, 0.6, 7).unwrap());
        assert_ne!(a, split_indices(&labels, 0.6, 8).unwrap());
        for label in [ClassLabel::One, ClassLabel::Two] {
            let total = labels.iter().filter(|&&l| l == label).count() as f64;
            let train = a.0.iter().filter(|&&i| labels[i] == label).count() as f64;
            assert!((train - 0.6 * total).abs() <= 1.0);
        }
        assert_eq!(a.0.len() + a.1.len(), 101);

        let tiny = vec![ClassLabel::One, ClassLabel::One, ClassLabel::Two, ClassLabel::Two, ClassLabel::Two];
        assert!(split_indices(&tiny, 0.999, 1).is_err());
        assert!(split_indices(&tiny, 1.0, 1).is_err());
    }
}
