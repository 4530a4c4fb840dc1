//! Multi-indices, multinomial coefficients and monomials.
//!
//! A multi-index `j = (j_1, ..., j_p)` names the monomial `x^j = x_1^{j_1} ... x_p^{j_p}`.
//! Every polynomial feature space in this crate is coordinatised by an
//! [`IndexSet`], and every vector or matrix built over one (moment differences,
//! pooled covariances, discriminant coefficients) uses its ordering.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{KdaError, Result};

/// Largest total degree for which multinomial coefficients are computed exactly.
pub const MAX_EXACT_DEGREE: u32 = 20;

/// A tuple of non-negative exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|j|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise sum, the exponent of `x^i * x^j`.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `j! = j_1! ... j_p!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial_f64(k)).product()
    }

    /// `ln(j!)`, for large exponents where `j!` overflows.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&k| statrs::function::factorial::ln_factorial(k as u64)).sum()
    }

    /// Human-readable monomial, e.g. `x1^2*x2`.
    pub fn term_name(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(k, &e)| if e == 1 { format!("x{}", k + 1) } else { format!("x{}^{}", k + 1, e) })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Which total degrees an [`IndexSet`] covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "degree", rename_all = "snake_case")]
pub enum DegreeSpec {
    /// All indices with `|j| == d`.
    Exact(u32),
    /// All indices with `1 <= |j| <= d`.
    Range(u32),
}

impl DegreeSpec {
    pub fn max_degree(&self) -> u32 {
        match *self {
            DegreeSpec::Exact(d) | DegreeSpec::Range(d) => d,
        }
    }
}

/// An ordered collection of multi-indices in dimension `p`.
///
/// Ordering is graded (total degree ascending) and, within a degree,
/// lexicographically descending: `S_2` in three variables reads
/// `(2,0,0), (1,1,0), (1,0,1), (0,2,0), (0,1,1), (0,0,2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "IndexSetRepr", try_from = "IndexSetRepr")]
pub struct IndexSet {
    dim: usize,
    spec: DegreeSpec,
    indices: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
}

#[derive(Serialize, Deserialize)]
struct IndexSetRepr {
    dim: usize,
    spec: DegreeSpec,
}

impl From<IndexSet> for IndexSetRepr {
    fn from(s: IndexSet) -> Self {
        IndexSetRepr { dim: s.dim, spec: s.spec }
    }
}

impl TryFrom<IndexSetRepr> for IndexSet {
    type Error = KdaError;
    fn try_from(r: IndexSetRepr) -> Result<Self> {
        if r.dim == 0 {
            return Err(KdaError::InvalidArgument("index set dimension must be positive".into()));
        }
        Ok(enumerate(r.dim, r.spec))
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.spec == other.spec
    }
}

impl IndexSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> DegreeSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn max_degree(&self) -> u32 {
        self.spec.max_degree()
    }

    /// Position of `j` in this set's ordering.
    pub fn position(&self, j: &MultiIndex) -> Option<usize> {
        self.positions.get(j).copied()
    }

    /// Evaluates every monomial of the set at `x`, in set order.
    pub fn monomials(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, x.len())?;
        let powers = PowerTable::new(x, self.max_degree());
        Ok(self.indices.iter().map(|j| powers.monomial(j)).collect())
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;
    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

/// Enumerates all multi-indices in dimension `p` selected by `spec`.
///
/// # Panics
/// If `p == 0`.
pub fn enumerate(p: usize, spec: DegreeSpec) -> IndexSet {
    assert!(p >= 1, "multi-index dimension must be positive");
    let mut indices = Vec::new();
    match spec {
        DegreeSpec::Exact(d) => push_exact(p, d, &mut indices),
        DegreeSpec::Range(d) => {
            for m in 1..=d {
                push_exact(p, m, &mut indices);
            }
        }
    }
    let positions = indices.iter().cloned().enumerate().map(|(k, j)| (j, k)).collect();
    IndexSet { dim: p, spec, indices, positions }
}

fn push_exact(p: usize, d: u32, out: &mut Vec<MultiIndex>) {
    let mut current = vec![0u32; p];
    fill(&mut current, 0, d, out);
}

// Leading coordinate takes the largest remaining exponent first, which yields
// lexicographically descending order.
fn fill(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

/// Multinomial coefficient `d! / j!`, exact for `d <= 20`.
pub fn multinomial(d: u32, j: &MultiIndex) -> Result<u64> {
    if j.degree() != d {
        return Err(KdaError::DegreeMismatch { expected: d, got: j.degree() });
    }
    if d > MAX_EXACT_DEGREE {
        return Err(KdaError::DegreeTooLarge { degree: d, max: MAX_EXACT_DEGREE });
    }
    // Product of binomials C(k_1, j_1) C(k_1 + j_2, j_2) ... stays integral at every step.
    let mut acc: u64 = 1;
    let mut total: u64 = 0;
    for &e in j.exponents() {
        for i in 1..=e as u64 {
            total += 1;
            acc = acc * total / i;
        }
    }
    Ok(acc)
}

/// `prod_k x_k^{j_k}` with `0^0 = 1`.
pub fn monomial_eval(x: &[f64], j: &MultiIndex) -> Result<f64> {
    check_len(j.dim(), x.len())?;
    Ok(x.iter().zip(j.exponents()).map(|(&v, &e)| v.powi(e as i32)).product())
}

/// Cached integer powers of each coordinate of a point, for evaluating many
/// monomials at the same point.
#[derive(Debug, Clone)]
pub struct PowerTable {
    max_degree: usize,
    // powers[k * (max_degree + 1) + e] = x_k^e
    powers: Vec<f64>,
}

impl PowerTable {
    pub fn new(x: &[f64], max_degree: u32) -> Self {
        let m = max_degree as usize;
        let mut powers = Vec::with_capacity(x.len() * (m + 1));
        for &v in x {
            let mut acc = 1.0;
            powers.push(acc);
            for _ in 0..m {
                acc *= v;
                powers.push(acc);
            }
        }
        PowerTable { max_degree: m, powers }
    }

    pub fn monomial(&self, j: &MultiIndex) -> f64 {
        let stride = self.max_degree + 1;
        j.exponents()
            .iter()
            .enumerate()
            .map(|(k, &e)| self.powers[k * stride + e as usize])
            .product()
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(KdaError::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

pub(crate) fn factorial_f64(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}
