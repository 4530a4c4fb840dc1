//! Common interface for fitted discriminants and rectangular score grids.

use serde::{Deserialize, Serialize};

use crate::error::{KdaError, Result};
use crate::multiindex::check_len;
use crate::par::{self, Execution};

/// A fitted real-valued discriminant function.
pub trait Discriminant: Sync {
    fn input_dim(&self) -> usize;

    /// Score without checking the input length.
    fn score_unchecked(&self, x: &[f64]) -> f64;

    fn score(&self, x: &[f64]) -> Result<f64> {
        check_len(self.input_dim(), x.len())?;
        Ok(self.score_unchecked(x))
    }

    /// Scores every row of a row-major point list.
    fn score_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.score_many_with(points, Execution::default())
    }

    fn score_many_with(&self, points: &[Vec<f64>], exec: Execution) -> Result<Vec<f64>> {
        for x in points {
            check_len(self.input_dim(), x.len())?;
        }
        Ok(par::map_range(exec, points.len(), |i| self.score_unchecked(&points[i])))
    }
}

/// Axis-aligned two-dimensional evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Square grid `[lo, hi]^2` with `n` points per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec { x_min: lo, x_max: hi, y_min: lo, y_max: hi, nx: n, ny: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(KdaError::InvalidArgument("grid resolution must be positive".into()));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(KdaError::InvalidArgument("grid ranges must be finite with min <= max".into()));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.ny)
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Scores on a grid, row-major with one row per `y` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub scores: Vec<f64>,
}

impl ScoreGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.scores[iy * self.xs.len() + ix]
    }

    /// `(x, y, score)` triples in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let nx = self.xs.len();
        self.scores.iter().enumerate().map(move |(k, &s)| (self.xs[k % nx], self.ys[k / nx], s))
    }
}

pub fn grid_eval<D: Discriminant + ?Sized>(model: &D, spec: &GridSpec) -> Result<ScoreGrid> {
    grid_eval_with(model, spec, Execution::default())
}

pub fn grid_eval_with<D: Discriminant + ?Sized>(model: &D, spec: &GridSpec, exec: Execution) -> Result<ScoreGrid> {
    spec.validate()?;
    check_len(2, model.input_dim())?;
    let xs = spec.xs();
    let ys = spec.ys();
    let nx = xs.len();
    let mut scores = vec![0.0; nx * ys.len()];
    par::for_each_chunk(exec, &mut scores, nx, |row, out| {
        let y = ys[row];
        for (cell, &x) in out.iter_mut().zip(&xs) {
            *cell = model.score_unchecked(&[x, y]);
        }
    });
    Ok(ScoreGrid { xs, ys, scores })
}

/// Pearson correlation of two equally long score vectors.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Plane;
    impl Discriminant for Plane {
        fn input_dim(&self) -> usize {
            2
        }
        fn score_unchecked(&self, x: &[f64]) -> f64 {
            2.0 * x[0] - x[1]
        }
    }

    #[test]
    fn grid_layout_is_row_major_in_y() {
        let g = grid_eval(&Plane, &GridSpec::square(-1.0, 1.0, 3)).unwrap();
        assert_eq!(g.xs, vec![-1.0, 0.0, 1.0]);
        assert_eq!(g.at(2, 0), 2.0 + 1.0);
        assert_eq!(g.at(0, 2), -2.0 - 1.0);
        let t: Vec<_> = g.triples().collect();
        assert_eq!(t[1], (0.0, -1.0, 1.0));
    }

    #[test]
    fn single_cell_grid_is_the_centre() {
        let g = grid_eval(&Plane, &GridSpec::square(-1.0, 1.0, 1)).unwrap();
        assert_eq!(g.scores, vec![0.0]);
    }

    #[test]
    fn invalid_grids() {
        assert!(grid_eval(&Plane, &GridSpec::square(-1.0, 1.0, 0)).is_err());
        assert!(grid_eval(&Plane, &GridSpec::square(1.0, -1.0, 3)).is_err());
    }

    #[test]
    fn sequential_and_parallel_grids_agree() {
        let spec = GridSpec::square(-3.0, 3.0, 41);
        let a = grid_eval_with(&Plane, &spec, Execution::Sequential).unwrap();
        let b = grid_eval_with(&Plane, &spec, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn correlation_of_affine_images() {
        let a = [1.0, 2.0, 4.0, -1.0];
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v + 1.0).collect();
        assert!((correlation(&a, &b) - 1.0).abs() < 1e-15);
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((correlation(&a, &c) + 1.0).abs() < 1e-15);
    }
}
