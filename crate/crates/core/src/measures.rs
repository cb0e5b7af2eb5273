//! Weighted point clouds and the preprocessing that bounds per-record
//! sensitivity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{norm, Matrix};
use crate::{Error, Result};

/// Tolerance on `Σ w = 1` after normalization.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Discrete measure `Σ_i w_i δ_{x_i}` on `R^d`.
///
/// Rows of `points` are support points. Weights are nonnegative and sum to
/// one. The measure is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Matrix,
    weights: Vec<f64>,
    uniform: bool,
}

impl EmpiricalMeasure {
    /// Builds a measure, normalizing `weights` to unit mass. Without weights
    /// every point gets `1/n`.
    pub fn from_points(points: Matrix, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.rows() == 0 {
            return Err(Error::Empty("measure has no points"));
        }
        if points.cols() == 0 {
            return Err(Error::Empty("points have zero dimension"));
        }
        check_finite(&points)?;
        let n = points.rows();
        match weights {
            None => Ok(EmpiricalMeasure {
                points,
                weights: vec![1.0 / n as f64; n],
                uniform: true,
            }),
            Some(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: w.len(),
                    });
                }
                for (index, &value) in w.iter().enumerate() {
                    if !value.is_finite() {
                        return Err(Error::NonFinite { row: index, col: 0 });
                    }
                    if value < 0.0 {
                        return Err(Error::NegativeWeight { index, value });
                    }
                }
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return Err(Error::ZeroMass);
                }
                let weights: Vec<f64> = w.iter().map(|v| v / total).collect();
                let uniform = w.iter().all(|&v| v == w[0]);
                Ok(EmpiricalMeasure {
                    points,
                    weights,
                    uniform,
                })
            }
        }
    }

    /// Uniform measure over the rows of `points`.
    pub fn uniform(points: Matrix) -> Result<Self> {
        Self::from_points(points, None)
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    /// Always false; a measure has at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every point carries weight `1/n`.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Largest Euclidean row norm.
    pub fn max_row_norm(&self) -> f64 {
        self.points.iter_rows().map(norm).fold(0.0, f64::max)
    }

    /// Weighted mean of the support.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (row, &w) in self.points.iter_rows().zip(&self.weights) {
            for (acc, &x) in m.iter_mut().zip(row) {
                *acc += w * x;
            }
        }
        m
    }

    /// Rescales rows so any two rows differ by at most 1 in `ℓ₂`.
    ///
    /// `MaxNorm` divides by `2 max_j ‖x_j‖` computed on this measure, which
    /// makes the scale data dependent. `Clip(c)` first shrinks rows longer
    /// than `c` onto the sphere of radius `c`, then divides by `2c`; with a
    /// public `c` nothing about the data leaks through the scale. A scale
    /// fixed once for a whole dataset (see [`EmpiricalMeasure::max_row_norm`])
    /// can be passed to every mini-batch as `Clip(scale)`.
    pub fn normalize_for_privacy(&self, mode: Normalization) -> Result<Self> {
        let mut points = self.points.clone();
        match mode {
            Normalization::MaxNorm => {
                let max = self.max_row_norm();
                if max == 0.0 {
                    return Err(Error::invalid(
                        "normalize",
                        "all rows are zero, max-norm scale is undefined",
                    ));
                }
                let s = 1.0 / (2.0 * max);
                points.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            }
            Normalization::Clip(c) => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::invalid("clip", format!("C must be positive, got {c}")));
                }
                for i in 0..points.rows() {
                    let row = points.row_mut(i);
                    let r = norm(row);
                    let shrink = if r > c { c / r } else { 1.0 };
                    let s = shrink / (2.0 * c);
                    row.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
        Ok(EmpiricalMeasure {
            points,
            weights: self.weights.clone(),
            uniform: self.uniform,
        })
    }

    /// Restricts the measure to `rows`, renormalizing the weights.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.dim());
        let mut w = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.len() {
                return Err(Error::invalid("rows", format!("row {r} out of range")));
            }
            data.extend_from_slice(self.points.row(r));
            w.push(self.weights[r]);
        }
        let points = Matrix::from_row_major(rows.len(), self.dim(), data)?;
        if self.uniform {
            Self::uniform(points)
        } else {
            Self::from_points(points, Some(w))
        }
    }
}

/// Row rescaling used before a dataset enters the private mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Divide by twice the largest row norm of the data itself.
    MaxNorm,
    /// Clip rows to norm `C`, then divide by `2C`.
    Clip(f64),
}

/// The `n × d` dataset matrix `X` a mechanism acts on.
pub type DatasetMatrix = Matrix;

fn check_finite(m: &Matrix) -> Result<()> {
    for (row, r) in m.iter_rows().enumerate() {
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}
