//! Finitely supported distributions on R^d.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Weight normalization tolerance: weights must sum to 1 within this.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finitely supported probability distribution: support points and
/// nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T> {
    points: Vec<Vec<T>>,
    weights: Vec<T>,
}

impl<T: Real> EmpiricalDistribution<T> {
    /// Uniform weights 1/n on the given points.
    pub fn uniform(points: Vec<Vec<T>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Domain("empirical distribution needs at least one point".into()));
        }
        let w = T::one() / real(n as f64);
        Self::with_weights(points, vec![w; n])
    }

    pub fn with_weights(points: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("empirical distribution needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Domain(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Domain(format!(
                    "point {i} has dimension {} but point 0 has {dim}",
                    p.len()
                )));
            }
            if let Some(x) = p.iter().find(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("point {i} has non-finite entry {x}")));
            }
        }
        let mut sum = T::zero();
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < T::zero() {
                return Err(Error::Domain(format!("weight {i} is {w}, not a probability")));
            }
            sum += *w;
        }
        if (sum - T::one()).abs() > real(WEIGHT_SUM_TOL) {
            return Err(Error::Domain(format!("weights sum to {sum}, expected 1")));
        }
        Ok(EmpiricalDistribution { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one point
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i]
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    /// Weighted mean of the support.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (mk, x) in m.iter_mut().zip(p) {
                *mk += *w * *x;
            }
        }
        m
    }

    /// Σ_i w_i f(z_i); the fallible variant threads operation errors out.
    pub fn expectation<F: FnMut(&[T]) -> T>(&self, mut f: F) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| *w * f(p))
            .sum()
    }

    pub fn try_expectation<F: FnMut(&[T]) -> Result<T>>(&self, mut f: F) -> Result<T> {
        let mut acc = T::zero();
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += *w * f(p)?;
        }
        Ok(acc)
    }
}
