//! Discretely observed paths and their explicit truncated signatures.
//!
//! [`PathSample`] is a path observed at strictly increasing times in [0, 1].
//! [`sig_linear`] computes the truncated signature of its piecewise-linear
//! interpolation by Chen-multiplying per-segment exponentials, optionally at
//! a lower Euler order N < M. The module also hosts the two path transforms
//! applied before signature or kernel computation: time augmentation and
//! lags.

use crate::error::{Error, Result};
use crate::tensor::GroupElement;

/// A path observed at `len()` time points: strictly increasing times in
/// [0, 1] and one point of R^d per time, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    times: Vec<f64>,
    points: Vec<f64>,
    dim: usize,
}

impl PathSample {
    /// Builds a path from times and a flat row-major `n x dim` point matrix.
    pub fn new(times: Vec<f64>, points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("path dimension must be at least 1"));
        }
        if times.is_empty() {
            return Err(Error::invalid("path must contain at least one observation"));
        }
        if points.len() != times.len() * dim {
            return Err(Error::invalid(format!(
                "point matrix has {} entries, expected {} x {}",
                points.len(),
                times.len(),
                dim
            )));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > 1.0) {
            return Err(Error::invalid("times must lie in [0, 1]"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("points contain a non-finite entry"));
        }
        Ok(PathSample { times, points, dim })
    }

    /// Convenience constructor for one-dimensional paths.
    pub fn from_values(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        PathSample::new(times, values, 1)
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Flat row-major `len() x dim()` point matrix.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// The i-th observed point.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Appends observation time as an extra coordinate, so the lifted path is
    /// strictly monotone in its last coordinate. This deliberately destroys
    /// reparameterization invariance of the signature.
    pub fn time_augment(&self) -> PathSample {
        let n = self.len();
        let dim = self.dim + 1;
        let mut points = Vec::with_capacity(n * dim);
        for i in 0..n {
            points.extend_from_slice(self.point(i));
            points.push(self.times[i]);
        }
        PathSample { times: self.times.clone(), points, dim }
    }

    /// Augments each observation with the following `lags` observations, so
    /// row i becomes `(x_i, x_{i+1}, ..., x_{i+lags})`. Indices past the end
    /// repeat the final observation, producing the staircase tail
    /// `(..., x_n, x_n)`.
    pub fn add_lags(&self, lags: usize) -> PathSample {
        if lags == 0 {
            return self.clone();
        }
        let n = self.len();
        let dim = self.dim * (lags + 1);
        let mut points = Vec::with_capacity(n * dim);
        for i in 0..n {
            for k in 0..=lags {
                points.extend_from_slice(self.point((i + k).min(n - 1)));
            }
        }
        PathSample { times: self.times.clone(), points, dim }
    }
}

/// Truncated signature of the piecewise-linear interpolation of `path`.
///
/// Per-segment exponentials truncated at Euler order `euler_level` (N) are
/// Chen-multiplied left to right and the product is truncated at `max_level`
/// (M). `N == M` yields the exact level-M signature of the interpolated
/// path; `N == 1` yields the first-order object that the sequence kernel
/// computes inner products of. A single-point path has the unit signature.
pub fn sig_linear(path: &PathSample, max_level: usize, euler_level: usize) -> Result<GroupElement> {
    if euler_level < 1 || euler_level > max_level {
        return Err(Error::invalid(format!(
            "euler level must satisfy 1 <= N <= M, got N={euler_level}, M={max_level}"
        )));
    }
    let d = path.dim();
    let mut acc = GroupElement::unit(d, max_level)?;
    let mut delta = vec![0.0; d];
    for i in 0..path.len() - 1 {
        let (p, q) = (path.point(i), path.point(i + 1));
        for k in 0..d {
            delta[k] = q[k] - p[k];
        }
        let seg = GroupElement::segment_exp(&delta, euler_level, max_level)?;
        acc = acc.chen_product(&seg, max_level)?;
    }
    Ok(acc)
}
