//! Truncated tensor algebra over R^d.
//!
//! A [`GroupElement`] stores the components of a tensor-series truncated at a
//! fixed level M, with the scalar component pinned to 1. This is the carrier
//! type for truncated signatures and their normalized variants. The module
//! provides the (noncommutative) tensor-algebra product used by Chen's
//! identity, dilations, per-segment exponentials, and the level-wise Hilbert
//! norms and inner products.

use crate::error::{Error, Result};

/// Element of the truncated tensor algebra with unit scalar part.
///
/// `levels[m]` is the level-m component as a dense, flat, row-major array of
/// length `dim^m`; `levels[0]` is always `[1.0]`. Entry `(i_1, ..., i_m)` of
/// level m lives at flat index `i_1 * d^{m-1} + i_2 * d^{m-2} + ... + i_m`.
///
/// Elements are immutable after construction; every operation returns a new
/// value, so sharing across threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    dim: usize,
    max_level: usize,
    levels: Vec<Vec<f64>>,
}

/// Squared level norms `(‖t^m‖²)_{m=0..M}` of a [`GroupElement`].
///
/// `values[0] == 1` always, since the scalar component is pinned to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelNorms {
    values: Vec<f64>,
}

/// Level-wise inner products `(⟨s^m, t^m⟩)_{m=0..M}` of two elements; the
/// full inner product is the sum of the entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelInnerProducts {
    values: Vec<f64>,
}

fn level_len(dim: usize, level: usize) -> Result<usize> {
    dim.checked_pow(level as u32)
        .ok_or_else(|| Error::invalid(format!("level size d^m overflows: d={dim}, m={level}")))
}

impl GroupElement {
    /// The unit element `(1, 0, 0, ...)`.
    pub fn unit(dim: usize, max_level: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let mut levels = Vec::with_capacity(max_level + 1);
        levels.push(vec![1.0]);
        for m in 1..=max_level {
            levels.push(vec![0.0; level_len(dim, m)?]);
        }
        Ok(GroupElement { dim, max_level, levels })
    }

    /// Builds an element from explicit level arrays, validating the shape
    /// invariants (`levels[0] == [1.0]`, `levels[m].len() == dim^m`, all
    /// entries finite).
    pub fn from_levels(dim: usize, levels: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if levels.is_empty() {
            return Err(Error::invalid("levels must contain at least the scalar level"));
        }
        if levels[0] != [1.0] {
            return Err(Error::invalid("level 0 must be exactly [1.0]"));
        }
        for (m, level) in levels.iter().enumerate() {
            if level.len() != level_len(dim, m)? {
                return Err(Error::invalid(format!(
                    "level {m} has length {}, expected {}",
                    level.len(),
                    level_len(dim, m)?
                )));
            }
            if level.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("level {m} contains a non-finite entry")));
            }
        }
        let max_level = levels.len() - 1;
        Ok(GroupElement { dim, max_level, levels })
    }

    /// The truncated exponential of a single linear segment: level m equals
    /// `delta^⊗m / m!` for `m <= euler_level` and zero for
    /// `euler_level < m <= max_level`.
    ///
    /// With `euler_level == max_level` this is the exact truncated signature
    /// of the straight-line path with increment `delta`; with
    /// `euler_level == 1` it is the per-segment factor of the first-order
    /// sequence approximation.
    pub fn segment_exp(delta: &[f64], euler_level: usize, max_level: usize) -> Result<Self> {
        if euler_level < 1 || euler_level > max_level {
            return Err(Error::invalid(format!(
                "euler level must satisfy 1 <= N <= M, got N={euler_level}, M={max_level}"
            )));
        }
        if delta.is_empty() {
            return Err(Error::invalid("segment increment must have dimension at least 1"));
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("segment increment contains a non-finite entry"));
        }
        let dim = delta.len();
        let mut out = GroupElement::unit(dim, max_level)?;
        for m in 1..=euler_level {
            let prev = out.levels[m - 1].clone();
            let level = &mut out.levels[m];
            let inv_m = 1.0 / m as f64;
            for (ia, &va) in prev.iter().enumerate() {
                let base = ia * dim;
                for (ib, &vb) in delta.iter().enumerate() {
                    level[base + ib] = va * vb * inv_m;
                }
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// The level-m component as a flat row-major slice of length `dim^m`.
    pub fn level(&self, m: usize) -> &[f64] {
        &self.levels[m]
    }

    /// Tensor-algebra product of two elements, truncated at `max_level`.
    ///
    /// Level m of the result is the convolution `Σ_{n=0}^{m} a^{m-n} ⊗ b^n`.
    /// Both operands must share dimension and truncation level, and
    /// `max_level` must not exceed it (levels above the operands' truncation
    /// are unknown, not zero).
    pub fn chen_product(&self, other: &Self, max_level: usize) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        if self.max_level != other.max_level {
            return Err(Error::LevelMismatch { left: self.max_level, right: other.max_level });
        }
        if max_level > self.max_level {
            return Err(Error::invalid(format!(
                "cannot truncate at level {max_level}: operands only carry levels up to {}",
                self.max_level
            )));
        }
        let dim = self.dim;
        let mut levels = Vec::with_capacity(max_level + 1);
        levels.push(vec![1.0]);
        for m in 1..=max_level {
            let mut out = vec![0.0; level_len(dim, m)?];
            for n in 0..=m {
                let a = &self.levels[m - n];
                let b = &other.levels[n];
                // Zero blocks are common (truncated exponentials, the unit);
                // skipping them keeps products with sparse factors cheap.
                if b.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let stride = b.len();
                for (ia, &va) in a.iter().enumerate() {
                    if va == 0.0 {
                        continue;
                    }
                    let base = ia * stride;
                    for (ib, &vb) in b.iter().enumerate() {
                        out[base + ib] += va * vb;
                    }
                }
            }
            levels.push(out);
        }
        Ok(GroupElement { dim, max_level, levels })
    }

    /// Dilation: scales level m by `lambda^m` (level 0 is unchanged).
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::invalid(format!("dilation requires lambda >= 0, got {lambda}")));
        }
        let mut out = self.clone();
        let mut scale = 1.0;
        for m in 1..=self.max_level {
            scale *= lambda;
            for v in &mut out.levels[m] {
                *v *= scale;
            }
        }
        Ok(out)
    }

    /// Squared norm of each level under the canonical Hilbert inner product.
    pub fn level_norms_sq(&self) -> LevelNorms {
        let values = self
            .levels
            .iter()
            .map(|level| level.iter().map(|v| v * v).sum())
            .collect();
        LevelNorms { values }
    }

    /// Level-wise inner products with another element of matching shape.
    pub fn inner_product_levels(&self, other: &Self) -> Result<LevelInnerProducts> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        if self.max_level != other.max_level {
            return Err(Error::LevelMismatch { left: self.max_level, right: other.max_level });
        }
        let values = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect();
        Ok(LevelInnerProducts { values })
    }
}

impl LevelNorms {
    /// Validates and wraps a squared-norm sequence (`values[0] == 1`, all
    /// entries finite and non-negative).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return Err(Error::invalid("level norms must start with values[0] == 1"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("level norms must be finite and non-negative"));
        }
        Ok(LevelNorms { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Truncation level M (the sequence has M+1 entries).
    pub fn max_level(&self) -> usize {
        self.values.len() - 1
    }

    /// The full squared norm `‖t‖² = Σ_m ‖t^m‖²`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl LevelInnerProducts {
    /// Validates and wraps a level-wise inner-product sequence
    /// (`values[0] == 1`, all entries finite).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return Err(Error::invalid("level inner products must start with values[0] == 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("level inner products must be finite"));
        }
        Ok(LevelInnerProducts { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_level(&self) -> usize {
        self.values.len() - 1
    }

    /// The full inner product `⟨s, t⟩ = Σ_m ⟨s^m, t^m⟩`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Reinterprets a self-inner-product sequence as squared level norms.
    ///
    /// Exact self products are non-negative; tiny negative values produced by
    /// floating-point cancellation are clamped to zero, while significantly
    /// negative entries are rejected.
    pub fn into_norms(self) -> Result<LevelNorms> {
        let scale = self.values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut values = self.values;
        for v in &mut values {
            if *v < 0.0 {
                if *v < -1e-8 * scale {
                    return Err(Error::Numerical(format!(
                        "self inner product has a significantly negative level value: {v}"
                    )));
                }
                *v = 0.0;
            }
        }
        LevelNorms::new(values)
    }
}
