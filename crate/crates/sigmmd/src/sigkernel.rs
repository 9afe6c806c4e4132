//! The level-resolved signature kernel on sequences.
//!
//! For sequences x, y and a state kernel κ, the kernel works on the Gram
//! matrix of feature-space increments
//! `K[i][j] = ⟨φ(x_{i+1}) − φ(x_i), φ(y_{j+1}) − φ(y_j)⟩`
//! and computes, for every level m ≤ M,
//!
//! ```text
//! values[m] = Σ_{i_1<...<i_m} Σ_{j_1<...<j_m} Π_l K[i_l][j_l],
//! ```
//!
//! the inner product of the first-order truncated signatures of the lifted
//! sequences. A Horner-style dynamic program over 2-D prefix sums evaluates all
//! levels in O(n n' M). Level-resolved values (not just their sum) are the
//! canonical output because tensor normalization reweights each level by
//! λ^m.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{solve_lambda, NormalizationSpec};
use crate::parallel::{try_map_indexed};
use crate::signature::PathSample;
use crate::statekernel::StateKernel;
use crate::tensor::LevelInnerProducts;

/// Configuration of the sequence kernel: truncation level, state kernel,
/// path transforms, and normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigKernelConfig {
    /// Truncation level M ≥ 1.
    pub max_level: usize,
    /// State kernel κ lifting individual observations.
    pub state_kernel: StateKernel,
    /// Number of lags to append to each observation before lifting.
    pub lags: usize,
    /// Whether to append observation time as a coordinate (after lags).
    pub augment_time: bool,
    /// ψ parameters for tensor normalization.
    pub normalization: NormalizationSpec,
    /// Whether to normalize (rescale each side to norm ψ(‖·‖)).
    pub normalize: bool,
}

impl Default for SigKernelConfig {
    fn default() -> Self {
        SigKernelConfig {
            max_level: 4,
            state_kernel: StateKernel::Euclidean,
            lags: 0,
            augment_time: false,
            normalization: NormalizationSpec::default(),
            normalize: true,
        }
    }
}

impl SigKernelConfig {
    fn validate(&self) -> Result<()> {
        if self.max_level < 1 {
            return Err(Error::invalid("truncation level must be at least 1"));
        }
        self.state_kernel.validate()
    }

    /// Applies the configured transforms (lags, then time augmentation).
    pub fn transform(&self, path: &PathSample) -> PathSample {
        let lagged = path.add_lags(self.lags);
        if self.augment_time {
            lagged.time_augment()
        } else {
            lagged
        }
    }
}

/// Gram matrix of feature-space increments:
/// entry (i, j) = κ(x_{i+1}, y_{j+1}) − κ(x_{i+1}, y_j) − κ(x_i, y_{j+1}) + κ(x_i, y_j).
///
/// Operates on the paths as given (no transforms). Both paths need at least
/// two observations.
pub fn increment_gram(x: &PathSample, y: &PathSample, kernel: &StateKernel) -> Result<DMatrix<f64>> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::invalid("increment gram needs at least 2 observations per path"));
    }
    let flat = increment_gram_flat(x, y, kernel)?;
    Ok(DMatrix::from_row_slice(x.len() - 1, y.len() - 1, &flat))
}

/// Flat row-major increment Gram; requires validated inputs with n, n' ≥ 2.
fn increment_gram_flat(x: &PathSample, y: &PathSample, kernel: &StateKernel) -> Result<Vec<f64>> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    kernel.validate()?;
    let d = x.dim();
    let (a, b) = (x.len() - 1, y.len() - 1);
    let mut k = vec![0.0; a * b];
    match kernel {
        StateKernel::Euclidean => {
            // Bilinearity collapses the four κ terms to ⟨Δx_i, Δy_j⟩.
            let dx = increments(x);
            let dy = increments(y);
            for i in 0..a {
                let u = &dx[i * d..(i + 1) * d];
                let row = &mut k[i * b..(i + 1) * b];
                for (j, slot) in row.iter_mut().enumerate() {
                    let v = &dy[j * d..(j + 1) * d];
                    *slot = u.iter().zip(v).map(|(p, q)| p * q).sum();
                }
            }
        }
        StateKernel::Rbf { gamma } => {
            // Point-kernel grid, then the second difference.
            let (n, np) = (x.len(), y.len());
            let mut grid = vec![0.0; n * np];
            for i in 0..n {
                let p = x.point(i);
                let row = &mut grid[i * np..(i + 1) * np];
                for (j, slot) in row.iter_mut().enumerate() {
                    let q = y.point(j);
                    let d2: f64 = p.iter().zip(q).map(|(s, t)| (s - t) * (s - t)).sum();
                    *slot = (-gamma * d2).exp();
                }
            }
            for i in 0..a {
                let top = &grid[i * np..(i + 1) * np];
                let bottom = &grid[(i + 1) * np..(i + 2) * np];
                let row = &mut k[i * b..(i + 1) * b];
                for (j, slot) in row.iter_mut().enumerate() {
                    // Grouped so constant rows or columns cancel exactly.
                    *slot = (bottom[j + 1] - bottom[j]) - (top[j + 1] - top[j]);
                }
            }
        }
    }
    Ok(k)
}

fn increments(path: &PathSample) -> Vec<f64> {
    let d = path.dim();
    let n = path.len();
    let mut out = vec![0.0; (n - 1) * d];
    for i in 0..n - 1 {
        let (p, q) = (path.point(i), path.point(i + 1));
        for k in 0..d {
            out[i * d + k] = q[k] - p[k];
        }
    }
    out
}

/// Compensated (Kahan) accumulator for the level sums, which aggregate
/// combinatorially many terms of mixed sign.
#[derive(Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum
    }
}

/// Reference form of the Horner dynamic program: given the flat a×b
/// increment Gram, returns the level sums `values[0..=max_level]`.
///
/// Maintains A^(m) with A^(1) = K and
/// A^(m)[i][j] = K[i][j] · Σ_{i'<i, j'<j} A^(m−1)[i'][j'],
/// where the strict 2-D prefix sums are carried incrementally (one column
/// accumulator plus a running row sum), so each level costs one pass over
/// the matrix. Production code uses [`dp_level_sums_by_rows`], which fuses
/// the level passes and must stay bit-identical to this version.
#[cfg(test)]
fn dp_level_sums(k: &[f64], a: usize, b: usize, max_level: usize) -> Vec<f64> {
    let mut values = vec![0.0; max_level + 1];
    values[0] = 1.0;
    if a == 0 || b == 0 {
        return values;
    }
    debug_assert_eq!(k.len(), a * b);
    let mut total = KahanSum::default();
    for &v in k {
        total.add(v);
    }
    values[1] = total.value();

    let mut prev = k.to_vec();
    let mut next = vec![0.0; a * b];
    for value in values[2..].iter_mut() {
        let mut colcum = vec![0.0; b];
        let mut sum = KahanSum::default();
        for i in 0..a {
            let k_row = &k[i * b..(i + 1) * b];
            let prev_row = &prev[i * b..(i + 1) * b];
            let next_row = &mut next[i * b..(i + 1) * b];
            let mut run = 0.0;
            for (((&kv, &pv), cc), slot) in
                k_row.iter().zip(prev_row).zip(colcum.iter_mut()).zip(next_row.iter_mut())
            {
                let strict_prefix = run;
                run += *cc;
                *cc += pv;
                let v = kv * strict_prefix;
                *slot = v;
                sum.add(v);
            }
        }
        *value = sum.value();
        std::mem::swap(&mut prev, &mut next);
    }
    values
}

/// The fused Horner dynamic program over increment-Gram rows produced on
/// demand by `fill_row` (each row requested once, in order).
///
/// Cell values follow A^(1) = K and
/// A^(m)[i][j] = K[i][j] · Σ_{i'<i, j'<j} A^(m−1)[i'][j'].
/// All levels advance together in one pass: `colcum[m][j]` carries the
/// column sums of A^(m) over the rows seen so far and `run[m]` the strict
/// row prefix, so the working set is O(b·M) and no a×b matrix is ever
/// materialized. Accumulation order per level matches the per-level
/// reference `dp_level_sums` exactly, keeping results bit-identical.
fn dp_level_sums_by_rows<F>(a: usize, b: usize, max_level: usize, mut fill_row: F) -> Vec<f64>
where
    F: FnMut(usize, &mut [f64]),
{
    let mut values = vec![0.0; max_level + 1];
    values[0] = 1.0;
    if a == 0 || b == 0 || max_level == 0 {
        return values;
    }
    let ml = max_level;
    let mut sums = vec![KahanSum::default(); ml + 1];
    let mut colcum = vec![vec![0.0; b]; ml];
    let mut run = vec![0.0; ml];
    let mut strict = vec![0.0; ml];
    let mut vals = vec![0.0; ml + 1];
    let mut row = vec![0.0; b];
    for i in 0..a {
        fill_row(i, &mut row);
        run.iter_mut().for_each(|r| *r = 0.0);
        for (j, &kv) in row.iter().enumerate() {
            strict[1..ml].copy_from_slice(&run[1..ml]);
            for m in 1..ml {
                run[m] += colcum[m][j];
            }
            vals[1] = kv;
            sums[1].add(kv);
            for m in 2..=ml {
                let v = kv * strict[m - 1];
                vals[m] = v;
                sums[m].add(v);
            }
            for m in 1..ml {
                colcum[m][j] += vals[m];
            }
        }
    }
    for m in 1..=ml {
        values[m] = sums[m].value();
    }
    values
}

fn level_sums_pretransformed(
    x: &PathSample,
    y: &PathSample,
    cfg: &SigKernelConfig,
) -> Result<LevelInnerProducts> {
    if x.len() < 2 || y.len() < 2 {
        // A single observation has the unit first-order signature.
        let mut values = vec![0.0; cfg.max_level + 1];
        values[0] = 1.0;
        return LevelInnerProducts::new(values);
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    cfg.state_kernel.validate()?;
    let d = x.dim();
    let (a, b) = (x.len() - 1, y.len() - 1);
    let values = match &cfg.state_kernel {
        StateKernel::Euclidean => {
            // Bilinearity collapses the four κ terms to ⟨Δx_i, Δy_j⟩.
            let dx = increments(x);
            let dy = increments(y);
            dp_level_sums_by_rows(a, b, cfg.max_level, |i, row| {
                let u = &dx[i * d..(i + 1) * d];
                for (j, slot) in row.iter_mut().enumerate() {
                    let v = &dy[j * d..(j + 1) * d];
                    *slot = u.iter().zip(v).map(|(p, q)| p * q).sum();
                }
            })
        }
        StateKernel::Rbf { gamma } => {
            // Two rows of the point-kernel grid are enough for the second
            // difference; they leapfrog down the grid.
            let gamma = *gamma;
            let np = y.len();
            let grid_row = |i: usize, out: &mut [f64]| {
                let p = x.point(i);
                for (j, slot) in out.iter_mut().enumerate() {
                    let q = y.point(j);
                    let d2: f64 = p.iter().zip(q).map(|(s, t)| (s - t) * (s - t)).sum();
                    *slot = (-gamma * d2).exp();
                }
            };
            let mut top = vec![0.0; np];
            let mut bottom = vec![0.0; np];
            grid_row(0, &mut top);
            dp_level_sums_by_rows(a, b, cfg.max_level, move |i, row| {
                grid_row(i + 1, &mut bottom);
                for (j, slot) in row.iter_mut().enumerate() {
                    // Grouped so constant rows or columns cancel exactly.
                    *slot = (bottom[j + 1] - bottom[j]) - (top[j + 1] - top[j]);
                }
                std::mem::swap(&mut top, &mut bottom);
            })
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("level inner products overflowed".into()));
    }
    LevelInnerProducts::new(values)
}

/// Level-wise inner products of the first-order truncated signatures of the
/// transformed paths: values[m] = ⟨S^m(x), S^m(y)⟩ in the lifted feature
/// space. With `y = x` this yields the squared level norms used by
/// normalization.
pub fn level_inner_products(
    x: &PathSample,
    y: &PathSample,
    cfg: &SigKernelConfig,
) -> Result<LevelInnerProducts> {
    cfg.validate()?;
    level_sums_pretransformed(&cfg.transform(x), &cfg.transform(y), cfg)
}

/// A path with transforms applied and its per-level normalization weights
/// λ^m precomputed, ready for repeated kernel evaluations.
struct Prepared {
    path: PathSample,
    weights: Vec<f64>,
}

fn prepare(path: &PathSample, cfg: &SigKernelConfig) -> Result<Prepared> {
    let transformed = cfg.transform(path);
    let weights = if cfg.normalize {
        let self_levels = level_sums_pretransformed(&transformed, &transformed, cfg)?;
        let norms = self_levels.into_norms()?;
        let lambda = solve_lambda(&norms, &cfg.normalization)?.lambda;
        let mut weights = Vec::with_capacity(cfg.max_level + 1);
        let mut w = 1.0;
        for _ in 0..=cfg.max_level {
            weights.push(w);
            w *= lambda;
        }
        weights
    } else {
        vec![1.0; cfg.max_level + 1]
    };
    Ok(Prepared { path: transformed, weights })
}

fn pair_value(a: &Prepared, b: &Prepared, cfg: &SigKernelConfig) -> Result<f64> {
    let levels = level_sums_pretransformed(&a.path, &b.path, cfg)?;
    Ok(levels
        .values()
        .iter()
        .zip(a.weights.iter().zip(&b.weights))
        .map(|(v, (wa, wb))| wa * wb * v)
        .sum())
}

/// The scalar sequence kernel: transforms both paths, computes the level
/// inner products, and combines them, weighted by λ_x^m λ_y^m when
/// normalization is on, plain sum otherwise.
pub fn sig_kernel(x: &PathSample, y: &PathSample, cfg: &SigKernelConfig) -> Result<f64> {
    cfg.validate()?;
    let a = prepare(x, cfg)?;
    let b = prepare(y, cfg)?;
    pair_value(&a, &b, cfg)
}

/// Rectangular kernel Gram matrix: entry (i, j) = sig_kernel(xs[i], ys[j]).
///
/// Per-path transforms and normalization scales are computed once per path,
/// and cells are filled in a fixed order independent of parallelism.
pub fn gram_matrix(
    xs: &[PathSample],
    ys: &[PathSample],
    cfg: &SigKernelConfig,
) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("gram matrix needs non-empty path collections"));
    }
    let px = try_map_indexed(xs.len(), |i| prepare(&xs[i], cfg))?;
    let py = try_map_indexed(ys.len(), |j| prepare(&ys[j], cfg))?;
    let rows = try_map_indexed(px.len(), |i| {
        let mut row = vec![0.0; py.len()];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = pair_value(&px[i], &py[j], cfg)?;
        }
        Ok(row)
    })?;
    Ok(DMatrix::from_row_iterator(xs.len(), ys.len(), rows.into_iter().flatten()))
}

/// Symmetric Gram matrix of one collection with itself; each unordered pair
/// is evaluated once and mirrored, so the result is exactly symmetric.
pub fn gram_matrix_self(xs: &[PathSample], cfg: &SigKernelConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::invalid("gram matrix needs a non-empty path collection"));
    }
    let n = xs.len();
    let px = try_map_indexed(n, |i| prepare(&xs[i], cfg))?;
    let rows = try_map_indexed(n, |i| {
        let mut row = vec![0.0; n - i];
        for (off, slot) in row.iter_mut().enumerate() {
            *slot = pair_value(&px[i], &px[i + off], cfg)?;
        }
        Ok(row)
    })?;
    let mut gram = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            gram[(i, i + off)] = v;
            gram[(i + off, i)] = v;
        }
    }
    Ok(gram)
}
