//! Unbiased squared maximum mean discrepancy and two-sample decision rules.
//!
//! Everything here operates on precomputed Gram matrices. The statistic
//!
//! ```text
//! T_U² = Σ_{i≠j} Kxx[i][j]/(m(m−1)) − 2 Σ_{ij} Kxy[i][j]/(mn)
//!        + Σ_{i≠j} Kyy[i][j]/(n(n−1))
//! ```
//!
//! is an unbiased estimator of the squared MMD and can be negative. Two
//! decision rules are provided: a distribution-free analytic threshold for
//! equal group sizes, and a Monte Carlo permutation test that re-splits the
//! pooled Gram matrix.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_indexed;

/// Outcome of a two-sample test on a pooled Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Observed unbiased statistic on the original split.
    pub t_obs: f64,
    /// Statistics of the permuted splits, in permutation order.
    pub perm_values: Vec<f64>,
    /// Add-one Monte Carlo p-value, always in (0, 1].
    pub p_value: f64,
    /// Distribution-free threshold; present only for equal group sizes,
    /// where the analytic formula applies.
    pub c_alpha: Option<f64>,
    /// Threshold decision t_obs > c_alpha; present with `c_alpha`.
    pub reject_threshold: Option<bool>,
    /// Permutation decision p_value ≤ alpha.
    pub reject_permutation: bool,
    /// Seed the permutation streams were derived from.
    pub seed: u64,
}

/// The unbiased squared-MMD estimator from the three Gram blocks.
///
/// `kxx` and `kyy` are the symmetric within-group matrices, `kxy` the m×n
/// cross block. Both groups need at least two samples.
pub fn mmd2_unbiased(
    kxx: &DMatrix<f64>,
    kxy: &DMatrix<f64>,
    kyy: &DMatrix<f64>,
) -> Result<f64> {
    let m = kxx.nrows();
    let n = kyy.nrows();
    if kxx.ncols() != m || kyy.ncols() != n {
        return Err(Error::invalid("within-group Gram matrices must be square"));
    }
    if m < 2 || n < 2 {
        return Err(Error::invalid(
            "unbiased statistic needs at least 2 samples per group",
        ));
    }
    if kxy.nrows() != m || kxy.ncols() != n {
        return Err(Error::invalid(
            "cross Gram block shape must match the group sizes",
        ));
    }
    let sxx = kxx.sum() - kxx.trace();
    let syy = kyy.sum() - kyy.trace();
    let sxy = kxy.sum();
    let (mf, nf) = (m as f64, n as f64);
    Ok(sxx / (mf * (mf - 1.0)) - 2.0 * sxy / (mf * nf) + syy / (nf * (nf - 1.0)))
}

/// The analytic level-alpha threshold for equal group sizes m:
/// c_alpha = 4·sqrt(−ln(alpha)/m). Returns the threshold and the decision
/// t_obs > c_alpha.
pub fn threshold_test(t_obs: f64, m: usize, alpha: f64) -> Result<(f64, bool)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie strictly inside (0, 1)"));
    }
    if m < 1 {
        return Err(Error::invalid("group size must be at least 1"));
    }
    let c_alpha = 4.0 * (-alpha.ln() / m as f64).sqrt();
    Ok((c_alpha, t_obs > c_alpha))
}

/// Unbiased statistic for one split of the pooled Gram matrix; pure
/// re-indexing, no kernel evaluations.
fn split_statistic(k: &DMatrix<f64>, xs: &[usize], ys: &[usize]) -> f64 {
    let (m, n) = (xs.len() as f64, ys.len() as f64);
    let mut sxx = 0.0;
    for &i in xs {
        for &j in xs {
            if i != j {
                sxx += k[(i, j)];
            }
        }
    }
    let mut syy = 0.0;
    for &i in ys {
        for &j in ys {
            if i != j {
                syy += k[(i, j)];
            }
        }
    }
    let mut sxy = 0.0;
    for &i in xs {
        for &j in ys {
            sxy += k[(i, j)];
        }
    }
    sxx / (m * (m - 1.0)) - 2.0 * sxy / (m * n) + syy / (n * (n - 1.0))
}

/// Monte Carlo permutation test on a pooled (m+n)×(m+n) Gram matrix whose
/// first m rows belong to the X group.
///
/// Each of the `n_perms` permutations is drawn by Fisher-Yates from its own
/// seeded sub-stream, so the result is identical for any thread count. The
/// p-value uses the add-one estimator (1 + #{T^π ≥ t_obs})/(1 + n_perms).
/// The analytic threshold fields are filled in only when m == n.
pub fn permutation_test(
    k_pooled: &DMatrix<f64>,
    m: usize,
    n: usize,
    n_perms: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    let total = m + n;
    if k_pooled.nrows() != total || k_pooled.ncols() != total {
        return Err(Error::DimensionMismatch { left: k_pooled.nrows(), right: total });
    }
    if m < 2 || n < 2 {
        return Err(Error::invalid(
            "permutation test needs at least 2 samples per group",
        ));
    }
    if n_perms < 1 {
        return Err(Error::invalid("permutation count must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie strictly inside (0, 1)"));
    }

    let identity: Vec<usize> = (0..total).collect();
    let t_obs = split_statistic(k_pooled, &identity[..m], &identity[m..]);

    let perm_values = map_indexed(n_perms, |p| {
        // Stream 0 is reserved for the caller; permutation p uses stream p+1.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + p as u64);
        let mut idx: Vec<usize> = (0..total).collect();
        idx.shuffle(&mut rng);
        split_statistic(k_pooled, &idx[..m], &idx[m..])
    });

    let exceed = perm_values.iter().filter(|v| **v >= t_obs).count();
    let p_value = (1 + exceed) as f64 / (1 + n_perms) as f64;
    let (c_alpha, reject_threshold) = if m == n {
        let (c, reject) = threshold_test(t_obs, m, alpha)?;
        (Some(c), Some(reject))
    } else {
        (None, None)
    };

    Ok(TestResult {
        t_obs,
        perm_values,
        p_value,
        c_alpha,
        reject_threshold,
        reject_permutation: p_value <= alpha,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn blocks_to_pooled(kxx: &DMatrix<f64>, kxy: &DMatrix<f64>, kyy: &DMatrix<f64>) -> DMatrix<f64> {
        let (m, n) = (kxx.nrows(), kyy.nrows());
        let mut k = DMatrix::zeros(m + n, m + n);
        k.view_mut((0, 0), (m, m)).copy_from(kxx);
        k.view_mut((0, m), (m, n)).copy_from(kxy);
        k.view_mut((m, 0), (n, m)).copy_from(&kxy.transpose());
        k.view_mut((m, m), (n, n)).copy_from(kyy);
        k
    }

    fn off_diag(n: usize, diag: f64, off: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { diag } else { off })
    }

    #[test]
    fn constant_blocks_give_zero() {
        let kxx = DMatrix::from_element(4, 4, 0.9);
        let kyy = DMatrix::from_element(3, 3, 0.9);
        let kxy = DMatrix::from_element(4, 3, 0.9);
        assert_relative_eq!(mmd2_unbiased(&kxx, &kxy, &kyy).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_examples() {
        let kxx = off_diag(2, 1.0, 0.3);
        let kyy = off_diag(2, 1.0, 0.7);
        let kxy = DMatrix::from_row_slice(2, 2, &[0.2, 0.4, 0.6, 0.8]);
        assert_relative_eq!(mmd2_unbiased(&kxx, &kxy, &kyy).unwrap(), 0.0, epsilon = 1e-15);

        let kxx = off_diag(2, 1.0, 1.0);
        let kyy = off_diag(2, 1.0, 1.0);
        let kxy = DMatrix::from_element(2, 2, 0.5);
        assert_relative_eq!(mmd2_unbiased(&kxx, &kxy, &kyy).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn size_validation() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let two = DMatrix::from_element(2, 2, 1.0);
        let cross = DMatrix::from_element(1, 2, 1.0);
        assert!(mmd2_unbiased(&one, &cross, &two).is_err());
        let bad_cross = DMatrix::from_element(2, 3, 1.0);
        assert!(mmd2_unbiased(&two, &bad_cross, &two).is_err());
        let rect = DMatrix::from_element(2, 3, 1.0);
        assert!(mmd2_unbiased(&rect, &cross, &two).is_err());
    }

    #[test]
    fn relabeling_within_groups_leaves_statistic_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sym = |n: usize, rng: &mut ChaCha8Rng| {
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            (&a + a.transpose()) * 0.5
        };
        let kxx = sym(5, &mut rng);
        let kyy = sym(4, &mut rng);
        let kxy = DMatrix::from_fn(5, 4, |_, _| rng.gen_range(-1.0..1.0));
        let base = mmd2_unbiased(&kxx, &kxy, &kyy).unwrap();

        let perm = [2usize, 0, 4, 1, 3];
        let pxx = DMatrix::from_fn(5, 5, |i, j| kxx[(perm[i], perm[j])]);
        let pxy = DMatrix::from_fn(5, 4, |i, j| kxy[(perm[i], j)]);
        let relabeled = mmd2_unbiased(&pxx, &pxy, &kyy).unwrap();
        assert_relative_eq!(base, relabeled, epsilon = 1e-12);
    }

    #[test]
    fn threshold_matches_analytic_values() {
        let (c, _) = threshold_test(0.5, 50, 0.05).unwrap();
        assert_relative_eq!(c, 4.0 * (20f64.ln() / 50.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(c, 0.979098732272326, epsilon = 1e-12);

        // alpha near 1 drives the threshold toward 0.
        let (c_hi, reject) = threshold_test(0.01, 50, 0.999_999).unwrap();
        assert!(c_hi < 1e-3);
        assert!(reject);

        // Large m drives the threshold to 0 for fixed alpha.
        let (c_large, _) = threshold_test(0.0, 10_000_000, 0.05).unwrap();
        assert!(c_large < 1e-2);

        assert!(threshold_test(0.0, 50, 0.0).is_err());
        assert!(threshold_test(0.0, 50, 1.0).is_err());
        assert!(threshold_test(0.0, 0, 0.5).is_err());
    }

    #[test]
    fn observed_statistic_matches_block_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = DMatrix::from_fn(7, 7, |_, _| rng.gen_range(-1.0..1.0));
        let pooled = (&a + a.transpose()) * 0.5;
        let (m, n) = (3, 4);
        let res = permutation_test(&pooled, m, n, 5, 0.05, 1).unwrap();
        let kxx = pooled.view((0, 0), (m, m)).into_owned();
        let kxy = pooled.view((0, m), (m, n)).into_owned();
        let kyy = pooled.view((m, m), (n, n)).into_owned();
        let direct = mmd2_unbiased(&kxx, &kxy, &kyy).unwrap();
        assert_relative_eq!(res.t_obs, direct, epsilon = 1e-12);
        // Unequal sizes carry no analytic threshold.
        assert!(res.c_alpha.is_none());
        assert!(res.reject_threshold.is_none());
    }

    #[test]
    fn constant_pooled_kernel_never_rejects() {
        let k = DMatrix::from_element(8, 8, 0.4);
        let res = permutation_test(&k, 4, 4, 100, 0.05, 3).unwrap();
        // Zero up to accumulation roundoff; every permutation sums the same
        // constant the same number of times, so all values coincide and the
        // p-value is exactly 1.
        assert!(res.t_obs.abs() < 1e-14);
        assert!(res.perm_values.iter().all(|v| *v == res.t_obs));
        assert_eq!(res.p_value, 1.0);
        assert!(!res.reject_permutation);
        assert_eq!(res.perm_values.len(), 100);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = DMatrix::from_fn(10, 10, |_, _| rng.gen_range(0.0..1.0));
        let pooled = (&a + a.transpose()) * 0.5;
        let r1 = permutation_test(&pooled, 5, 5, 64, 0.05, 77).unwrap();
        let r2 = permutation_test(&pooled, 5, 5, 64, 0.05, 77).unwrap();
        assert_eq!(r1, r2);
        let r3 = permutation_test(&pooled, 5, 5, 64, 0.05, 78).unwrap();
        assert_ne!(r1.perm_values, r3.perm_values);
    }

    fn all_permutations(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..rest.len() {
                let v = rest.remove(i);
                prefix.push(v);
                rec(prefix, rest, out);
                prefix.pop();
                rest.insert(i, v);
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
        out
    }

    #[test]
    fn monte_carlo_p_value_matches_exhaustive_enumeration() {
        let pooled = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.2, 0.9, 0.1, //
                0.2, 1.0, 0.3, 0.8, //
                0.9, 0.3, 1.0, 0.4, //
                0.1, 0.8, 0.4, 1.0,
            ],
        );
        let idx: Vec<usize> = (0..4).collect();
        let t_obs = split_statistic(&pooled, &idx[..2], &idx[2..]);
        let perms = all_permutations(4);
        assert_eq!(perms.len(), 24);
        let exact = perms
            .iter()
            .filter(|p| split_statistic(&pooled, &p[..2], &p[2..]) >= t_obs)
            .count() as f64
            / 24.0;
        let res = permutation_test(&pooled, 2, 2, 10_000, 0.05, 123).unwrap();
        assert!(
            (res.p_value - exact).abs() <= 0.02,
            "mc {} vs exact {}",
            res.p_value,
            exact
        );
    }

    #[test]
    fn identical_halves_rarely_look_significant() {
        let m = 10;
        let b = DMatrix::from_fn(m, m, |i, j| {
            (-0.1 * (i as f64 - j as f64).powi(2)).exp()
        });
        let pooled = blocks_to_pooled(&b, &b, &b);
        let mut calm = 0;
        for seed in 0..100 {
            let res = permutation_test(&pooled, m, m, 99, 0.05, seed).unwrap();
            if res.p_value > 0.2 {
                calm += 1;
            }
        }
        assert!(calm >= 70, "only {calm}/100 seeds had p > 0.2");
    }

    #[test]
    fn null_p_values_are_super_uniform() {
        let mut rejections = 0;
        let trials = 500;
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
            let z: Vec<f64> = (0..20).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let pooled =
                DMatrix::from_fn(20, 20, |i, j| (-0.5 * (z[i] - z[j]).powi(2)).exp());
            let res = permutation_test(&pooled, 10, 10, 99, 0.05, trial).unwrap();
            assert!(res.p_value > 0.0 && res.p_value <= 1.0);
            if res.p_value <= 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / trials as f64;
        assert!(rate <= 0.08, "null rejection rate {rate}");
    }

    #[test]
    fn permutation_test_only_reindexes_the_matrix() {
        use std::cell::Cell;
        let evals = Cell::new(0usize);
        let z = [0.3f64, 1.2, -0.4, 2.0, 0.9, -1.1];
        let pooled = DMatrix::from_fn(6, 6, |i, j| {
            evals.set(evals.get() + 1);
            (-0.5 * (z[i] - z[j]).powi(2)).exp()
        });
        let built = evals.get();
        assert_eq!(built, 36);
        let res = permutation_test(&pooled, 3, 3, 50, 0.05, 9).unwrap();
        assert_eq!(evals.get(), built, "kernel re-evaluated during the test");
        assert_eq!(res.perm_values.len(), 50);
    }

    #[test]
    fn input_validation() {
        let k = DMatrix::from_element(6, 6, 0.1);
        assert!(permutation_test(&k, 3, 2, 10, 0.05, 0).is_err());
        assert!(permutation_test(&k, 5, 1, 10, 0.05, 0).is_err());
        assert!(permutation_test(&k, 3, 3, 0, 0.05, 0).is_err());
        assert!(permutation_test(&k, 3, 3, 10, 0.0, 0).is_err());
        assert!(permutation_test(&k, 3, 3, 10, 1.0, 0).is_err());
    }
}
