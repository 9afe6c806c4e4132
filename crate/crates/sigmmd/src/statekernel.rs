//! Kernels on the state space R^d and the median heuristic for choosing the
//! RBF bandwidth.
//!
//! These kernels act on individual observations (possibly after lags and
//! time augmentation); the sequence kernel is built on top of them. The
//! euclidean kernel keeps the raw geometry, the RBF kernel lifts each
//! observation into an RKHS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A kernel κ on state vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKernel {
    /// κ(u, v) = ⟨u, v⟩.
    Euclidean,
    /// κ(u, v) = exp(−gamma ‖u − v‖²).
    Rbf { gamma: f64 },
}

impl StateKernel {
    pub(crate) fn validate(&self) -> Result<()> {
        if let StateKernel::Rbf { gamma } = self {
            if !(gamma.is_finite() && *gamma > 0.0) {
                return Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")));
            }
        }
        Ok(())
    }
}

/// Evaluates κ(u, v).
pub fn kappa(u: &[f64], v: &[f64], kernel: &StateKernel) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { left: u.len(), right: v.len() });
    }
    kernel.validate()?;
    Ok(match kernel {
        StateKernel::Euclidean => dot(u, v),
        StateKernel::Rbf { gamma } => (-gamma * sq_dist(u, v)).exp(),
    })
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Median of the squared euclidean distances over all distinct unordered
/// pairs of points (an even count of pairs averages the central two).
///
/// Fails for fewer than two points or when the median distance is zero
/// (more than half of all pairs coincide).
pub fn median_squared_distance<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("median heuristic needs at least 2 points"));
    }
    let dim = points[0].as_ref().len();
    let mut dists = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: p.len() });
        }
        for q in &points[i + 1..] {
            dists.push(sq_dist(p, q.as_ref()));
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let mid = dists.len() / 2;
    let med = if dists.len() % 2 == 1 { dists[mid] } else { 0.5 * (dists[mid - 1] + dists[mid]) };
    if med <= 0.0 {
        return Err(Error::invalid(
            "median pairwise distance is zero; points are (mostly) identical",
        ));
    }
    Ok(med)
}

/// Median-heuristic bandwidth: `gamma = 1 / (2 med)` where `med` is the
/// median squared pairwise distance from [`median_squared_distance`].
pub fn median_heuristic<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    Ok(1.0 / (2.0 * median_squared_distance(points)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_kernel_is_the_dot_product() {
        let k = kappa(&[1.0, 2.0], &[3.0, 4.0], &StateKernel::Euclidean).unwrap();
        assert_eq!(k, 11.0);
    }

    #[test]
    fn rbf_kernel_decays_with_distance() {
        let rbf = StateKernel::Rbf { gamma: 2.0 };
        assert_eq!(kappa(&[0.5, -1.0], &[0.5, -1.0], &rbf).unwrap(), 1.0);

        let ln2 = StateKernel::Rbf { gamma: std::f64::consts::LN_2 };
        assert_relative_eq!(kappa(&[0.0], &[1.0], &ln2).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kappa_validates_inputs() {
        assert!(kappa(&[1.0], &[1.0, 2.0], &StateKernel::Euclidean).is_err());
        assert!(kappa(&[1.0], &[2.0], &StateKernel::Rbf { gamma: 0.0 }).is_err());
        assert!(kappa(&[1.0], &[2.0], &StateKernel::Rbf { gamma: -1.0 }).is_err());
    }

    #[test]
    fn kappa_is_symmetric() {
        let u = [0.3, -1.2, 2.0];
        let v = [1.0, 0.5, -0.25];
        for kernel in [StateKernel::Euclidean, StateKernel::Rbf { gamma: 0.7 }] {
            assert_eq!(kappa(&u, &v, &kernel).unwrap(), kappa(&v, &u, &kernel).unwrap());
        }
    }

    #[test]
    fn median_heuristic_single_pair() {
        // One pair at squared distance 2 -> gamma = 1/4.
        let gamma = median_heuristic(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_relative_eq!(gamma, 0.25);
    }

    #[test]
    fn median_heuristic_picks_the_middle_distance() {
        // Squared distances {1, 1, 4}, median 1 -> gamma = 0.5.
        let gamma = median_heuristic(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert_relative_eq!(gamma, 0.5);
    }

    #[test]
    fn median_heuristic_rejects_degenerate_input() {
        assert!(median_heuristic(&[vec![1.0]]).is_err());
        assert!(median_heuristic(&[vec![1.0], vec![1.0], vec![1.0]]).is_err());
        assert!(median_heuristic(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn median_heuristic_is_scale_equivariant() {
        let pts: Vec<Vec<f64>> =
            vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5], vec![-1.0, 3.0]];
        let base = median_heuristic(&pts).unwrap();
        let c = 3.0;
        let scaled: Vec<Vec<f64>> =
            pts.iter().map(|p| p.iter().map(|x| c * x).collect()).collect();
        let gamma = median_heuristic(&scaled).unwrap();
        assert_relative_eq!(gamma, base / (c * c), max_relative = 1e-12);
    }
}
