//! Tensor normalization: rescale a unit-scalar tensor t by a dilation
//! `δ_λ(t)` so that `‖δ_λ(t)t‖² = ψ(‖t‖)`.
//!
//! ψ grows like the squared norm up to a plateau threshold and then bends
//! over to a finite asymptote, so normalized tensors live in a bounded ball
//! while distinct tensors stay distinct. The scale λ(t) is the unique
//! non-negative root of
//!
//! ```text
//! P(λ) = Σ_m λ^{2m} ‖t^m‖²  −  ψ(‖t‖),
//! ```
//!
//! found by bracketed root-finding on [0, 1] (P(0) ≤ 0 ≤ P(1) because
//! ψ(x) ≤ x²). The module normalizes both explicit tensors and, through
//! [`normalized_inner`], level-resolved inner products where only Gram data
//! is available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{GroupElement, LevelInnerProducts, LevelNorms};

/// Parameters of the normalization: the ψ shape and the root-finder budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    /// Plateau threshold of ψ in the squared-norm variable: ψ(√x) = x for
    /// x ≤ m_psi.
    pub m_psi: f64,
    /// Decay exponent controlling how fast ψ bends over; the asymptote is
    /// m_psi (1 + 1/a).
    pub a: f64,
    /// Absolute tolerance on the achieved squared norm, relative to ψ.
    pub root_tol: f64,
    /// Iteration budget for the root finder.
    pub max_iter: usize,
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        NormalizationSpec { m_psi: 4.0, a: 1.0, root_tol: 1e-12, max_iter: 200 }
    }
}

impl NormalizationSpec {
    fn validate(&self) -> Result<()> {
        if !(self.m_psi.is_finite() && self.m_psi >= 1.0) {
            return Err(Error::invalid(format!("m_psi must be >= 1, got {}", self.m_psi)));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::invalid(format!("a must be positive, got {}", self.a)));
        }
        if !(self.root_tol.is_finite() && self.root_tol > 0.0) {
            return Err(Error::invalid(format!("root_tol must be positive, got {}", self.root_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }

    /// Upper bound of ψ: `m_psi (1 + 1/a)`.
    pub fn psi_sup(&self) -> f64 {
        self.m_psi * (1.0 + 1.0 / self.a)
    }
}

/// Outcome of solving for the normalization scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationResult {
    /// The scale λ(t) ∈ [0, 1].
    pub lambda: f64,
    /// The prescribed squared norm ψ(‖t‖).
    pub target: f64,
    /// The squared norm actually achieved, `Σ_m λ^{2m} ‖t^m‖²`.
    pub achieved_norm_sq: f64,
}

/// Evaluates ψ at a norm value (`norm = ‖t‖ ≥ 1` since the scalar level
/// contributes 1). In the squared-norm variable x = norm²:
/// x itself on the plateau x ≤ m_psi, and
/// `m_psi + m_psi^{1+a} (m_psi^{-a} − x^{-a}) / a` beyond it.
pub fn psi_of_norm(norm: f64, spec: &NormalizationSpec) -> Result<f64> {
    spec.validate()?;
    if !norm.is_finite() || norm < 1.0 {
        return Err(Error::invalid(format!(
            "psi is defined for norms >= 1 (unit scalar level), got {norm}"
        )));
    }
    let x = norm * norm;
    if x <= spec.m_psi {
        Ok(x)
    } else {
        let m = spec.m_psi;
        let a = spec.a;
        Ok(m + m.powf(1.0 + a) * (m.powf(-a) - x.powf(-a)) / a)
    }
}

/// Solves `Σ_m λ^{2m} norms[m] = ψ(‖t‖)` for the unique λ ≥ 0.
///
/// For the degenerate tensor with no mass above level 0 the polynomial is
/// identically zero and λ = 1 by convention (the unit tensor is already
/// normalized). Otherwise P is strictly increasing with P(0) ≤ 0 ≤ P(1),
/// and the root is located by bracketed Brent iteration.
pub fn solve_lambda(norms: &LevelNorms, spec: &NormalizationSpec) -> Result<NormalizationResult> {
    spec.validate()?;
    let values = norms.values();
    let target = psi_of_norm(norms.total().sqrt(), spec)?;
    if values.iter().skip(1).all(|&v| v == 0.0) {
        return Ok(NormalizationResult { lambda: 1.0, target, achieved_norm_sq: 1.0 });
    }
    let eval = |lambda: f64| {
        let mut acc = 0.0;
        let lambda_sq = lambda * lambda;
        let mut weight = 1.0;
        for &v in values {
            acc += weight * v;
            weight *= lambda_sq;
        }
        acc
    };
    // Inside the ψ plateau the exact root is λ = 1, but rounding ‖t‖
    // through sqrt and back can leave P(1) a few ulps below zero and break
    // the bracket; accept the boundary directly, the residual check below
    // still guards the contract.
    let lambda = if eval(1.0) - target <= 0.0 {
        1.0
    } else {
        brent_root(|l| eval(l) - target, 0.0, 1.0, spec.max_iter)?
    };
    let achieved_norm_sq = eval(lambda);
    if (achieved_norm_sq - target).abs() > spec.root_tol * target.max(1.0) {
        return Err(Error::RootFinding { lo: 0.0, hi: 1.0, max_iter: spec.max_iter });
    }
    Ok(NormalizationResult { lambda, target, achieved_norm_sq })
}

/// Normalizes an explicit tensor: `t ↦ δ_{λ(t)}(t)` with λ from
/// [`solve_lambda`] on its level norms.
pub fn normalize_tensor(t: &GroupElement, spec: &NormalizationSpec) -> Result<GroupElement> {
    let result = solve_lambda(&t.level_norms_sq(), spec)?;
    t.dilate(result.lambda)
}

/// Normalized total inner product from level-resolved Gram data:
/// `Σ_m λ_x^m λ_y^m ⟨S^m(x), S^m(y)⟩` with each scale solved from the
/// corresponding self-norm sequence. This is the kernel-trick route to the
/// same value that [`normalize_tensor`] produces for explicit tensors.
pub fn normalized_inner(
    levels_xy: &LevelInnerProducts,
    norms_x: &LevelNorms,
    norms_y: &LevelNorms,
    spec: &NormalizationSpec,
) -> Result<f64> {
    if levels_xy.max_level() != norms_x.max_level() || levels_xy.max_level() != norms_y.max_level()
    {
        return Err(Error::LevelMismatch {
            left: levels_xy.max_level(),
            right: norms_x.max_level().max(norms_y.max_level()),
        });
    }
    let lambda_x = solve_lambda(norms_x, spec)?.lambda;
    let lambda_y = solve_lambda(norms_y, spec)?.lambda;
    let step = lambda_x * lambda_y;
    let mut weight = 1.0;
    let mut acc = 0.0;
    for &v in levels_xy.values() {
        acc += weight * v;
        weight *= step;
    }
    Ok(acc)
}

/// Classic Brent root finder (bisection / secant / inverse quadratic) on a
/// bracketing interval. Iterates to machine precision in the argument; the
/// caller checks the achieved residual against its own tolerance.
fn brent_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, max_iter: usize) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa * fb > 0.0 {
        return Err(Error::Numerical(format!(
            "root is not bracketed: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5e-16;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Attempt inverse quadratic interpolation (secant if a == c).
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)), (q - 1.0) * (r - 1.0) * (s - 1.0))
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::RootFinding { lo, hi, max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psi_is_identity_on_the_plateau() {
        let spec = NormalizationSpec::default();
        assert_relative_eq!(psi_of_norm(1.0, &spec).unwrap(), 1.0);
        assert_relative_eq!(psi_of_norm(2.0, &spec).unwrap(), 4.0);
    }

    #[test]
    fn psi_bends_over_past_the_plateau() {
        let spec = NormalizationSpec::default();
        // x = 9 > 4: 4 + 16 (1/4 - 1/9) = 56/9.
        assert_relative_eq!(psi_of_norm(3.0, &spec).unwrap(), 56.0 / 9.0, max_relative = 1e-15);
        // Bounded by the asymptote m_psi (1 + 1/a) = 8.
        assert!(psi_of_norm(1e6, &spec).unwrap() < spec.psi_sup());
        assert!(psi_of_norm(0.5, &spec).is_err());
    }

    #[test]
    fn solve_lambda_degenerate_tensor_returns_one() {
        let spec = NormalizationSpec::default();
        let norms = LevelNorms::new(vec![1.0, 0.0, 0.0]).unwrap();
        let r = solve_lambda(&norms, &spec).unwrap();
        assert_eq!(r.lambda, 1.0);
    }

    #[test]
    fn solve_lambda_is_identity_inside_the_plateau() {
        let spec = NormalizationSpec::default();
        let norms = LevelNorms::new(vec![1.0, 3.0]).unwrap();
        let r = solve_lambda(&norms, &spec).unwrap();
        assert_relative_eq!(r.lambda, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.achieved_norm_sq, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn solve_lambda_matches_the_quadratic_solution() {
        let spec = NormalizationSpec::default();
        // ψ(3) = 56/9, so λ² = (56/9 - 1)/8 = 47/72.
        let norms = LevelNorms::new(vec![1.0, 8.0]).unwrap();
        let r = solve_lambda(&norms, &spec).unwrap();
        assert_relative_eq!(r.lambda, (47.0f64 / 72.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.target, 56.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(r.achieved_norm_sq, r.target, epsilon = 1e-10);
    }

    #[test]
    fn normalize_tensor_hits_the_prescribed_norm() {
        let spec = NormalizationSpec::default();
        let unit = GroupElement::unit(2, 3).unwrap();
        assert_eq!(normalize_tensor(&unit, &spec).unwrap(), unit);

        // Inside the plateau the tensor is untouched.
        let small = GroupElement::from_levels(1, vec![vec![1.0], vec![1.2]]).unwrap();
        assert_eq!(normalize_tensor(&small, &spec).unwrap(), small);

        let t = GroupElement::from_levels(1, vec![vec![1.0], vec![8.0f64.sqrt()]]).unwrap();
        let normalized = normalize_tensor(&t, &spec).unwrap();
        let expected = 8.0f64.sqrt() * (47.0f64 / 72.0).sqrt();
        assert_relative_eq!(normalized.level(1)[0], expected, epsilon = 1e-10);
        assert_relative_eq!(
            normalized.level_norms_sq().total(),
            56.0 / 9.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn normalized_inner_weights_levels_by_both_scales() {
        let spec = NormalizationSpec::default();
        let constant = LevelInnerProducts::new(vec![1.0, 0.0, 0.0]).unwrap();
        let trivial = LevelNorms::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(
            normalized_inner(&constant, &trivial, &trivial, &spec).unwrap(),
            1.0
        );

        // Plateau scales are 1, so the normalized value is the plain sum.
        let levels = LevelInnerProducts::new(vec![1.0, 0.4, 0.1]).unwrap();
        let norms = LevelNorms::new(vec![1.0, 1.0, 0.5]).unwrap();
        assert_relative_eq!(
            normalized_inner(&levels, &norms, &norms, &spec).unwrap(),
            1.5,
            epsilon = 1e-12
        );

        // Self inner product: value must be ψ(‖t‖) = 56/9.
        let levels = LevelInnerProducts::new(vec![1.0, 8.0]).unwrap();
        let norms = LevelNorms::new(vec![1.0, 8.0]).unwrap();
        assert_relative_eq!(
            normalized_inner(&levels, &norms, &norms, &spec).unwrap(),
            56.0 / 9.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn normalized_inner_rejects_mismatched_lengths() {
        let spec = NormalizationSpec::default();
        let levels = LevelInnerProducts::new(vec![1.0, 0.0]).unwrap();
        let short = LevelNorms::new(vec![1.0]).unwrap();
        let long = LevelNorms::new(vec![1.0, 0.0]).unwrap();
        assert!(normalized_inner(&levels, &short, &long, &spec).is_err());
    }

    #[test]
    fn brent_root_finds_bracketed_roots() {
        let root = brent_root(|x| x * x - 2.0, 0.0, 2.0, 200).unwrap();
        assert_relative_eq!(root, 2.0f64.sqrt(), epsilon = 1e-14);
        assert!(brent_root(|x| x + 10.0, 0.0, 1.0, 200).is_err());
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        let norms = LevelNorms::new(vec![1.0, 1.0]).unwrap();
        for bad in [
            NormalizationSpec { m_psi: 0.5, ..Default::default() },
            NormalizationSpec { a: 0.0, ..Default::default() },
            NormalizationSpec { root_tol: 0.0, ..Default::default() },
            NormalizationSpec { max_iter: 0, ..Default::default() },
        ] {
            assert!(solve_lambda(&norms, &bad).is_err());
        }
    }
}
