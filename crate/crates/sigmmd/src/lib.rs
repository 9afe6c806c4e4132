//! Truncated signature features, normalized signature kernels on sequences,
//! and kernel two-sample tests.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: elements of the truncated tensor algebra over R^d and their
//!   group operations (Chen product, dilation, exponentials of segments).
//! - [`signature`]: discrete paths and their exact truncated signatures.
//! - [`normalize`]: the norm-capping normalization ψ and the dilation scale
//!   λ that achieves it.
//! - [`statekernel`]: kernels on individual observations (euclidean, RBF)
//!   and the median bandwidth heuristic.
//! - [`sigkernel`]: the sequence kernel computed level-by-level with a
//!   quadratic-time dynamic program, plus Gram matrix assembly.
//! - [`mmd`]: unbiased squared maximum mean discrepancy and two-sample
//!   decision rules (distribution-free threshold and permutation test).
//! - [`datagen`]: seeded synthetic sequence generators used by the
//!   experiments.
//! - [`experiment`]: presets wiring generators, kernels, and tests together.
//!
//! Heavy loops (Gram assembly, permutations, batch generation) run on rayon
//! when the `parallel` feature is enabled (the default) and fall back to
//! sequential loops without it. Results are identical either way.

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod mmd;
pub mod normalize;
mod parallel;
pub mod signature;
pub mod sigkernel;
pub mod statekernel;
pub mod tensor;

pub use datagen::{downsample, generate, generate_batch, mix_seed, DatasetConfig, DatasetKind};
pub use error::{Error, Result};
pub use experiment::{
    pooled_gram, resolve_kernel, run_experiment, t_u2, two_sample_test, ExperimentSpec,
    KernelPreset, ResolvedKernel,
};
pub use mmd::{mmd2_unbiased, permutation_test, threshold_test, TestResult};
pub use normalize::{
    normalize_tensor, normalized_inner, psi_of_norm, solve_lambda, NormalizationResult,
    NormalizationSpec,
};
pub use sigkernel::{
    gram_matrix, gram_matrix_self, level_inner_products, sig_kernel, SigKernelConfig,
};
pub use signature::{sig_linear, PathSample};
pub use statekernel::{median_heuristic, median_squared_distance, StateKernel};
pub use tensor::{GroupElement, LevelInnerProducts, LevelNorms};
