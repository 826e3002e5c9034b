//! Dense complex linear algebra: Hermitian eigendecomposition, SVD,
//! Moore–Penrose pseudoinverse and a small non-Hermitian eigensolver.
//!
//! Everything here is a pure function of its inputs. Sizes of interest are
//! a few dozen rows, so the routines favour robustness over blocking tricks.

mod eig;
mod eigh;
mod householder;
mod matrix;
mod svd;

pub use eig::{hessenberg, small_eig, small_eig_with};
pub use eigh::{hermitian_eig, hermitian_eig_with, HermitianEig};
pub use matrix::ComplexMatrix;
pub use svd::{pinv, pinv_with, svd, svd_with, SvdResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix dimensions must be non-zero")]
    EmptyDimension,
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Numerical tolerances shared by the solvers in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative deviation from Hermitian symmetry tolerated before `hermitian_eig`
    /// symmetrizes its input.
    pub hermitian_symmetry: f64,
    /// Singular values below `pinv_rel_cutoff * sigma_1` are treated as zero.
    pub pinv_rel_cutoff: f64,
    /// Jacobi sweeps stop once every column pair is orthogonal to this relative level.
    pub jacobi_orthogonality: f64,
    pub max_jacobi_sweeps: usize,
    /// QL iterations allowed per eigenvalue of the tridiagonal problem.
    pub ql_iterations_per_eigenvalue: usize,
    /// Shifted-QR iteration cap for `small_eig` is this factor times the dimension.
    pub qr_iteration_factor: usize,
    pub small_eig_max_dim: usize,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    hermitian_symmetry: 1e-12,
    pinv_rel_cutoff: 1e-12,
    jacobi_orthogonality: 1e-15,
    max_jacobi_sweeps: 60,
    ql_iterations_per_eigenvalue: 60,
    qr_iteration_factor: 100,
    small_eig_max_dim: 64,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}

/// Rotates `v` so that its largest-modulus entry is real and positive.
pub(crate) fn normalize_phase(v: &mut [num_complex::Complex64]) {
    let mut best = 0usize;
    let mut best_mod = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        // strict comparison with a small relative margin keeps the choice stable
        // when two entries have equal modulus up to rounding
        if m > best_mod * (1.0 + 1e-12) {
            best = i;
            best_mod = m;
        }
    }
    if best_mod > 0.0 {
        let phase = v[best].conj() / best_mod;
        for z in v.iter_mut() {
            *z *= phase;
        }
        v[best].im = 0.0;
    }
}
