//! Leading-eigenspace extraction and the sin-theta subspace distance.

use thiserror::Error;

use crate::estimate::{covariance_from_quantized, CovarianceEstimate, EstimateError};
use crate::numcore::{hermitian_eig, svd, ComplexMatrix, LinalgError};
use crate::quantize::{QuantizedBatch, QuantizerSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubspaceError {
    #[error("subspace dimension {s} must satisfy 1 <= s <= p = {p}")]
    BadDimension { s: usize, p: usize },
    #[error("bases have shapes {left:?} and {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("basis columns are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("batch was quantized with a different scheme than requested")]
    SchemeMismatch,
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Relative gap below which `lambda_s` and `lambda_{s+1}` count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of an estimated `s`-dimensional subspace.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    pub basis: ComplexMatrix,
    /// The `s` largest eigenvalues of the source matrix, non-increasing.
    pub selecting_eigenvalues: Vec<f64>,
    /// Set when `lambda_s == lambda_{s+1}` up to [`TIE_TOLERANCE`]; the span is
    /// then one of several valid choices.
    pub tie: bool,
}

impl SubspaceEstimate {
    pub fn p(&self) -> usize {
        self.basis.rows()
    }

    pub fn s(&self) -> usize {
        self.basis.cols()
    }

    /// Wraps a known orthonormal basis (ground truth or test input).
    pub fn from_basis(basis: ComplexMatrix) -> Result<Self, SubspaceError> {
        let defect = basis.orthonormality_defect();
        if defect > 1e-8 {
            return Err(SubspaceError::NotOrthonormal(defect));
        }
        let s = basis.cols();
        Ok(Self {
            basis,
            selecting_eigenvalues: vec![1.0; s],
            tie: false,
        })
    }
}

/// Leading `s` eigenvectors of a Hermitian matrix (Algorithm 1, step 2).
pub fn leading_eigenspace_of(matrix: &ComplexMatrix, s: usize) -> Result<SubspaceEstimate, SubspaceError> {
    let p = matrix.rows();
    if s == 0 || s > p {
        return Err(SubspaceError::BadDimension { s, p });
    }
    let eig = hermitian_eig(matrix)?;
    let tie = s < p && {
        let scale = eig.eigenvalues[0].abs().max(eig.eigenvalues[p - 1].abs()).max(f64::MIN_POSITIVE);
        (eig.eigenvalues[s - 1] - eig.eigenvalues[s]).abs() <= TIE_TOLERANCE * scale
    };
    Ok(SubspaceEstimate {
        basis: eig.leading_vectors(s),
        selecting_eigenvalues: eig.eigenvalues[..s].to_vec(),
        tie,
    })
}

pub fn leading_eigenspace(est: &CovarianceEstimate, s: usize) -> Result<SubspaceEstimate, SubspaceError> {
    leading_eigenspace_of(&est.matrix, s)
}

fn check_orthonormal(u: &ComplexMatrix) -> Result<(), SubspaceError> {
    let defect = u.orthonormality_defect();
    if defect > 1e-8 {
        Err(SubspaceError::NotOrthonormal(defect))
    } else {
        Ok(())
    }
}

/// `sqrt(1 - sigma_min(U^* V)^2)`, the sine of the largest principal angle,
/// which equals `||U U^* - V V^*||` for bases of equal dimension.
pub fn sin_theta_dist(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64, SubspaceError> {
    if u.shape() != v.shape() {
        return Err(SubspaceError::ShapeMismatch { left: u.shape(), right: v.shape() });
    }
    check_orthonormal(u)?;
    check_orthonormal(v)?;
    Ok(sin_theta_unchecked(u, v))
}

/// [`sin_theta_dist`] without validation, for bases known to be orthonormal.
pub(crate) fn sin_theta_unchecked(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    // sqrt(1 - sigma_min^2) loses half the digits for nearly equal spans, so
    // the sine is read off as ||(I - A A^*) B||, the largest singular value of
    // the residual, which is the same quantity. Evaluating both orders and
    // keeping the larger value makes the result exactly symmetric.
    let one_way = |a: &ComplexMatrix, b: &ComplexMatrix| {
        let cross = a.adjoint_mul(b).expect("shapes checked");
        let residual = b - &(a * &cross);
        match svd(&residual) {
            Ok(f) => f.singular_values[0],
            Err(_) => 1.0,
        }
    };
    one_way(u, v).max(one_way(v, u)).clamp(0.0, 1.0)
}

/// Algorithm 1 end to end: covariance estimate of the quantized batch
/// followed by its leading eigenspace.
pub fn subspace_from_quantized(
    batch: &QuantizedBatch,
    spec: &QuantizerSpec,
    s: usize,
) -> Result<SubspaceEstimate, SubspaceError> {
    if batch.spec().as_ref() != Some(spec) {
        return Err(SubspaceError::SchemeMismatch);
    }
    leading_eigenspace(&covariance_from_quantized(batch)?, s)
}
