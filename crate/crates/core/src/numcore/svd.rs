use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError, Tolerances, DEFAULT_TOLERANCES};

/// Thin singular value decomposition `A = U diag(sigma) V^*`.
///
/// For an `m×n` input with `k = min(m, n)`: `u` is `m×k`, `v` is `n×k`, both
/// with orthonormal columns, and `singular_values` is non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn sigma_min(&self) -> f64 {
        *self.singular_values.last().expect("non-empty")
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let us = ComplexMatrix::from_fn(self.u.rows(), self.u.cols(), |i, j| {
            self.u[(i, j)] * self.singular_values[j]
        });
        &us * &self.v.adjoint()
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult, LinalgError> {
    svd_with(a, &DEFAULT_TOLERANCES)
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<SvdResult, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if a.rows() < a.cols() {
        let t = svd_with(&a.adjoint(), tol)?;
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let mut converged = n < 2;
    for _ in 0..tol.max_jacobi_sweeps {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= tol.jacobi_orthogonality * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g; // e^{-i phi}
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s, phase);
                rotate(&mut vcols, i, j, c, s, phase);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            iterations: tol.max_jacobi_sweeps,
        });
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let floor = sigma[0] * f64::EPSILON;

    let mut ucols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (rank, &j) in order.iter().enumerate() {
        if sigma[rank] > floor && sigma[rank] > 0.0 {
            ucols.push(cols[j].iter().map(|z| z / sigma[rank]).collect());
        } else {
            pending.push(rank);
            ucols.push(Vec::new());
        }
    }
    // Columns of U for (numerically) zero singular values are completed to an
    // orthonormal set; they do not affect the reconstruction.
    for rank in pending {
        ucols[rank] = orthonormal_complement(&ucols, m);
    }
    let vsorted: Vec<Vec<Complex64>> = order.iter().map(|&j| vcols[j].clone()).collect();
    Ok(SvdResult {
        u: ComplexMatrix::from_columns(&ucols)?,
        singular_values: sigma,
        v: ComplexMatrix::from_columns(&vsorted)?,
    })
}

fn rotate(cols: &mut [Vec<Complex64>], i: usize, j: usize, c: f64, s: f64, phase: Complex64) {
    let (left, right) = cols.split_at_mut(j);
    let ci = &mut left[i];
    let cj = &mut right[0];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let yp = *y * phase;
        let xi = *x;
        *x = xi * c - yp * s;
        *y = xi * s + yp * c;
    }
}

/// A unit vector orthogonal to every non-empty column in `existing`.
fn orthonormal_complement(existing: &[Vec<Complex64>], m: usize) -> Vec<Complex64> {
    let basis: Vec<&Vec<Complex64>> = existing.iter().filter(|c| !c.is_empty()).collect();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for t in 0..m {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        v[t] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b.iter()) {
                    *vi -= proj * bi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, v));
        }
        if norm > 0.5 {
            break;
        }
    }
    let (norm, v) = best.expect("m >= 1");
    v.into_iter().map(|z| z / norm).collect()
}

pub fn pinv(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    pinv_with(a, &DEFAULT_TOLERANCES)
}

/// Moore–Penrose pseudoinverse through the SVD; singular values at or below
/// `tol.pinv_rel_cutoff * sigma_1` are treated as zero.
pub fn pinv_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix, LinalgError> {
    let f = svd_with(a, tol)?;
    let cutoff = tol.pinv_rel_cutoff * f.singular_values[0];
    let (m, n) = a.shape();
    let k = f.singular_values.len();
    let mut out = ComplexMatrix::zeros(n, m);
    for r in 0..k {
        let s = f.singular_values[r];
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..n {
            let vi = f.v[(i, r)] * inv;
            for j in 0..m {
                out[(i, j)] += vi * f.u[(j, r)].conj();
            }
        }
    }
    Ok(out)
}
