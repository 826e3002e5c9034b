use num_complex::Complex64;

use super::householder::reflector;
use super::{ComplexMatrix, LinalgError, Tolerances, DEFAULT_TOLERANCES};

/// Unitary similarity reduction to upper Hessenberg form.
pub fn hessenberg(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut h = a.clone().into_vec();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[i * n + k]).collect();
        let (v, tau, _) = reflector(&x);
        if tau == 0.0 {
            continue;
        }
        let off = k + 1;
        // left: rows off..n
        for j in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * h[(off + i) * n + j]).sum::<Complex64>() * tau;
            for (i, vi) in v.iter().enumerate() {
                h[(off + i) * n + j] -= vi * dot;
            }
        }
        // right: columns off..n
        for r in 0..n {
            let row = &mut h[r * n + off..r * n + n];
            let dot = row.iter().zip(&v).map(|(x, vj)| x * vj).sum::<Complex64>() * tau;
            for (x, vj) in row.iter_mut().zip(&v) {
                *x -= dot * vj.conj();
            }
        }
        for i in off + 1..n {
            h[i * n + k] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(ComplexMatrix::from_raw(n, n, h))
}

pub fn small_eig(a: &ComplexMatrix) -> Result<Vec<Complex64>, LinalgError> {
    small_eig_with(a, &DEFAULT_TOLERANCES)
}

/// Eigenvalues of a general square complex matrix: Hessenberg reduction
/// followed by single-shift complex QR with Wilkinson shifts and deflation.
///
/// Fails with `NoConvergence` once `tol.qr_iteration_factor * n` QR sweeps
/// have been spent. Eigenvalues are returned in the order they deflate.
pub fn small_eig_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<Complex64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();
    if n > tol.small_eig_max_dim {
        return Err(LinalgError::TooLarge {
            dim: n,
            max: tol.small_eig_max_dim,
        });
    }
    let hm = hessenberg(a)?;
    let mut h = hm.into_vec();
    let at = |h: &[Complex64], i: usize, j: usize| h[i * n + j];

    let cap = tol.qr_iteration_factor * n;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut eigenvalues = Vec::with_capacity(n);
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eigenvalues.push(at(&h, 0, 0));
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = at(&h, l, l - 1).norm();
            let scale = at(&h, l, l).norm() + at(&h, l - 1, l - 1).norm();
            let scale = if scale == 0.0 { 1.0 } else { scale };
            if sub <= f64::EPSILON * scale {
                h[l * n + l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eigenvalues.push(at(&h, hi, hi));
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > cap {
            return Err(LinalgError::NoConvergence { iterations: total });
        }

        let shift = if since_deflation.is_multiple_of(11) {
            // exceptional shift to break cycles
            at(&h, hi, hi) + Complex64::new(at(&h, hi, hi - 1).norm() * 0.75, 0.0)
        } else {
            wilkinson_shift(
                at(&h, hi - 1, hi - 1),
                at(&h, hi - 1, hi),
                at(&h, hi, hi - 1),
                at(&h, hi, hi),
            )
        };
        qr_step(&mut h, n, l, hi, shift);
    }
    Ok(eigenvalues)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let e1 = mean + disc;
    let e2 = mean - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// One explicit shifted QR sweep `H - sI = QR, H <- RQ + sI` on the active
/// block `lo..=hi` of the Hessenberg matrix, using Givens rotations.
fn qr_step(h: &mut [Complex64], n: usize, lo: usize, hi: usize, shift: Complex64) {
    for k in lo..=hi {
        h[k * n + k] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[k * n + k];
        let b = h[(k + 1) * n + k];
        let (c, s) = givens(a, b);
        for j in k..=hi {
            let x = h[k * n + j];
            let y = h[(k + 1) * n + j];
            h[k * n + j] = x * c + s * y;
            h[(k + 1) * n + j] = -s.conj() * x + y * c;
        }
        rotations.push((c, s));
    }
    for (offset, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + offset;
        for i in lo..=(k + 1).min(hi) {
            let x = h[i * n + k];
            let y = h[i * n + k + 1];
            h[i * n + k] = x * c + s.conj() * y;
            h[i * n + k + 1] = -s * x + y * c;
        }
    }
    for k in lo..=hi {
        h[k * n + k] += shift;
    }
}

/// `(c, s)` with `[[c, s], [-conj(s), c]] [a; b] = [r; 0]`, `c` real.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    (an / r, (a / an) * b.conj() / r)
}
