use num_complex::Complex64;

use super::householder::reflector;
use super::{normalize_phase, ComplexMatrix, LinalgError, Tolerances, DEFAULT_TOLERANCES};

/// Eigendecomposition of a Hermitian matrix.
///
/// `eigenvalues` are sorted non-increasing and column `j` of `eigenvectors`
/// belongs to `eigenvalues[j]`. Each column is phase-normalized so its
/// largest-modulus entry is real and positive.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// First `s` eigenvector columns.
    pub fn leading_vectors(&self, s: usize) -> ComplexMatrix {
        self.eigenvectors.column_block(0, s)
    }
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig, LinalgError> {
    hermitian_eig_with(a, &DEFAULT_TOLERANCES)
}

/// Householder tridiagonalization followed by implicit-shift QL.
///
/// The input is replaced by its Hermitian part `(A + A^*)/2` before
/// factorization; an asymmetry larger than `tol.hermitian_symmetry * ||A||_max`
/// is rejected.
pub fn hermitian_eig_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEig, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = a.norm_max();
    if !a.is_hermitian(tol.hermitian_symmetry * scale.max(f64::MIN_POSITIVE)) {
        return Err(LinalgError::NotHermitian);
    }
    let n = a.rows();
    let mut work = a.hermitian_part().into_vec();
    let mut q = ComplexMatrix::identity(n).into_vec();
    let mut sub = vec![Complex64::new(0.0, 0.0); n];

    tridiagonalize(n, &mut work, &mut q, &mut sub);

    let mut diag: Vec<f64> = (0..n).map(|i| work[i * n + i].re).collect();
    // Diagonal unitary scaling that turns the complex subdiagonal real and non-negative.
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let e = sub[k];
        let m = e.norm();
        off[k] = m;
        phases[k + 1] = if m > 0.0 { phases[k] * (e / m) } else { phases[k] };
    }

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(n, &mut diag, &mut off, &mut z, tol.ql_iterations_per_eigenvalue)?;

    // eigenvectors = Q * diag(phases) * Z
    let mut w = q;
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] *= phases[j];
        }
    }
    let mut vecs = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let wik = w[i * n + k];
            for j in 0..n {
                vecs[i * n + j] += wik * z[k * n + j];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));
    let eigenvalues = order.iter().map(|&j| diag[j]).collect();
    let mut columns = Vec::with_capacity(n);
    for &j in &order {
        let mut col: Vec<Complex64> = (0..n).map(|i| vecs[i * n + j]).collect();
        normalize_phase(&mut col);
        columns.push(col);
    }
    let eigenvectors = ComplexMatrix::from_columns(&columns)?;
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Reduces the Hermitian matrix in `a` (row-major, n×n) to tridiagonal form
/// `Q^* A Q`. On return `sub[k]` holds entry `(k+1, k)`, the diagonal of `a`
/// holds the (real) diagonal, and `q` holds the accumulated unitary.
fn tridiagonalize(n: usize, a: &mut [Complex64], q: &mut [Complex64], sub: &mut [Complex64]) {
    for k in 0..n.saturating_sub(1) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        let (v, tau, alpha) = reflector(&x);
        sub[k] = alpha;
        if tau == 0.0 {
            continue;
        }
        let m = n - k - 1;
        let off = k + 1;
        // p = tau * S v on the trailing block S
        let mut p = vec![Complex64::new(0.0, 0.0); m];
        for (i, pi) in p.iter_mut().enumerate() {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            *pi = row.iter().zip(&v).map(|(s, vj)| s * vj).sum::<Complex64>() * tau;
        }
        let kappa = 0.5 * tau * v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum::<Complex64>().re;
        let w: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * kappa).collect();
        for i in 0..m {
            for j in 0..m {
                a[(off + i) * n + off + j] -= v[i] * w[j].conj() + w[i] * v[j].conj();
            }
        }
        a[off * n + k] = alpha;
        a[k * n + off] = alpha.conj();
        for i in off + 1..n {
            a[i * n + k] = Complex64::new(0.0, 0.0);
            a[k * n + i] = Complex64::new(0.0, 0.0);
        }
        // Q <- Q H on columns off..n
        for r in 0..n {
            let row = &mut q[r * n + off..r * n + n];
            let dot = row.iter().zip(&v).map(|(qr, vj)| qr * vj).sum::<Complex64>() * tau;
            for (qr, vj) in row.iter_mut().zip(&v) {
                *qr -= dot * vj.conj();
            }
        }
    }
}

/// Implicit QL on the symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e` (`e[i]` couples `i` and `i+1`; `e[n-1]` is ignored).
/// Rotations are accumulated into the row-major `z`.
fn tql2(
    n: usize,
    d: &mut [f64],
    e: &mut [f64],
    z: &mut [f64],
    max_iter_per_value: usize,
) -> Result<(), LinalgError> {
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter_per_value {
                    return Err(LinalgError::NoConvergence { iterations: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zi1 = z[k * n + i + 1];
                        let zi = z[k * n + i];
                        z[k * n + i + 1] = s * zi + c * zi1;
                        z[k * n + i] = c * zi - s * zi1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
