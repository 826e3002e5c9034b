//! Seeded random sources.
//!
//! Every stream is identified by `(seed, substream)`. The generator is
//! ChaCha8 keyed by the seed with the substream as the ChaCha stream id, so
//! deriving a stream is O(1) and independent of how trials are scheduled.
//! Monte-Carlo trials use `substream = trial_index * 4 + role`.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::numcore::{hermitian_eig, ComplexMatrix, LinalgError};
use crate::Field;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RandError {
    #[error("empty range [{a}, {b}]")]
    EmptyRange { a: f64, b: f64 },
    #[error("resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
    #[error("covariance is not positive semidefinite (eigenvalue {min} vs largest {max})")]
    NotPsd { min: f64, max: f64 },
    #[error("bad shape: need p >= s >= 1, got p={p}, s={s}")]
    BadShape { p: usize, s: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Role of a stream inside one Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Data = 0,
    Noise = 1,
    DitherA = 2,
    DitherB = 3,
}

/// Reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    substream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(substream);
        Self {
            seed,
            substream,
            rng,
        }
    }

    /// Stream for `role` in trial `trial`.
    pub fn for_trial(seed: u64, trial: u64, role: Role) -> Self {
        Self::new(seed, trial * 4 + role as u64)
    }

    /// Stream for one-off draws that are fixed for a whole experiment
    /// (Haar bases, source angles, amplitudes). Kept apart from trial
    /// substreams by using the top half of the substream range.
    pub fn for_setup(seed: u64, index: u64) -> Self {
        Self::new(seed, (1u64 << 63) | index)
    }

    /// Same substream under a seed derived from `(seed, lane)`; lets several
    /// quantizers in one trial own disjoint dither streams.
    pub fn lane(&self, lane: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(lane.wrapping_add(0x9e37_79b9))), self.substream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self) -> u64 {
        self.substream
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    /// The next `out.len()` values of [`next_u64`](Self::next_u64), copied
    /// out of the block buffer in one go.
    #[inline]
    pub fn fill_u64(&mut self, out: &mut [u64]) {
        let mut bytes = [0u8; 8 * FILL_WORDS];
        for chunk in out.chunks_mut(FILL_WORDS) {
            let bytes = &mut bytes[..8 * chunk.len()];
            self.rng.fill_bytes(bytes);
            for (o, w) in chunk.iter_mut().zip(bytes.chunks_exact(8)) {
                *o = u64::from_le_bytes(w.try_into().expect("8-byte chunk"));
            }
        }
    }

    /// The next `out.len()` values of [`next_u32`](Self::next_u32).
    #[inline]
    pub fn fill_u32(&mut self, out: &mut [u32]) {
        let mut bytes = [0u8; 8 * FILL_WORDS];
        for chunk in out.chunks_mut(2 * FILL_WORDS) {
            let bytes = &mut bytes[..4 * chunk.len()];
            self.rng.fill_bytes(bytes);
            for (o, w) in chunk.iter_mut().zip(bytes.chunks_exact(4)) {
                *o = u32::from_le_bytes(w.try_into().expect("4-byte chunk"));
            }
        }
    }

    /// Uniform on `(0, 1)` with 32 random bits, symmetric about `1/2`.
    /// Dithers use this cheaper draw; its resolution of `2^-32` is far below
    /// any quantizer cell.
    #[inline]
    pub fn unit32(&mut self) -> f64 {
        unit_from(self.rng.next_u32())
    }

    /// Uniform dither on `(-lambda, lambda)` from a 32-bit draw.
    #[inline]
    pub fn dither(&mut self, lambda: f64) -> f64 {
        dither_from(self.rng.next_u32(), lambda)
    }

    /// Two independent dithers from the halves of one 64-bit draw.
    #[inline]
    pub fn dither_pair(&mut self, lambda: f64) -> (f64, f64) {
        dither_pair_from(self.rng.next_u64(), lambda)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform_f64(&mut self) -> f64 {
        unit53_from(self.rng.next_u64())
    }

    #[inline]
    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        uniform_from(self.rng.next_u64(), a, b)
    }

    /// Sum of two independent `U(-mu, mu)` draws (32-bit each, see [`unit32`](Self::unit32)).
    #[inline]
    pub fn triangular(&mut self, mu: f64) -> f64 {
        triangular_from(self.rng.next_u64(), mu)
    }

    /// Standard normal (ziggurat sampler).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Circular complex normal with `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * h, self.normal() * h)
    }
}

/// Words per `fill_bytes` call of the bulk fills.
const FILL_WORDS: usize = 32;

/// `x` as a [`RngStream::unit32`] value.
#[inline]
fn unit_from(x: u32) -> f64 {
    (x as f64 + 0.5) * (1.0 / 4_294_967_296.0)
}

#[inline]
fn unit53_from(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// [`RngStream::uniform`] computed from the 64-bit draw `x`.
#[inline]
pub fn uniform_from(x: u64, a: f64, b: f64) -> f64 {
    a + (b - a) * unit53_from(x)
}

/// [`RngStream::dither`] computed from the 32-bit draw `x`.
#[inline]
pub fn dither_from(x: u32, lambda: f64) -> f64 {
    lambda * (2.0 * unit_from(x) - 1.0)
}

/// [`RngStream::dither_pair`] computed from the 64-bit draw `x`.
#[inline]
pub fn dither_pair_from(x: u64, lambda: f64) -> (f64, f64) {
    (dither_from(x as u32, lambda), dither_from((x >> 32) as u32, lambda))
}

/// [`RngStream::triangular`] computed from the 64-bit draw `x`.
#[inline]
pub fn triangular_from(x: u64, mu: f64) -> f64 {
    mu * (2.0 * (unit_from(x as u32) + unit_from((x >> 32) as u32)) - 2.0)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn sample_uniform(stream: &mut RngStream, a: f64, b: f64, count: usize) -> Result<Vec<f64>, RandError> {
    if !(a < b) {
        return Err(RandError::EmptyRange { a, b });
    }
    Ok((0..count).map(|_| stream.uniform(a, b)).collect())
}

pub fn sample_triangular(stream: &mut RngStream, mu: f64, count: usize) -> Result<Vec<f64>, RandError> {
    if !(mu > 0.0) {
        return Err(RandError::NonPositiveResolution(mu));
    }
    Ok((0..count).map(|_| stream.triangular(mu)).collect())
}

/// Independent real and imaginary parts, each uniform on `[a, b]`.
pub fn sample_complex_uniform(
    stream: &mut RngStream,
    a: f64,
    b: f64,
    count: usize,
) -> Result<Vec<Complex64>, RandError> {
    if !(a < b) {
        return Err(RandError::EmptyRange { a, b });
    }
    Ok((0..count)
        .map(|_| {
            let re = stream.uniform(a, b);
            Complex64::new(re, stream.uniform(a, b))
        })
        .collect())
}

/// `count` draws of `z = Sigma^{1/2} g` with `g` standard circular complex
/// normal, so that `E z z^* = Sigma`.
///
/// Eigenvalues of `Sigma` in `[-1e-10 * lambda_1, 0)` are clipped to zero;
/// anything more negative is rejected.
pub fn sample_complex_gaussian(
    stream: &mut RngStream,
    covariance: &ComplexMatrix,
    count: usize,
) -> Result<Vec<Vec<Complex64>>, RandError> {
    let root = psd_sqrt(covariance)?;
    let p = covariance.rows();
    Ok((0..count)
        .map(|_| {
            let g: Vec<Complex64> = (0..p).map(|_| stream.complex_normal()).collect();
            root.mul_vec(&g)
        })
        .collect())
}

/// Hermitian square root of a PSD matrix.
pub fn psd_sqrt(covariance: &ComplexMatrix) -> Result<ComplexMatrix, RandError> {
    let eig = hermitian_eig(covariance)?;
    let max = eig.eigenvalues[0];
    let min = *eig.eigenvalues.last().expect("non-empty");
    if min < -1e-10 * max.abs().max(f64::MIN_POSITIVE) {
        return Err(RandError::NotPsd { min, max });
    }
    let p = covariance.rows();
    let v = &eig.eigenvectors;
    // eigenvalues at rounding level are treated as exact zeros so rank-deficient
    // covariances yield draws that stay inside their range
    let floor = 1e-12 * max.max(0.0);
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l <= floor { 0.0 } else { l.sqrt() })
        .collect();
    Ok(ComplexMatrix::from_fn(p, p, |i, j| {
        (0..p).map(|k| v[(i, k)] * roots[k] * v[(j, k)].conj()).sum()
    }))
}

/// Haar-distributed `p×s` matrix with orthonormal columns: Gram–Schmidt
/// (with re-orthogonalization) of a Gaussian matrix, which yields the QR
/// factor whose `R` has a positive diagonal.
pub fn haar_orthonormal(
    stream: &mut RngStream,
    p: usize,
    s: usize,
    field: Field,
) -> Result<ComplexMatrix, RandError> {
    if s == 0 || p < s {
        return Err(RandError::BadShape { p, s });
    }
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(s);
    for _ in 0..s {
        let mut v: Vec<Complex64> = (0..p)
            .map(|_| match field {
                Field::Real => Complex64::new(stream.normal(), 0.0),
                Field::Complex => stream.complex_normal(),
            })
            .collect();
        for _ in 0..2 {
            for q in &columns {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        columns.push(v.into_iter().map(|z| z / norm).collect());
    }
    Ok(ComplexMatrix::from_columns(&columns)?)
}
