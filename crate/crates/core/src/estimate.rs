//! Covariance estimators.
//!
//! * rectangular: `(Sigma' + Sigma'^*)/2` with `Sigma' = (lambda^2/n) sum q_k q_dot_k^*`;
//! * triangular: `(1/n) sum q_k q_k^*`;
//! * analog sample covariance `(1/n) Y Y^*`.
//!
//! Sums are accumulated in one streaming pass by [`OuterProductAccumulator`].
//! Partial accumulators can be merged, so a batch may be split across threads;
//! the merged result agrees with a single pass up to floating-point
//! reassociation (relative `1e-12`).
//!
//! Variance convention for complex data: `nu^2` is the variance of each real
//! part of the noise, so the expected triangular estimate is
//! `Sigma_x + c_F (mu^2 + nu^2) I` (diagonal shift `2(mu^2 + nu^2)` over the
//! complex field).

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::numcore::{ComplexMatrix, LinalgError};
use crate::quantize::{QuantizedBatch, QuantizedPair, QuantizerSpec, Scheme};
use crate::snapshots::{Field, SnapshotBatch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("cannot estimate a covariance from zero snapshots")]
    EmptyBatch,
    #[error("snapshot {index} has length {found}, expected {expected}")]
    ShapeMismatch { index: usize, expected: usize, found: usize },
    #[error("batch was produced by {found}, expected {expected}")]
    SchemeMismatch { expected: String, found: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Where a covariance estimate came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateSource {
    Analog,
    Quantized(QuantizerSpec),
}

/// Hermitian `p×p` covariance estimate.
///
/// Triangular and analog estimates are PSD; the rectangular estimate is a
/// symmetrized cross product and may be indefinite.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub matrix: ComplexMatrix,
    pub source: EstimateSource,
    pub n_samples: usize,
}

impl CovarianceEstimate {
    pub fn p(&self) -> usize {
        self.matrix.rows()
    }

    /// Row-major `re,im` pairs, one matrix row per line.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.matrix.rows() {
            let row = self.matrix.row(i);
            for (j, z) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                // adding 0.0 turns -0.0 into 0.0
                let _ = write!(out, "{},{}", z.re + 0.0, z.im + 0.0);
            }
            out.push('\n');
        }
        out
    }
}

/// Streaming sum of outer products, stored as the upper triangle of a
/// Hermitian matrix with split real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterProductAccumulator {
    p: usize,
    field: Field,
    re: Vec<f64>,
    im: Vec<f64>,
    count: usize,
    scratch: Vec<f64>,
}

impl OuterProductAccumulator {
    pub fn new(p: usize, field: Field) -> Self {
        Self {
            p,
            field,
            re: vec![0.0; p * p],
            im: vec![0.0; p * p],
            count: 0,
            scratch: vec![0.0; 4 * p],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds `a a^*`.
    pub fn add_gram(&mut self, a: &[Complex64]) {
        debug_assert_eq!(a.len(), self.p);
        let p = self.p;
        self.count += 1;
        let (ar, rest) = self.scratch.split_at_mut(p);
        let ai = &mut rest[..p];
        for (k, z) in a.iter().enumerate() {
            ar[k] = z.re;
            ai[k] = z.im;
        }
        for i in 0..p {
            let (xr, xi) = (ar[i], ai[i]);
            let row_re = &mut self.re[i * p + i..(i + 1) * p];
            for (acc, &yr) in row_re.iter_mut().zip(&ar[i..]) {
                *acc += xr * yr;
            }
            if self.field == Field::Complex {
                for (acc, &yi) in row_re.iter_mut().zip(&ai[i..]) {
                    *acc += xi * yi;
                }
                let row_im = &mut self.im[i * p + i..(i + 1) * p];
                for ((acc, &yr), &yi) in row_im.iter_mut().zip(&ar[i..]).zip(&ai[i..]) {
                    *acc += xi * yr - xr * yi;
                }
            }
        }
    }

    /// Adds `a b^* + b a^*`, twice the Hermitian part of `a b^*`.
    pub fn add_cross(&mut self, a: &[Complex64], b: &[Complex64]) {
        debug_assert_eq!(a.len(), self.p);
        debug_assert_eq!(b.len(), self.p);
        let p = self.p;
        self.count += 1;
        let (ar, rest) = self.scratch.split_at_mut(p);
        let (ai, rest) = rest.split_at_mut(p);
        let (br, bi) = rest.split_at_mut(p);
        for k in 0..p {
            ar[k] = a[k].re;
            ai[k] = a[k].im;
            br[k] = b[k].re;
            bi[k] = b[k].im;
        }
        for i in 0..p {
            let (xr, xi, zr, zi) = (ar[i], ai[i], br[i], bi[i]);
            let row_re = &mut self.re[i * p + i..(i + 1) * p];
            for ((acc, &yr), &wr) in row_re.iter_mut().zip(&br[i..]).zip(&ar[i..]) {
                *acc += xr * yr + zr * wr;
            }
            if self.field == Field::Complex {
                for ((acc, &yi), &wi) in row_re.iter_mut().zip(&bi[i..]).zip(&ai[i..]) {
                    *acc += xi * yi + zi * wi;
                }
                let row_im = &mut self.im[i * p + i..(i + 1) * p];
                for (k, acc) in row_im.iter_mut().enumerate() {
                    let j = i + k;
                    *acc += xi * br[j] - xr * bi[j] + zi * ar[j] - zr * ai[j];
                }
            }
        }
    }

    /// Adds another accumulator's sums.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.p, other.p, "accumulator dimensions differ");
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += b;
        }
        self.count += other.count;
    }

    /// The accumulated Hermitian matrix multiplied by `factor`.
    pub fn to_matrix(&self, factor: f64) -> ComplexMatrix {
        let p = self.p;
        ComplexMatrix::from_fn(p, p, |i, j| {
            if i <= j {
                Complex64::new(self.re[i * p + j], self.im[i * p + j]) * factor
            } else {
                Complex64::new(self.re[j * p + i], -self.im[j * p + i]) * factor
            }
        })
    }
}

/// Snapshots per block of [`LevelAccumulator`].
const LEVEL_BLOCK: usize = 128;

/// Largest level magnitude [`LevelAccumulator`] accepts (8 bits per scalar).
pub const MAX_EXACT_LEVEL: u64 = 255;

/// Exact outer-product sums of integer quantizer levels.
///
/// Quantizer outputs are `scale * level` with small odd integer levels (see
/// [`QuantizerSpec::quantize_levels`]), so their Gram sums are integers.
/// Levels are buffered in blocks and reduced with 16-bit integer dot
/// products into 64-bit totals, which is both exact and much faster than
/// rank-one floating-point updates.
#[derive(Debug, Clone)]
pub struct LevelAccumulator {
    p: usize,
    field: Field,
    cross: bool,
    fill: usize,
    /// Block planes: entry part `c` (`re, im` interleaved) of snapshot `k` at `c * LEVEL_BLOCK + k`.
    a: Vec<i16>,
    b: Vec<i16>,
    /// Full `p×p` integer totals of the real and imaginary parts.
    re: Vec<i64>,
    im: Vec<i64>,
    count: usize,
}

#[inline]
fn plane(v: &[i16], c: usize, n: usize) -> &[i16] {
    &v[c * LEVEL_BLOCK..c * LEVEL_BLOCK + n]
}

#[inline]
fn dot16(x: &[i16], y: &[i16]) -> i32 {
    x.iter().zip(y).map(|(&u, &v)| u as i32 * v as i32).sum()
}

/// `(ar.br + ai.bi, ai.br - ar.bi)`: real and imaginary part of `sum a conj(b)`.
#[inline]
fn cdot16(ar: &[i16], ai: &[i16], br: &[i16], bi: &[i16]) -> (i32, i32) {
    (dot16(ar, br) + dot16(ai, bi), dot16(ai, br) - dot16(ar, bi))
}

/// Dot-product kernels used by [`LevelAccumulator`] block reductions.
trait DotKernels {
    fn dot(x: &[i16], y: &[i16]) -> i32;
    fn cdot(ar: &[i16], ai: &[i16], br: &[i16], bi: &[i16]) -> (i32, i32);
}

struct ScalarKernels;

impl DotKernels for ScalarKernels {
    #[inline(always)]
    fn dot(x: &[i16], y: &[i16]) -> i32 {
        dot16(x, y)
    }

    #[inline(always)]
    fn cdot(ar: &[i16], ai: &[i16], br: &[i16], bi: &[i16]) -> (i32, i32) {
        cdot16(ar, ai, br, bi)
    }
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use std::arch::x86_64::*;

    const LANES: usize = 16;

    /// Only valid once AVX2 support has been detected.
    pub struct Kernels;

    impl super::DotKernels for Kernels {
        #[inline(always)]
        fn dot(x: &[i16], y: &[i16]) -> i32 {
            // SAFETY: `Kernels` is only used after AVX2 was detected.
            unsafe { dot(x, y) }
        }

        #[inline(always)]
        fn cdot(ar: &[i16], ai: &[i16], br: &[i16], bi: &[i16]) -> (i32, i32) {
            // SAFETY: as above.
            unsafe { cdot(ar, ai, br, bi) }
        }
    }

    #[inline]
    #[target_feature(enable = "avx2")]
    fn hsum(v: __m256i) -> i32 {
        let s = _mm_add_epi32(_mm256_castsi256_si128(v), _mm256_extracti128_si256::<1>(v));
        let s = _mm_add_epi32(s, _mm_shuffle_epi32::<0b01_00_11_10>(s));
        let s = _mm_add_epi32(s, _mm_shuffle_epi32::<0b10_11_00_01>(s));
        _mm_cvtsi128_si32(s)
    }

    fn chunks(v: &[i16], body: usize) -> std::slice::ChunksExact<'_, i16> {
        v[..body].chunks_exact(LANES)
    }

    #[inline]
    #[target_feature(enable = "avx2")]
    fn load(v: &[i16]) -> __m256i {
        let v: &[i16; LANES] = v.try_into().expect("16-lane chunk");
        // SAFETY: `v` holds exactly the 16 values read by the unaligned load.
        unsafe { _mm256_loadu_si256(v.as_ptr() as *const __m256i) }
    }

    #[inline]
    #[target_feature(enable = "avx2")]
    pub fn dot(x: &[i16], y: &[i16]) -> i32 {
        let n = x.len().min(y.len());
        let body = n - n % LANES;
        let mut acc = _mm256_setzero_si256();
        for (a, b) in x[..body].chunks_exact(LANES).zip(y[..body].chunks_exact(LANES)) {
            acc = _mm256_add_epi32(acc, _mm256_madd_epi16(load(a), load(b)));
        }
        hsum(acc) + super::dot16(&x[body..n], &y[body..n])
    }

    #[inline]
    #[target_feature(enable = "avx2")]
    pub fn cdot(ar: &[i16], ai: &[i16], br: &[i16], bi: &[i16]) -> (i32, i32) {
        let n = ar.len();
        let body = n - n % LANES;
        let (mut re, mut im) = (_mm256_setzero_si256(), _mm256_setzero_si256());
        for (((xr, xi), yr), yi) in chunks(ar, body).zip(chunks(ai, body)).zip(chunks(br, body)).zip(chunks(bi, body)) {
            let (xr, xi, yr, yi) = (load(xr), load(xi), load(yr), load(yi));
            re = _mm256_add_epi32(re, _mm256_add_epi32(_mm256_madd_epi16(xr, yr), _mm256_madd_epi16(xi, yi)));
            im = _mm256_add_epi32(im, _mm256_sub_epi32(_mm256_madd_epi16(xi, yr), _mm256_madd_epi16(xr, yi)));
        }
        let (tr, ti) = super::cdot16(&ar[body..], &ai[body..], &br[body..], &bi[body..]);
        (hsum(re) + tr, hsum(im) + ti)
    }
}


impl LevelAccumulator {
    /// `cross = false` accumulates `l l^*`; `cross = true` accumulates
    /// `l l_dot^* + l_dot l^*` for rectangular pairs.
    pub fn new(p: usize, field: Field, cross: bool) -> Self {
        let width = p * field.c_f() as usize;
        Self {
            p,
            field,
            cross,
            fill: 0,
            a: vec![0; width * LEVEL_BLOCK],
            b: if cross { vec![0; width * LEVEL_BLOCK] } else { Vec::new() },
            re: vec![0; p * p],
            im: vec![0; p * p],
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds one snapshot; `levels_dot` is used only in cross mode. Levels
    /// must not exceed [`MAX_EXACT_LEVEL`] in magnitude.
    #[inline]
    pub fn push(&mut self, levels: &[i32], levels_dot: &[i32]) {
        let k = self.fill;
        for (c, &l) in levels.iter().enumerate() {
            self.a[c * LEVEL_BLOCK + k] = l as i16;
        }
        if self.cross {
            for (c, &l) in levels_dot.iter().enumerate() {
                self.b[c * LEVEL_BLOCK + k] = l as i16;
            }
        }
        self.fill += 1;
        self.count += 1;
        if self.fill == LEVEL_BLOCK {
            self.flush();
        }
    }

    fn flush(&mut self) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU feature was detected at runtime.
            unsafe { self.flush_avx2() };
            return;
        }
        self.flush_with::<ScalarKernels>();
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn flush_avx2(&mut self) {
        self.flush_with::<avx2::Kernels>();
    }

    /// Reduces the buffered block into the totals with the given real and
    /// complex dot-product kernels.
    #[inline(always)]
    fn flush_with<K: DotKernels>(&mut self) {
        let (dot, cdot) = (K::dot, K::cdot);
        let (p, n) = (self.p, self.fill);
        if n == 0 {
            return;
        }
        match (self.field, self.cross) {
            (Field::Real, false) => {
                for i in 0..p {
                    for j in i..p {
                        self.re[i * p + j] += dot(plane(&self.a, i, n), plane(&self.a, j, n)) as i64;
                    }
                }
            }
            (Field::Complex, false) => {
                for i in 0..p {
                    let (ar, ai) = (plane(&self.a, 2 * i, n), plane(&self.a, 2 * i + 1, n));
                    for j in i..p {
                        let (br, bi) = (plane(&self.a, 2 * j, n), plane(&self.a, 2 * j + 1, n));
                        let (re, im) = cdot(ar, ai, br, bi);
                        self.re[i * p + j] += re as i64;
                        self.im[i * p + j] += im as i64;
                    }
                }
            }
            // Cross mode keeps the full matrix C = sum l l_dot^*.
            (Field::Real, true) => {
                for i in 0..p {
                    for j in 0..p {
                        self.re[i * p + j] += dot(plane(&self.a, i, n), plane(&self.b, j, n)) as i64;
                    }
                }
            }
            (Field::Complex, true) => {
                for i in 0..p {
                    let (ar, ai) = (plane(&self.a, 2 * i, n), plane(&self.a, 2 * i + 1, n));
                    for j in 0..p {
                        let (br, bi) = (plane(&self.b, 2 * j, n), plane(&self.b, 2 * j + 1, n));
                        let (re, im) = cdot(ar, ai, br, bi);
                        self.re[i * p + j] += re as i64;
                        self.im[i * p + j] += im as i64;
                    }
                }
            }
        }
        self.fill = 0;
    }

    /// `factor` times the accumulated Hermitian matrix (`sum l l^*`, or
    /// `sum l l_dot^* + l_dot l^*` in cross mode), in level units.
    pub fn to_matrix(&mut self, factor: f64) -> ComplexMatrix {
        self.flush();
        let p = self.p;
        let (re, im) = (&self.re, &self.im);
        if self.cross {
            ComplexMatrix::from_fn(p, p, |i, j| {
                let r = re[i * p + j] + re[j * p + i];
                let m = im[i * p + j] - im[j * p + i];
                Complex64::new(r as f64 * factor, m as f64 * factor)
            })
        } else {
            ComplexMatrix::from_fn(p, p, |i, j| {
                let (u, v) = if i <= j { (i, j) } else { (j, i) };
                let sign = if i <= j { 1.0 } else { -1.0 };
                Complex64::new(re[u * p + v] as f64 * factor, sign * im[u * p + v] as f64 * factor)
            })
        }
    }
}

fn check_lengths<'a>(p: usize, rows: impl Iterator<Item = &'a [Complex64]>) -> Result<(), EstimateError> {
    for (index, r) in rows.enumerate() {
        if r.len() != p {
            return Err(EstimateError::ShapeMismatch { index, expected: p, found: r.len() });
        }
    }
    Ok(())
}

fn pairs_field(pairs: &[QuantizedPair]) -> Field {
    let complex = pairs.iter().any(|pr| pr.q.iter().chain(&pr.q_dot).any(|z| z.im != 0.0));
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

/// `(lambda^2 / 2n) sum (q q_dot^* + q_dot q^*)`.
pub fn rect_covariance(pairs: &[QuantizedPair], lambda: f64) -> Result<CovarianceEstimate, EstimateError> {
    let first = pairs.first().ok_or(EstimateError::EmptyBatch)?;
    let p = first.q.len();
    check_lengths(p, pairs.iter().flat_map(|pr| [pr.q.as_slice(), pr.q_dot.as_slice()]))?;
    let field = pairs_field(pairs);
    let mut acc = OuterProductAccumulator::new(p, field);
    for pr in pairs {
        acc.add_cross(&pr.q, &pr.q_dot);
    }
    let n = pairs.len();
    let spec = QuantizerSpec::rectangular(lambda, field).map_err(|e| EstimateError::SchemeMismatch {
        expected: "rectangular scheme with lambda > 0".into(),
        found: e.to_string(),
    })?;
    Ok(CovarianceEstimate {
        matrix: acc.to_matrix(lambda * lambda / (2.0 * n as f64)),
        source: EstimateSource::Quantized(spec),
        n_samples: n,
    })
}

/// `(1/n) sum q q^*` over the snapshots of a triangular-quantized batch.
pub fn tri_covariance(batch: &SnapshotBatch) -> Result<CovarianceEstimate, EstimateError> {
    let mut est = gram_estimate(batch)?;
    if let Some(spec) = batch.scheme {
        est.source = EstimateSource::Quantized(spec);
    }
    Ok(est)
}

/// Sample covariance of an analog batch.
pub fn sample_covariance_batch(batch: &SnapshotBatch) -> Result<CovarianceEstimate, EstimateError> {
    gram_estimate(batch)
}

fn gram_estimate(batch: &SnapshotBatch) -> Result<CovarianceEstimate, EstimateError> {
    if batch.is_empty() {
        return Err(EstimateError::EmptyBatch);
    }
    let mut acc = OuterProductAccumulator::new(batch.p(), batch.field());
    for y in batch.iter() {
        acc.add_gram(y);
    }
    Ok(CovarianceEstimate {
        matrix: acc.to_matrix(1.0 / batch.n() as f64),
        source: EstimateSource::Analog,
        n_samples: batch.n(),
    })
}

/// `(1/n) Y Y^*` for a `p×n` data matrix.
pub fn sample_covariance(y: &ComplexMatrix) -> Result<CovarianceEstimate, EstimateError> {
    let (p, n) = y.shape();
    let complex = y.as_slice().iter().any(|z| z.im != 0.0);
    let field = if complex { Field::Complex } else { Field::Real };
    let mut acc = OuterProductAccumulator::new(p, field);
    for k in 0..n {
        acc.add_gram(&y.column(k));
    }
    Ok(CovarianceEstimate {
        matrix: acc.to_matrix(1.0 / n as f64),
        source: EstimateSource::Analog,
        n_samples: n,
    })
}

/// Picks the estimator that matches the quantizer used.
///
/// Direct rounding has no dedicated estimator; its output is treated like the
/// triangular one, i.e. the leading left singular space of the quantized data.
pub fn covariance_from_quantized(batch: &QuantizedBatch) -> Result<CovarianceEstimate, EstimateError> {
    match batch {
        QuantizedBatch::Rectangular { spec, pairs, .. } => {
            let mut est = rect_covariance(pairs, spec.lambda())?;
            est.source = EstimateSource::Quantized(*spec);
            Ok(est)
        }
        QuantizedBatch::Levels(b) => match b.scheme.map(|s| s.scheme()) {
            Some(Scheme::Triangular { .. }) | Some(Scheme::DirectRound { .. }) => tri_covariance(b),
            _ => Err(EstimateError::SchemeMismatch {
                expected: "triangular or direct-round batch".into(),
                found: "unlabelled batch".into(),
            }),
        },
    }
}
