//! Snapshot containers and additive noise models.

use num_complex::Complex64;
use thiserror::Error;

use crate::numcore::ComplexMatrix;
use crate::quantize::QuantizerSpec;
use crate::randsrc::{uniform_from, RngStream};

/// Scalar field of the observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Squared modulus of the sign output: 1 for real, 2 for complex.
    pub fn c_f(self) -> u64 {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(format!("unknown field `{other}` (expected real|complex)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatchError {
    #[error("snapshot length {len} is not a multiple of p={p}")]
    Ragged { len: usize, p: usize },
    #[error("snapshots must have p >= 1")]
    ZeroDimension,
    #[error("real-field batch has a non-zero imaginary part at snapshot {snapshot}")]
    ImaginaryInRealField { snapshot: usize },
    #[error("non-finite value in snapshot {snapshot}")]
    NonFinite { snapshot: usize },
}

/// `n` observation vectors of length `p`, stored row-major (one snapshot per row).
///
/// Real-field batches store their values with a zero imaginary part. `scheme`
/// records the quantizer that produced the values, `None` for analog data.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    field: Field,
    p: usize,
    data: Vec<Complex64>,
    pub scheme: Option<QuantizerSpec>,
    pub seed: Option<u64>,
}

impl SnapshotBatch {
    pub fn new(field: Field, p: usize, data: Vec<Complex64>) -> Result<Self, BatchError> {
        if p == 0 {
            return Err(BatchError::ZeroDimension);
        }
        if !data.len().is_multiple_of(p) {
            return Err(BatchError::Ragged { len: data.len(), p });
        }
        for (idx, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(BatchError::NonFinite { snapshot: idx / p });
            }
            if field == Field::Real && z.im != 0.0 {
                return Err(BatchError::ImaginaryInRealField { snapshot: idx / p });
            }
        }
        Ok(Self {
            field,
            p,
            data,
            scheme: None,
            seed: None,
        })
    }

    pub fn from_snapshots(field: Field, snapshots: &[Vec<Complex64>]) -> Result<Self, BatchError> {
        let p = snapshots.first().map_or(0, Vec::len);
        if snapshots.iter().any(|s| s.len() != p) {
            return Err(BatchError::Ragged { len: 0, p });
        }
        Self::new(field, p, snapshots.concat())
    }

    pub fn with_scheme(mut self, scheme: QuantizerSpec) -> Self {
        self.scheme = Some(scheme);
        self
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn snapshot(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.p..(k + 1) * self.p]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Complex64]> + '_ {
        self.data.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// The `p×n` data matrix whose columns are the snapshots.
    pub fn to_matrix(&self) -> Option<ComplexMatrix> {
        if self.is_empty() {
            return None;
        }
        let n = self.n();
        Some(ComplexMatrix::from_fn(self.p, n, |i, k| self.data[k * self.p + i]))
    }
}

/// Distribution of the additive noise entries.
///
/// `nu` is the half-width for the uniform model and the per-part standard
/// deviation for the Gaussian one. Complex noise has independent real and
/// imaginary parts drawn from the same law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Uniform { nu: f64 },
    Gaussian { nu: f64 },
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel::Uniform { nu: 0.0 }
    }

    pub fn nu(self) -> f64 {
        match self {
            NoiseModel::Uniform { nu } | NoiseModel::Gaussian { nu } => nu,
        }
    }

    /// Variance of one real part of a noise entry.
    pub fn part_variance(self) -> f64 {
        match self {
            NoiseModel::Uniform { nu } => nu * nu / 3.0,
            NoiseModel::Gaussian { nu } => nu * nu,
        }
    }

    /// `E|e_j|^2` for one entry in the given field.
    pub fn entry_variance(self, field: Field) -> f64 {
        self.part_variance() * field.c_f() as f64
    }

    #[inline]
    fn part(self, rng: &mut RngStream) -> f64 {
        match self {
            NoiseModel::Uniform { nu: 0.0 } => 0.0,
            NoiseModel::Uniform { nu } => rng.uniform(-nu, nu),
            NoiseModel::Gaussian { nu } => nu * rng.normal(),
        }
    }

    #[inline]
    pub fn sample(self, field: Field, rng: &mut RngStream) -> Complex64 {
        match field {
            Field::Real => Complex64::new(self.part(rng), 0.0),
            Field::Complex => {
                let re = self.part(rng);
                Complex64::new(re, self.part(rng))
            }
        }
    }

    /// Adds a fresh noise vector to `y` in place. Uniform noise takes its
    /// draws in bulk; the values are those of repeated [`sample`](Self::sample)
    /// calls.
    pub fn add_to(self, field: Field, y: &mut [Complex64], rng: &mut RngStream) {
        match self {
            _ if self.nu() == 0.0 => {}
            NoiseModel::Uniform { nu } => {
                const ENTRIES: usize = 32;
                let c = field.c_f() as usize;
                let mut words = [0u64; 2 * ENTRIES];
                for chunk in y.chunks_mut(ENTRIES) {
                    let words = &mut words[..c * chunk.len()];
                    rng.fill_u64(words);
                    for (v, w) in chunk.iter_mut().zip(words.chunks_exact(c)) {
                        let re = uniform_from(w[0], -nu, nu);
                        *v += Complex64::new(re, if c == 2 { uniform_from(w[1], -nu, nu) } else { 0.0 });
                    }
                }
            }
            NoiseModel::Gaussian { .. } => {
                for v in y.iter_mut() {
                    *v += self.sample(field, rng);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_to_matches_repeated_samples() {
        for noise in [NoiseModel::Uniform { nu: 0.3 }, NoiseModel::Gaussian { nu: 0.3 }] {
            for field in [Field::Real, Field::Complex] {
                let (mut bulk, mut single) = (RngStream::new(2, 0), RngStream::new(2, 0));
                let mut y = vec![Complex64::new(1.0, 0.0); 77];
                noise.add_to(field, &mut y, &mut bulk);
                let expected: Vec<Complex64> =
                    (0..77).map(|_| Complex64::new(1.0, 0.0) + noise.sample(field, &mut single)).collect();
                assert_eq!(y, expected);
                assert_eq!(bulk.next_u64(), single.next_u64());
            }
        }
    }

    #[test]
    fn batch_validation() {
        let c = |re| Complex64::new(re, 0.0);
        assert!(SnapshotBatch::new(Field::Real, 2, vec![c(1.0); 3]).is_err());
        assert!(SnapshotBatch::new(Field::Real, 0, vec![]).is_err());
        assert_eq!(
            SnapshotBatch::new(Field::Real, 1, vec![Complex64::new(0.0, 1.0)]).unwrap_err(),
            BatchError::ImaginaryInRealField { snapshot: 0 }
        );
        let b = SnapshotBatch::new(Field::Real, 2, vec![c(1.0), c(2.0), c(3.0), c(4.0)]).unwrap();
        assert_eq!(b.n(), 2);
        assert_eq!(b.snapshot(1), &[c(3.0), c(4.0)]);
        let m = b.to_matrix().unwrap();
        assert_eq!(m[(0, 1)], c(3.0));
    }

    #[test]
    fn uniform_noise_support_and_variance() {
        let mut rng = RngStream::new(1, 1);
        let model = NoiseModel::Uniform { nu: 0.01 };
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let z = model.sample(Field::Complex, &mut rng);
            assert!(z.re.abs() <= 0.01 && z.im.abs() <= 0.01);
            acc += z.norm_sqr();
        }
        let emp = acc / n as f64;
        let expect = model.entry_variance(Field::Complex);
        // Var|z|^2 = 2 Var(X^2) = 2 (nu^4/5 - nu^4/9) for X ~ U(-nu, nu)
        let sd = (8.0f64 / 45.0).sqrt() * 1e-4 / (n as f64).sqrt();
        assert!((emp - expect).abs() < 3.0 * sd);
    }
}
