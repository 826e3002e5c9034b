//! Memoryless scalar quantizers.
//!
//! * rectangular dithering: `sign(y + tau)` with `tau ~ U[-lambda, lambda]`, two
//!   independent dithers per snapshot giving the pair `(q, q_dot)`;
//! * triangular dithering: `Q_mu(y + tau)` with `tau` the sum of two
//!   `U(-mu, mu)` draws, saturating to `2^b` levels when `mu = lambda/(2^b - 2)`;
//! * b-bit direct rounding `R_{lambda,b}`, the undithered baseline.
//!
//! Complex inputs are quantized part by part. `sign(0) = +1`.

use num_complex::Complex64;
use thiserror::Error;

use crate::randsrc::{dither_from, dither_pair_from, triangular_from, RngStream};
use crate::snapshots::{BatchError, Field, SnapshotBatch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("non-finite input at index {0}")]
    NonFinite(usize),
    #[error("range parameter lambda must be positive, got {0}")]
    NonPositiveRange(f64),
    #[error("resolution mu must be positive, got {0}")]
    NonPositiveResolution(f64),
    #[error("{scheme} quantizer needs at least {min} bits, got {bits}")]
    BitsTooSmall { scheme: &'static str, bits: u32, min: u32 },
    #[error("{0} bits per scalar is not supported")]
    BitsTooLarge(u32),
    #[error(transparent)]
    Batch(#[from] BatchError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Rectangular { lambda: f64 },
    /// `bits` counts bits per real scalar; `mu = lambda / (2^bits - 2)`.
    Triangular { lambda: f64, bits: u32 },
    DirectRound { lambda: f64, bits: u32 },
}

impl Scheme {
    pub fn lambda(&self) -> f64 {
        match *self {
            Scheme::Rectangular { lambda }
            | Scheme::Triangular { lambda, .. }
            | Scheme::DirectRound { lambda, .. } => lambda,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rectangular { .. } => "rect",
            Scheme::Triangular { .. } => "tri",
            Scheme::DirectRound { .. } => "round",
        }
    }
}

/// A validated quantization scheme together with the field it acts on.
/// Largest bit depth of a [`QuantizerSpec`]; its integer levels must fit an `i32`.
pub const MAX_SPEC_BITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    scheme: Scheme,
    field: Field,
}

impl QuantizerSpec {
    pub fn new(scheme: Scheme, field: Field) -> Result<Self, QuantizeError> {
        let lambda = scheme.lambda();
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(QuantizeError::NonPositiveRange(lambda));
        }
        match scheme {
            Scheme::Triangular { bits, .. } if bits < 2 => {
                return Err(QuantizeError::BitsTooSmall { scheme: "triangular", bits, min: 2 })
            }
            Scheme::DirectRound { bits, .. } if bits < 1 => {
                return Err(QuantizeError::BitsTooSmall { scheme: "direct rounding", bits, min: 1 })
            }
            Scheme::Triangular { bits, .. } | Scheme::DirectRound { bits, .. } if bits > MAX_SPEC_BITS => {
                return Err(QuantizeError::BitsTooLarge(bits))
            }
            _ => {}
        }
        Ok(Self { scheme, field })
    }

    pub fn rectangular(lambda: f64, field: Field) -> Result<Self, QuantizeError> {
        Self::new(Scheme::Rectangular { lambda }, field)
    }

    pub fn triangular(lambda: f64, bits: u32, field: Field) -> Result<Self, QuantizeError> {
        Self::new(Scheme::Triangular { lambda, bits }, field)
    }

    pub fn direct_round(lambda: f64, bits: u32, field: Field) -> Result<Self, QuantizeError> {
        Self::new(Scheme::DirectRound { lambda, bits }, field)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn lambda(&self) -> f64 {
        self.scheme.lambda()
    }

    /// Bits stored per entry of an `F^p` snapshot.
    pub fn bits_per_scalar(&self) -> u64 {
        let c_f = self.field.c_f();
        match self.scheme {
            Scheme::Rectangular { .. } => 2 * c_f,
            Scheme::Triangular { bits, .. } | Scheme::DirectRound { bits, .. } => c_f * bits as u64,
        }
    }

    /// Triangular resolution `mu`, or the cell half-width `lambda/2^b` of direct rounding.
    pub fn resolution(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Rectangular { .. } => None,
            Scheme::Triangular { lambda, bits } => Some(lambda / ((1u64 << bits) - 2) as f64),
            Scheme::DirectRound { lambda, bits } => Some(lambda / (1u64 << bits) as f64),
        }
    }

    /// Short label such as `rect`, `tri_b4` or `round_b2` (bits per real scalar).
    pub fn label(&self) -> String {
        match self.scheme {
            Scheme::Rectangular { .. } => "rect".to_string(),
            Scheme::Triangular { bits, .. } => format!("tri_b{bits}"),
            Scheme::DirectRound { bits, .. } => format!("round_b{bits}"),
        }
    }

    /// Quantizes one snapshot.
    ///
    /// Rectangular dithering draws `tau` from `dither_a` and `tau_dot` from
    /// `dither_b`. Triangular dithering draws the real-part dither from
    /// `dither_a` and the imaginary-part dither from `dither_b`. Direct
    /// rounding ignores both streams.
    pub fn quantize(
        &self,
        y: &[Complex64],
        dither_a: &mut RngStream,
        dither_b: &mut RngStream,
    ) -> Result<Quantized, QuantizeError> {
        check_finite(y)?;
        let mut first = vec![Complex64::new(0.0, 0.0); y.len()];
        match self.scheme {
            Scheme::Rectangular { .. } => {
                let mut second = first.clone();
                self.quantize_into(y, dither_a, dither_b, &mut first, &mut second);
                Ok(Quantized::Pair(QuantizedPair { q: first, q_dot: second }))
            }
            _ => {
                self.quantize_into(y, dither_a, dither_b, &mut first, &mut []);
                Ok(Quantized::Levels(first))
            }
        }
    }

    /// Allocation-free variant of [`quantize`](Self::quantize) for trusted
    /// finite input. `q_dot` is only written for the rectangular scheme.
    #[inline]
    pub fn quantize_into(
        &self,
        y: &[Complex64],
        dither_a: &mut RngStream,
        dither_b: &mut RngStream,
        q: &mut [Complex64],
        q_dot: &mut [Complex64],
    ) {
        let scale = self.level_scale();
        let to_value = |re: i32, im: i32| Complex64::new(scale * re as f64, scale * im as f64);
        self.for_each_level(y, dither_a, dither_b, |i, re, im| q[i] = to_value(re, im), |i, re, im| {
            if let Some(slot) = q_dot.get_mut(i) {
                *slot = to_value(re, im);
            }
        });
    }

    /// Every output value is `level_scale() * level` with an odd integer
    /// `level`: 1 for the sign quantizer, `mu` for triangular dithering and
    /// the cell half-width `lambda / 2^b` for direct rounding.
    pub fn level_scale(&self) -> f64 {
        self.resolution().unwrap_or(1.0)
    }

    /// Largest level magnitude: 1 for rectangular dithering, `2^b - 1` otherwise.
    pub fn max_level(&self) -> u64 {
        match self.scheme {
            Scheme::Rectangular { .. } => 1,
            Scheme::Triangular { bits, .. } | Scheme::DirectRound { bits, .. } => (1u64 << bits) - 1,
        }
    }

    /// Integer form of [`quantize_into`](Self::quantize_into): writes the
    /// levels of snapshot `y` part by part (`re, im` interleaved for complex
    /// data, so `c_F p` entries). `levels_dot` receives the second
    /// rectangular output and is ignored by the other schemes.
    #[inline]
    pub fn quantize_levels(
        &self,
        y: &[Complex64],
        dither_a: &mut RngStream,
        dither_b: &mut RngStream,
        levels: &mut [i32],
        levels_dot: &mut [i32],
    ) {
        let c = self.field.c_f() as usize;
        self.for_each_level(
            y,
            dither_a,
            dither_b,
            |i, re, im| {
                levels[c * i] = re;
                if c == 2 {
                    levels[c * i + 1] = im;
                }
            },
            |i, re, im| {
                if levels_dot.len() > c * i {
                    levels_dot[c * i] = re;
                    if c == 2 {
                        levels_dot[c * i + 1] = im;
                    }
                }
            },
        );
    }

    /// The single definition of every scheme: calls `first(i, re, im)` for
    /// each entry and, for rectangular dithering, `second(i, re, im)` with the
    /// levels of the independently dithered copy. Imaginary levels are 0 for
    /// real data.
    #[inline(always)]
    fn for_each_level(
        &self,
        y: &[Complex64],
        dither_a: &mut RngStream,
        dither_b: &mut RngStream,
        first: impl FnMut(usize, i32, i32),
        second: impl FnMut(usize, i32, i32),
    ) {
        let complex = self.field == Field::Complex;
        match self.scheme {
            Scheme::Rectangular { lambda } => {
                rect_signs(y, complex, lambda, dither_a, first);
                rect_signs(y, complex, lambda, dither_b, second);
            }
            Scheme::Triangular { lambda, bits } => {
                let mu = lambda / ((1u64 << bits) - 2) as f64;
                let top = ((1u64 << bits) - 1) as f64;
                let (mut wa, mut wb) = ([0u64; LEVEL_CHUNK], [0u64; LEVEL_CHUNK]);
                chunked_levels(y, complex, mu, top, first, |block, xs| {
                    let n = block.len();
                    dither_a.fill_u64(&mut wa[..n]);
                    if complex {
                        dither_b.fill_u64(&mut wb[..n]);
                    }
                    for (k, v) in block.iter().enumerate() {
                        xs[2 * k] = v.re + triangular_from(wa[k], mu);
                        xs[2 * k + 1] = if complex { v.im + triangular_from(wb[k], mu) } else { 0.0 };
                    }
                });
            }
            Scheme::DirectRound { lambda, bits } => {
                // Clamping the cell index handles |x| >= lambda exactly like
                // clamping x into [-lambda, lambda] first.
                let step = lambda / (1u64 << bits) as f64;
                let top = ((1u64 << bits) - 1) as f64;
                chunked_levels(y, complex, step, top, first, |block, xs| {
                    for (k, v) in block.iter().enumerate() {
                        (xs[2 * k], xs[2 * k + 1]) = (v.re, v.im);
                    }
                });
            }
        }
    }
}

#[inline]
fn sign_level(x: f64) -> i32 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Sign levels of `y` plus a uniform dither on `(-lambda, lambda)`. Complex
/// entries take one 64-bit draw for both parts, real entries one 32-bit draw.
#[inline(always)]
fn rect_signs(y: &[Complex64], complex: bool, lambda: f64, rng: &mut RngStream, mut emit: impl FnMut(usize, i32, i32)) {
    let mut words = [0u64; LEVEL_CHUNK];
    let mut halves = [0u32; LEVEL_CHUNK];
    for (c, block) in y.chunks(LEVEL_CHUNK).enumerate() {
        let n = block.len();
        if complex {
            rng.fill_u64(&mut words[..n]);
        } else {
            rng.fill_u32(&mut halves[..n]);
        }
        for (k, v) in block.iter().enumerate() {
            let (re, im) = if complex {
                let (dr, di) = dither_pair_from(words[k], lambda);
                (sign_level(v.re + dr), sign_level(v.im + di))
            } else {
                (sign_level(v.re + dither_from(halves[k], lambda)), 0)
            };
            emit(c * LEVEL_CHUNK + k, re, im);
        }
    }
}

/// Entries per chunk of [`chunked_levels`].
const LEVEL_CHUNK: usize = 16;

/// Calls `first(i, re, im)` with the levels of `Q_mu`, clamped to
/// `[-top, top]`, of the parts that `gather(block, xs)` writes for each chunk
/// (`re, im` interleaved). Working a chunk at a time lets the level
/// arithmetic run over fixed-size arrays and vectorize.
#[inline(always)]
fn chunked_levels(
    y: &[Complex64],
    complex: bool,
    mu: f64,
    top: f64,
    mut first: impl FnMut(usize, i32, i32),
    mut gather: impl FnMut(&[Complex64], &mut [f64; 2 * LEVEL_CHUNK]),
) {
    let mut xs = [0.0; 2 * LEVEL_CHUNK];
    let mut levels = [0; 2 * LEVEL_CHUNK];
    for (c, block) in y.chunks(LEVEL_CHUNK).enumerate() {
        gather(block, &mut xs);
        cell_levels(&xs, mu, top, &mut levels);
        for k in 0..block.len() {
            first(c * LEVEL_CHUNK + k, levels[2 * k], if complex { levels[2 * k + 1] } else { 0 });
        }
    }
}

/// Odd levels `2 floor(x / 2mu) + 1` of `Q_mu`, clamped to `[-top, top]`.
#[inline(always)]
fn cell_levels(xs: &[f64; 2 * LEVEL_CHUNK], mu: f64, top: f64, out: &mut [i32; 2 * LEVEL_CHUNK]) {
    let width = 2.0 * mu;
    // Levels 2f+1 within [-top, top] are exactly f in [-(top+1)/2, (top-1)/2],
    // and clamping before the floor is the same as clamping after it because
    // both bounds are integers.
    let half = (top + 1.0) / 2.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        let v = (x / width).clamp(-half, half - 1.0);
        // `f64::floor` is a libm call on baseline x86-64; truncation plus a
        // correction is exact on the clamped range.
        let t = v as i32;
        *o = 2 * (t - ((t as f64) > v) as i32) + 1;
    }
}

/// Output of one quantizer call.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantized {
    Pair(QuantizedPair),
    Levels(Vec<Complex64>),
}

/// Two independently dithered sign quantizations of the same snapshot.
/// Entries lie in `{±1}` (real field) or `{±1±i}` (complex field).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPair {
    pub q: Vec<Complex64>,
    pub q_dot: Vec<Complex64>,
}

/// A quantized batch in the form the covariance estimators consume.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizedBatch {
    Rectangular {
        spec: QuantizerSpec,
        p: usize,
        pairs: Vec<QuantizedPair>,
    },
    /// Triangular or direct-rounding output; `batch.scheme` is set.
    Levels(SnapshotBatch),
}

impl QuantizedBatch {
    pub fn spec(&self) -> Option<QuantizerSpec> {
        match self {
            QuantizedBatch::Rectangular { spec, .. } => Some(*spec),
            QuantizedBatch::Levels(b) => b.scheme,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            QuantizedBatch::Rectangular { pairs, .. } => pairs.len(),
            QuantizedBatch::Levels(b) => b.n(),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            QuantizedBatch::Rectangular { p, .. } => *p,
            QuantizedBatch::Levels(b) => b.p(),
        }
    }
}

/// Quantizes every snapshot of an analog batch.
pub fn quantize_batch(
    batch: &SnapshotBatch,
    spec: &QuantizerSpec,
    dither_a: &mut RngStream,
    dither_b: &mut RngStream,
) -> Result<QuantizedBatch, QuantizeError> {
    let p = batch.p();
    match spec.scheme {
        Scheme::Rectangular { .. } => {
            let pairs = batch
                .iter()
                .map(|y| match spec.quantize(y, dither_a, dither_b)? {
                    Quantized::Pair(pair) => Ok(pair),
                    Quantized::Levels(_) => unreachable!("rectangular scheme yields pairs"),
                })
                .collect::<Result<Vec<_>, QuantizeError>>()?;
            Ok(QuantizedBatch::Rectangular { spec: *spec, p, pairs })
        }
        _ => {
            let mut data = vec![Complex64::new(0.0, 0.0); batch.n() * p];
            for (y, out) in batch.iter().zip(data.chunks_exact_mut(p)) {
                check_finite(y)?;
                spec.quantize_into(y, dither_a, dither_b, out, &mut []);
            }
            let mut out = SnapshotBatch::new(spec.field, p, data)?.with_scheme(*spec);
            out.seed = batch.seed;
            Ok(QuantizedBatch::Levels(out))
        }
    }
}

/// Total bits spent on `n` snapshots in `F^p`.
pub fn bits_used(spec: &QuantizerSpec, n: u64, p: u64) -> u64 {
    spec.bits_per_scalar() * p * n
}

#[inline]
fn sign_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn sign_field(field: Field, z: Complex64) -> Complex64 {
    match field {
        Field::Real => Complex64::new(sign_scalar(z.re), 0.0),
        Field::Complex => Complex64::new(sign_scalar(z.re), sign_scalar(z.im)),
    }
}

fn check_finite(y: &[Complex64]) -> Result<(), QuantizeError> {
    match y.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(QuantizeError::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn sign_real(x: &[f64]) -> Result<Vec<f64>, QuantizeError> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(QuantizeError::NonFinite(i));
    }
    Ok(x.iter().map(|&v| sign_scalar(v)).collect())
}

/// `sign(Re z) + i sign(Im z)`.
pub fn sign_complex(z: &[Complex64]) -> Result<Vec<Complex64>, QuantizeError> {
    check_finite(z)?;
    Ok(z.iter().map(|&v| sign_field(Field::Complex, v)).collect())
}

/// Rectangular dithered pair for one snapshot.
pub fn rect_quantize_pair(
    y: &[Complex64],
    field: Field,
    lambda: f64,
    dither_a: &mut RngStream,
    dither_b: &mut RngStream,
) -> Result<QuantizedPair, QuantizeError> {
    match QuantizerSpec::rectangular(lambda, field)?.quantize(y, dither_a, dither_b)? {
        Quantized::Pair(pair) => Ok(pair),
        Quantized::Levels(_) => unreachable!("rectangular scheme yields pairs"),
    }
}

/// Infinite-range uniform quantizer onto the odd multiples of `mu`.
#[inline]
pub fn q_mu(x: f64, mu: f64) -> f64 {
    2.0 * mu * ((x / (2.0 * mu)).floor() + 0.5)
}

pub fn uniform_quantize(x: &[f64], mu: f64) -> Result<Vec<f64>, QuantizeError> {
    if !(mu > 0.0) {
        return Err(QuantizeError::NonPositiveResolution(mu));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(QuantizeError::NonFinite(i));
    }
    Ok(x.iter().map(|&v| q_mu(v, mu)).collect())
}

/// Resolution `mu = lambda / (2^b - 2)` of the b-bit triangular quantizer.
pub fn bbit_resolution(lambda: f64, bits: u32) -> Result<f64, QuantizeError> {
    if bits < 2 {
        return Err(QuantizeError::BitsTooSmall { scheme: "triangular", bits, min: 2 });
    }
    if bits > 52 {
        return Err(QuantizeError::BitsTooLarge(bits));
    }
    if !(lambda > 0.0) {
        return Err(QuantizeError::NonPositiveRange(lambda));
    }
    Ok(lambda / ((1u64 << bits) - 2) as f64)
}

/// Triangular-dithered `Q_mu` without saturation. Real parts use `dither_re`;
/// imaginary parts (complex field) use the independent `dither_im`.
pub fn tri_quantize(
    y: &[Complex64],
    field: Field,
    mu: f64,
    dither_re: &mut RngStream,
    dither_im: &mut RngStream,
) -> Result<Vec<Complex64>, QuantizeError> {
    if !(mu > 0.0) {
        return Err(QuantizeError::NonPositiveResolution(mu));
    }
    check_finite(y)?;
    Ok(y.iter()
        .map(|v| {
            let re = q_mu(v.re + dither_re.triangular(mu), mu);
            let im = match field {
                Field::Real => 0.0,
                Field::Complex => q_mu(v.im + dither_im.triangular(mu), mu),
            };
            Complex64::new(re, im)
        })
        .collect())
}

#[inline]
fn round_scalar(x: f64, lambda: f64, bits: u32) -> f64 {
    let step = lambda / (1u64 << bits) as f64;
    if x >= lambda {
        lambda - step
    } else {
        q_mu(x.max(-lambda), step)
    }
}

/// b-bit direct rounding `R_{lambda,b}`; inputs outside `[-lambda, lambda]`
/// are clamped to the nearest endpoint first.
pub fn direct_round(x: &[f64], lambda: f64, bits: u32) -> Result<Vec<f64>, QuantizeError> {
    if !(lambda > 0.0) {
        return Err(QuantizeError::NonPositiveRange(lambda));
    }
    if bits < 1 {
        return Err(QuantizeError::BitsTooSmall { scheme: "direct rounding", bits, min: 1 });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(QuantizeError::NonFinite(i));
    }
    Ok(x.iter().map(|&v| round_scalar(v, lambda, bits)).collect())
}
