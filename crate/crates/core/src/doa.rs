//! Spectral estimation on the torus: the Vandermonde model, snapshot
//! synthesis, multi-snapshot ESPRIT and the torus metrics used to score it.

use num_complex::Complex64;
use thiserror::Error;

use crate::numcore::{pinv, small_eig, svd, ComplexMatrix, LinalgError};
use crate::quantize::{QuantizedBatch, QuantizerSpec};
use crate::randsrc::RngStream;
use crate::snapshots::{BatchError, Field, NoiseModel, SnapshotBatch};
use crate::subspace::{subspace_from_quantized, SubspaceError, SubspaceEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DoaError {
    #[error("an angle set needs at least one element")]
    EmptyAngleSet,
    #[error("angle {0} is not finite")]
    NonFinite(f64),
    #[error("angles {0} and {1} coincide on the torus")]
    NotDistinct(f64, f64),
    #[error("need more sensors than sources (p={p}, s={s})")]
    TooFewSensors { p: usize, s: usize },
    #[error("amplitudes have {found} rows, expected s={expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("first p-1 rows of the subspace basis are rank deficient (sigma_min={0:e})")]
    RankDeficientBlock(f64),
    #[error("angle sets have sizes {0} and {1}")]
    SizeMismatch(usize, usize),
    #[error("matching distance supports at most {max} sources, got {s}")]
    TooManySources { s: usize, max: usize },
    #[error("minimum separation needs at least two sources")]
    SingleSource,
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Batch(#[from] BatchError),
}

/// Largest source count accepted by [`matching_distance`].
pub const MAX_MATCHING_SOURCES: usize = 9;

/// Separation reported by callers for a single source, where the minimum
/// pairwise distance is undefined.
pub const SINGLE_SOURCE_SEPARATION: f64 = 0.5;

/// `sigma_min(U_0)` at or below this value makes ESPRIT fail.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Points of the torus `R/Z`, stored as representatives in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    thetas: Vec<f64>,
}

fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid rounds tiny negative inputs up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl AngleSet {
    /// Reduces every angle mod 1 and requires them to be pairwise distinct.
    pub fn new(thetas: &[f64]) -> Result<Self, DoaError> {
        let set = Self::unchecked(thetas)?;
        for i in 0..set.thetas.len() {
            for j in i + 1..set.thetas.len() {
                if wrap_dist(set.thetas[i] - set.thetas[j]) == 0.0 {
                    return Err(DoaError::NotDistinct(set.thetas[i], set.thetas[j]));
                }
            }
        }
        Ok(set)
    }

    /// Estimates may legitimately contain repeated values, so only
    /// finiteness is enforced here.
    pub fn unchecked(thetas: &[f64]) -> Result<Self, DoaError> {
        if thetas.is_empty() {
            return Err(DoaError::EmptyAngleSet);
        }
        if let Some(&bad) = thetas.iter().find(|t| !t.is_finite()) {
            return Err(DoaError::NonFinite(bad));
        }
        Ok(Self {
            thetas: thetas.iter().map(|&t| reduce(t)).collect(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Every angle shifted by `c` on the torus.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            thetas: self.thetas.iter().map(|&t| reduce(t + c)).collect(),
        }
    }
}

/// Output of ESPRIT, optionally scored against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DOAResult {
    pub estimated: AngleSet,
    pub md_to_truth: Option<f64>,
    /// `assignment[k]` is the index of the estimate matched to true angle `k`.
    pub assignment: Option<Vec<usize>>,
}

/// `|x|_T`, the distance from `x` to the nearest integer.
pub fn wrap_dist(x: f64) -> f64 {
    // working on |x| keeps wrap_dist(-x) == wrap_dist(x) bit for bit
    let r = x.abs().rem_euclid(1.0);
    r.min(1.0 - r).max(0.0)
}

/// `Phi[j, l] = exp(-2 pi i j theta_l)` for `j = 0..p`.
pub fn vandermonde(thetas: &AngleSet, p: usize) -> Result<ComplexMatrix, DoaError> {
    let s = thetas.len();
    if p <= s {
        return Err(DoaError::TooFewSensors { p, s });
    }
    Ok(ComplexMatrix::from_fn(p, s, |j, l| {
        // reduce j*theta mod 1 first so the phase stays accurate for large j
        let phase = reduce(j as f64 * thetas.thetas[l]);
        Complex64::from_polar(1.0, -std::f64::consts::TAU * phase)
    }))
}

/// `y_k = Phi a_k + e_k` for the columns `a_k` of the `s×n` amplitude matrix.
pub fn gen_snapshots(
    thetas: &AngleSet,
    p: usize,
    amplitudes: &ComplexMatrix,
    noise: NoiseModel,
    noise_stream: &mut RngStream,
) -> Result<SnapshotBatch, DoaError> {
    let s = thetas.len();
    if amplitudes.rows() != s {
        return Err(DoaError::ShapeMismatch { expected: s, found: amplitudes.rows() });
    }
    let phi = vandermonde(thetas, p)?;
    let n = amplitudes.cols();
    let mut data = Vec::with_capacity(n * p);
    let mut a = vec![Complex64::new(0.0, 0.0); s];
    for k in 0..n {
        for (l, al) in a.iter_mut().enumerate() {
            *al = amplitudes[(l, k)];
        }
        let start = data.len();
        data.extend(phi.mul_vec(&a));
        noise.add_to(Field::Complex, &mut data[start..], noise_stream);
    }
    Ok(SnapshotBatch::new(Field::Complex, p, data)?)
}

/// ESPRIT on an estimated signal subspace (Algorithm 2, steps 2–3).
///
/// Output angles are sorted increasing.
pub fn esprit(u_hat: &SubspaceEstimate) -> Result<AngleSet, DoaError> {
    esprit_basis(&u_hat.basis)
}

pub fn esprit_basis(u: &ComplexMatrix) -> Result<AngleSet, DoaError> {
    let (p, s) = u.shape();
    if p <= s {
        return Err(DoaError::TooFewSensors { p, s });
    }
    let u0 = u.row_block(0, p - 1);
    let u1 = u.row_block(1, p);
    let smin = svd(&u0)?.sigma_min();
    if smin <= RANK_TOLERANCE {
        return Err(DoaError::RankDeficientBlock(smin));
    }
    let psi = &pinv(&u0)? * &u1;
    let mut thetas: Vec<f64> = small_eig(&psi)?
        .into_iter()
        .map(|l| {
            let mut arg = l.arg();
            if arg < 0.0 {
                arg += std::f64::consts::TAU;
            }
            reduce(-arg / std::f64::consts::TAU)
        })
        .collect();
    thetas.sort_by(f64::total_cmp);
    AngleSet::unchecked(&thetas)
}

/// `min over permutations pi of max_k |a_k - b_pi(k)|_T`, with the optimal
/// permutation (`perm[k]` indexes `b`).
pub fn matching_distance(a: &AngleSet, b: &AngleSet) -> Result<(f64, Vec<usize>), DoaError> {
    let s = a.len();
    if b.len() != s {
        return Err(DoaError::SizeMismatch(s, b.len()));
    }
    if s > MAX_MATCHING_SOURCES {
        return Err(DoaError::TooManySources { s, max: MAX_MATCHING_SOURCES });
    }
    let cost: Vec<Vec<f64>> = a
        .thetas
        .iter()
        .map(|x| b.thetas.iter().map(|y| wrap_dist(x - y)).collect())
        .collect();
    let mut best = (f64::INFINITY, Vec::new());
    let mut perm = Vec::with_capacity(s);
    let mut used = vec![false; s];
    search(&cost, &mut perm, &mut used, 0.0, &mut best);
    Ok(best)
}

/// Exhaustive search over permutations, pruning branches whose running
/// maximum cannot beat the best complete assignment found so far.
fn search(cost: &[Vec<f64>], perm: &mut Vec<usize>, used: &mut [bool], current: f64, best: &mut (f64, Vec<usize>)) {
    let k = perm.len();
    if k == cost.len() {
        if current < best.0 {
            *best = (current, perm.clone());
        }
        return;
    }
    for j in 0..cost.len() {
        if used[j] {
            continue;
        }
        let next = current.max(cost[k][j]);
        if next >= best.0 {
            continue;
        }
        used[j] = true;
        perm.push(j);
        search(cost, perm, used, next, best);
        perm.pop();
        used[j] = false;
    }
}

/// `Delta = min_{k != k'} |theta_k - theta_k'|_T`.
///
/// A single source has no pairs; this returns [`DoaError::SingleSource`] and
/// callers that need a number use [`SINGLE_SOURCE_SEPARATION`].
pub fn min_separation(thetas: &AngleSet) -> Result<f64, DoaError> {
    let t = &thetas.thetas;
    if t.len() < 2 {
        return Err(DoaError::SingleSource);
    }
    let mut best = f64::INFINITY;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            best = best.min(wrap_dist(t[i] - t[j]));
        }
    }
    Ok(best)
}

/// Algorithm 2 end to end on a quantized batch, scored against `truth` when given.
pub fn esprit_from_quantized(
    batch: &QuantizedBatch,
    spec: &QuantizerSpec,
    s: usize,
    truth: Option<&AngleSet>,
) -> Result<DOAResult, DoaError> {
    let u_hat = subspace_from_quantized(batch, spec, s)?;
    score(esprit(&u_hat)?, truth)
}

/// Wraps an estimate into a [`DOAResult`], computing `md` against `truth`.
pub fn score(estimated: AngleSet, truth: Option<&AngleSet>) -> Result<DOAResult, DoaError> {
    let (md_to_truth, assignment) = match truth {
        Some(t) => {
            let (md, perm) = matching_distance(t, &estimated)?;
            (Some(md), Some(perm))
        }
        None => (None, None),
    };
    Ok(DOAResult { estimated, md_to_truth, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randsrc::haar_orthonormal;
    use crate::subspace::{leading_eigenspace_of, sin_theta_dist};
    use proptest::prelude::*;

    fn angles(v: &[f64]) -> AngleSet {
        AngleSet::new(v).unwrap()
    }

    fn range_basis(phi: &ComplexMatrix) -> ComplexMatrix {
        svd(phi).unwrap().u
    }

    fn md(a: &AngleSet, b: &AngleSet) -> f64 {
        matching_distance(a, b).unwrap().0
    }

    /// Random angles with `Delta > min_sep`, by rejection.
    fn random_separated(rng: &mut RngStream, s: usize, min_sep: f64) -> AngleSet {
        loop {
            let v: Vec<f64> = (0..s).map(|_| rng.uniform_f64()).collect();
            let set = angles(&v);
            if s == 1 || min_separation(&set).unwrap() > min_sep {
                return set;
            }
        }
    }

    #[test]
    fn angle_set_validation() {
        assert_eq!(angles(&[1.25, -0.25]).as_slice(), &[0.25, 0.75]);
        assert!(matches!(AngleSet::new(&[0.25, 1.25]), Err(DoaError::NotDistinct(..))));
        assert!(AngleSet::new(&[]).is_err());
        assert!(AngleSet::new(&[f64::NAN]).is_err());
        assert_eq!(angles(&[-1e-18]).as_slice(), &[0.0]);
    }

    #[test]
    fn vandermonde_examples() {
        let phi = vandermonde(&angles(&[0.0]), 3).unwrap();
        assert!(phi.as_slice().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let phi = vandermonde(&angles(&[0.0, 0.5]), 3).unwrap();
        assert!((phi[(1, 1)] + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(vandermonde(&angles(&[0.0, 0.5]), 2), Err(DoaError::TooFewSensors { .. })));
    }

    #[test]
    fn vandermonde_orthogonal_pair_singular_values() {
        // p must exceed s; use p = 4 so the columns stay orthogonal
        let f = svd(&vandermonde(&angles(&[0.0, 0.5]), 4).unwrap()).unwrap();
        for s in f.singular_values {
            assert!((s - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wellsep_bracket_random() {
        let mut rng = RngStream::new(31, 0);
        for p in [8usize, 16, 32] {
            for _ in 0..100 {
                let s = 1 + (rng.uniform_f64() * ((p / 2) as f64).min(6.0)) as usize;
                let s = s.clamp(2, p - 1);
                let th = random_separated(&mut rng, s, 1.0 / p as f64);
                let delta = min_separation(&th).unwrap();
                let f = svd(&vandermonde(&th, p).unwrap()).unwrap();
                let lo = p as f64 - 1.0 / delta;
                let hi = p as f64 + 1.0 / delta;
                assert!(f.sigma_min().powi(2) >= lo - 1e-9);
                assert!(f.singular_values[0].powi(2) <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn gen_snapshots_examples() {
        let th = angles(&[0.1, 0.4]);
        let phi = vandermonde(&th, 5).unwrap();
        let amps = ComplexMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        let mut rng = RngStream::new(32, 0);
        let b = gen_snapshots(&th, 5, &amps, NoiseModel::none(), &mut rng).unwrap();
        assert_eq!(b.snapshot(0), phi.column(0).as_slice());

        let th = angles(&[0.1, 0.3, 0.6, 0.8]);
        let phi = vandermonde(&th, 32).unwrap();
        let amps = ComplexMatrix::from_fn(4, 50, |i, k| Complex64::new(if i == k % 4 { 1.0 } else { 0.0 }, 0.0));
        let b = gen_snapshots(&th, 32, &amps, NoiseModel::Uniform { nu: 0.01 }, &mut rng).unwrap();
        for (k, y) in b.iter().enumerate() {
            let clean = phi.column(k % 4);
            for (a, c) in y.iter().zip(&clean) {
                assert!((a - c).norm() <= 0.01 * std::f64::consts::SQRT_2);
            }
        }
        let bad = ComplexMatrix::zeros(3, 1);
        assert!(matches!(
            gen_snapshots(&th, 32, &bad, NoiseModel::none(), &mut rng),
            Err(DoaError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn uniform_noise_covariance() {
        let th = angles(&[0.2]);
        let amps = ComplexMatrix::zeros(1, 100_000);
        let nu = 0.01;
        let mut rng = RngStream::new(33, 0);
        let b = gen_snapshots(&th, 2, &amps, NoiseModel::Uniform { nu }, &mut rng).unwrap();
        let n = b.n() as f64;
        let mut diag = 0.0;
        for y in b.iter() {
            diag += y[0].norm_sqr();
        }
        let emp = diag / n;
        let expect = 2.0 * nu * nu / 3.0;
        let sd = (8.0f64 / 45.0).sqrt() * nu * nu / n.sqrt();
        assert!((emp - expect).abs() < 3.0 * sd);
    }

    #[test]
    fn esprit_exact_subspace() {
        let th = angles(&[0.1, 0.35, 0.7]);
        let u = range_basis(&vandermonde(&th, 16).unwrap());
        let est = esprit_basis(&u).unwrap();
        assert!(md(&th, &est) <= 1e-8);
        assert!(est.as_slice().windows(2).all(|w| w[0] <= w[1]));

        let th = angles(&[0.25]);
        let u = vandermonde(&th, 4).unwrap().scale(0.5);
        let est = esprit_basis(&u).unwrap();
        assert!((est.as_slice()[0] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn esprit_rank_deficient() {
        // a basis supported on the last row only leaves U_0 = 0
        let mut u = ComplexMatrix::zeros(4, 1);
        u[(3, 0)] = Complex64::new(1.0, 0.0);
        assert!(matches!(esprit_basis(&u), Err(DoaError::RankDeficientBlock(_))));
    }

    fn perturbed_basis(u: &ComplexMatrix, eps: f64, rng: &mut RngStream) -> ComplexMatrix {
        let e = ComplexMatrix::from_fn(u.rows(), u.cols(), |_, _| rng.complex_normal());
        let pert = u + &e.scale(eps / e.norm_op());
        range_basis(&pert)
    }

    #[test]
    fn esprit_perturbation_bound() {
        let mut rng = RngStream::new(34, 0);
        let (p, s) = (32, 4);
        for _ in 0..20 {
            let th = random_separated(&mut rng, s, 2.0 / p as f64);
            let u = range_basis(&vandermonde(&th, p).unwrap());
            let uh = perturbed_basis(&u, 1e-3, &mut rng);
            let dist = sin_theta_dist(&uh, &u).unwrap();
            let est = esprit_basis(&uh).unwrap();
            assert!(md(&th, &est) <= 4f64.powi(s as i32 + 2) * dist);
        }
    }

    #[test]
    fn esprit_lemma_first_inequality() {
        // checked only where the lemma's hypothesis on dist verifiably holds
        let mut rng = RngStream::new(35, 0);
        let mut checked = 0;
        for trial in 0..200 {
            let p = [8usize, 16, 32][trial % 3];
            let s = 1 + trial % 4;
            let th = random_separated(&mut rng, s, 1.0 / p as f64);
            let phi = vandermonde(&th, p).unwrap();
            let sigma = svd(&phi).unwrap().sigma_min();
            let delta = if s == 1 { SINGLE_SOURCE_SEPARATION } else { min_separation(&th).unwrap() };
            let u = range_basis(&phi);
            let four = 4f64.powi(s as i32 + 2);
            let limit = sigma * sigma * delta / (four * (s * s * p) as f64);
            let uh = perturbed_basis(&u, 0.5 * limit, &mut rng);
            let dist = sin_theta_dist(&uh, &u).unwrap();
            if dist > limit {
                continue;
            }
            checked += 1;
            let bound = (four * (s as f64).powf(1.5) * (p as f64).sqrt() * dist / sigma).min(0.5);
            assert!(md(&th, &esprit_basis(&uh).unwrap()) <= bound + 1e-12);
        }
        assert!(checked > 150);
    }

    #[test]
    fn esprit_unitary_invariance_and_shift_covariance() {
        let mut rng = RngStream::new(36, 0);
        for _ in 0..20 {
            let th = random_separated(&mut rng, 3, 2.0 / 24.0);
            let u = range_basis(&vandermonde(&th, 24).unwrap());
            let w = haar_orthonormal(&mut rng, 3, 3, Field::Complex).unwrap();
            let a = esprit_basis(&u).unwrap();
            let b = esprit_basis(&(&u * &w)).unwrap();
            assert!(md(&a, &b) <= 1e-10);
            let c = rng.uniform_f64();
            let shifted = th.shifted(c);
            let us = range_basis(&vandermonde(&shifted, 24).unwrap());
            assert!(md(&esprit_basis(&us).unwrap(), &a.shifted(c)) <= 1e-8);
        }
    }

    #[test]
    fn wrap_dist_examples() {
        assert!((wrap_dist(0.9) - 0.1).abs() < 1e-15);
        assert_eq!(wrap_dist(0.5), 0.5);
        assert!((wrap_dist(-0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn matching_distance_examples() {
        assert_eq!(md(&angles(&[0.1, 0.9]), &angles(&[0.9, 0.1])), 0.0);
        assert!((md(&angles(&[0.0]), &angles(&[0.95])) - 0.05).abs() < 1e-15);
        let (d, perm) = matching_distance(&angles(&[0.0, 0.5]), &angles(&[0.2, 0.6])).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        assert_eq!(perm, vec![0, 1]);
        assert!(matches!(
            matching_distance(&angles(&[0.1]), &angles(&[0.1, 0.2])),
            Err(DoaError::SizeMismatch(1, 2))
        ));
        let ten: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
        assert!(matches!(
            matching_distance(&angles(&ten), &angles(&ten)),
            Err(DoaError::TooManySources { .. })
        ));
    }

    #[test]
    fn matching_distance_agrees_with_brute_force() {
        let mut rng = RngStream::new(37, 0);
        for _ in 0..50 {
            let s = 1 + (rng.uniform_f64() * 5.0) as usize;
            let a = random_separated(&mut rng, s, 0.0);
            let b = random_separated(&mut rng, s, 0.0);
            let fast = md(&a, &b);
            let mut brute = f64::INFINITY;
            permutations(s, &mut |perm| {
                let m = (0..s)
                    .map(|k| wrap_dist(a.as_slice()[k] - b.as_slice()[perm[k]]))
                    .fold(0.0, f64::max);
                brute = brute.min(m);
            });
            assert_eq!(fast, brute);
        }
    }

    fn permutations(s: usize, f: &mut dyn FnMut(&[usize])) {
        fn rec(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
            if k == v.len() {
                f(v);
                return;
            }
            for i in k..v.len() {
                v.swap(k, i);
                rec(v, k + 1, f);
                v.swap(k, i);
            }
        }
        rec(&mut (0..s).collect(), 0, f);
    }

    #[test]
    fn min_separation_examples() {
        assert!((min_separation(&angles(&[0.0, 0.01, 0.5])).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(min_separation(&angles(&[0.0, 0.5])).unwrap(), 0.5);
        assert!((min_separation(&angles(&[0.05, 0.95])).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(min_separation(&angles(&[0.3])).unwrap_err(), DoaError::SingleSource);
    }

    #[test]
    fn noiseless_unquantized_pipeline() {
        let th = angles(&[0.05, 0.3, 0.62]);
        let amps = ComplexMatrix::from_fn(3, 30, |i, k| Complex64::new(if i == k % 3 { 1.0 } else { 0.0 }, 0.0));
        let mut rng = RngStream::new(38, 0);
        let b = gen_snapshots(&th, 12, &amps, NoiseModel::none(), &mut rng).unwrap();
        let cov = crate::estimate::sample_covariance_batch(&b).unwrap();
        let u = leading_eigenspace_of(&cov.matrix, 3).unwrap();
        let r = score(esprit(&u).unwrap(), Some(&th)).unwrap();
        assert!(r.md_to_truth.unwrap() <= 1e-8);
    }

    proptest! {
        #[test]
        fn md_metric_axioms(seed in 0u64..100_000, s in 1usize..6) {
            let mut rng = RngStream::new(seed, 0);
            let a = random_separated(&mut rng, s, 0.0);
            let b = random_separated(&mut rng, s, 0.0);
            let c = random_separated(&mut rng, s, 0.0);
            prop_assert_eq!(md(&a, &b), md(&b, &a));
            prop_assert_eq!(md(&a, &a), 0.0);
            prop_assert!(md(&a, &c) <= md(&a, &b) + md(&b, &c) + 1e-12);
            prop_assert!((0.0..=0.5).contains(&md(&a, &b)));
        }
    }
}
