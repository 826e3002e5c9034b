//! Trial scheduling and the streaming estimator shared by all experiments.
//!
//! A trial generates one snapshot at a time. Every quantizer in the trial
//! ("series") quantizes the same snapshot with its own dither streams and adds
//! it to its running outer-product sum; at each checkpoint `n` the current
//! estimate is handed to a metric. Smaller sample sizes are therefore prefixes
//! of larger ones within a trial.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::estimate::{LevelAccumulator, OuterProductAccumulator, MAX_EXACT_LEVEL};
use crate::numcore::ComplexMatrix;
use crate::quantize::{QuantizerSpec, Scheme};
use crate::randsrc::{RngStream, Role};
use crate::snapshots::Field;

use super::stats::{summarize, Summary};
use super::HarnessError;

/// Runs `trial(t)` for `t = 0..trials` on a pool of `workers` threads and
/// returns the results in trial order, independent of the schedule.
pub fn run_trials<T, F>(trials: usize, workers: usize, trial: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(pool.install(|| (0..trials as u64).into_par_iter().map(&trial).collect()))
}

/// One quantizer and the sample sizes at which its estimate is scored.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPlan {
    pub spec: QuantizerSpec,
    /// Strictly increasing, all positive.
    pub checkpoints: Vec<usize>,
}

/// The dither streams of series `index` in trial `trial`.
pub fn dither_streams(seed: u64, trial: u64, index: u64) -> (RngStream, RngStream) {
    (
        RngStream::for_trial(seed, trial, Role::DitherA).lane(index),
        RngStream::for_trial(seed, trial, Role::DitherB).lane(index),
    )
}

/// Scale turning the accumulated sum of `count` snapshots into the
/// estimator of `spec`: `lambda^2/(2n)` for rectangular pairs (whose cross
/// sum holds both orders), `1/n` otherwise.
pub fn estimator_factor(spec: &QuantizerSpec, count: usize) -> f64 {
    match spec.scheme() {
        Scheme::Rectangular { lambda } => lambda * lambda / (2.0 * count as f64),
        _ => 1.0 / count as f64,
    }
}

/// Integer levels when they fit [`LevelAccumulator`], floating point otherwise.
enum Accumulator {
    Levels(LevelAccumulator),
    Float(OuterProductAccumulator),
}

struct SeriesState {
    spec: QuantizerSpec,
    checkpoints: Vec<usize>,
    next: usize,
    acc: Accumulator,
    dither_a: RngStream,
    dither_b: RngStream,
    out: Vec<Option<f64>>,
}

/// Streams snapshots through every series of one trial.
///
/// `snapshot(k, y)` writes snapshot `k` into `y`; it is called once per `k`
/// in increasing order up to the largest checkpoint. `metric(series, est)`
/// scores the estimate at each checkpoint; `None` marks a failed trial. The
/// result is indexed by series, then checkpoint.
pub fn stream_trial<G, M>(
    field: Field,
    p: usize,
    plans: &[SeriesPlan],
    dithers: Vec<(RngStream, RngStream)>,
    mut snapshot: G,
    mut metric: M,
) -> Vec<Vec<Option<f64>>>
where
    G: FnMut(usize, &mut [Complex64]),
    M: FnMut(usize, &ComplexMatrix) -> Option<f64>,
{
    assert_eq!(plans.len(), dithers.len(), "one dither pair per series");
    let mut states: Vec<SeriesState> = plans
        .iter()
        .zip(dithers)
        .map(|(plan, (dither_a, dither_b))| SeriesState {
            spec: plan.spec,
            checkpoints: plan.checkpoints.clone(),
            next: 0,
            acc: if plan.spec.max_level() <= MAX_EXACT_LEVEL {
                let cross = matches!(plan.spec.scheme(), Scheme::Rectangular { .. });
                Accumulator::Levels(LevelAccumulator::new(p, field, cross))
            } else {
                Accumulator::Float(OuterProductAccumulator::new(p, field))
            },
            dither_a,
            dither_b,
            out: Vec::with_capacity(plan.checkpoints.len()),
        })
        .collect();
    let n_max = plans.iter().filter_map(|pl| pl.checkpoints.last().copied()).max().unwrap_or(0);
    let zero = Complex64::new(0.0, 0.0);
    let mut y = vec![zero; p];
    let mut q = vec![zero; p];
    let mut q_dot = vec![zero; p];
    let width = p * field.c_f() as usize;
    let mut l = vec![0i32; width];
    let mut l_dot = vec![0i32; width];
    for k in 0..n_max {
        snapshot(k, &mut y);
        for (index, st) in states.iter_mut().enumerate() {
            let Some(&target) = st.checkpoints.get(st.next) else {
                continue;
            };
            let rect = matches!(st.spec.scheme(), Scheme::Rectangular { .. });
            match &mut st.acc {
                Accumulator::Levels(acc) => {
                    st.spec.quantize_levels(&y, &mut st.dither_a, &mut st.dither_b, &mut l, &mut l_dot);
                    acc.push(&l, &l_dot);
                }
                Accumulator::Float(acc) => {
                    st.spec.quantize_into(&y, &mut st.dither_a, &mut st.dither_b, &mut q, &mut q_dot);
                    if rect {
                        acc.add_cross(&q, &q_dot);
                    } else {
                        acc.add_gram(&q);
                    }
                }
            }
            if k + 1 == target {
                let factor = estimator_factor(&st.spec, k + 1);
                let est = match &mut st.acc {
                    Accumulator::Levels(acc) => acc.to_matrix(factor * st.spec.level_scale().powi(2)),
                    Accumulator::Float(acc) => acc.to_matrix(factor),
                };
                st.out.push(if est.is_finite() { metric(index, &est) } else { None });
                st.next += 1;
            }
        }
    }
    states.into_iter().map(|st| st.out).collect()
}

/// Statistics of one `(series, grid point)` cell over all trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub summary: Summary,
    pub success_frac: f64,
    pub failures: usize,
}

/// Aggregates per-trial values of one cell. Failed trials (`None`) enter the
/// quantiles at `ceiling` and are counted. `success` decides which completed
/// trials count as successful; failed trials never do.
pub fn aggregate(values: &[Option<f64>], ceiling: f64, success: impl Fn(f64) -> bool) -> CellStats {
    assert!(!values.is_empty(), "aggregate over zero trials");
    let filled: Vec<f64> = values.iter().map(|v| v.unwrap_or(ceiling)).collect();
    let failures = values.iter().filter(|v| v.is_none()).count();
    let successes = values.iter().flatten().filter(|&&v| success(v)).count();
    CellStats {
        summary: summarize(&filled).expect("non-empty"),
        success_frac: successes as f64 / values.len() as f64,
        failures,
    }
}

/// Transposes `per_trial[t][series][point]` into `[series][point][t]`.
pub fn by_cell(per_trial: Vec<Vec<Vec<Option<f64>>>>) -> Vec<Vec<Vec<Option<f64>>>> {
    let Some(first) = per_trial.first() else {
        return Vec::new();
    };
    let mut cells: Vec<Vec<Vec<Option<f64>>>> = first
        .iter()
        .map(|series| vec![Vec::with_capacity(per_trial.len()); series.len()])
        .collect();
    for trial in per_trial {
        for (s, series) in trial.into_iter().enumerate() {
            for (g, v) in series.into_iter().enumerate() {
                cells[s][g].push(v);
            }
        }
    }
    cells
}
