//! The five experiments and the generic custom run.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;

use crate::doa::{esprit_basis, matching_distance, vandermonde, AngleSet};
use crate::numcore::{hermitian_eig, ComplexMatrix};
use crate::quantize::{bits_used, QuantizerSpec};
use crate::randsrc::{haar_orthonormal, RngStream, Role};
use crate::snapshots::Field;
use crate::subspace::{leading_eigenspace_of, sin_theta_unchecked};

use super::config::{ExperimentConfig, ExperimentKind, Grid};
use super::runner::{aggregate, by_cell, dither_streams, run_trials, stream_trial, SeriesPlan};
use super::stats::fit_loglog_slope;
use super::table::{version_string, AuxTable, Metadata, ResultRow, ResultTable};
use super::HarnessError;

/// Worst-case subspace distance, charged to failed trials.
pub const DIST_CEILING: f64 = 1.0;
/// Worst-case matching distance, charged to failed trials.
pub const MD_CEILING: f64 = 0.5;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Adversarial => run_adversarial(cfg),
        ExperimentKind::EigendepRect => run_eigendep_rect(cfg),
        ExperimentKind::EigendepTri => run_eigendep_tri(cfg),
        ExperimentKind::WellsepDoa => run_wellsep_doa(cfg),
        ExperimentKind::PhaseTransition => run_phase_transition(cfg),
        ExperimentKind::Custom => run_custom(cfg),
    }
}

fn require(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<(), HarnessError> {
    if cfg.experiment != kind {
        return Err(HarnessError::ConfigInvalid(format!("config is for {}, not {kind}", cfg.experiment)));
    }
    Ok(())
}

fn setup_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

/// Sample sizes and bit counts of one quantizer along the grid.
///
/// Bit budgets are converted to the largest `n` that fits, rounded down to a
/// multiple of `multiple`; the reported bits are those actually spent.
fn grid_points(cfg: &ExperimentConfig, spec: &QuantizerSpec, multiple: u64) -> Result<(Vec<u64>, Vec<u64>), HarnessError> {
    let p = cfg.p as u64;
    let ns: Vec<u64> = match &cfg.grid {
        Grid::Samples(v) => v.clone(),
        Grid::Bits(v) => v.iter().map(|b| b / (spec.bits_per_scalar() * p) / multiple * multiple).collect(),
    };
    if let Some(i) = ns.iter().position(|&n| n == 0) {
        return Err(HarnessError::ConfigInvalid(format!(
            "grid point {} leaves no snapshot for quantizer {}",
            i + 1,
            spec.label()
        )));
    }
    let bits = ns.iter().map(|&n| bits_used(spec, n, p)).collect();
    Ok((ns, bits))
}

/// Strictly increasing checkpoints plus, for every grid point, the index of
/// its checkpoint (coarse bit grids can map two budgets to the same `n`).
fn checkpoints(ns: &[u64]) -> (Vec<usize>, Vec<usize>) {
    let mut unique: Vec<usize> = ns.iter().map(|&n| n as usize).collect();
    unique.sort_unstable();
    unique.dedup();
    let index = ns.iter().map(|&n| unique.binary_search(&(n as usize)).expect("present")).collect();
    (unique, index)
}

/// A quantizer together with its grid.
struct Series {
    label: String,
    spec: QuantizerSpec,
    ns: Vec<u64>,
    bits: Vec<u64>,
    plan: SeriesPlan,
    index: Vec<usize>,
}

impl Series {
    fn new(label: String, spec: QuantizerSpec, ns: Vec<u64>, bits: Vec<u64>) -> Self {
        let (unique, index) = checkpoints(&ns);
        Self { label, spec, ns, bits, plan: SeriesPlan { spec, checkpoints: unique }, index }
    }

    /// Expands per-checkpoint values to per-grid-point values.
    fn expand(&self, values: Vec<Option<f64>>) -> Vec<Option<f64>> {
        self.index.iter().map(|&i| values[i]).collect()
    }
}

fn quantizer_series(cfg: &ExperimentConfig, multiple: u64) -> Result<Vec<Series>, HarnessError> {
    cfg.quantizers
        .iter()
        .map(|spec| {
            let (ns, bits) = grid_points(cfg, spec, multiple)?;
            Ok(Series::new(spec.label(), *spec, ns, bits))
        })
        .collect()
}

/// Builds the rows of every series from `per_trial[t][series][point]`.
fn build_rows(
    cfg: &ExperimentConfig,
    series: &[Series],
    per_trial: Vec<Vec<Vec<Option<f64>>>>,
    ceiling: f64,
    success: impl Fn(usize, f64) -> bool,
) -> Vec<ResultRow> {
    let cells = by_cell(per_trial);
    let mut rows = Vec::new();
    for (si, (sr, cell)) in series.iter().zip(cells).enumerate() {
        for (g, values) in cell.iter().enumerate() {
            let stats = aggregate(values, ceiling, |v| success(si, v));
            rows.push(ResultRow {
                experiment: cfg.experiment.to_string(),
                quantizer: sr.label.clone(),
                n: sr.ns[g],
                bits: sr.bits[g],
                median: stats.summary.median,
                quantile25: stats.summary.q25,
                quantile75: stats.summary.q75,
                success_frac: stats.success_frac,
                failures: stats.failures as u64,
                seed: cfg.seed,
            });
        }
    }
    rows
}

fn metadata(cfg: &ExperimentConfig, summary: BTreeMap<String, f64>, notes: Vec<String>) -> Metadata {
    let mut config = cfg.to_raw();
    config.workers = Some(cfg.workers);
    Metadata {
        experiment: cfg.experiment.to_string(),
        preset: cfg.preset.clone(),
        seed: cfg.seed.to_string(),
        version: version_string(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        trials: cfg.trials as u64,
        deviations: cfg.deviations.clone(),
        notes,
        summary,
        config,
    }
}

/// `dist(leading_s(est), truth)`, or `None` when the eigensolver fails.
fn subspace_metric(est: &ComplexMatrix, truth: &ComplexMatrix) -> Option<f64> {
    let u = leading_eigenspace_of(est, truth.cols()).ok()?;
    Some(sin_theta_unchecked(&u.basis, truth))
}

/// `md(esprit(leading_s(est)), truth)`, or `None` when ESPRIT fails.
fn doa_metric(est: &ComplexMatrix, truth: &AngleSet) -> Option<f64> {
    let u = leading_eigenspace_of(est, truth.len()).ok()?;
    let theta = esprit_basis(&u.basis).ok()?;
    matching_distance(truth, &theta).ok().map(|(md, _)| md)
}

/// Log-log slope of `median` against `x` over the rows, or `None` when a fit
/// is impossible (fewer than 2 points or a zero median).
fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    fit_loglog_slope(xs, ys).ok().map(|(s, _)| s)
}

/// Slopes over the full grid and its upper half, keyed `slope:<label>` and
/// `slope_upper:<label>`.
fn series_slopes(rows: &[ResultRow], labels: &[String], x: impl Fn(&ResultRow) -> f64, summary: &mut BTreeMap<String, f64>) {
    for label in labels {
        let sr: Vec<&ResultRow> = rows.iter().filter(|r| &r.quantizer == label).collect();
        let xs: Vec<f64> = sr.iter().map(|r| x(r)).collect();
        let ys: Vec<f64> = sr.iter().map(|r| r.median).collect();
        if let Some(s) = slope(&xs, &ys) {
            summary.insert(format!("slope:{label}"), s);
        }
        let half = xs.len() / 2;
        if let Some(s) = slope(&xs[half..], &ys[half..]) {
            summary.insert(format!("slope_upper:{label}"), s);
        }
    }
}

/// Fixed real Haar `U`; `x_k` is column `k mod s`; uniform noise per trial.
pub fn run_adversarial(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    require(cfg, ExperimentKind::Adversarial)?;
    let (p, s) = (cfg.p, cfg.s);
    let u = haar_orthonormal(&mut RngStream::for_setup(cfg.seed, 0), p, s, Field::Real).map_err(setup_err)?;
    let series = quantizer_series(cfg, 1)?;
    let plans: Vec<SeriesPlan> = series.iter().map(|sr| sr.plan.clone()).collect();
    let noise = cfg.noise;
    let per_trial = run_trials(cfg.trials, cfg.workers, |t| {
        let mut rng = RngStream::for_trial(cfg.seed, t, Role::Noise);
        let out = stream_trial(
            Field::Real,
            p,
            &plans,
            (0..plans.len() as u64).map(|i| dither_streams(cfg.seed, t, i)).collect(),
            |k, y| {
                for (i, v) in y.iter_mut().enumerate() {
                    *v = u[(i, k % s)];
                }
                noise.add_to(Field::Real, y, &mut rng);
            },
            |_, est| subspace_metric(est, &u),
        );
        series.iter().zip(out).map(|(sr, v)| sr.expand(v)).collect()
    })?;
    let rows = build_rows(cfg, &series, per_trial, DIST_CEILING, |_, _| true);
    let labels: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
    let mut summary = BTreeMap::new();
    series_slopes(&rows, &labels, |r| r.bits as f64, &mut summary);
    Ok(ResultTable { rows, metadata: metadata(cfg, summary, vec![]), auxiliary: vec![] })
}

/// `zeta = min(1, c n^-beta)`.
pub fn eigendep_zeta(c: f64, n: u64, beta: f64) -> f64 {
    (c * (n as f64).powf(-beta)).min(1.0)
}

/// `Sigma_x = R diag(1, zeta, ..., zeta, 0, ...) R^T` with `zeta` tied to
/// `n`, so every `(beta, n)` cell draws its own data.
pub fn run_eigendep_rect(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    require(cfg, ExperimentKind::EigendepRect)?;
    let (p, r) = (cfg.p, cfg.s);
    let rot = haar_orthonormal(&mut RngStream::for_setup(cfg.seed, 0), p, p, Field::Real).map_err(setup_err)?;
    let u = rot.column_block(0, r);
    let base = quantizer_series(cfg, 1)?;
    let mut series = Vec::new();
    for &beta in &cfg.betas {
        for b in &base {
            series.push(Series::new(format!("{};beta={beta}", b.label), b.spec, b.ns.clone(), b.bits.clone()));
        }
    }
    let grid_len = base[0].ns.len();
    let nq = base.len();
    let noise = cfg.noise;
    let per_trial = run_trials(cfg.trials, cfg.workers, |t| {
        let mut out: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(grid_len); series.len()];
        for (bi, &beta) in cfg.betas.iter().enumerate() {
            for g in 0..grid_len {
                let cell = (bi * grid_len + g) as u64;
                // All quantizers share the data of a cell but draw their own size from the grid.
                let plans: Vec<SeriesPlan> = base
                    .iter()
                    .map(|b| SeriesPlan { spec: b.spec, checkpoints: vec![b.ns[g] as usize] })
                    .collect();
                let zeta = eigendep_zeta(cfg.zeta_scale, plans.iter().map(|pl| pl.checkpoints[0] as u64).max().unwrap_or(1), beta);
                let sd: Vec<f64> = (0..r).map(|j| if j == 0 { 1.0 } else { zeta.sqrt() }).collect();
                let mut data = RngStream::for_trial(cfg.seed, t, Role::Data).lane(cell);
                let mut nrng = RngStream::for_trial(cfg.seed, t, Role::Noise).lane(cell);
                let mut g_vec = vec![0.0; r];
                let res = stream_trial(
                    Field::Real,
                    p,
                    &plans,
                    (0..nq as u64).map(|qi| dither_streams(cfg.seed, t, cell * nq as u64 + qi)).collect(),
                    |_, y| {
                        for (gj, sj) in g_vec.iter_mut().zip(&sd) {
                            *gj = sj * data.normal();
                        }
                        for (i, v) in y.iter_mut().enumerate() {
                            let mut acc = 0.0;
                            for (j, gj) in g_vec.iter().enumerate() {
                                acc += u[(i, j)].re * gj;
                            }
                            *v = Complex64::new(acc, 0.0);
                        }
                        noise.add_to(Field::Real, y, &mut nrng);
                    },
                    |_, est| subspace_metric(est, &u),
                );
                for (qi, v) in res.into_iter().enumerate() {
                    out[bi * nq + qi].push(v[0]);
                }
            }
        }
        out
    })?;
    let rows = build_rows(cfg, &series, per_trial, DIST_CEILING, |_, _| true);
    let labels: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
    let mut summary = BTreeMap::new();
    series_slopes(&rows, &labels, |r| r.n as f64, &mut summary);
    let zeta_rows = cfg
        .betas
        .iter()
        .flat_map(|&beta| {
            base[0].ns.iter().map(move |&n| vec![beta.to_string(), n.to_string(), eigendep_zeta(cfg.zeta_scale, n, beta).to_string()])
        })
        .collect();
    let aux = AuxTable { name: "zeta".into(), header: vec!["beta".into(), "n".into(), "zeta".into()], rows: zeta_rows };
    Ok(ResultTable { rows, metadata: metadata(cfg, summary, vec![]), auxiliary: vec![aux] })
}

/// First two coordinates of the circle data: `(cos, sin)(16 pi (k-1) / N)`
/// for 1-based `k`, i.e. `2 pi * 8 k / N` for 0-based `k`.
pub fn circle_point(k: usize, n: usize) -> (f64, f64) {
    let phase = 16.0 * std::f64::consts::PI * k as f64 / n as f64;
    (phase.cos(), phase.sin())
}

/// `sigma_r(X_N)` for the circle data, from its `2×2` Gram matrix.
pub fn circle_sigma_r(n: usize) -> f64 {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (x, y) = circle_point(k, n);
        a += x * x;
        b += x * y;
        c += y * y;
    }
    let g = ComplexMatrix::from_real(2, 2, &[a, b, b, c]).expect("2x2");
    let eig = hermitian_eig(&g).expect("2x2 symmetric");
    eig.eigenvalues[1].max(0.0).sqrt()
}

/// Circle data in the first two coordinates of `R^p`; every `N` of the grid
/// uses all `N` samples.
pub fn run_eigendep_tri(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    require(cfg, ExperimentKind::EigendepTri)?;
    let p = cfg.p;
    let u = ComplexMatrix::from_fn(p, 2, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    let series = quantizer_series(cfg, 1)?;
    let grid_len = series[0].ns.len();
    let nq = series.len();
    let noise = cfg.noise;
    let per_trial = run_trials(cfg.trials, cfg.workers, |t| {
        let mut out: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(grid_len); nq];
        for g in 0..grid_len {
            let plans: Vec<SeriesPlan> = series
                .iter()
                .map(|sr| SeriesPlan { spec: sr.spec, checkpoints: vec![sr.ns[g] as usize] })
                .collect();
            let big_n = plans.iter().map(|pl| pl.checkpoints[0]).max().unwrap_or(1);
            let mut nrng = RngStream::for_trial(cfg.seed, t, Role::Noise).lane(g as u64);
            let res = stream_trial(
                Field::Real,
                p,
                &plans,
                (0..nq as u64).map(|qi| dither_streams(cfg.seed, t, g as u64 * nq as u64 + qi)).collect(),
                |k, y| {
                    let (c, s) = circle_point(k, big_n);
                    for (i, v) in y.iter_mut().enumerate() {
                        let x = match i {
                            0 => c,
                            1 => s,
                            _ => 0.0,
                        };
                        *v = Complex64::new(x, 0.0);
                    }
                    noise.add_to(Field::Real, y, &mut nrng);
                },
                |_, est| subspace_metric(est, &u),
            );
            for (qi, v) in res.into_iter().enumerate() {
                out[qi].push(v[0]);
            }
        }
        out
    })?;
    let rows = build_rows(cfg, &series, per_trial, DIST_CEILING, |_, _| true);
    let sigma: BTreeMap<u64, f64> = series[0].ns.iter().map(|&n| (n, circle_sigma_r(n as usize))).collect();
    let mut summary = BTreeMap::new();
    for sr in &series {
        let xs: Vec<f64> = sr.ns.iter().map(|n| sigma[n]).collect();
        let ys: Vec<f64> = rows.iter().filter(|r| r.quantizer == sr.label).map(|r| r.median).collect();
        if let Some(s) = slope(&xs, &ys) {
            summary.insert(format!("slope_vs_sigma_r:{}", sr.label), s);
        }
    }
    let aux = AuxTable {
        name: "reference".into(),
        header: vec!["n".into(), "sigma_r".into(), "inv_sigma_r".into()],
        rows: sigma.iter().map(|(n, s)| vec![n.to_string(), s.to_string(), (1.0 / s).to_string()]).collect(),
    };
    Ok(ResultTable { rows, metadata: metadata(cfg, summary, vec![]), auxiliary: vec![aux] })
}

/// `theta_k = 4k/p + tau_k`, `tau_k ~ U(-1/p, 1/p)`, `k = 1..s`.
pub fn wellsep_angles(seed: u64, p: usize, s: usize) -> Result<AngleSet, HarnessError> {
    let mut rng = RngStream::for_setup(seed, 0);
    let pf = p as f64;
    let thetas: Vec<f64> = (1..=s).map(|k| 4.0 * k as f64 / pf + rng.uniform(-1.0 / pf, 1.0 / pf)).collect();
    AngleSet::new(&thetas).map_err(setup_err)
}

/// Fixed well-separated angles, amplitudes cycling through the canonical
/// basis, complex uniform noise per trial; bit-normalized grid.
pub fn run_wellsep_doa(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    require(cfg, ExperimentKind::WellsepDoa)?;
    let (p, s) = (cfg.p, cfg.s);
    let theta = wellsep_angles(cfg.seed, p, s)?;
    let phi = vandermonde(&theta, p).map_err(setup_err)?;
    let series = quantizer_series(cfg, s as u64)?;
    let plans: Vec<SeriesPlan> = series.iter().map(|sr| sr.plan.clone()).collect();
    let noise = cfg.noise;
    let per_trial = run_trials(cfg.trials, cfg.workers, |t| {
        let mut rng = RngStream::for_trial(cfg.seed, t, Role::Noise);
        let out = stream_trial(
            Field::Complex,
            p,
            &plans,
            (0..plans.len() as u64).map(|i| dither_streams(cfg.seed, t, i)).collect(),
            |k, y| {
                for (i, v) in y.iter_mut().enumerate() {
                    *v = phi[(i, k % s)];
                }
                noise.add_to(Field::Complex, y, &mut rng);
            },
            |_, est| doa_metric(est, &theta),
        );
        series.iter().zip(out).map(|(sr, v)| sr.expand(v)).collect()
    })?;
    let rows = build_rows(cfg, &series, per_trial, MD_CEILING, |_, _| true);
    let labels: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
    let mut summary = BTreeMap::new();
    series_slopes(&rows, &labels, |r| r.bits as f64, &mut summary);
    let aux = AuxTable {
        name: "angles".into(),
        header: vec!["k".into(), "theta".into()],
        rows: theta.as_slice().iter().enumerate().map(|(k, th)| vec![(k + 1).to_string(), th.to_string()]).collect(),
    };
    Ok(ResultTable { rows, metadata: metadata(cfg, summary, vec![]), auxiliary: vec![aux] })
}

/// Smallest grid budget whose success fraction reaches `threshold`.
pub fn minimal_successful<'a>(rows: &[&'a ResultRow], threshold: f64) -> Option<&'a ResultRow> {
    rows.iter().copied().find(|r| r.success_frac >= threshold)
}

/// Sources `{0, eps, 1/2}` with fixed `U_C(-1, 1)^3` amplitudes; success
/// iff `md <= factor * eps`.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    require(cfg, ExperimentKind::PhaseTransition)?;
    let (p, s) = (cfg.p, cfg.s);
    let base = quantizer_series(cfg, 1)?;
    let setups: Vec<(AngleSet, ComplexMatrix)> = cfg
        .eps_grid
        .iter()
        .map(|&eps| {
            let theta = AngleSet::new(&[0.0, eps, 0.5]).map_err(setup_err)?;
            let phi = vandermonde(&theta, p).map_err(setup_err)?;
            Ok((theta, phi))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut series = Vec::new();
    for b in &base {
        for &eps in &cfg.eps_grid {
            series.push(Series::new(format!("{};eps={eps}", b.label), b.spec, b.ns.clone(), b.bits.clone()));
        }
    }
    let (ne, nq) = (cfg.eps_grid.len(), base.len());
    let noise = cfg.noise;
    let per_trial = run_trials(cfg.trials, cfg.workers, |t| {
        let mut out: Vec<Vec<Option<f64>>> = vec![Vec::new(); series.len()];
        for (ei, (theta, phi)) in setups.iter().enumerate() {
            let plans: Vec<SeriesPlan> = base.iter().map(|b| b.plan.clone()).collect();
            // The amplitude sequence is a fixed setup draw, identical in every trial.
            let mut amp_rng = RngStream::for_setup(cfg.seed, 1);
            let mut nrng = RngStream::for_trial(cfg.seed, t, Role::Noise).lane(ei as u64);
            let mut a = vec![Complex64::new(0.0, 0.0); s];
            let res = stream_trial(
                Field::Complex,
                p,
                &plans,
                (0..nq as u64).map(|qi| dither_streams(cfg.seed, t, ei as u64 * nq as u64 + qi)).collect(),
                |_, y| {
                    for al in a.iter_mut() {
                        let re = amp_rng.uniform(-1.0, 1.0);
                        *al = Complex64::new(re, amp_rng.uniform(-1.0, 1.0));
                    }
                    for (i, v) in y.iter_mut().enumerate() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (l, al) in a.iter().enumerate() {
                            acc += phi[(i, l)] * al;
                        }
                        *v = acc;
                    }
                    noise.add_to(Field::Complex, y, &mut nrng);
                },
                |_, est| doa_metric(est, theta),
            );
            for (qi, v) in res.into_iter().enumerate() {
                out[qi * ne + ei] = base[qi].expand(v);
            }
        }
        out
    })?;
    let eps_of = |si: usize| cfg.eps_grid[si % ne];
    let rows = build_rows(cfg, &series, per_trial, MD_CEILING, |si, md| md <= cfg.success_factor * eps_of(si));
    let mut summary = BTreeMap::new();
    let mut notes = Vec::new();
    let mut boundary = Vec::new();
    for b in &base {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &eps in &cfg.eps_grid {
            let label = format!("{};eps={eps}", b.label);
            let cells: Vec<&ResultRow> = rows.iter().filter(|r| r.quantizer == label).collect();
            let hit = minimal_successful(&cells, cfg.success_threshold);
            boundary.push(vec![
                b.label.clone(),
                eps.to_string(),
                hit.map_or(String::new(), |r| r.bits.to_string()),
                hit.map_or(String::new(), |r| r.n.to_string()),
            ]);
            if let Some(r) = hit {
                xs.push(1.0 / eps);
                ys.push(r.bits as f64);
            }
        }
        match fit_loglog_slope(&xs, &ys) {
            Ok((sl, icpt)) => {
                summary.insert(format!("boundary_slope:{}", b.label), sl);
                summary.insert(format!("boundary_intercept:{}", b.label), icpt);
            }
            Err(e) => notes.push(format!("{}: no boundary fit ({e})", b.label)),
        }
        summary.insert(format!("boundary_points:{}", b.label), xs.len() as f64);
    }
    let aux = AuxTable {
        name: "boundary".into(),
        header: vec!["quantizer".into(), "eps".into(), "b_min".into(), "n_min".into()],
        rows: boundary,
    };
    Ok(ResultTable { rows, metadata: metadata(cfg, summary, notes), auxiliary: vec![aux] })
}

/// Generic run: Gaussian data in a Haar-random `s`-dimensional subspace
/// scored by subspace distance, or, with `thetas`, Gaussian amplitudes on a
/// fixed array scored by matching distance.
pub fn run_custom(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    require(cfg, ExperimentKind::Custom)?;
    let (p, s, field) = (cfg.p, cfg.s, cfg.field);
    let series = quantizer_series(cfg, 1)?;
    let plans: Vec<SeriesPlan> = series.iter().map(|sr| sr.plan.clone()).collect();
    let (basis, theta) = match &cfg.thetas {
        Some(t) => {
            let theta = AngleSet::new(t).map_err(setup_err)?;
            (vandermonde(&theta, p).map_err(setup_err)?, Some(theta))
        }
        None => (haar_orthonormal(&mut RngStream::for_setup(cfg.seed, 0), p, s, field).map_err(setup_err)?, None),
    };
    let noise = cfg.noise;
    let per_trial = run_trials(cfg.trials, cfg.workers, |t| {
        let mut data = RngStream::for_trial(cfg.seed, t, Role::Data);
        let mut nrng = RngStream::for_trial(cfg.seed, t, Role::Noise);
        let mut g = vec![Complex64::new(0.0, 0.0); s];
        let out = stream_trial(
            field,
            p,
            &plans,
            (0..plans.len() as u64).map(|i| dither_streams(cfg.seed, t, i)).collect(),
            |_, y| {
                for gj in g.iter_mut() {
                    *gj = match field {
                        Field::Real => Complex64::new(data.normal(), 0.0),
                        Field::Complex => data.complex_normal(),
                    };
                }
                for (i, v) in y.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, gj) in g.iter().enumerate() {
                        acc += basis[(i, j)] * gj;
                    }
                    *v = acc;
                }
                noise.add_to(field, y, &mut nrng);
            },
            |_, est| match &theta {
                Some(th) => doa_metric(est, th),
                None => subspace_metric(est, &basis),
            },
        );
        series.iter().zip(out).map(|(sr, v)| sr.expand(v)).collect()
    })?;
    let ceiling = if theta.is_some() { MD_CEILING } else { DIST_CEILING };
    let rows = build_rows(cfg, &series, per_trial, ceiling, |_, _| true);
    let labels: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
    let mut summary = BTreeMap::new();
    series_slopes(&rows, &labels, |r| r.n as f64, &mut summary);
    Ok(ResultTable { rows, metadata: metadata(cfg, summary, vec![]), auxiliary: vec![] })
}
