//! Acceptance criteria 1-12, run sequentially so the wall-clock limits are
//! measured without interference. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use qsubspace::doa::{esprit_basis, matching_distance, min_separation, vandermonde, AngleSet};
use qsubspace::estimate::covariance_from_quantized;
use qsubspace::harness::{fit_loglog_slope, run_experiment, ExperimentConfig, RawConfig, ResultRow, ResultTable};
use qsubspace::numcore::{hermitian_eig, pinv, svd};
use qsubspace::quantize::{direct_round, QuantizedBatch, quantize_batch, sign_real, tri_quantize, uniform_quantize};
use qsubspace::randsrc::haar_orthonormal;
use qsubspace::subspace::{leading_eigenspace_of, sin_theta_dist};
use qsubspace::{Complex64, ComplexMatrix, Field, NoiseModel, QuantizerSpec, RngStream, SnapshotBatch};

/// Seed of every experiment run below.
const SEED: u64 = 1;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn within_time(verdict: Verdict, elapsed: Duration, limit: Option<Duration>) -> Verdict {
    match limit {
        Some(limit) if elapsed > limit => Verdict::new(
            false,
            format!("{}; runtime {:.1}s exceeds {:.0}s", verdict.detail, elapsed.as_secs_f64(), limit.as_secs_f64()),
        ),
        _ => verdict,
    }
}

fn run_preset(name: &str) -> ResultTable {
    let raw = RawConfig { seed: Some(SEED), ..RawConfig::default() };
    let cfg = ExperimentConfig::resolve(name, &raw).expect("preset resolves");
    run_experiment(&cfg).expect("experiment runs")
}

fn loglog(xs: &[f64], ys: &[f64]) -> f64 {
    fit_loglog_slope(xs, ys).map(|(s, _)| s).unwrap_or(f64::NAN)
}

fn slope_vs_bits(rows: &[&ResultRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.bits as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median).collect();
    loglog(&xs, &ys)
}

/// Row whose budget is closest (in log scale) to `bits`.
fn at_budget<'a>(rows: &[&'a ResultRow], bits: f64) -> &'a ResultRow {
    rows.iter()
        .min_by(|a, b| {
            let da = ((a.bits as f64) / bits).ln().abs();
            let db = ((b.bits as f64) / bits).ln().abs();
            da.total_cmp(&db)
        })
        .copied()
        .expect("non-empty series")
}

/// Value of `key=` in a label such as `rect;beta=0.5`.
fn label_param(label: &str, key: &str) -> Option<f64> {
    label.split(';').find_map(|part| part.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

fn base_label(label: &str) -> &str {
    label.split(';').next().unwrap_or(label)
}

// ---------------------------------------------------------------- 1 to 5

fn criterion_1() -> Verdict {
    let x = [1.5, -0.7, 0.2, -1.9];
    let (lambda, nu, n) = (2.0, 0.1, 1_000_000);
    let noise = NoiseModel::Uniform { nu };
    let mut rng = RngStream::new(SEED, 100);
    let mut data = Vec::with_capacity(n * x.len());
    let mut y = [c(0.0, 0.0); 4];
    for _ in 0..n {
        for (v, &xi) in y.iter_mut().zip(&x) {
            *v = c(xi, 0.0);
        }
        noise.add_to(Field::Real, &mut y, &mut rng);
        data.extend_from_slice(&y);
    }
    let batch = SnapshotBatch::new(Field::Real, 4, data).unwrap();
    let spec = QuantizerSpec::rectangular(lambda, Field::Real).unwrap();
    let (mut a, mut b) = (RngStream::new(SEED, 101), RngStream::new(SEED, 102));
    let q = quantize_batch(&batch, &spec, &mut a, &mut b).unwrap();
    let est = covariance_from_quantized(&q).unwrap().matrix;
    let sigma_e = noise.part_variance();
    let err = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| {
            let truth = x[i] * x[j] + if i == j { sigma_e } else { 0.0 };
            (est[(i, j)] - c(truth, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    Verdict::new(err <= 0.05, format!("max entry error {err:.4} (tolerance 0.05)"))
}

fn criterion_2() -> Verdict {
    let x = [0.3, -1.7, 2.2, 0.05];
    let (mu, nu, n) = (1.0, 0.5, 1_000_000usize);
    let noise = NoiseModel::Gaussian { nu };
    let mut rng = RngStream::new(SEED, 200);
    let (mut da, mut db) = (RngStream::new(SEED, 201), RngStream::new(SEED, 202));
    let mut sum = [0.0; 4];
    let mut cross = [[0.0; 4]; 4];
    let mut y = [c(0.0, 0.0); 4];
    for _ in 0..n {
        for (v, &xi) in y.iter_mut().zip(&x) {
            *v = c(xi, 0.0);
        }
        noise.add_to(Field::Real, &mut y, &mut rng);
        let q = tri_quantize(&y, Field::Real, mu, &mut da, &mut db).unwrap();
        let xi: Vec<f64> = q.iter().zip(&x).map(|(q, x)| q.re - x).collect();
        for i in 0..4 {
            sum[i] += xi[i];
            for j in 0..4 {
                cross[i][j] += xi[i] * xi[j];
            }
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let cov = |i: usize, j: usize| cross[i][j] / nf - mean[i] * mean[j];
    let target = mu * mu + nu * nu;
    let mean_err = mean.iter().map(|m| m.abs()).fold(0.0, f64::max);
    let var_err = (0..4).map(|i| (cov(i, i) - target).abs()).fold(0.0, f64::max);
    let corr = (0..4)
        .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (cov(i, j) / (cov(i, i) * cov(j, j)).sqrt()).abs())
        .fold(0.0, f64::max);
    Verdict::new(
        mean_err <= 0.01 && var_err <= 0.03 && corr <= 0.005,
        format!("max |mean| {mean_err:.4} (<= 0.01), max |var - 1.25| {var_err:.4} (<= 0.03), max |corr| {corr:.4} (<= 0.005)"),
    )
}

fn random_hermitian(rng: &mut RngStream, p: usize, field: Field) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(p, p, |_, _| match field {
        Field::Real => c(rng.normal(), 0.0),
        Field::Complex => rng.complex_normal(),
    });
    (&a + &a.adjoint()).scale(0.5)
}

fn criterion_3() -> Verdict {
    let mut rng = RngStream::new(SEED, 300);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000 {
        let p = 2 + (rng.uniform_f64() * 11.0) as usize;
        let s = 1 + (rng.uniform_f64() * (p - 1) as f64) as usize;
        let field = if trial % 2 == 0 { Field::Complex } else { Field::Real };
        let v = haar_orthonormal(&mut rng, p, p, field).unwrap();
        let gap = 10f64.powf(rng.uniform(-3.0, 1.0));
        let mut eigenvalues: Vec<f64> = (0..p).map(|_| rng.uniform(0.0, 1.0)).collect();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let floor = eigenvalues[s];
        for e in eigenvalues.iter_mut().take(s) {
            *e += gap + (1.0 - floor);
        }
        let lam = ComplexMatrix::from_diag(&eigenvalues);
        let sigma = (&(&v * &lam) * &v.adjoint()).hermitian_part();
        let e = random_hermitian(&mut rng, p, field);
        let e = e.scale(gap * 10f64.powf(rng.uniform(-3.0, 1.0)) / e.norm_op());
        let perturbed = &sigma + &e;
        let u = v.column_block(0, s);
        let u_hat = leading_eigenspace_of(&perturbed, s).unwrap().basis;
        let dist = sin_theta_dist(&u_hat, &u).unwrap();
        let true_gap = eigenvalues[s - 1] - eigenvalues[s];
        let bound = (1.0 + std::f64::consts::SQRT_2) * e.norm_op() / true_gap;
        let margin = dist - (bound.min(1.0) + 1e-8);
        worst = worst.max(margin);
        if margin > 0.0 {
            violations += 1;
        }
    }
    Verdict::new(violations == 0, format!("{violations} violations in 1000 instances (largest dist - bound {worst:.2e})"))
}

/// Random angles with every circular gap at least `min_gap`, by rejection.
fn random_separated(rng: &mut RngStream, s: usize, min_gap: f64) -> AngleSet {
    loop {
        let v: Vec<f64> = (0..s).map(|_| rng.uniform_f64()).collect();
        if let Ok(set) = AngleSet::new(&v) {
            if s == 1 || min_separation(&set).unwrap() > min_gap {
                return set;
            }
        }
    }
}

fn criterion_4() -> Verdict {
    let mut rng = RngStream::new(SEED, 400);
    let mut violations = 0;
    for trial in 0..1000 {
        let p = [8usize, 16, 32][trial % 3];
        let s = 2 + (rng.uniform_f64() * ((p / 2).min(6) - 1) as f64) as usize;
        let theta = random_separated(&mut rng, s, 1.0 / p as f64);
        let delta = min_separation(&theta).unwrap();
        let sv = svd(&vandermonde(&theta, p).unwrap()).unwrap().singular_values;
        let smin2 = sv[s - 1].powi(2);
        let (lo, hi) = (p as f64 - 1.0 / delta, p as f64 + 1.0 / delta);
        // 1e-9 relative slack absorbs the SVD's rounding, nothing else
        let tol = 1e-9 * p as f64;
        if smin2 < lo - tol || smin2 > hi + tol {
            violations += 1;
        }
    }
    Verdict::new(violations == 0, format!("{violations} violations in 1000 instances"))
}

fn criterion_5() -> Verdict {
    let mut rng = RngStream::new(SEED, 500);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = 1 + (rng.uniform_f64() * 6.0) as usize;
        let p = (s + 1 + (rng.uniform_f64() * (32 - s) as f64) as usize).min(32);
        let theta = random_separated(&mut rng, s, 1.0 / p as f64);
        let phi = vandermonde(&theta, p).unwrap();
        let basis = svd(&phi).unwrap().u;
        let rotation = haar_orthonormal(&mut rng, s, s, Field::Complex).unwrap();
        let est = esprit_basis(&(&basis * &rotation)).unwrap();
        worst = worst.max(matching_distance(&theta, &est).unwrap().0);
    }
    Verdict::new(worst <= 1e-8, format!("largest md {worst:.2e} over 100 instances (tolerance 1e-8)"))
}

// ---------------------------------------------------------------- 6 to 10

fn criterion_6() -> Verdict {
    let table = run_preset("adversarial");
    let mut ok = true;
    let mut notes = Vec::new();
    for label in table.series_names() {
        let rows = table.series(&label);
        let max_bits = rows.iter().map(|r| r.bits).max().unwrap() as f64;
        let top = at_budget(&rows, max_bits).median;
        if label.starts_with("round") {
            let half = at_budget(&rows, max_bits / 2.0).median;
            let change = (top - half).abs() / half;
            ok &= change <= 0.10;
            notes.push(format!("{label} max/half change {:.1}% (<= 10%)", 100.0 * change));
        } else {
            let tenth = at_budget(&rows, max_bits / 10.0).median;
            let ratio = top / tenth;
            ok &= ratio < 0.7;
            notes.push(format!("{label} max/tenth {ratio:.3} (< 0.7)"));
        }
    }
    Verdict::new(ok, notes.join(", "))
}

fn criterion_7() -> Verdict {
    let table = run_preset("eigendep_rect");
    let by_beta: BTreeMap<String, Vec<&ResultRow>> = table
        .series_names()
        .into_iter()
        .map(|label| {
            let rows = table.series(&label);
            (label, rows)
        })
        .collect();
    let find = |beta: f64| {
        by_beta
            .iter()
            .find(|(label, _)| label_param(label, "beta").is_some_and(|b| (b - beta).abs() < 1e-9))
            .map(|(_, rows)| rows.clone())
            .expect("beta series present")
    };
    let slope_n = |rows: &[&ResultRow]| {
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.median).collect();
        loglog(&xs, &ys)
    };
    let low = find(3.0 / 8.0);
    let slope_low = slope_n(&low);
    let mid = find(0.5);
    let slope_mid = slope_n(&mid[mid.len() / 2..]);
    let high = find(5.0 / 8.0);
    let top = high.iter().max_by_key(|r| r.n).unwrap().median;
    Verdict::new(
        slope_low <= -0.05 && slope_mid.abs() <= 0.05 && top >= 0.95,
        format!(
            "beta=3/8 slope {slope_low:.3} (<= -0.05), beta=1/2 upper-half slope {slope_mid:.3} (|.| <= 0.05), beta=5/8 median at largest n {top:.3} (>= 0.95)"
        ),
    )
}

fn criterion_8() -> Verdict {
    let table = run_preset("eigendep_tri");
    let reference = table.aux("reference").expect("reference table");
    let col = |name: &str| reference.header.iter().position(|h| h == name).expect("column present");
    let (n_col, sigma_col) = (col("n"), col("sigma_r"));
    let sigma_of: BTreeMap<u64, f64> = reference
        .rows
        .iter()
        .map(|r| (r[n_col].parse().unwrap(), r[sigma_col].parse().unwrap()))
        .collect();
    let mut ok = true;
    let mut notes = Vec::new();
    let mut top = Vec::new();
    for label in table.series_names() {
        let rows = table.series(&label);
        let xs: Vec<f64> = rows.iter().map(|r| sigma_of[&r.n]).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.median).collect();
        let slope = loglog(&xs, &ys);
        ok &= (-1.2..=-0.8).contains(&slope);
        notes.push(format!("{label} {slope:.3}"));
        top.push(rows.iter().max_by_key(|r| r.n).unwrap().median);
    }
    let ordered = top.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    Verdict::new(
        ok,
        format!("slopes vs sigma_r in [-1.2, -0.8]: {} (b-ordering at largest n: {})", notes.join(", "), if ordered { "holds" } else { "violated" }),
    )
}

fn criterion_9() -> Verdict {
    let table = run_preset("wellsep_doa");
    let mut ok = true;
    let mut notes = Vec::new();
    for label in table.series_names() {
        let rows = table.series(&label);
        if label.starts_with("round") {
            let half = rows.len() / 2;
            let upper = slope_vs_bits(&rows[half..]);
            let max_bits = rows.iter().map(|r| r.bits).max().unwrap() as f64;
            let top = at_budget(&rows, max_bits).median;
            let quarter = at_budget(&rows, max_bits / 4.0).median;
            let saturated = upper >= -0.1 && top >= 0.5 * quarter;
            ok &= saturated;
            notes.push(format!("{label} upper slope {upper:.3} (>= -0.1), max/quarter {:.3} (>= 0.5)", top / quarter));
        } else {
            let slope = slope_vs_bits(&rows);
            ok &= (-0.65..=-0.35).contains(&slope);
            notes.push(format!("{label} slope {slope:.3} (in [-0.65, -0.35])"));
        }
    }
    Verdict::new(ok, notes.join(", "))
}

fn criterion_10() -> Verdict {
    let table = run_preset("phase_transition");
    let threshold = table.metadata.config.success_threshold.unwrap_or(0.95);
    let mut columns: BTreeMap<String, Vec<(f64, Vec<&ResultRow>)>> = BTreeMap::new();
    for label in table.series_names() {
        let eps = label_param(&label, "eps").expect("eps label");
        let mut rows = table.series(&label);
        rows.sort_by_key(|r| r.bits);
        columns.entry(base_label(&label).to_string()).or_default().push((eps, rows));
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (quantizer, cols) in &columns {
        let mut inversions_ok = true;
        let (mut inv_eps, mut inv_b) = (Vec::new(), Vec::new());
        for (eps, rows) in cols {
            let inversions = rows.windows(2).filter(|w| w[1].success_frac < w[0].success_frac).count();
            inversions_ok &= inversions <= 1;
            if let Some(r) = rows.iter().find(|r| r.success_frac >= threshold) {
                inv_eps.push(1.0 / eps);
                inv_b.push(r.bits as f64);
            }
        }
        let slope = loglog(&inv_eps, &inv_b);
        let slope_ok = (1.3..=2.2).contains(&slope);
        ok &= slope_ok && inversions_ok;
        notes.push(format!(
            "{quantizer} boundary slope {slope:.3} from {} of {} eps (in [1.3, 2.2]), monotone in B: {}",
            inv_eps.len(),
            cols.len(),
            if inversions_ok { "yes" } else { "no" }
        ));
    }
    Verdict::new(ok, notes.join("; "))
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Verdict {
    let mut rng = RngStream::new(SEED, 1100);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && !failures.iter().any(|f| f == what) {
            failures.push(what.to_string());
        }
    };

    for trial in 0..200 {
        let p = 2 + trial % 15;
        let field = if trial % 2 == 0 { Field::Complex } else { Field::Real };
        let a = random_hermitian(&mut rng, p, field);
        // eigensolver residuals and orthonormality
        let eig = hermitian_eig(&a).unwrap();
        let v = &eig.eigenvectors;
        let av = &a * v;
        let vl = v * &ComplexMatrix::from_diag(&eig.eigenvalues);
        check((&av - &vl).norm_op() <= 1e-10 * a.norm_op().max(1.0), "eigensolver residual");
        check(v.orthonormality_defect() <= 1e-10, "eigenvector orthonormality");
        check(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]), "eigenvalue order");
        let s = 1 + trial % p;
        let est = leading_eigenspace_of(&a, s).unwrap();
        check(est.basis.orthonormality_defect() <= 1e-10, "subspace orthonormality");
        // sin-theta distance: symmetry, range, basis invariance
        let u = haar_orthonormal(&mut rng, p, s, field).unwrap();
        let w = haar_orthonormal(&mut rng, p, s, field).unwrap();
        let d = sin_theta_dist(&u, &w).unwrap();
        check(d == sin_theta_dist(&w, &u).unwrap(), "dist symmetry");
        check((0.0..=1.0).contains(&d), "dist range");
        let r = haar_orthonormal(&mut rng, s, s, field).unwrap();
        check((sin_theta_dist(&(&u * &r), &w).unwrap() - d).abs() <= 1e-10, "dist basis invariance");

        // Penrose identities, including rank-deficient inputs
        let (m, n) = (1 + trial % 7, 1 + (trial / 7) % 7);
        let rank = 1 + trial % m.min(n);
        let left = ComplexMatrix::from_fn(m, rank, |_, _| rng.complex_normal());
        let right = ComplexMatrix::from_fn(rank, n, |_, _| rng.complex_normal());
        let a = &left * &right;
        let ap = pinv(&a).unwrap();
        let tol = 1e-9 * a.norm_op().max(1.0);
        let aap = &a * &ap;
        let apa = &ap * &a;
        check((&(&aap * &a) - &a).norm_op() <= tol, "Penrose A A+ A = A");
        check((&(&apa * &ap) - &ap).norm_op() <= 1e-9 * ap.norm_op().max(1.0), "Penrose A+ A A+ = A+");
        check((&aap - &aap.adjoint()).norm_op() <= 1e-9, "Penrose (A A+)* = A A+");
        check((&apa - &apa.adjoint()).norm_op() <= 1e-9, "Penrose (A+ A)* = A+ A");
    }

    // matching distance: metric axioms
    for trial in 0..500 {
        let s = 1 + trial % 6;
        let draw = |rng: &mut RngStream| {
            let v: Vec<f64> = (0..s).map(|_| rng.uniform_f64()).collect();
            AngleSet::unchecked(&v).unwrap()
        };
        let (a, b, x) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let md = |p: &AngleSet, q: &AngleSet| matching_distance(p, q).unwrap().0;
        check(md(&a, &a) == 0.0, "md identity");
        check((md(&a, &b) - md(&b, &a)).abs() <= 1e-15, "md symmetry");
        check(md(&a, &b) <= md(&a, &x) + md(&x, &b) + 1e-15, "md triangle inequality");
        check((0.0..=0.5).contains(&md(&a, &b)), "md range");
    }

    // quantizers: idempotence and alphabet closure
    for trial in 0..200 {
        let xs: Vec<f64> = (0..16).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let signs = sign_real(&xs).unwrap();
        check(sign_real(&signs).unwrap() == signs, "sign idempotence");
        let mu = 10f64.powf(rng.uniform(-2.0, 0.5));
        let q = uniform_quantize(&xs, mu).unwrap();
        check(uniform_quantize(&q, mu).unwrap() == q, "Q_mu idempotence");
        let bits = 1 + trial as u32 % 8;
        let lambda = rng.uniform(0.5, 6.0);
        let r = direct_round(&xs, lambda, bits).unwrap();
        check(direct_round(&r, lambda, bits).unwrap() == r, "direct rounding idempotence");
        let step = lambda / (1u64 << bits) as f64;
        let top = ((1u64 << bits) - 1) as f64;
        check(
            r.iter().all(|v| {
                let level = v / step;
                (level - level.round()).abs() < 1e-9 && level.round().rem_euclid(2.0) == 1.0 && level.abs() <= top + 1e-9
            }),
            "direct rounding alphabet",
        );
        for field in [Field::Real, Field::Complex] {
            let y: Vec<Complex64> = (0..8).map(|_| c(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0))).collect();
            let tb = 2 + trial as u32 % 7;
            let spec = QuantizerSpec::triangular(2.0, tb, field).unwrap();
            let (mut da, mut db) = (RngStream::new(SEED, 1101 + trial as u64), RngStream::new(SEED, 5101 + trial as u64));
            let y = match field {
                Field::Real => y.iter().map(|v| c(v.re, 0.0)).collect(),
                Field::Complex => y,
            };
            let batch = SnapshotBatch::new(field, y.len(), y).unwrap();
            let q = quantize_batch(&batch, &spec, &mut da, &mut db).unwrap();
            let mu = spec.resolution().unwrap();
            let top = ((1u64 << tb) - 1) as f64;
            let in_alphabet = |x: f64| {
                let level = x / mu;
                (level - level.round()).abs() < 1e-9 && level.round().rem_euclid(2.0) == 1.0 && level.abs() <= top + 1e-9
            };
            let batch_values = match &q {
                QuantizedBatch::Levels(b) => b.as_slice().to_vec(),
                QuantizedBatch::Rectangular { .. } => Vec::new(),
            };
            check(
                batch_values.iter().all(|z| in_alphabet(z.re) && (field == Field::Real && z.im == 0.0 || in_alphabet(z.im))),
                "triangular alphabet",
            );
            let rect = QuantizerSpec::rectangular(2.0, field).unwrap();
            let q = quantize_batch(&batch, &rect, &mut da, &mut db).unwrap();
            let unit = |x: f64| x == 1.0 || x == -1.0;
            let closed = match &q {
                QuantizedBatch::Rectangular { pairs, .. } => pairs
                    .iter()
                    .flat_map(|pair| pair.q.iter().chain(&pair.q_dot))
                    .all(|z| unit(z.re) && (field == Field::Real && z.im == 0.0 || unit(z.im))),
                QuantizedBatch::Levels(_) => false,
            };
            check(closed, "rectangular alphabet");
        }
    }

    // determinism and worker independence of the harness
    let raw = |workers: usize| RawConfig { seed: Some(SEED), workers: Some(workers), trials: Some(6), ..RawConfig::default() };
    let run = |workers: usize| run_experiment(&ExperimentConfig::resolve("custom", &raw(workers)).unwrap()).unwrap().rows;
    let first = run(1);
    check(first == run(1), "determinism");
    check(first == run(3), "worker independence");

    Verdict::new(
        failures.is_empty(),
        if failures.is_empty() {
            "eigensolver residuals, orthonormality, dist and md axioms, Penrose identities, idempotence, alphabet closure, determinism".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(u32, &str, Check, Option<u64>); 11] = [
        (1, "rectangular estimator unbiasedness", criterion_1, Some(30)),
        (2, "triangular noise statistics", criterion_2, Some(30)),
        (3, "Davis-Kahan consequence", criterion_3, None),
        (4, "Vandermonde singular-value bracket", criterion_4, None),
        (5, "ESPRIT exactness", criterion_5, None),
        (6, "adversarial: rounding flat, dithered decreasing", criterion_6, Some(120)),
        (7, "eigenvalue dependence, rectangular", criterion_7, Some(180)),
        (8, "eigenvalue dependence, triangular", criterion_8, Some(180)),
        (9, "well-separated DOA rates", criterion_9, Some(180)),
        (10, "phase transition boundary", criterion_10, Some(600)),
        (11, "property suites", criterion_11, Some(120)),
    ];
    // `cargo test --test acceptance -- 7 9` runs only the listed criteria
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut passed = BTreeMap::new();
    for (id, name, check, limit) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        let verdict = within_time(verdict, elapsed, limit.map(Duration::from_secs));
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.1}s]",
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.detail,
            elapsed.as_secs_f64()
        );
        passed.insert(id, verdict.pass);
    }
    if (6..=10).all(|id| passed.contains_key(&id)) {
        let rates = (6..=10).all(|id| passed[&id]);
        println!(
            "criterion 12 {}: theorem rates, substituted by the slope criteria 6-10: {}",
            if rates { "PASS" } else { "FAIL" },
            if rates { "all pass" } else { "at least one of 6-10 fails" }
        );
        passed.insert(12, rates);
    }
    let failed: Vec<String> = passed.iter().filter(|(_, &ok)| !ok).map(|(id, _)| id.to_string()).collect();
    println!("acceptance: {} of {} criteria pass", passed.len() - failed.len(), passed.len());
    if !failed.is_empty() {
        println!("failing criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
