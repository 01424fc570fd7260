//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run a subset by passing criterion numbers:
//! `cargo test -p corereg-cli --test acceptance -- 4 7`.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use corereg::inference::{pearson_object, permutation_test, SignalMatrix};
use corereg::metric::{nearest_correlation, pava, QuantileObject};
use corereg::quadrature::MidpointGrid;
use corereg::regression::{fit_global, fit_local, global_moments, global_weights, local_moments, local_weights};
use corereg::simulation::{
    draw_response, generate_replicate, replicate_rng, run_monte_carlo, MonteCarloResult, SimConfig, Setting, Truth,
};
use corereg::{
    Estimator, Euclidean, EuclideanObject, Kernel, ObjectSpace, PanelBuilder, SparsePanel, Wasserstein,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Standard deviation of Beta(2, 2).
const SD_X: f64 = 0.223_606_797_749_979;

fn ise_grid() -> MidpointGrid {
    MidpointGrid::unit(25).unwrap()
}

fn mc(cfg: &SimConfig, reps: usize, est: Estimator) -> MonteCarloResult {
    run_monte_carlo(cfg, reps, est, Kernel::Gaussian, &ise_grid()).unwrap()
}

fn ise_values(r: &MonteCarloResult) -> Vec<f64> {
    r.ise.iter().map(|v| v.expect("replicate failed")).collect()
}

fn random_scalar_panel(rng: &mut ChaCha8Rng, n: usize, p: usize) -> SparsePanel<EuclideanObject> {
    let mut b = PanelBuilder::new(p);
    for i in 0..n {
        for _ in 0..rng.random_range(1..=5) {
            let t: f64 = rng.random();
            let x: Vec<f64> = (0..p).map(|_| rng.random()).collect();
            let y = (4.0 * t).cos() + x.iter().map(|v| v * v).sum::<f64>() + 0.5 * rng.random::<f64>();
            b.push(&format!("s{i}"), t, &x, EuclideanObject(y)).unwrap();
        }
    }
    b.build().unwrap()
}

/// Intercept of the kernel-weighted regression of Y on (1, X - x0, T - t0).
fn local_linear_oracle(p: &SparsePanel<EuclideanObject>, x0: f64, t0: f64, h1: f64, h2: f64) -> f64 {
    let mut a = DMatrix::<f64>::zeros(3, 3);
    let mut b = DVector::<f64>::zeros(3);
    for i in 0..p.n_subjects() {
        let r = p.subject_range(i);
        let ni = r.len() as f64;
        for j in r {
            let z = [1.0, p.covariate(j)[0] - x0, p.time(j) - t0];
            let w = Kernel::Gaussian.eval(z[1] / h1) * Kernel::Gaussian.eval(z[2] / h2) / (h1 * h2 * ni);
            for q in 0..3 {
                b[q] += w * z[q] * p.response(j).0;
                for s in 0..3 {
                    a[(q, s)] += w * z[q] * z[s];
                }
            }
        }
    }
    a.lu().solve(&b).unwrap()[0]
}

/// `a' (x - mu) + b0` with `a = Sigma20^{-1} r10` and
/// `b0 = (r00 mu02 - r01 mu01) / sigma0^2`, `mu` the kernel-weighted mean.
fn global_oracle(p: &SparsePanel<EuclideanObject>, x: &[f64], t0: f64, h: f64) -> f64 {
    let dim = x.len();
    let n = p.n_subjects() as f64;
    let kern = |j: usize, ni: f64| Kernel::Gaussian.eval((p.time(j) - t0) / h) / (h * ni * n);
    let mut mu = DVector::<f64>::zeros(dim);
    let mut m0 = [0.0; 3];
    for i in 0..p.n_subjects() {
        let r = p.subject_range(i);
        let ni = r.len() as f64;
        for j in r {
            let k = kern(j, ni);
            let dt = p.time(j) - t0;
            m0[0] += k;
            m0[1] += k * dt;
            m0[2] += k * dt * dt;
            mu += DVector::from_column_slice(p.covariate(j)) * k;
        }
    }
    mu /= m0[0];
    let (mut r00, mut r01) = (0.0, 0.0);
    let mut r10 = DVector::<f64>::zeros(dim);
    let mut s20 = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..p.n_subjects() {
        let r = p.subject_range(i);
        let ni = r.len() as f64;
        for j in r {
            let k = kern(j, ni);
            let dt = p.time(j) - t0;
            let y = p.response(j).0;
            let z = DVector::from_column_slice(p.covariate(j)) - &mu;
            r00 += k * y;
            r01 += k * dt * y;
            r10 += &z * (k * y);
            s20 += &z * z.transpose() * k;
        }
    }
    let a = s20.lu().solve(&r10).unwrap();
    let b0 = (r00 * m0[2] - r01 * m0[1]) / (m0[2] * m0[0] - m0[1] * m0[1]);
    a.dot(&(DVector::from_column_slice(x) - mu)) + b0
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_local, mut worst_global) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let p = random_scalar_panel(&mut rng, 30, 1);
        let (h1, h2, h) = (
            rng.random_range(0.2..0.5),
            rng.random_range(0.2..0.5),
            rng.random_range(0.15..0.4),
        );
        for a in 0..5 {
            for b in 0..5 {
                let (x0, t0) = (0.1 + 0.2 * a as f64, 0.1 + 0.2 * b as f64);
                let l = fit_local(&p, x0, t0, h1, h2, Kernel::Gaussian, &Euclidean).unwrap();
                worst_local = worst_local.max((l.object.0 - local_linear_oracle(&p, x0, t0, h1, h2)).abs());
                let g = fit_global(&p, &[x0], t0, h, Kernel::Gaussian, &Euclidean).unwrap();
                worst_global = worst_global.max((g.object.0 - global_oracle(&p, &[x0], t0, h)).abs());
            }
        }
    }
    outcome(
        worst_local <= 1e-8 && worst_global <= 1e-8,
        format!("max |local - oracle| = {worst_local:.2e}, max |global - oracle| = {worst_global:.2e} (tol 1e-8)"),
    )
}

fn first_coordinate(p: &SparsePanel<EuclideanObject>) -> SparsePanel<EuclideanObject> {
    let mut b = PanelBuilder::new(1);
    for i in 0..p.n_subjects() {
        for j in p.subject_range(i) {
            b.push(p.subject_id(i), p.time(j), &p.covariate(j)[..1], *p.response(j)).unwrap();
        }
    }
    b.build().unwrap()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_local, mut worst_global) = (0.0f64, 0.0f64);
    let mut resampled = 0;
    let mut done = 0;
    while done < 1000 {
        let n = rng.random_range(10..=40);
        let dim = rng.random_range(1..=3);
        let p = random_scalar_panel(&mut rng, n, dim);
        let t0 = rng.random_range(0.0..1.0);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let (h1, h2, h) = (
            rng.random_range(0.1..0.5),
            rng.random_range(0.1..0.5),
            rng.random_range(0.1..0.5),
        );
        // The local estimator takes a scalar covariate: use the first coordinate.
        let scalar = if dim == 1 { p.clone() } else { first_coordinate(&p) };
        let local = local_moments(&scalar, x[0], t0, h1, h2, Kernel::Gaussian)
            .map(|m| local_weights(&m, &scalar, Kernel::Gaussian));
        let global = global_moments(&p, t0, h, Kernel::Gaussian).and_then(|m| global_weights(&m, &p, &x, Kernel::Gaussian));
        match (local, global) {
            (Ok(l), Ok(g)) => {
                worst_local = worst_local.max((l.panel_average(&scalar) - 1.0).abs());
                worst_global = worst_global.max((g.panel_average(&p) - 1.0).abs());
                done += 1;
            }
            _ => resampled += 1,
        }
    }
    outcome(
        worst_local <= 1e-10 && worst_global <= 1e-10,
        format!(
            "max |avg - 1|: local {worst_local:.2e}, global {worst_global:.2e} (tol 1e-10); singular draws resampled: {resampled}"
        ),
    )
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn random_correlation(rng: &mut ChaCha8Rng, v: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(v, v + 1, |_, _| rng.random_range(-1.0f64..1.0));
    let c = &g * g.transpose();
    DMatrix::from_fn(v, v, |q, r| c[(q, r)] / (c[(q, q)] * c[(r, r)]).sqrt())
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut pava_ok = true;
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..200 {
        let len = rng.random_range(2..=40);
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fit = pava(&y);
        pava_ok &= pava(&fit) == fit && fit.windows(2).all(|w| w[0] <= w[1]);
        let best = sq_dist(&y, &fit);
        for c in 0..1000 {
            // Half near the solution, half arbitrary monotone vectors.
            let mut cand: Vec<f64> = if c % 2 == 0 {
                let scale = 10f64.powf(rng.random_range(-4.0..0.0));
                fit.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect()
            } else {
                (0..len).map(|_| rng.random_range(-2.0..2.0)).collect()
            };
            if c % 2 == 0 {
                cand = pava(&cand);
            } else {
                cand.sort_by(f64::total_cmp);
            }
            worst_gap = worst_gap.max(best - sq_dist(&y, &cand));
        }
    }
    let pava_pass = pava_ok && worst_gap <= 1e-12;

    let mut ncm_ok = true;
    let (mut worst_diag, mut min_eig, mut worst_margin) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let mut done = 0;
    while done < 20 {
        let v = rng.random_range(3..=8);
        let mut a = DMatrix::from_fn(v, v, |_, _| rng.random_range(-1.0..1.0));
        a = (&a + a.transpose()) * 0.5;
        for q in 0..v {
            a[(q, q)] = 1.0;
        }
        if a.clone().symmetric_eigen().eigenvalues.min() >= 0.0 {
            continue;
        }
        done += 1;
        let Ok(ncm) = nearest_correlation(&a, 1e-8, 1000) else {
            ncm_ok = false;
            continue;
        };
        let x = ncm.matrix.entries().clone();
        for q in 0..v {
            worst_diag = worst_diag.max((x[(q, q)] - 1.0).abs());
        }
        min_eig = min_eig.min(ncm.matrix.min_eigenvalue());
        let best = (&a - &x).norm();
        for _ in 0..1000 {
            let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
            let c = &x * (1.0 - lambda) + random_correlation(&mut rng, v) * lambda;
            worst_margin = worst_margin.max(best - (&a - c).norm());
        }
    }
    let ncm_pass = ncm_ok && worst_diag <= 1e-12 && min_eig >= -1e-8 && worst_margin <= 0.0;
    outcome(
        pava_pass && ncm_pass,
        format!(
            "PAVA idempotent/monotone: {pava_ok}, worst excess over candidates {worst_gap:.2e}; \
             NCM converged: {ncm_ok}, diag err {worst_diag:.1e}, min eig {min_eig:.2e}, \
             worst margin vs candidates {worst_margin:.2e}"
        ),
    )
}

/// Bandwidths minimizing the mean ISE over pilot replicates (separate seed),
/// which is how the simulation bandwidths are tuned.
#[derive(Debug, Clone, Copy)]
struct Tuned {
    global: Estimator,
    local: Estimator,
    time_only: Estimator,
}

fn tune(setting: Setting, time_grid: &[f64], seed: u64) -> Tuned {
    let cfg = SimConfig::new(setting, 200, 10, seed);
    let reps = 20;
    let best = |cands: Vec<Estimator>| {
        cands
            .into_iter()
            .map(|e| (e, mc(&cfg, reps, e).summary.mean))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    };
    let h1s: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|c| c * SD_X).collect();
    Tuned {
        global: best(time_grid.iter().map(|&h| Estimator::Global { h }).collect()),
        local: best(
            h1s.iter()
                .flat_map(|&h1| time_grid.iter().map(move |&h2| Estimator::Local { h1, h2 }))
                .collect(),
        ),
        time_only: best(time_grid.iter().map(|&h| Estimator::TimeOnly { h }).collect()),
    }
}

fn tuned_setting_one() -> Tuned {
    static T: OnceLock<Tuned> = OnceLock::new();
    *T.get_or_init(|| tune(Setting::I, &[0.015, 0.02, 0.025, 0.03, 0.04], 9_001))
}

fn tuned_setting_two() -> Tuned {
    static T: OnceLock<Tuned> = OnceLock::new();
    *T.get_or_init(|| tune(Setting::II, &[0.02, 0.03, 0.05, 0.08, 0.12, 0.2, 0.3], 9_002))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `P(Bin(n, 1/2) >= k)`.
fn binomial_upper(k: u64, n: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    1.0 - Binomial::new(0.5, n).unwrap().cdf(k - 1)
}

fn criterion_4() -> Outcome {
    let tuned = tuned_setting_one();
    let cfg = SimConfig::new(Setting::I, 200, 10, 4_004);
    let g = ise_values(&mc(&cfg, 100, tuned.global));
    let l = ise_values(&mc(&cfg, 100, tuned.local));
    let global_better = g.iter().zip(&l).filter(|(a, b)| a < b).count() as u64;
    let local_better = g.iter().zip(&l).filter(|(a, b)| b < a).count() as u64;
    let n = global_better + local_better;
    // H0: the global median ISE is at most the local one. Rejected when the
    // local estimator wins significantly often.
    let p_against = binomial_upper(local_better, n);
    let p_superior = binomial_upper(global_better, n);
    outcome(
        p_against >= 0.05,
        format!(
            "median ISE global {:.5} ({:?}) vs local {:.5} ({:?}); global lower in {global_better}/{n} pairs; \
             sign test p(local better) = {p_against:.3}, p(global better) = {p_superior:.3}",
            median(&g),
            tuned.global,
            median(&l),
            tuned.local
        ),
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_5() -> Outcome {
    let tuned = tuned_setting_one();
    let scale = |n: usize| (n as f64 / 200.0).powf(-0.2);
    let sizes = [100usize, 200, 400];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, base) in [("global", tuned.global), ("local", tuned.local)] {
        let medians: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                let s = scale(n);
                let est = match base {
                    Estimator::Global { h } => Estimator::Global { h: h * s },
                    Estimator::Local { h1, h2 } => Estimator::Local { h1: h1 * s, h2: h2 * s },
                    other => other,
                };
                median(&ise_values(&mc(&SimConfig::new(Setting::I, n, 10, 5_000 + n as u64), 50, est)))
            })
            .collect();
        let logs_n: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let logs_m: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
        let b = slope(&logs_n, &logs_m);
        let ok = medians[2] < medians[0] && (-1.2..=-0.4).contains(&b);
        pass &= ok;
        parts.push(format!(
            "{name}: medians {:.5}/{:.5}/{:.5}, slope {b:.3}",
            medians[0], medians[1], medians[2]
        ));
    }
    outcome(pass, format!("n = 100/200/400, h = c n^(-1/5); {}", parts.join("; ")))
}

fn criterion_6() -> Outcome {
    let mut cfg = SimConfig::new(Setting::II, 1, 1, 0);
    let truth = Truth::new(&cfg);
    let mut rng = replicate_rng(6_006, 0);
    let mut non_monotone = 0;
    for _ in 0..100_000 {
        let (x, t): (f64, f64) = (rng.random(), rng.random());
        let q = draw_response(&cfg, &truth, x, t, &mut rng).unwrap();
        if q.values().windows(2).any(|w| w[0] > w[1]) {
            non_monotone += 1;
        }
    }
    let tuned = tuned_setting_two();
    cfg = SimConfig::new(Setting::II, 200, 10, 6_007);
    let reps = 50;
    let mg = mc(&cfg, reps, tuned.global).summary.median;
    let ml = mc(&cfg, reps, tuned.local).summary.median;
    let mt = mc(&cfg, reps, tuned.time_only).summary.median;
    outcome(
        non_monotone == 0 && mg < mt && ml < mt,
        format!(
            "{non_monotone} non-monotone of 1e5 draws; median ISE global {mg:.5}, local {ml:.5}, \
             time-only baseline {mt:.5} ({:?})",
            tuned.time_only
        ),
    )
}

fn rejection_rate(shift: f64, outer: usize, seed: u64) -> f64 {
    let est = Estimator::Global { h: 0.1 };
    let grid = MidpointGrid::unit(8).unwrap();
    let rejected = (0..outer)
        .filter(|&r| {
            let mut a = SimConfig::new(Setting::I, 20, 4, seed);
            a.grid_size = 20;
            let mut b = a;
            b.location_shift = shift;
            let pa = generate_replicate(&a, 2 * r as u64).unwrap().panel;
            let pb = generate_replicate(&b, 2 * r as u64 + 1).unwrap().panel;
            let res = permutation_test(&pa, &pb, est, Kernel::Gaussian, &Wasserstein, &grid, 199, seed + r as u64)
                .unwrap();
            res.p_value <= 0.05
        })
        .count();
    rejected as f64 / outer as f64
}

fn criterion_7() -> Outcome {
    let null = rejection_rate(0.0, 200, 7_007);
    let power = rejection_rate(0.5, 200, 7_008);
    outcome(
        (0.02..=0.09).contains(&null) && power >= 0.8,
        format!("B = 199, 200 outer reps: null rejection rate {null:.3} (band [0.02, 0.09]), power at shift 0.5 {power:.3} (>= 0.8)"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_pearson = 0.0f64;
    for _ in 0..50 {
        let k = rng.random_range(10..=200);
        let v = rng.random_range(2..=12);
        let data = DMatrix::from_fn(k, v, |_, c| rng.random_range(-1.0..1.0) * (c + 1) as f64 + c as f64);
        let got = pearson_object(&SignalMatrix::new(data.clone()).unwrap()).unwrap();
        // Sample covariance first, then normalize.
        let means: Vec<f64> = (0..v).map(|c| data.column(c).mean()).collect();
        let cov = DMatrix::from_fn(v, v, |q, r| {
            (0..k).map(|p| (data[(p, q)] - means[q]) * (data[(p, r)] - means[r])).sum::<f64>() / (k - 1) as f64
        });
        let want = DMatrix::from_fn(v, v, |q, r| cov[(q, r)] / (cov[(q, q)] * cov[(r, r)]).sqrt());
        worst_pearson = worst_pearson.max((got.entries() - want).amax());
    }
    let mut worst_w = 0.0f64;
    for _ in 0..20 {
        let (m1, m2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (s1, s2) = (rng.random_range(0.5..1.3), rng.random_range(0.5..1.3));
        let q = |m: f64, s: f64| {
            let d = Normal::new(m, s).unwrap();
            QuantileObject::from_quantile_fn(1000, |u| statrs::distribution::ContinuousCDF::inverse_cdf(&d, u))
                .unwrap()
        };
        let got = Wasserstein.squared_distance(&q(m1, s1), &q(m2, s2)).unwrap();
        let want = (m1 - m2).powi(2) + (s1 - s2).powi(2);
        worst_w = worst_w.max((got - want).abs());
    }
    outcome(
        worst_pearson <= 1e-12 && worst_w <= 1e-3,
        format!("Pearson max abs error {worst_pearson:.2e} (tol 1e-12); Gaussian d_W^2 max abs error {worst_w:.2e} (tol 1e-3)"),
    )
}

fn corereg(dir: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_corereg"))
        .args(args)
        .current_dir(dir)
        .env("CORE_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn run_pipeline(dir: &Path, threads: usize) -> Result<Vec<(String, Vec<u8>)>, String> {
    let steps: &[&[&str]] = &[
        &["generate", "--n", "40", "--ni", "4", "--m", "20", "--seed", "11", "--out", "a"],
        &["generate", "--n", "30", "--ni", "3", "--m", "20", "--seed", "12", "--shift", "0.3", "--out", "b"],
        &["simulate", "--n", "60", "--ni", "5", "--m", "30", "--reps", "6", "--h", "0.08", "--quad-points", "8", "--seed", "13", "--out", "sim"],
        &["simulate", "--setting", "II", "--n", "60", "--ni", "5", "--m", "30", "--reps", "4", "--estimator", "local", "--h1", "0.3", "--h2", "0.1", "--quad-points", "8", "--seed", "14", "--out", "sim2"],
        &["fit-local", "--input", "a/panel.csv", "--space", "wasserstein", "--h1", "0.3", "--h2", "0.15", "--out", "fl"],
        &["fit-global", "--input", "a/panel.csv", "--space", "wasserstein", "--h", "0.15", "--out", "fg"],
        &["cv", "--input", "a/panel.csv", "--space", "wasserstein", "--estimator", "local", "--grid", "0.2,0.4", "--grid-h2", "0.1,0.2", "--out", "cv"],
        &["gof", "--input", "a/panel.csv", "--space", "wasserstein", "--h", "0.15", "--bins", "8", "--out", "gof"],
        &["rmpe", "--input", "a/panel.csv", "--space", "wasserstein", "--h", "0.15", "--split-seed", "5", "--out", "rmpe"],
        &["permtest", "--input-a", "a/panel.csv", "--input-b", "b/panel.csv", "--space", "wasserstein", "--h", "0.15", "--B", "49", "--quad-points", "5", "--seed", "15", "--out", "perm"],
    ];
    for s in steps {
        corereg(dir, threads, s)?;
    }
    let mut files = Vec::new();
    for sub in ["a", "b", "sim", "sim2", "fl", "fg", "cv", "gof", "rmpe", "perm"] {
        let mut names: Vec<_> = std::fs::read_dir(dir.join(sub))
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        for p in names {
            let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
            files.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), bytes));
        }
    }
    Ok(files)
}

fn criterion_9() -> Outcome {
    let runs: Result<Vec<_>, String> = [1, 1, 4, 4]
        .iter()
        .map(|&threads| {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            run_pipeline(dir.path(), threads)
        })
        .collect();
    match runs {
        Err(e) => outcome(false, format!("pipeline failed: {e}")),
        Ok(runs) => {
            let reference = &runs[0];
            let differing: Vec<String> = runs[1..]
                .iter()
                .flat_map(|r| {
                    if r.len() != reference.len() {
                        return vec!["file set differs".to_string()];
                    }
                    r.iter()
                        .zip(reference)
                        .filter(|(a, b)| a != b)
                        .map(|(a, _)| a.0.clone())
                        .collect()
                })
                .collect();
            outcome(
                differing.is_empty(),
                format!(
                    "{} output files from 10 seeded commands, 2 runs each at CORE_THREADS = 1 and 4; differing: {:?}",
                    reference.len(),
                    differing
                ),
            )
        }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "Euclidean oracle equivalence", budget: Duration::from_secs(10), run: criterion_1 },
        Criterion { id: 2, name: "weight-sum identities", budget: Duration::from_secs(5), run: criterion_2 },
        Criterion { id: 3, name: "projection correctness", budget: Duration::from_secs(30), run: criterion_3 },
        Criterion { id: 4, name: "simulation fidelity (Setting I)", budget: Duration::from_secs(600), run: criterion_4 },
        Criterion { id: 5, name: "convergence behavior", budget: Duration::from_secs(900), run: criterion_5 },
        Criterion { id: 6, name: "Setting II validity", budget: Duration::from_secs(600), run: criterion_6 },
        Criterion { id: 7, name: "permutation-test calibration", budget: Duration::from_secs(1800), run: criterion_7 },
        Criterion { id: 8, name: "Pearson-object and distance oracles", budget: Duration::from_secs(5), run: criterion_8 },
        Criterion { id: 9, name: "determinism", budget: Duration::from_secs(120), run: criterion_9 },
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let o = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let pass = o.pass && in_time;
        println!(
            "criterion {} [{}] {}: {}; {:.1}s (budget {}s{})",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            o.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", exceeded" }
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
