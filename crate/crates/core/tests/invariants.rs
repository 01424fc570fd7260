use corereg::inference::{pearson_object, SignalMatrix};
use corereg::metric::{CorrMatrixObject, Correlation, QuantileObject, Wasserstein};
use corereg::selection::cv_select;
use corereg::{Estimator, Euclidean, EuclideanObject, Kernel, ObjectSpace, PanelBuilder, SparsePanel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar_panel(seed: u64, n: usize) -> SparsePanel<EuclideanObject> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = PanelBuilder::new(1);
    for i in 0..n {
        for _ in 0..rng.random_range(1..=4) {
            let (t, x): (f64, f64) = (rng.random(), rng.random());
            b.push(&format!("s{i:02}"), t, &[x], EuclideanObject(x - t + 0.3 * rng.random::<f64>()))
                .unwrap();
        }
    }
    b.build().unwrap()
}

fn quantiles(rng: &mut ChaCha8Rng, m: usize) -> QuantileObject {
    let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
    v.sort_by(f64::total_cmp);
    QuantileObject::new(v).unwrap()
}

fn correlation(rng: &mut ChaCha8Rng, v: usize) -> CorrMatrixObject {
    let data = DMatrix::from_fn(v + 3, v, |_, _| rng.random_range(-1.0..1.0));
    pearson_object(&SignalMatrix::new(data).unwrap()).unwrap()
}

/// Weights summing to `n` with some negative entries, as regression weights can be.
fn signed_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w * n as f64 / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_average_to_one(
        seed in any::<u64>(),
        x in 0.1f64..0.9,
        t in 0.1f64..0.9,
        h1 in 0.15f64..0.6,
        h2 in 0.15f64..0.6,
    ) {
        let p = scalar_panel(seed, 25);
        for est in [Estimator::Local { h1, h2 }, Estimator::Global { h: h2 }, Estimator::TimeOnly { h: h2 }] {
            if let Ok(w) = est.weights(&p, Kernel::Gaussian, &[x], t) {
                prop_assert!((w.panel_average(&p) - 1.0).abs() < 1e-10, "{est:?}");
            }
        }
    }

    #[test]
    fn quantile_means_stay_monotone(seed in any::<u64>(), n in 2usize..12, m in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objs: Vec<_> = (0..n).map(|_| quantiles(&mut rng, m)).collect();
        let w = signed_weights(&mut rng, n);
        if let Ok(mean) = Wasserstein.frechet_mean(&objs, &w) {
            prop_assert!(Wasserstein.validate(&mean.object).is_ok());
        }
    }

    #[test]
    fn correlation_means_are_correlation_matrices(seed in any::<u64>(), n in 2usize..8, v in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objs: Vec<_> = (0..n).map(|_| correlation(&mut rng, v)).collect();
        let w = signed_weights(&mut rng, n);
        let mean = Correlation::default().frechet_mean(&objs, &w).unwrap().object;
        let e = mean.entries();
        for q in 0..v {
            prop_assert!((e[(q, q)] - 1.0).abs() <= 1e-12);
            for r in 0..v {
                prop_assert_eq!(e[(q, r)], e[(r, q)]);
                prop_assert!(e[(q, r)].abs() <= 1.0);
            }
        }
        prop_assert!(mean.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn distances_are_metrics(seed in any::<u64>(), v in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (correlation(&mut rng, v), correlation(&mut rng, v), correlation(&mut rng, v));
        let d = |x: &CorrMatrixObject, y: &CorrMatrixObject| Correlation::default().distance(x, y).unwrap();
        prop_assert!(d(&a, &b) >= 0.0);
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cv_scores_ignore_subject_order(seed in any::<u64>(), shift in 1usize..14) {
        let p = scalar_panel(seed, 14);
        let order: Vec<usize> = (0..14).map(|i| (i + shift) % 14).collect();
        let q = p.select_subjects(&order).unwrap();
        let cands = [Estimator::Global { h: 0.2 }, Estimator::Global { h: 0.4 }];
        let a = cv_select(&p, &cands, Kernel::Gaussian, &Euclidean).unwrap();
        let b = cv_select(&q, &cands, Kernel::Gaussian, &Euclidean).unwrap();
        prop_assert_eq!(a.selected, b.selected);
        for (x, y) in a.candidates.iter().zip(&b.candidates) {
            match (x.score, y.score) {
                (Some(s), Some(t)) => prop_assert!((s - t).abs() <= 1e-12 * s.abs().max(1.0)),
                (s, t) => prop_assert_eq!(s, t),
            }
        }
    }
}
