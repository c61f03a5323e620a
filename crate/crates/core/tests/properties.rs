use novas::backtest::{run_rolling_poos, score_performance, BacktestConfig, MethodDescriptor};
use novas::innovations::{sample_trimmed_normal, Seed};
use novas::predictor::median;
use novas::returns::{running_variance, sample_kurtosis, to_log_returns, PriceSeries, ReturnSeries};
use novas::transform::{forward_transform, inverse_step};
use novas::weights::{build_weights, NovasVariant, NovasWeights, Shape, CONTEMPORANEOUS_MAX};
use proptest::prelude::*;

fn series(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len).prop_filter("needs spread", |v| {
        v.iter().filter(|x| x.abs() > 0.05).count() > v.len() / 2
    })
}

fn weights() -> impl Strategy<Value = NovasWeights> {
    let ge = (0.05f64..0.95, 0.0f64..3.0, 1usize..20, any::<bool>()).prop_filter_map("inadmissible", |(alpha, c, p, a0)| {
        let variant = if a0 { NovasVariant::Ge } else { NovasVariant::GeNoA0 };
        build_weights(variant, alpha, Shape::Exponential { c }, p).ok()
    });
    let ga = (0.05f64..0.95, 0.01f64..0.2, 0.05f64..0.95, 1usize..20, any::<bool>()).prop_filter_map(
        "inadmissible",
        |(alpha, a1, b1, q, a0)| {
            let variant = if a0 { NovasVariant::Ga } else { NovasVariant::GaNoA0 };
            build_weights(variant, alpha, Shape::Geometric { a1, b1 }, q).ok()
        },
    );
    prop_oneof![ge, ga]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn admissible_weights_satisfy_constraints(w in weights()) {
        prop_assert!((w.constraint_sum() - 1.0).abs() < 1e-12);
        prop_assert!(w.contemporaneous() <= CONTEMPORANEOUS_MAX);
        prop_assert!(w.lags.iter().all(|a| *a > 0.0));
        prop_assert!(w.lags.windows(2).all(|p| p[1] <= p[0]));
        if let Some(b) = w.trim_bound() {
            prop_assert!(b >= 3.0);
        }
    }

    #[test]
    fn residuals_are_scale_invariant(y in series(40..80), w in weights(), scale in 1e-4f64..1e3) {
        prop_assume!(y.len() > w.order + 2);
        let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let (a, b) = (forward_transform(&y, &w), forward_transform(&scaled, &w));
        prop_assume!(a.is_ok());
        for (x, z) in a.unwrap().iter().zip(b.unwrap()) {
            prop_assert!((x - z).abs() <= 1e-10 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn residuals_respect_trim_bound(y in series(40..80), w in weights()) {
        prop_assume!(y.len() > w.order + 2);
        if let (Ok(res), Some(bound)) = (forward_transform(&y, &w), w.trim_bound()) {
            prop_assert!(res.iter().all(|r| r.abs() <= bound));
        }
    }

    #[test]
    fn inverse_undoes_forward(y in series(40..80), w in weights()) {
        prop_assume!(y.len() > w.order + 2);
        let Ok(res) = forward_transform(&y, &w) else { return Ok(()) };
        for (j, &wt) in res.iter().enumerate() {
            let idx = j + w.order;
            let lagged: Vec<f64> = (1..=w.order).map(|l| y[idx - l] * y[idx - l]).collect();
            let s2 = if idx == 0 { 0.0 } else { running_variance(&y, idx + 1).unwrap() };
            let back = inverse_step(wt, &lagged, s2, &w).unwrap();
            prop_assert!((back - y[idx]).abs() <= 1e-9 * y[idx].abs().max(1e-12));
        }
    }

    #[test]
    fn kurtosis_is_affine_invariant(y in series(10..60), scale in 1e-3f64..1e3, shift in -10.0f64..10.0) {
        let k = sample_kurtosis(&y).unwrap();
        let moved: Vec<f64> = y.iter().map(|v| v * scale + shift * scale).collect();
        let k2 = sample_kurtosis(&moved).unwrap();
        prop_assert!((k - k2).abs() <= 1e-8 * k);
        prop_assert!(k >= 1.0 - 1e-12);
    }

    #[test]
    fn running_variance_ignores_translation_and_order(y in series(5..40), shift in -100.0f64..100.0, rot in 0usize..40) {
        let upto = y.len() + 1;
        let v = running_variance(&y, upto).unwrap();
        let moved: Vec<f64> = y.iter().map(|x| x + shift).collect();
        prop_assert!((running_variance(&moved, upto).unwrap() - v).abs() <= 1e-9 * (1.0 + v));
        let mut rotated = y.clone();
        rotated.rotate_left(rot % y.len());
        prop_assert!((running_variance(&rotated, upto).unwrap() - v).abs() <= 1e-12 * (1.0 + v));
    }

    #[test]
    fn log_returns_rebuild_prices(r in prop::collection::vec(-0.2f64..0.2, 1..100), p0 in 0.01f64..1e4) {
        let mut prices = vec![p0];
        for x in &r {
            prices.push(prices.last().unwrap() * x.exp());
        }
        let back = to_log_returns(&PriceSeries::from_prices(prices).unwrap()).unwrap();
        prop_assert_eq!(back.len(), r.len());
        for (a, b) in back.values().iter().zip(&r) {
            prop_assert!((a - 100.0 * b).abs() < 1e-9);
        }
    }

    #[test]
    fn trimmed_draws_stay_inside(bound in 3.0f64..6.0, seed in any::<u64>()) {
        let draws = sample_trimmed_normal(Some(bound), 2000, Seed(seed)).unwrap();
        prop_assert!(draws.iter().all(|w| w.abs() < bound));
    }

    #[test]
    fn median_is_bracketed(mut v in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = median(&mut v);
        prop_assert!(m >= lo && m <= hi);
    }

    #[test]
    fn squared_score_is_homogeneous(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..30), c in 0.01f64..100.0) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = score_performance(&p, &t).unwrap();
        let cp: Vec<f64> = p.iter().map(|v| v * c).collect();
        let ct: Vec<f64> = t.iter().map(|v| v * c).collect();
        let scaled = score_performance(&cp, &ct).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-9 * (1.0 + scaled));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn prediction_counts_follow_window_arithmetic(extra in 1usize..20, h in 1usize..6, seed in 0u64..1000) {
        let window = 60;
        let len = window + h + extra;
        let y = novas::simgen::generate(&novas::simgen::ModelSpec::new(novas::simgen::Model::M3, len, Seed(seed))).unwrap();
        let mut cfg = BacktestConfig::new(window, Seed(seed));
        cfg.horizons = vec![h];
        cfg.paths = 100;
        cfg.methods = vec![MethodDescriptor::GarchDirect];
        let report = run_rolling_poos(&y, &cfg).unwrap();
        let expected = len - window - h + 1;
        prop_assert_eq!(report.horizons[0].truths.len(), expected);
        let failed: usize = report.failures.iter().map(|f| f.windows).sum();
        if report.dropped.is_empty() {
            prop_assert_eq!(report.scores[0].n_predictions + failed, expected);
            prop_assert_eq!(report.scores[0].ratio, Some(1.0));
        } else {
            prop_assert_eq!(failed, expected);
        }
    }
}

#[test]
fn return_series_json_is_a_plain_array() {
    let y = ReturnSeries::new(vec![0.5, -0.25]);
    assert_eq!(serde_json::to_string(&y).unwrap(), "[0.5,-0.25]");
}
