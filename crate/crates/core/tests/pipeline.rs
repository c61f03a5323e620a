use std::io::Write;

use novas::backtest::{relative_report, run_rolling_poos, standard_methods, BacktestConfig, BacktestReport, Family};
use novas::calibrate::{calibrate, CalibratedTransform, CalibrationGrid};
use novas::innovations::{InnovationKind, InnovationSource, Seed};
use novas::predictor::{predict, ForecastRequest, Risk, Statistic};
use novas::returns::{load_price_csv, to_log_returns, ReturnSeries};
use novas::simgen::{generate, Model, ModelSpec};
use novas::weights::NovasVariant;

fn model3(n: usize, seed: u64) -> ReturnSeries {
    generate(&ModelSpec::new(Model::M3, n, Seed(seed))).unwrap()
}

#[test]
fn prices_to_forecast() {
    let y = model3(300, 1);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "date,close").unwrap();
    let mut price = 100.0;
    writeln!(file, "2020-01-01,{price}").unwrap();
    for (i, r) in y.values().iter().enumerate() {
        price *= (r / 100.0).exp();
        writeln!(file, "2020-{:02}-{:02},{price:.12}", 1 + (i + 1) / 28, 1 + (i + 1) % 28).unwrap();
    }
    let prices = load_price_csv(file.path(), "close").unwrap();
    let returns = to_log_returns(&prices).unwrap();
    assert_eq!(returns.len(), 300);
    for (a, b) in returns.values().iter().zip(y.values()) {
        assert!((a - b).abs() < 1e-9);
    }

    let grid = CalibrationGrid::with_ga_step(0.05);
    for variant in NovasVariant::ALL {
        let ct = calibrate(variant, 0.4, &returns, &grid).unwrap();
        for kind in InnovationKind::ALL {
            let source = InnovationSource::for_transform(kind, &ct).unwrap();
            let req = ForecastRequest::new(5, 500, Risk::L2, Statistic::AggregatedSquared, source, Seed(3)).unwrap();
            let r = predict(&ct, &req).unwrap();
            assert!(r.point > 0.0 && r.point.is_finite());
            assert_eq!(r.point, r.ensemble_mean);
            // same order of magnitude as the unconditional variance 1e-5/0.17
            assert!(r.point > 1e-6 && r.point < 1e-2, "{variant} {kind}: {}", r.point);
        }
    }
}

#[test]
fn calibrated_transform_survives_json() {
    let ct = calibrate(NovasVariant::Ga, 0.5, &model3(200, 2), &CalibrationGrid::with_ga_step(0.05)).unwrap();
    let json = serde_json::to_string(&ct).unwrap();
    let back: CalibratedTransform = serde_json::from_str(&json).unwrap();
    assert_eq!(back, ct);
}

#[test]
fn forecasts_do_not_depend_on_thread_count() {
    let ct = calibrate(NovasVariant::GeNoA0, 0.5, &model3(250, 3), &CalibrationGrid::default()).unwrap();
    let source = InnovationSource::for_transform(InnovationKind::TrimmedNormal, &ct).unwrap();
    let req = ForecastRequest::new(10, 1000, Risk::L1, Statistic::AggregatedSquared, source, Seed(11)).unwrap();
    let on = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| predict(&ct, &req).unwrap())
    };
    assert_eq!(on(1), on(3));
}

#[test]
fn backtest_report_round_trips_and_tabulates() {
    let y = model3(280, 4);
    let mut cfg = BacktestConfig::new(250, Seed(4));
    cfg.horizons = vec![1, 5];
    cfg.paths = 200;
    cfg.grid = CalibrationGrid::with_ga_step(0.05);
    cfg.methods = standard_methods(&NovasVariant::ALL, &[0.3], &[Risk::L2], &[InnovationKind::Empirical]);
    let report = run_rolling_poos(&y, &cfg).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: BacktestReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);

    let table = relative_report(&report, "M3").unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.rows[0].label, "M3-1step");
    assert_eq!(table.rows[1].label, "M3-5steps");
    let direct = Family::ALL.iter().position(|f| *f == Family::GarchDirect).unwrap();
    assert!(table.rows.iter().all(|r| r.ratios[direct] == Some(1.0)));

    // every method is scored on identical truths
    let hr = report.horizon(5).unwrap();
    assert_eq!(hr.truths.len(), 26);
    let counts: Vec<usize> = report.scores.iter().filter(|s| s.horizon == 5).map(|s| s.n_predictions).collect();
    assert!(counts.iter().all(|&c| c == counts[0]));
}

#[test]
fn literal_metric_is_signed() {
    let y = model3(270, 5);
    let mut cfg = BacktestConfig::new(250, Seed(5));
    cfg.horizons = vec![1];
    cfg.paths = 100;
    cfg.methods = standard_methods(&[NovasVariant::GeNoA0], &[0.5], &[Risk::L2], &[InnovationKind::Empirical]);
    let squared = run_rolling_poos(&y, &cfg).unwrap();
    cfg.metric = novas::backtest::Metric::Literal;
    let literal = run_rolling_poos(&y, &cfg).unwrap();
    let direct = novas::backtest::MethodDescriptor::GarchDirect;
    let preds = literal.scored_predictions(&direct, 1).unwrap();
    let truths = &literal.horizon(1).unwrap().truths;
    let expected: f64 = preds.iter().zip(truths).map(|(p, t)| p - t).sum();
    assert!((literal.score(&direct, 1).unwrap().score - expected).abs() < 1e-15);
    assert!(squared.score(&direct, 1).unwrap().score >= 0.0);
}
