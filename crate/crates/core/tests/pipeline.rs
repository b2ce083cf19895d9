mod common;

use common::{binomial_lower_critical, binomial_upper_critical, fast_generator, fast_run, small_data, small_spec};
use featgen::classifier::train_classifier;
use featgen::data::make_synthetic;
use featgen::generators::ModelKind;
use featgen::pipeline::{
    baseline_nearest_attribute, classifier_accuracy, compare_generators, flat_hit_at_k, pseudo_split, run, run_gzsc,
    run_zsc, zsc_cross_validate, zsc_cross_validate_folds, CvOptions, EvalMode, NearestAttribute, RunConfig, Scenario,
};
use featgen::{ClassifierConfig, Error, Matrix, Rng, SyntheticSpec};

#[test]
fn zsc_reports_u2u_only_and_is_deterministic() {
    let data = small_data(1);
    let cfg = fast_run(ModelKind::Gmmn, 30);
    let a = run(&data, &cfg, EvalMode::Zsc, &Rng::new(4)).unwrap();
    let b = run(&data, &cfg, EvalMode::Zsc, &Rng::new(4)).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(
        serde_json::to_string(&a.report).unwrap(),
        serde_json::to_string(&b.report).unwrap()
    );
    assert_eq!(a.report.scenario_accuracy.keys().collect::<Vec<_>>(), vec!["u2u"]);
    assert_eq!(a.report.seed, 4);
    assert_eq!(a.report.config_digest.len(), 64);
    assert_eq!(a.classifier.class_ids(), data.unseen_classes());
}

#[test]
fn per_class_zero_rejected() {
    let data = small_data(2);
    let g = fast_generator(ModelKind::Gmmn, 1);
    let err = run_zsc(&data, &g, &ClassifierConfig::default(), 0, &Rng::new(1)).unwrap_err();
    assert!(matches!(err, Error::Param(_)), "{err}");
}

#[test]
fn gzsc_has_four_scenarios_and_masking_monotonicity() {
    for seed in 0..3 {
        let data = small_data(seed);
        let cfg = fast_run(ModelKind::Gmmn, 20);
        let out = run(&data, &cfg, EvalMode::Gzsc, &Rng::new(seed)).unwrap();
        let r = &out.report;
        assert_eq!(r.scenario_accuracy.len(), 4);
        for s in Scenario::ALL {
            let v = r.accuracy(s).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!((0.0..=1.0).contains(&r.per_class(s).unwrap()));
        }
        assert!(r.accuracy(Scenario::U2a).unwrap() <= r.accuracy(Scenario::U2u).unwrap());
        assert!(r.accuracy(Scenario::S2a).unwrap() <= r.accuracy(Scenario::S2s).unwrap());
        assert_eq!(r.flat_hit[&1], 100.0 * r.accuracy(Scenario::U2a).unwrap());
        assert_eq!(out.classifier.num_classes(), data.num_classes());
    }
}

#[test]
fn gzsc_can_generate_for_seen_classes_too() {
    let data = small_data(3);
    let mut cfg = fast_run(ModelKind::Gmmn, 5);
    cfg.eval.generate_for_seen = true;
    let out = run(&data, &cfg, EvalMode::Gzsc, &Rng::new(1)).unwrap();
    let plain = run(&data, &fast_run(ModelKind::Gmmn, 5), EvalMode::Gzsc, &Rng::new(1)).unwrap();
    assert_ne!(out.report.config_digest, plain.report.config_digest);
}

#[test]
fn run_gzsc_wrapper_matches_run() {
    let data = small_data(4);
    let cfg = fast_run(ModelKind::Acgan, 3);
    let r = run_gzsc(&data, &cfg.generator, &cfg.classifier, cfg.per_class, &Rng::new(2)).unwrap();
    assert_eq!(r, run(&data, &cfg, EvalMode::Gzsc, &Rng::new(2)).unwrap().report);
}

#[test]
fn missing_test_pools_rejected() {
    let data = small_data(5);
    let seen_only = data
        .with_split(
            data.seen_classes().to_vec(),
            data.unseen_classes().to_vec(),
            data.train_indices().to_vec(),
            data.test_rows_in(data.unseen_classes()),
        )
        .unwrap();
    let cfg = fast_run(ModelKind::Gmmn, 1);
    assert!(matches!(
        run(&seen_only, &cfg, EvalMode::Gzsc, &Rng::new(1)),
        Err(Error::Data(_))
    ));
    assert!(run(&seen_only, &cfg, EvalMode::Zsc, &Rng::new(1)).is_ok());
}

#[test]
fn flat_hit_properties() {
    let data = small_data(6);
    let out = run(&data, &fast_run(ModelKind::Gmmn, 10), EvalMode::Zsc, &Rng::new(1)).unwrap();
    let (x, y) = data.rows(&data.test_rows_in(data.unseen_classes()));
    let ks: Vec<usize> = (1..=out.classifier.num_classes()).collect();
    let fh = flat_hit_at_k(&out.classifier, &x, &y, &ks).unwrap();
    let values: Vec<f64> = fh.values().copied().collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(values[values.len() - 1], 100.0);
    let acc = classifier_accuracy(&out.classifier, &x, &y).unwrap();
    assert_eq!(fh[&1], 100.0 * acc.per_image);
    assert_eq!(
        out.report.flat_hit[&1],
        100.0 * out.report.accuracy(Scenario::U2u).unwrap()
    );

    assert!(matches!(
        flat_hit_at_k(&out.classifier, &Matrix::zeros(0, x.cols()), &[], &[1]),
        Err(Error::Data(_))
    ));
    assert!(matches!(
        flat_hit_at_k(&out.classifier, &x, &y, &[0]),
        Err(Error::Param(_))
    ));
}

#[test]
fn untrained_generator_is_at_chance_on_symmetric_data() {
    // A tiny signal scale makes every class draw features from the same
    // distribution, so no classifier can beat chance.
    let spec = SyntheticSpec {
        signal_scale: 1e-9,
        examples_per_class_test: 100,
        ..small_spec(20)
    };
    let (data, _) = make_synthetic(&spec).unwrap();
    let n = 100 * data.unseen_classes().len();
    let chance = 1.0 / data.unseen_classes().len() as f64;
    let cfg = fast_run(ModelKind::Gmmn, 0);
    let acc = run(&data, &cfg, EvalMode::Zsc, &Rng::new(3))
        .unwrap()
        .report
        .accuracy(Scenario::U2u)
        .unwrap();
    let hits = (acc * n as f64).round() as usize;
    let lo = binomial_lower_critical(n, chance, 0.005).map_or(0, |k| k + 1);
    let hi = binomial_upper_critical(n, chance, 0.005);
    assert!(hits >= lo && hits < hi, "{hits} outside [{lo}, {hi})");
}

#[test]
fn cross_validation_selects_and_never_trains_on_pseudo_unseen() {
    let data = make_synthetic(&SyntheticSpec {
        num_classes: 12,
        seen_count: 10,
        ..small_spec(7)
    })
    .unwrap()
    .0;
    let sane = fast_run(ModelKind::Gmmn, 60);
    let untrained = fast_run(ModelKind::Gmmn, 0);
    let cv = zsc_cross_validate(&data, &[untrained.clone(), sane.clone()], 0.2, &Rng::new(2)).unwrap();
    assert_eq!(cv.selected, 1);
    assert_eq!(cv.selected_config, sane);
    let best = cv.candidates.iter().map(|c| c.accuracy).fold(f64::MIN, f64::max);
    assert_eq!(cv.selected_accuracy, best);
    for fold in &cv.folds {
        assert_eq!(fold.pseudo_unseen.len(), 2);
        assert_eq!(fold.pseudo_seen.len(), 8);
        assert!(fold.pseudo_unseen.iter().all(|c| data.seen_classes().contains(c)));
        assert!(fold.trained_on_classes.iter().all(|c| fold.pseudo_seen.contains(c)));
        assert!(fold.trained_on_classes.iter().all(|c| !fold.pseudo_unseen.contains(c)));
    }

    let single = zsc_cross_validate(&data, std::slice::from_ref(&untrained), 0.2, &Rng::new(2)).unwrap();
    assert_eq!(single.selected, 0);

    let folds = zsc_cross_validate_folds(
        &data,
        &[untrained],
        &CvOptions {
            holdout_fraction: 0.2,
            folds: 3,
        },
        &Rng::new(2),
    )
    .unwrap();
    assert_eq!(folds.folds.len(), 3);
    assert_eq!(folds.candidates[0].fold_accuracies.len(), 3);
}

#[test]
fn pseudo_split_hides_pseudo_unseen_train_images() {
    let data = small_data(8);
    let split = pseudo_split(&data, 0.2, &Rng::new(1)).unwrap();
    for &i in split.train_indices() {
        assert!(split.seen_classes().contains(&split.labels()[i]));
    }
    assert!(split.unseen_classes().iter().all(|c| data.seen_classes().contains(c)));
    assert!(!split.test_rows_in(split.unseen_classes()).is_empty());
}

#[test]
fn cross_validation_needs_enough_seen_classes() {
    let data = make_synthetic(&SyntheticSpec {
        num_classes: 4,
        seen_count: 2,
        ..small_spec(9)
    })
    .unwrap()
    .0;
    let err = zsc_cross_validate(&data, &[fast_run(ModelKind::Gmmn, 1)], 0.2, &Rng::new(1)).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
}

#[test]
fn comparison_table_shape_and_averages() {
    let a = small_data(10);
    let b = small_data(11);
    let cfgs: Vec<RunConfig> = ModelKind::ALL.iter().map(|&k| fast_run(k, 2)).collect();
    let sets = vec![("a".to_string(), a), ("b".to_string(), b)];
    let table = compare_generators(&sets, &cfgs, &Rng::new(1)).unwrap();
    assert_eq!(table.rows.len(), 4);
    let kinds: Vec<ModelKind> = table.rows.iter().map(|r| r.model_kind).collect();
    assert_eq!(kinds, ModelKind::ALL.to_vec());
    let mut seeds: Vec<u64> = table.rows.iter().map(|r| r.seed).collect();
    seeds.dedup();
    assert_eq!(seeds.len(), 4);
    for row in &table.rows {
        assert_eq!(row.accuracies.len(), 2);
        let mean = row.accuracies.iter().sum::<f64>() / 2.0;
        assert!((row.average - mean).abs() < 1e-9);
    }
    let text = table.render();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().next().unwrap().contains("avg"));

    assert!(matches!(
        compare_generators(&sets, &cfgs[..3], &Rng::new(1)),
        Err(Error::Config(_))
    ));
}

#[test]
fn baseline_exact_match_and_determinism() {
    let head = NearestAttribute {
        weights: Matrix::identity(2),
        feature_mean: vec![0.0, 0.0],
        attr_mean: vec![0.0, 0.0],
    };
    let attrs = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]).unwrap();
    let scores = head.scores(&Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), &attrs).unwrap();
    assert_eq!(scores.row(0)[1], 0.0);
    assert!(scores.row(0)[0] < 0.0 && scores.row(0)[2] < 0.0);

    let data = small_data(12);
    let unseen = data.unseen_classes().to_vec();
    let a = baseline_nearest_attribute(&data, &unseen).unwrap();
    let b = baseline_nearest_attribute(&data, &unseen).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.scenario_accuracy.len(), 1);
    let all: Vec<usize> = (0..data.num_classes()).collect();
    let full = baseline_nearest_attribute(&data, &all).unwrap();
    assert_eq!(full.scenario_accuracy.len(), 4);
    assert!(full.accuracy(Scenario::U2a).unwrap() <= full.accuracy(Scenario::U2u).unwrap());
}

#[test]
fn baseline_beats_chance_on_default_benchmark() {
    let (data, _) = make_synthetic(&SyntheticSpec::default()).unwrap();
    let r = baseline_nearest_attribute(&data, data.unseen_classes()).unwrap();
    let n = data.test_rows_in(data.unseen_classes()).len();
    let hits = (r.accuracy(Scenario::U2u).unwrap() * n as f64).round() as usize;
    assert!(hits >= binomial_upper_critical(n, 0.2, 0.05));
}

#[test]
fn oracle_separates_default_benchmark() {
    let (data, oracle) = make_synthetic(&SyntheticSpec::default()).unwrap();
    let clf = train_classifier(
        &oracle.unseen_train_features,
        &oracle.unseen_train_labels,
        data.unseen_classes(),
        &ClassifierConfig::default(),
        &Rng::new(0),
    )
    .unwrap();
    let (x, y) = data.rows(&data.test_rows_in(data.unseen_classes()));
    assert!(classifier_accuracy(&clf, &x, &y).unwrap().per_image >= 0.95);
}

#[test]
fn report_json_field_names() {
    let data = small_data(13);
    let r = run(&data, &fast_run(ModelKind::Gmmn, 1), EvalMode::Gzsc, &Rng::new(1))
        .unwrap()
        .report;
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(
        keys,
        vec![
            "config_digest",
            "flat_hit",
            "per_class_accuracy",
            "scenario_accuracy",
            "seed"
        ]
    );
    assert!(v["flat_hit"].get("1").is_some());
    let back: featgen::EvalReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);
}
