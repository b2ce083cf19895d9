mod common;

use common::{fast_generator, small_data};
use featgen::generators::objectives::{acgan_discriminator_objective, code_discriminator_objective};
use featgen::generators::{
    class_mmd2, generate, generate_for_classes, load_model, save_model, train_acgan, train_generator, train_gmmn,
    ModelKind,
};
use featgen::neuralnet::{init_mlp, Mode};
use featgen::numerics::streams;
use featgen::{Dataset, Error, Matrix, Rng};

fn all_kinds() -> [ModelKind; 4] {
    ModelKind::ALL
}

#[test]
fn epochs_zero_returns_initialization() {
    let data = small_data(1);
    for kind in all_kinds() {
        let cfg = fast_generator(kind, 0);
        let rng = Rng::new(3);
        let (model, report) = train_generator(&data, &cfg, &rng).unwrap();
        let init = init_mlp(&model.generator.specs(), cfg.init, &mut rng.derive(streams::INIT)).unwrap();
        assert_eq!(model.generator, init, "{kind}");
        assert!(report.curves.values().all(|c| c.is_empty()));
    }
}

#[test]
fn same_seed_gives_identical_models() {
    let data = small_data(2);
    for kind in all_kinds() {
        let cfg = fast_generator(kind, 2);
        let (a, ra) = train_generator(&data, &cfg, &Rng::new(9)).unwrap();
        let (b, rb) = train_generator(&data, &cfg, &Rng::new(9)).unwrap();
        assert_eq!(a, b, "{kind}");
        assert_eq!(ra.curves, rb.curves);
        let (c, _) = train_generator(&data, &cfg, &Rng::new(10)).unwrap();
        assert_ne!(a.generator, c.generator);
    }
}

#[test]
fn curves_have_one_entry_per_epoch_and_are_finite() {
    let data = small_data(3);
    for kind in all_kinds() {
        let (_, report) = train_generator(&data, &fast_generator(kind, 3), &Rng::new(1)).unwrap();
        assert!(!report.curves.is_empty());
        for (term, curve) in &report.curves {
            assert_eq!(curve.len(), 3, "{kind} {term}");
            assert!(curve.iter().all(|v| v.is_finite()));
        }
        assert_eq!(report.trained_on_classes, {
            let mut s = data.seen_classes().to_vec();
            s.sort_unstable();
            s
        });
    }
}

#[test]
fn generator_input_width_is_attr_plus_noise() {
    let data = small_data(4);
    for kind in all_kinds() {
        let cfg = fast_generator(kind, 0);
        let (model, _) = train_generator(&data, &cfg, &Rng::new(1)).unwrap();
        assert_eq!(model.generator.input_dim(), data.attr_dim() + cfg.noise.dim);
        assert_eq!(model.generator.output_dim(), data.feature_dim());
    }
}

#[test]
fn gmmn_reduces_class_mmd() {
    let data = small_data(5);
    let cfg = fast_generator(ModelKind::Gmmn, 150);
    let rng = Rng::new(2);
    let (init, _) = train_gmmn(&data, &fast_generator(ModelKind::Gmmn, 0), &rng).unwrap();
    let (trained, _) = train_gmmn(&data, &cfg, &rng).unwrap();
    let mut improved = 0;
    let mut held_before = 0.0;
    let mut held_after = 0.0;
    for &c in data.seen_classes() {
        let rows = data.train_rows_of(c);
        let before = class_mmd2(&init, &data, c, &rows, &mut Rng::new(7)).unwrap();
        let after = class_mmd2(&trained, &data, c, &rows, &mut Rng::new(7)).unwrap();
        if after < before {
            improved += 1;
        }
        let held = data.test_rows_in(&[c]);
        held_before += class_mmd2(&init, &data, c, &held, &mut Rng::new(8)).unwrap();
        held_after += class_mmd2(&trained, &data, c, &held, &mut Rng::new(8)).unwrap();
    }
    assert!(improved as f64 >= 0.9 * data.seen_classes().len() as f64);
    assert!(held_after <= 0.5 * held_before, "{held_before} -> {held_after}");
}

#[test]
fn gmmn_rejects_class_with_one_image() {
    let data = small_data(6);
    let c = data.seen_classes()[0];
    let mut train: Vec<usize> = data
        .train_indices()
        .iter()
        .copied()
        .filter(|&i| data.labels()[i] != c)
        .collect();
    train.push(data.train_rows_of(c)[0]);
    let thin = data
        .with_split(
            data.seen_classes().to_vec(),
            data.unseen_classes().to_vec(),
            train,
            data.test_indices().to_vec(),
        )
        .unwrap();
    match train_gmmn(&thin, &fast_generator(ModelKind::Gmmn, 1), &Rng::new(1)) {
        Err(Error::Data(msg)) => assert!(msg.contains(&format!("class {c}")), "{msg}"),
        other => panic!("expected data error, got {other:?}"),
    }
}

#[test]
fn acgan_needs_two_seen_classes() {
    let data = small_data(7);
    let keep = data.seen_classes()[0];
    let train = data.train_rows_of(keep);
    let mut unseen: Vec<usize> = (0..data.num_classes()).filter(|&c| c != keep).collect();
    unseen.sort_unstable();
    let single = data.restrict(&train, &[], vec![keep], unseen).unwrap();
    assert!(matches!(
        train_acgan(&single, &fast_generator(ModelKind::Acgan, 1), &Rng::new(1)),
        Err(Error::Data(_))
    ));
}

#[test]
fn wrong_kind_rejected() {
    let data = small_data(8);
    assert!(matches!(
        train_gmmn(&data, &fast_generator(ModelKind::Acgan, 1), &Rng::new(1)),
        Err(Error::Config(_))
    ));
}

#[test]
fn discriminators_start_near_ln2() {
    let data = small_data(9);
    let ln2 = std::f64::consts::LN_2;
    let (acgan, _) = train_generator(&data, &fast_generator(ModelKind::Acgan, 0), &Rng::new(1)).unwrap();
    let rows: Vec<usize> = data.train_indices()[..32].to_vec();
    let (real, labels) = data.rows(&rows);
    let pos: Vec<usize> = labels
        .iter()
        .map(|l| acgan.seen_classes.iter().position(|c| c == l).unwrap())
        .collect();
    let mut rng = Rng::new(2);
    let z = acgan.noise.sample(&mut rng, rows.len()).unwrap();
    let input = data.attributes_of(&labels).hconcat(&z).unwrap();
    let disc = acgan.discriminator.as_ref().unwrap();
    let (terms, _) = acgan_discriminator_objective(
        &acgan.generator,
        disc,
        &real,
        &pos,
        &input,
        &pos,
        1.0,
        Mode::Eval,
        &mut rng,
    )
    .unwrap();
    assert!((terms[0].1 - ln2).abs() < 0.2, "{terms:?}");

    let (aae, _) = train_generator(&data, &fast_generator(ModelKind::AdversarialAe, 0), &Rng::new(1)).unwrap();
    let prior = aae.noise.sample(&mut rng, rows.len()).unwrap();
    let (loss, _) = code_discriminator_objective(
        aae.encoder.as_ref().unwrap(),
        aae.discriminator.as_ref().unwrap(),
        &real,
        &prior,
        Mode::Eval,
        &mut rng,
    )
    .unwrap();
    assert!((loss - ln2).abs() < 0.2, "{loss}");
}

#[test]
fn denoising_ae_overfits_tiny_dataset() {
    let full = small_data(10);
    let seen = full.seen_classes()[..2].to_vec();
    let train: Vec<usize> = seen.iter().flat_map(|&c| full.train_rows_of(c)[..4].to_vec()).collect();
    let unseen: Vec<usize> = (0..full.num_classes()).filter(|c| !seen.contains(c)).collect();
    let data = full.restrict(&train, &[], seen, unseen).unwrap();
    let cfg = featgen::GeneratorConfig {
        input_noise_stddev: 0.0,
        input_dropout: 0.0,
        hidden_dropout: 0.0,
        dropout_on_generator_input: false,
        learning_rate: 3e-3,
        ..fast_generator(ModelKind::DenoisingAe, 1500)
    };
    let (_, report) = train_generator(&data, &cfg, &Rng::new(1)).unwrap();
    let curve = &report.curves["reconstruction"];
    assert!(
        curve.last().unwrap() < &(0.02 * curve[0]),
        "{} -> {}",
        curve[0],
        curve.last().unwrap()
    );
}

#[test]
fn generate_shapes_labels_and_determinism() {
    let data = small_data(11);
    let (model, _) = train_generator(&data, &fast_generator(ModelKind::DenoisingAe, 1), &Rng::new(1)).unwrap();
    let attrs = data.attributes_of(&[0, 1, 2]);
    let (x, y) = generate(&model, &attrs, 500, &mut Rng::new(4)).unwrap();
    assert_eq!(x.shape(), (1500, data.feature_dim()));
    for c in 0..3 {
        assert_eq!(y.iter().filter(|&&l| l == c).count(), 500);
    }
    let (x2, _) = generate(&model, &attrs, 500, &mut Rng::new(4)).unwrap();
    assert_eq!(x, x2);
    let (x3, _) = generate(&model, &attrs, 500, &mut Rng::new(5)).unwrap();
    assert_ne!(x, x3);

    let (one, l) = generate(&model, &data.attributes_of(&[3]), 1, &mut Rng::new(1)).unwrap();
    assert_eq!((one.rows(), l), (1, vec![0]));

    let (_, ids) = generate_for_classes(&model, &data, &[5, 2], 2, &mut Rng::new(1)).unwrap();
    assert_eq!(ids, vec![5, 5, 2, 2]);
}

#[test]
fn generate_does_not_mutate_and_checks_input() {
    let data = small_data(12);
    let (model, _) = train_generator(&data, &fast_generator(ModelKind::Gmmn, 1), &Rng::new(1)).unwrap();
    let before = model.clone();
    generate(&model, &data.attributes_of(&[0]), 3, &mut Rng::new(1)).unwrap();
    assert_eq!(model, before);
    let bad = Matrix::zeros(1, data.attr_dim() + 1);
    assert!(matches!(
        generate(&model, &bad, 3, &mut Rng::new(1)),
        Err(Error::Shape { .. })
    ));
    assert!(matches!(
        generate(&model, &data.attributes_of(&[0]), 0, &mut Rng::new(1)),
        Err(Error::Param(_))
    ));
}

#[test]
fn diverging_training_reports_epoch_and_term() {
    let data = small_data(13);
    let cfg = featgen::GeneratorConfig {
        learning_rate: 1e300,
        output_activation: featgen::generators::OutputActivation::Linear,
        ..fast_generator(ModelKind::DenoisingAe, 5)
    };
    match train_generator(&data, &cfg, &Rng::new(1)) {
        Err(Error::Numerical { epoch, term }) => {
            assert!(epoch < 5);
            assert!(!term.is_empty());
        }
        other => panic!("expected numerical error, got {other:?}"),
    }
}

#[test]
fn models_round_trip_through_files() {
    let data: Dataset = small_data(14);
    let dir = tempfile::tempdir().unwrap();
    for kind in all_kinds() {
        let (model, _) = train_generator(&data, &fast_generator(kind, 1), &Rng::new(1)).unwrap();
        let path = dir.path().join(format!("{kind}.fgzm"));
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model, "{kind}");
    }
}
