use std::collections::BTreeMap;
use std::time::Instant;

use super::objectives::{
    acgan_discriminator_objective, acgan_generator_objective, autoencoder_objective, code_discriminator_objective,
    gmmn_objective, LossTerms,
};
use super::{GeneratorConfig, GeneratorModel, ModelKind, OutputActivation, TrainReport};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mmd::mmd2_biased;
use crate::neuralnet::{adam_step, chain_specs, init_mlp, Activation, AdamState, Mlp, Mode};
use crate::numerics::{streams, Matrix, Rng};

fn dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(hidden.len() + 2);
    d.push(input);
    d.extend_from_slice(hidden);
    d.push(output);
    d
}

struct Nets {
    generator: Mlp,
    discriminator: Option<Mlp>,
    encoder: Option<Mlp>,
}

fn build_nets(cfg: &GeneratorConfig, data: &Dataset, rng: &Rng) -> Result<Nets> {
    let mut init_rng = rng.derive(streams::INIT);
    let attr_dim = data.attr_dim();
    let feat_dim = data.feature_dim();
    let noise_dim = cfg.noise.dim;
    let out_act = match cfg.output_activation {
        OutputActivation::Sigmoid => Activation::Sigmoid,
        OutputActivation::Linear => Activation::Linear,
    };
    let gen_in_drop = if cfg.dropout_on_generator_input {
        cfg.input_dropout
    } else {
        0.0
    };
    let generator = init_mlp(
        &chain_specs(
            &dims(attr_dim + noise_dim, &cfg.hidden_dims, feat_dim),
            out_act,
            gen_in_drop,
            cfg.hidden_dropout,
        ),
        cfg.init,
        &mut init_rng,
    )?;
    let disc_hidden = &cfg.discriminator_hidden_dims;
    let (discriminator, encoder) = match cfg.model_kind {
        ModelKind::Gmmn => (None, None),
        ModelKind::Acgan => {
            let classes = data.seen_classes().len();
            let d = init_mlp(
                &chain_specs(
                    &dims(feat_dim, disc_hidden, 1 + classes),
                    Activation::Linear,
                    cfg.input_dropout,
                    cfg.hidden_dropout,
                ),
                cfg.init,
                &mut init_rng,
            )?;
            (Some(d), None)
        }
        ModelKind::DenoisingAe | ModelKind::AdversarialAe => {
            let e = init_mlp(
                &chain_specs(
                    &dims(feat_dim, &cfg.hidden_dims, noise_dim),
                    Activation::Linear,
                    cfg.input_dropout,
                    cfg.hidden_dropout,
                ),
                cfg.init,
                &mut init_rng,
            )?;
            let d = if cfg.model_kind == ModelKind::AdversarialAe {
                Some(init_mlp(
                    &chain_specs(
                        &dims(noise_dim, disc_hidden, 1),
                        Activation::Linear,
                        cfg.input_dropout,
                        cfg.hidden_dropout,
                    ),
                    cfg.init,
                    &mut init_rng,
                )?)
            } else {
                None
            };
            (d, Some(e))
        }
    };
    Ok(Nets {
        generator,
        discriminator,
        encoder,
    })
}

fn check_kind(cfg: &GeneratorConfig, expected: ModelKind) -> Result<()> {
    cfg.validate()?;
    if cfg.model_kind != expected {
        return Err(Error::Config(format!(
            "config model_kind is {}, trainer expects {expected}",
            cfg.model_kind
        )));
    }
    Ok(())
}

/// Per-epoch mean of each loss term; aborts on the first non-finite value.
struct LossLog {
    curves: BTreeMap<String, Vec<f64>>,
    sums: BTreeMap<&'static str, (f64, usize)>,
    epoch: usize,
}

impl LossLog {
    fn new() -> Self {
        LossLog {
            curves: BTreeMap::new(),
            sums: BTreeMap::new(),
            epoch: 0,
        }
    }

    fn record(&mut self, terms: &LossTerms) -> Result<()> {
        for &(name, value) in terms {
            if !value.is_finite() {
                return Err(Error::Numerical {
                    epoch: self.epoch,
                    term: name.to_string(),
                });
            }
            let e = self.sums.entry(name).or_insert((0.0, 0));
            e.0 += value;
            e.1 += 1;
        }
        Ok(())
    }

    fn end_epoch(&mut self) {
        for (name, (sum, n)) in std::mem::take(&mut self.sums) {
            self.curves
                .entry(name.to_string())
                .or_default()
                .push(sum / n.max(1) as f64);
        }
        self.epoch += 1;
    }

    fn finish(self, kind: ModelKind, epochs: usize, classes: Vec<usize>, started: Instant) -> TrainReport {
        let final_losses = self
            .curves
            .iter()
            .filter_map(|(k, v)| v.last().map(|&x| (k.clone(), x)))
            .collect();
        TrainReport {
            model_kind: kind,
            epochs,
            curves: self.curves,
            final_losses,
            trained_on_classes: classes,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

fn check_params(net: &Mlp, epoch: usize, term: &str) -> Result<()> {
    if net.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical {
            epoch,
            term: term.to_string(),
        })
    }
}

fn into_model(nets: Nets, cfg: &GeneratorConfig, data: &Dataset) -> GeneratorModel {
    GeneratorModel {
        kind: cfg.model_kind,
        generator: nets.generator,
        discriminator: nets.discriminator,
        encoder: nets.encoder,
        noise: cfg.noise,
        feature_dim: data.feature_dim(),
        attr_dim: data.attr_dim(),
        seen_classes: data.seen_classes().to_vec(),
        config: cfg.clone(),
    }
}

fn seen_train_indices(data: &Dataset) -> Result<Vec<usize>> {
    if data.seen_classes().is_empty() {
        return Err(Error::Data("dataset has no seen classes".into()));
    }
    let rows: Vec<usize> = data.train_indices().to_vec();
    if rows.is_empty() {
        return Err(Error::Data("dataset has no train images".into()));
    }
    Ok(rows)
}

/// Sorted distinct labels of the image rows a trainer read.
fn classes_of(data: &Dataset, rows: &[usize]) -> Vec<usize> {
    let set: std::collections::BTreeSet<usize> = rows.iter().map(|&i| data.labels()[i]).collect();
    set.into_iter().collect()
}

/// Column position of each class id in the AC-GAN class head.
fn class_positions(data: &Dataset) -> Vec<usize> {
    let mut pos = vec![usize::MAX; data.num_classes()];
    for (i, &c) in data.seen_classes().iter().enumerate() {
        pos[c] = i;
    }
    pos
}

/// Attribute rows for each image in `rows`.
fn conditioning(data: &Dataset, rows: &[usize]) -> Matrix {
    let labels: Vec<usize> = rows.iter().map(|&i| data.labels()[i]).collect();
    data.class_attributes().select_rows(&labels)
}

/// Moment matching: one step per seen class per epoch, using every train
/// image of that class against an equal number of generated samples.
pub fn train_gmmn(data: &Dataset, cfg: &GeneratorConfig, rng: &Rng) -> Result<(GeneratorModel, TrainReport)> {
    check_kind(cfg, ModelKind::Gmmn)?;
    let started = Instant::now();
    let per_class: Vec<(usize, Vec<usize>)> = data
        .seen_classes()
        .iter()
        .map(|&c| (c, data.train_rows_of(c)))
        .collect();
    if per_class.is_empty() {
        return Err(Error::Data("dataset has no seen classes".into()));
    }
    if let Some((c, rows)) = per_class.iter().find(|(_, r)| r.len() < 2) {
        return Err(Error::Data(format!(
            "seen class {c} ({}) has {} train images; moment matching needs at least 2",
            data.class_names()[*c],
            rows.len()
        )));
    }
    let mut nets = build_nets(cfg, data, rng)?;
    let mut adam = AdamState::new(&nets.generator, cfg.adam());
    let mut noise_rng = rng.derive(streams::NOISE);
    let mut drop_rng = rng.derive(streams::DROPOUT);
    let mut shuffle_rng = rng.derive(streams::SHUFFLE);
    let mut log = LossLog::new();
    let mut order: Vec<usize> = (0..per_class.len()).collect();
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        for &k in &order {
            let (class, rows) = &per_class[k];
            let real = data.features().select_rows(rows);
            let cond = data.attributes_of(&vec![*class; rows.len()]);
            let z = cfg.noise.sample(&mut noise_rng, rows.len())?;
            let input = cond.hconcat(&z)?;
            let (loss, grads) =
                gmmn_objective(&nets.generator, &input, &real, &cfg.kernel, Mode::Train, &mut drop_rng)?;
            log.record(&vec![("mmd2", loss)])?;
            adam_step(&mut nets.generator, &grads, &mut adam)?;
            check_params(&nets.generator, epoch, "mmd2")?;
        }
        log.end_epoch();
    }
    let used: Vec<usize> = per_class.iter().flat_map(|(_, rows)| rows.iter().copied()).collect();
    let report = log.finish(ModelKind::Gmmn, cfg.epochs, classes_of(data, &used), started);
    Ok((into_model(nets, cfg, data), report))
}

/// Auxiliary-classifier GAN with one discriminator step then one generator
/// step per mini-batch.
pub fn train_acgan(data: &Dataset, cfg: &GeneratorConfig, rng: &Rng) -> Result<(GeneratorModel, TrainReport)> {
    check_kind(cfg, ModelKind::Acgan)?;
    let started = Instant::now();
    if data.seen_classes().len() < 2 {
        return Err(Error::Data("auxiliary classifier needs at least 2 seen classes".into()));
    }
    let mut all = seen_train_indices(data)?;
    let pos = class_positions(data);
    let mut nets = build_nets(cfg, data, rng)?;
    let mut g_adam = AdamState::new(&nets.generator, cfg.adam());
    let disc = nets.discriminator.as_mut().expect("acgan discriminator");
    let mut d_adam = AdamState::new(disc, cfg.adam());
    let mut noise_rng = rng.derive(streams::NOISE);
    let mut drop_rng = rng.derive(streams::DROPOUT);
    let mut shuffle_rng = rng.derive(streams::SHUFFLE);
    let mut log = LossLog::new();
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut all);
        for batch in all.chunks(cfg.batch_size) {
            let real = data.features().select_rows(batch);
            let classes: Vec<usize> = batch.iter().map(|&i| pos[data.labels()[i]]).collect();
            let cond = conditioning(data, batch);
            let disc = nets.discriminator.as_mut().expect("acgan discriminator");

            let z = cfg.noise.sample(&mut noise_rng, batch.len())?;
            let (d_terms, d_grads) = acgan_discriminator_objective(
                &nets.generator,
                disc,
                &real,
                &classes,
                &cond.hconcat(&z)?,
                &classes,
                cfg.aux_loss_weight,
                Mode::Train,
                &mut drop_rng,
            )?;
            log.record(&d_terms)?;
            adam_step(disc, &d_grads, &mut d_adam)?;
            check_params(disc, epoch, "d_real_fake")?;

            let z = cfg.noise.sample(&mut noise_rng, batch.len())?;
            let (g_terms, g_grads) = acgan_generator_objective(
                &nets.generator,
                disc,
                &cond.hconcat(&z)?,
                &classes,
                cfg.aux_loss_weight,
                Mode::Train,
                &mut drop_rng,
            )?;
            log.record(&g_terms)?;
            adam_step(&mut nets.generator, &g_grads, &mut g_adam)?;
            check_params(&nets.generator, epoch, "g_adv")?;
        }
        log.end_epoch();
    }
    let report = log.finish(ModelKind::Acgan, cfg.epochs, classes_of(data, &all), started);
    Ok((into_model(nets, cfg, data), report))
}

fn train_autoencoder(
    data: &Dataset,
    cfg: &GeneratorConfig,
    rng: &Rng,
    kind: ModelKind,
) -> Result<(GeneratorModel, TrainReport)> {
    check_kind(cfg, kind)?;
    let started = Instant::now();
    let mut all = seen_train_indices(data)?;
    let mut nets = build_nets(cfg, data, rng)?;
    let mut enc = nets.encoder.take().expect("auto-encoder encoder");
    let mut code_disc = nets.discriminator.take();
    let mut g_adam = AdamState::new(&nets.generator, cfg.adam());
    let mut e_adam = AdamState::new(&enc, cfg.adam());
    let mut c_adam = code_disc.as_ref().map(|d| AdamState::new(d, cfg.adam()));
    let mut noise_rng = rng.derive(streams::NOISE);
    let mut corrupt_rng = rng.derive(streams::CORRUPTION);
    let mut drop_rng = rng.derive(streams::DROPOUT);
    let mut shuffle_rng = rng.derive(streams::SHUFFLE);
    let mut log = LossLog::new();
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut all);
        for batch in all.chunks(cfg.batch_size) {
            let clean = data.features().select_rows(batch);
            let corruption = corrupt_rng.gaussian_matrix(clean.rows(), clean.cols(), 0.0, cfg.input_noise_stddev)?;
            let corrupted = clean.add(&corruption)?;
            let cond = conditioning(data, batch);

            if let (Some(disc), Some(state)) = (code_disc.as_mut(), c_adam.as_mut()) {
                let prior = cfg.noise.sample(&mut noise_rng, batch.len())?;
                let (loss, grads) =
                    code_discriminator_objective(&enc, disc, &corrupted, &prior, Mode::Train, &mut drop_rng)?;
                log.record(&vec![("code_disc", loss)])?;
                adam_step(disc, &grads, state)?;
                check_params(disc, epoch, "code_disc")?;
            }

            let (terms, grads) = autoencoder_objective(
                &enc,
                &nets.generator,
                code_disc.as_ref(),
                &corrupted,
                &clean,
                &cond,
                cfg.adversarial_weight,
                Mode::Train,
                &mut drop_rng,
            )?;
            log.record(&terms)?;
            adam_step(&mut enc, &grads.encoder, &mut e_adam)?;
            adam_step(&mut nets.generator, &grads.decoder, &mut g_adam)?;
            check_params(&enc, epoch, "reconstruction")?;
            check_params(&nets.generator, epoch, "reconstruction")?;
        }
        log.end_epoch();
    }
    nets.encoder = Some(enc);
    nets.discriminator = code_disc;
    let report = log.finish(kind, cfg.epochs, classes_of(data, &all), started);
    Ok((into_model(nets, cfg, data), report))
}

/// Conditional denoising auto-encoder; the decoder becomes the generator.
pub fn train_denoising_ae(data: &Dataset, cfg: &GeneratorConfig, rng: &Rng) -> Result<(GeneratorModel, TrainReport)> {
    train_autoencoder(data, cfg, rng, ModelKind::DenoisingAe)
}

/// Denoising auto-encoder whose codes are pushed toward the noise prior by a
/// code discriminator.
pub fn train_adversarial_ae(data: &Dataset, cfg: &GeneratorConfig, rng: &Rng) -> Result<(GeneratorModel, TrainReport)> {
    train_autoencoder(data, cfg, rng, ModelKind::AdversarialAe)
}

pub fn train_generator(data: &Dataset, cfg: &GeneratorConfig, rng: &Rng) -> Result<(GeneratorModel, TrainReport)> {
    match cfg.model_kind {
        ModelKind::Gmmn => train_gmmn(data, cfg, rng),
        ModelKind::Acgan => train_acgan(data, cfg, rng),
        ModelKind::DenoisingAe => train_denoising_ae(data, cfg, rng),
        ModelKind::AdversarialAe => train_adversarial_ae(data, cfg, rng),
    }
}

/// Biased MMD^2 between eval-mode samples for `class` and the real `rows`,
/// using the model's configured kernel.
pub fn class_mmd2(model: &GeneratorModel, data: &Dataset, class: usize, rows: &[usize], rng: &mut Rng) -> Result<f64> {
    let real = data.features().select_rows(rows);
    let (fake, _) = super::generate_for_classes(model, data, &[class], rows.len(), rng)?;
    mmd2_biased(&fake, &real, &model.config.kernel)
}
