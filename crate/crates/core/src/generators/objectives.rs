//! Single-step losses and parameter gradients for each generator kind.
//!
//! These are pure functions of the networks, the batch, and the dropout
//! stream, so the training loops stay thin and the gradients can be checked
//! against finite differences directly.

use crate::error::Result;
use crate::mmd::{mmd2_with_gradient, KernelSpec};
use crate::neuralnet::{l2_reconstruction_loss, sigmoid_cross_entropy, softmax_cross_entropy, Gradients, Mlp, Mode};
use crate::numerics::{Matrix, Rng};

/// Named loss terms of one step.
pub type LossTerms = Vec<(&'static str, f64)>;

/// Kernel MMD between `G(input)` and `real`.
pub fn gmmn_objective(
    generator: &Mlp,
    input: &Matrix,
    real: &Matrix,
    kernel: &KernelSpec,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(f64, Gradients)> {
    let (fake, tape) = generator.forward(input, mode, rng)?;
    let (loss, grad) = mmd2_with_gradient(&fake, real, kernel)?;
    Ok((loss, generator.backward(&tape, &grad)?))
}

/// Splits discriminator logits into real/fake (column 0) and class logits
/// (the rest) and returns `(bce, ce, d loss / d logits)`.
fn discriminator_head(
    logits: &Matrix,
    real_fake: &[f64],
    classes: &[usize],
    aux_weight: f64,
) -> Result<(f64, f64, Matrix)> {
    let rf_logits = logits.columns(0, 1);
    let class_logits = logits.columns(1, logits.cols());
    let (bce, g_rf) = sigmoid_cross_entropy(&rf_logits, real_fake)?;
    let (ce, g_cls) = softmax_cross_entropy(&class_logits, classes)?;
    let grad = g_rf.hconcat(&g_cls.scale(aux_weight))?;
    Ok((bce, ce, grad))
}

/// AC-GAN discriminator loss on a stacked `[real; G(gen_input)]` batch:
/// real/fake log-loss plus `aux_weight` times class cross-entropy on both
/// halves. `real_classes` and `fake_classes` index the class head.
#[allow(clippy::too_many_arguments)]
pub fn acgan_discriminator_objective(
    generator: &Mlp,
    discriminator: &Mlp,
    real: &Matrix,
    real_classes: &[usize],
    gen_input: &Matrix,
    fake_classes: &[usize],
    aux_weight: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(LossTerms, Gradients)> {
    let (fake, _) = generator.forward(gen_input, mode, rng)?;
    let batch = real.vconcat(&fake)?;
    let mut targets = vec![1.0; real.rows()];
    targets.resize(real.rows() + fake.rows(), 0.0);
    let classes: Vec<usize> = real_classes.iter().chain(fake_classes).copied().collect();
    let (logits, tape) = discriminator.forward(&batch, mode, rng)?;
    let (bce, ce, grad) = discriminator_head(&logits, &targets, &classes, aux_weight)?;
    let grads = discriminator.backward(&tape, &grad)?;
    Ok((vec![("d_real_fake", bce), ("d_aux", ce)], grads))
}

/// AC-GAN generator loss: non-saturating `-log D(G(x))` plus `aux_weight`
/// times class cross-entropy on the generated batch. Gradients are for the
/// generator only.
pub fn acgan_generator_objective(
    generator: &Mlp,
    discriminator: &Mlp,
    gen_input: &Matrix,
    fake_classes: &[usize],
    aux_weight: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(LossTerms, Gradients)> {
    let (fake, g_tape) = generator.forward(gen_input, mode, rng)?;
    let (logits, d_tape) = discriminator.forward(&fake, mode, rng)?;
    let targets = vec![1.0; fake.rows()];
    let (bce, ce, grad) = discriminator_head(&logits, &targets, fake_classes, aux_weight)?;
    let d_grads = discriminator.backward(&d_tape, &grad)?;
    let grads = generator.backward(&g_tape, &d_grads.input)?;
    Ok((vec![("g_adv", bce), ("g_aux", ce)], grads))
}

/// Gradients of an auto-encoder step.
#[derive(Debug)]
pub struct AutoencoderGrads {
    pub encoder: Gradients,
    pub decoder: Gradients,
}

/// Conditional auto-encoder loss: `|D([a | E(corrupted)]) - clean|^2`, plus,
/// when a code discriminator is given, `adv_weight` times the encoder's
/// non-saturating fool-the-discriminator loss on its codes.
#[allow(clippy::too_many_arguments)]
pub fn autoencoder_objective(
    encoder: &Mlp,
    decoder: &Mlp,
    code_discriminator: Option<&Mlp>,
    corrupted: &Matrix,
    clean: &Matrix,
    attributes: &Matrix,
    adv_weight: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(LossTerms, AutoencoderGrads)> {
    let (code, e_tape) = encoder.forward(corrupted, mode, rng)?;
    let dec_in = attributes.hconcat(&code)?;
    let (recon, d_tape) = decoder.forward(&dec_in, mode, rng)?;
    let (l2, g_recon) = l2_reconstruction_loss(&recon, clean)?;
    let dec_grads = decoder.backward(&d_tape, &g_recon)?;
    let attr_dim = attributes.cols();
    let mut g_code = dec_grads.input.columns(attr_dim, dec_in.cols());
    let mut terms = vec![("reconstruction", l2)];
    if let Some(disc) = code_discriminator {
        let (logits, c_tape) = disc.forward(&code, mode, rng)?;
        let (adv, g_logits) = sigmoid_cross_entropy(&logits, &vec![1.0; code.rows()])?;
        let c_grads = disc.backward(&c_tape, &g_logits.scale(adv_weight))?;
        g_code.add_assign(&c_grads.input)?;
        terms.push(("encoder_adv", adv));
    }
    let enc_grads = encoder.backward(&e_tape, &g_code)?;
    Ok((
        terms,
        AutoencoderGrads {
            encoder: enc_grads,
            decoder: dec_grads,
        },
    ))
}

/// Code discriminator log-loss on a stacked `[prior; E(corrupted)]` batch,
/// with prior draws labelled 1 and encoder codes 0.
pub fn code_discriminator_objective(
    encoder: &Mlp,
    code_discriminator: &Mlp,
    corrupted: &Matrix,
    prior: &Matrix,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(f64, Gradients)> {
    let (code, _) = encoder.forward(corrupted, mode, rng)?;
    let batch = prior.vconcat(&code)?;
    let mut targets = vec![1.0; prior.rows()];
    targets.resize(prior.rows() + code.rows(), 0.0);
    let (logits, tape) = code_discriminator.forward(&batch, mode, rng)?;
    let (loss, grad) = sigmoid_cross_entropy(&logits, &targets)?;
    Ok((loss, code_discriminator.backward(&tape, &grad)?))
}
