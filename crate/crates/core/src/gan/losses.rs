//! Adversarial objectives built from graph operations, so the same code
//! serves training, evaluation and gradient checks.

use crate::error::Result;
use crate::realness::{check_lambda, SpectralClassifier, PROB_CLAMP};
use crate::tensor_nn::layers::Mode;
use crate::tensor_nn::{Binding, Graph, Scalar, Tensor, Var};

use super::nets::Discriminator;

fn log_range<T: Scalar>() -> (T, T) {
    (
        T::from_f64_lossy(PROB_CLAMP.ln()),
        T::from_f64_lossy((-PROB_CLAMP).ln_1p()),
    )
}

/// Log of the blended probability `lambda * sigmoid(logits) + (1 - lambda) * c`,
/// or of its complement, clamped to `[1e-7, 1 - 1e-7]` in probability.
/// `c` is cut from the tape. Without `c` this is `log sigmoid(logits)`.
pub fn blended_log_prob<T: Scalar>(
    g: &mut Graph<T>,
    logits: Var,
    c_prob: Option<Var>,
    lambda: f64,
    complement: bool,
) -> Result<Var> {
    check_lambda(lambda)?;
    let c = c_prob.map(|c| g.detach(c));
    g.log_blend(
        logits,
        c,
        T::from_f64_lossy(lambda),
        complement,
        log_range(),
    )
}

fn neg_mean<T: Scalar>(g: &mut Graph<T>, v: Var) -> Var {
    let m = g.mean(v);
    g.affine(m, -T::one(), T::zero())
}

/// Discriminator objective `-E[log p_real] - E[log(1 - p_fake)]` on blended
/// probabilities, minimized by D.
pub fn discriminator_loss<T: Scalar>(
    g: &mut Graph<T>,
    real_logits: Var,
    fake_logits: Var,
    c_real: Option<Var>,
    c_fake: Option<Var>,
    lambda: f64,
) -> Result<Var> {
    let lr = blended_log_prob(g, real_logits, c_real, lambda, false)?;
    let lf = blended_log_prob(g, fake_logits, c_fake, lambda, true)?;
    let a = neg_mean(g, lr);
    let b = neg_mean(g, lf);
    g.add(a, b)
}

/// Non-saturating generator objective `-E[log p_fake]`.
pub fn generator_loss<T: Scalar>(
    g: &mut Graph<T>,
    fake_logits: Var,
    c_fake: Option<Var>,
    lambda: f64,
) -> Result<Var> {
    let lf = blended_log_prob(g, fake_logits, c_fake, lambda, false)?;
    Ok(neg_mean(g, lf))
}

/// `C(phi((x + 1) / 2))` for a `[B, 1, H, W]` image node, giving `[B, 1]`.
pub fn classifier_probs<T: Scalar>(
    g: &mut Graph<T>,
    cb: &Binding,
    c: &SpectralClassifier<T>,
    images: Var,
) -> Result<Var> {
    let half = T::from_f64_lossy(0.5);
    let unit = g.affine(images, half, half);
    let phi = g.phi(unit)?;
    c.forward(g, cb, phi)
}

fn eval_d_loss<T: Scalar>(
    d: &mut Discriminator<T>,
    c: Option<&SpectralClassifier<T>>,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let mut g = Graph::new();
    let db = d.store.bind(&mut g, false);
    let (xr, xf) = (g.input(real.clone()), g.input(fake.clone()));
    let lr = d.forward(&mut g, &db, xr, Mode::Eval)?;
    let lf = d.forward(&mut g, &db, xf, Mode::Eval)?;
    let (cr, cf) = match c {
        Some(c) => {
            let cb = c.store.bind(&mut g, false);
            (
                Some(classifier_probs(&mut g, &cb, c, xr)?),
                Some(classifier_probs(&mut g, &cb, c, xf)?),
            )
        }
        None => (None, None),
    };
    let loss = discriminator_loss(&mut g, lr, lf, cr, cf, lambda)?;
    Ok(g.value(loss).data()[0].to_f64_lossy())
}

fn eval_g_loss<T: Scalar>(
    d: &mut Discriminator<T>,
    c: Option<&SpectralClassifier<T>>,
    fake: &Tensor<T>,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let mut g = Graph::new();
    let db = d.store.bind(&mut g, false);
    let xf = g.input(fake.clone());
    let lf = d.forward(&mut g, &db, xf, Mode::Eval)?;
    let cf = match c {
        Some(c) => {
            let cb = c.store.bind(&mut g, false);
            Some(classifier_probs(&mut g, &cb, c, xf)?)
        }
        None => None,
    };
    let loss = generator_loss(&mut g, lf, cf, lambda)?;
    Ok(g.value(loss).data()[0].to_f64_lossy())
}

/// `-E_real[log D] - E_fake[log(1 - D)]`.
pub fn d_loss_sgan<T: Scalar>(
    d: &mut Discriminator<T>,
    real: &Tensor<T>,
    fake: &Tensor<T>,
) -> Result<f64> {
    eval_d_loss(d, None, real, fake, 1.0)
}

/// `-E_fake[log D]`.
pub fn g_loss_sgan<T: Scalar>(d: &mut Discriminator<T>, fake: &Tensor<T>) -> Result<f64> {
    eval_g_loss(d, None, fake, 1.0)
}

/// Discriminator objective with `D` replaced by the blended probability.
pub fn d_loss_ssd<T: Scalar>(
    d: &mut Discriminator<T>,
    c: &SpectralClassifier<T>,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    lambda: f64,
) -> Result<f64> {
    eval_d_loss(d, Some(c), real, fake, lambda)
}

/// Generator objective with `D` replaced by the blended probability.
pub fn g_loss_ssd<T: Scalar>(
    d: &mut Discriminator<T>,
    c: &SpectralClassifier<T>,
    fake: &Tensor<T>,
    lambda: f64,
) -> Result<f64> {
    eval_g_loss(d, Some(c), fake, lambda)
}
