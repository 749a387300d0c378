//! Gradient structure of the blended adversarial losses on frozen tiny
//! networks, checked in f64 against per-sample factors computed separately.

use ssdgan_core::gan::{
    blended_log_prob, classifier_probs, discriminator_loss, generator_loss, Architecture,
    Discriminator, NetWidths,
};
use ssdgan_core::realness::{unit_phi, SpectralClassifier};
use ssdgan_core::rng::{SeededRng, Stream};
use ssdgan_core::tensor_nn::{Graph, Mode, Tensor, Var};
use ssdgan_core::Image;

const LAMBDA: f64 = 0.5;
const BATCH: usize = 4;

fn widths() -> NetWidths {
    NetWidths {
        generator: 2,
        discriminator: 3,
    }
}

fn discriminator(seed: u64) -> Discriminator<f64> {
    Discriminator::new(
        Architecture::Compact,
        widths(),
        &mut SeededRng::new(seed, Stream::DiscriminatorInit),
    )
}

/// Classifier with weights spread enough that `C` varies across samples.
fn classifier(seed: u64) -> SpectralClassifier<f64> {
    let mut c = SpectralClassifier::for_image_size(
        16,
        16,
        &mut SeededRng::new(seed, Stream::ClassifierInit),
    );
    for p in c.store.params_mut() {
        p.value = p.value.map(|v| 8.0 * v);
    }
    c
}

fn images(n: usize, seed: u64) -> Tensor<f64> {
    let mut rng = SeededRng::new(seed, Stream::Data);
    Tensor::new(
        &[n, 1, 16, 16],
        (0..n * 256).map(|_| rng.uniform(-1.0, 1.0)).collect(),
    )
    .unwrap()
}

fn sample(batch: &Tensor<f64>, i: usize) -> Tensor<f64> {
    Tensor::new(&[1, 1, 16, 16], batch.data()[i * 256..][..256].to_vec()).unwrap()
}

/// `D(x_i)` and `C(phi(x_i))` per sample, from the public evaluation paths.
fn realness(
    d: &mut Discriminator<f64>,
    c: &SpectralClassifier<f64>,
    x: &Tensor<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let dp = d.probabilities(x, Mode::Eval).unwrap();
    let phis: Vec<_> = (0..x.shape()[0])
        .map(|i| unit_phi(&Image::from_batch(x, i).unwrap()).unwrap())
        .collect();
    (dp, c.classify_batch(&phis).unwrap())
}

#[derive(Clone, Copy, PartialEq)]
enum Loss {
    Generator,
    DiscriminatorFake,
    DiscriminatorReal,
}

/// Gradient of a loss with respect to the images and D's parameters, with
/// `lambda = None` meaning the plain loss without any classifier.
fn gradients(
    d: &mut Discriminator<f64>,
    c: &SpectralClassifier<f64>,
    x: &Tensor<f64>,
    loss: Loss,
    lambda: Option<f64>,
) -> (Tensor<f64>, Vec<f64>) {
    let mut g = Graph::new();
    let db = d.store.bind(&mut g, true);
    let xv = g.param(x.clone());
    let logits = d.forward(&mut g, &db, xv, Mode::Eval).unwrap();
    let cp = lambda.map(|_| {
        let cb = c.store.bind(&mut g, false);
        classifier_probs(&mut g, &cb, c, xv).unwrap()
    });
    let lam = lambda.unwrap_or(1.0);
    let out = match loss {
        Loss::Generator => generator_loss(&mut g, logits, cp, lam).unwrap(),
        Loss::DiscriminatorFake | Loss::DiscriminatorReal => {
            // the other half of the objective sees an empty-gradient copy
            let other = g.input(g.value(logits).clone());
            let (real, fake, cr, cf) = if loss == Loss::DiscriminatorFake {
                (other, logits, cp, cp)
            } else {
                (logits, other, cp, cp)
            };
            discriminator_loss(&mut g, real, fake, cr, cf, lam).unwrap()
        }
    };
    let grads = g.backward(out).unwrap();
    let dx = grads.get(xv).unwrap().clone();
    d.store.zero_grad();
    d.store.accumulate_grads(&grads, &db);
    let dparams = d
        .store
        .params()
        .iter()
        .flat_map(|p| p.grad.data().to_vec())
        .collect();
    (dx, dparams)
}

/// Analytic ratio of the blended gradient to the plain one for a sample with
/// spatial realness `dp` and spectral realness `cp`.
fn factor(loss: Loss, dp: f64, cp: f64, lambda: f64) -> f64 {
    let p = lambda * dp + (1.0 - lambda) * cp;
    match loss {
        Loss::Generator | Loss::DiscriminatorReal => lambda * dp / p,
        Loss::DiscriminatorFake => lambda * (1.0 - dp) / (1.0 - p),
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn blended_gradients_are_scaled_plain_gradients() {
    for seed in 0..3 {
        let mut d = discriminator(seed);
        let c = classifier(seed);
        let x = images(BATCH, 10 + seed);
        let (dp, cp) = realness(&mut d, &c, &x);
        assert!(
            cp.iter().any(|&v| (v - 0.5).abs() > 0.05),
            "classifier too flat: {cp:?}"
        );
        for loss in [
            Loss::Generator,
            Loss::DiscriminatorFake,
            Loss::DiscriminatorReal,
        ] {
            for lambda in [0.3, LAMBDA, 0.8] {
                // image gradients: the whole batch at once, compared per sample
                let (plain, _) = gradients(&mut d, &c, &x, loss, None);
                let (blended, _) = gradients(&mut d, &c, &x, loss, Some(lambda));
                for i in 0..BATCH {
                    let k = factor(loss, dp[i], cp[i], lambda);
                    let want: Vec<f64> = plain.data()[i * 256..][..256]
                        .iter()
                        .map(|v| k * v)
                        .collect();
                    let err = max_rel(&blended.data()[i * 256..][..256], &want);
                    assert!(
                        err < 1e-4,
                        "image gradient, sample {i}, lambda {lambda}: {err:e}"
                    );
                }
                // parameter gradients: one sample at a time
                for i in 0..BATCH {
                    let xi = sample(&x, i);
                    let (_, plain) = gradients(&mut d, &c, &xi, loss, None);
                    let (_, blended) = gradients(&mut d, &c, &xi, loss, Some(lambda));
                    let k = factor(loss, dp[i], cp[i], lambda);
                    let want: Vec<f64> = plain.iter().map(|v| k * v).collect();
                    let err = max_rel(&blended, &want);
                    assert!(
                        err < 1e-4,
                        "parameter gradient, sample {i}, lambda {lambda}: {err:e}"
                    );
                }
            }
        }
    }
}

#[test]
fn adversarial_losses_leave_the_classifier_untouched() {
    let mut d = discriminator(4);
    let mut c = classifier(4);
    let (real, fake) = (images(2, 1), images(BATCH, 2));
    let mut g = Graph::new();
    let db = d.store.bind(&mut g, true);
    let cb = c.store.bind(&mut g, true);
    let (xr, xf) = (g.param(real), g.param(fake));
    let lr = d.forward(&mut g, &db, xr, Mode::Eval).unwrap();
    let lf = d.forward(&mut g, &db, xf, Mode::Eval).unwrap();
    let cr = classifier_probs(&mut g, &cb, &c, xr).unwrap();
    let cf = classifier_probs(&mut g, &cb, &c, xf).unwrap();
    let dl = discriminator_loss(&mut g, lr, lf, Some(cr), Some(cf), LAMBDA).unwrap();
    let gl = generator_loss(&mut g, lf, Some(cf), LAMBDA).unwrap();
    let total = g.add(dl, gl).unwrap();
    let grads = g.backward(total).unwrap();
    c.store.zero_grad();
    c.store.accumulate_grads(&grads, &cb);
    assert!(c.store.grads_all_zero());
    // the discriminator does receive a gradient
    d.store.zero_grad();
    d.store.accumulate_grads(&grads, &db);
    assert!(!d.store.grads_all_zero());
}

/// Norm of the gradient with respect to the image of one loss term for a
/// single sample, with the spectral realness fixed to `c_value`.
fn gradient_norm(
    d: &mut Discriminator<f64>,
    x: &Tensor<f64>,
    c_value: f64,
    complement: bool,
) -> f64 {
    let mut g = Graph::new();
    let db = d.store.bind(&mut g, false);
    let xv = g.param(x.clone());
    let logits = d.forward(&mut g, &db, xv, Mode::Eval).unwrap();
    let cv: Var = g.input(Tensor::full(&[1, 1], c_value));
    let lp = blended_log_prob(&mut g, logits, Some(cv), LAMBDA, complement).unwrap();
    let loss = g.affine(lp, -1.0, 0.0);
    let loss = g.sum(loss);
    let grads = g.backward(loss).unwrap();
    grads.get(xv).unwrap().sum_sq().sqrt()
}

#[test]
fn spectrally_poor_samples_get_larger_generator_gradients() {
    let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    for seed in 0..4 {
        let mut d = discriminator(20 + seed);
        let x = sample(&images(1, 30 + seed), 0);
        let norms: Vec<f64> = grid
            .iter()
            .map(|&c| gradient_norm(&mut d, &x, c, false))
            .collect();
        assert!(norms[0] > norms[8], "seed {seed}: {norms:?}");
        assert!(
            norms.windows(2).all(|w| w[0] > w[1]),
            "seed {seed}: {norms:?}"
        );
    }
}

#[test]
fn discriminator_fake_gradient_grows_with_spectral_realness() {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    for seed in 0..4 {
        let mut d = discriminator(40 + seed);
        let x = sample(&images(1, 50 + seed), 0);
        let norms: Vec<f64> = grid[..10]
            .iter()
            .map(|&c| gradient_norm(&mut d, &x, c, true))
            .collect();
        assert!(
            norms.windows(2).all(|w| w[0] < w[1]),
            "seed {seed}: {norms:?}"
        );
    }
}
