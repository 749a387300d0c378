//! Spectral classifier `C`, its classification objective, the blended
//! spatial/spectral realness score and the spectral regularization baseline.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::SeededRng;
use crate::spectral::{self, SpectralVector};
use crate::tensor_nn::layers::Linear;
use crate::tensor_nn::{AdamState, Binding, Graph, ParamStore, Scalar, Tensor, Var};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Margin used when rescaling spectral profiles into `(0, 1)` for the
/// regularization term.
pub const REG_DELTA: f64 = 1e-7;

/// One fully connected layer followed by a sigmoid, reading a spectral vector.
#[derive(Debug, Clone)]
pub struct SpectralClassifier<T: Scalar> {
    pub store: ParamStore<T>,
    pub fc: Linear,
    input_dim: usize,
}

impl<T: Scalar> SpectralClassifier<T> {
    /// Classifier with randomly initialized weights.
    pub fn new(input_dim: usize, rng: &mut SeededRng) -> Self {
        let mut store = ParamStore::new();
        let fc = Linear::new(&mut store, "c.fc", input_dim, 1, rng);
        SpectralClassifier {
            store,
            fc,
            input_dim,
        }
    }

    /// Classifier with all-zero weights: outputs 0.5 everywhere.
    pub fn zeros(input_dim: usize) -> Self {
        let mut store = ParamStore::new();
        let fc = Linear::zeros(&mut store, "c.fc", input_dim, 1);
        SpectralClassifier {
            store,
            fc,
            input_dim,
        }
    }

    /// Sized for `rows x cols` images.
    pub fn for_image_size(rows: usize, cols: usize, rng: &mut SeededRng) -> Self {
        Self::new(spectral::phi_len(rows, cols), rng)
    }

    /// Classifier whose `c.fc` weights are taken from named tensors, such
    /// as a loaded checkpoint; the input size follows the stored weight.
    pub fn from_tensors(tensors: &[(String, Tensor<T>)]) -> Result<Self> {
        let find = |name: &str| {
            tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::Checkpoint(format!("checkpoint lacks tensor '{name}'")))
        };
        let weight = find("c.fc.weight")?;
        let (_, input_dim) = weight.dims2()?;
        let mut c = Self::zeros(input_dim);
        c.store.assign("c.fc.weight", weight)?;
        c.store.assign("c.fc.bias", find("c.fc.bias")?)?;
        Ok(c)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `sigmoid(W v + b)` for a `[B, D]` node, giving `[B, 1]`.
    pub fn forward(&self, g: &mut Graph<T>, b: &Binding, phis: Var) -> Result<Var> {
        let d = g.value(phis).shape().get(1).copied().unwrap_or(0);
        if d != self.input_dim {
            return Err(Error::shape(format!(
                "spectral classifier expects {} bins, got {d}",
                self.input_dim
            )));
        }
        let logits = self.fc.forward(g, b, phis)?;
        Ok(g.sigmoid(logits))
    }

    /// `C(v)` for each vector, in order.
    pub fn classify_batch(&self, vs: &[SpectralVector]) -> Result<Vec<f64>> {
        if vs.is_empty() {
            return Ok(Vec::new());
        }
        let mut g = Graph::new();
        let b = self.store.bind(&mut g, false);
        let x = g.input(stack(vs, self.input_dim)?);
        let p = self.forward(&mut g, &b, x)?;
        Ok(g.value(p).data().iter().map(|v| v.to_f64_lossy()).collect())
    }

    /// One Adam step ascending the spectral objective; returns the objective
    /// evaluated before the step.
    pub fn train_step(
        &mut self,
        adam: &mut AdamState<T>,
        real: &[SpectralVector],
        fake: &[SpectralVector],
    ) -> Result<f64> {
        let mut g = Graph::new();
        let b = self.store.bind(&mut g, true);
        let xr = g.input(stack(real, self.input_dim)?);
        let xf = g.input(stack(fake, self.input_dim)?);
        let pr = self.forward(&mut g, &b, xr)?;
        let pf = self.forward(&mut g, &b, xf)?;
        let objective = spectral_objective(&mut g, pr, pf)?;
        let loss = g.affine(objective, -T::one(), T::zero());
        let grads = g.backward(loss)?;
        self.store.zero_grad();
        self.store.accumulate_grads(&grads, &b);
        adam.step(&mut self.store);
        Ok(g.value(objective).data()[0].to_f64_lossy())
    }
}

/// `phi` of an image mapped from `[-1, 1]` to `[0, 1]`, the representation
/// the classifier sees during training.
pub fn unit_phi(image: &Image) -> Result<SpectralVector> {
    spectral::phi(&image.map(|v| (v + 1.0) / 2.0))
}

/// Stacks spectral vectors into a `[B, D]` tensor.
pub fn stack<T: Scalar>(vs: &[SpectralVector], dim: usize) -> Result<Tensor<T>> {
    if vs.is_empty() {
        return Err(Error::invalid("empty batch of spectral vectors"));
    }
    let mut data = Vec::with_capacity(vs.len() * dim);
    for v in vs {
        if v.len() != dim {
            return Err(Error::shape(format!(
                "spectral vector has {} bins, expected {dim}",
                v.len()
            )));
        }
        data.extend(v.values.iter().map(|&x| T::from_f64_lossy(x)));
    }
    Tensor::new(&[vs.len(), dim], data)
}

/// `C(phi(x))` for a single vector.
pub fn classify<T: Scalar>(c: &SpectralClassifier<T>, v: &SpectralVector) -> Result<f64> {
    Ok(c.classify_batch(std::slice::from_ref(v))?[0])
}

fn clamp_prob<T: Scalar>(g: &mut Graph<T>, p: Var) -> Var {
    let eps = T::from_f64_lossy(PROB_CLAMP);
    g.clamp(p, eps, T::one() - eps)
}

/// `E[log p_real] + E[log(1 - p_fake)]` on clamped probabilities.
pub fn spectral_objective<T: Scalar>(g: &mut Graph<T>, p_real: Var, p_fake: Var) -> Result<Var> {
    let pr = clamp_prob(g, p_real);
    let lr = g.log(pr);
    let real_term = g.mean(lr);
    let pf = clamp_prob(g, p_fake);
    let one_minus = g.affine(pf, -T::one(), T::one());
    let lf = g.log(one_minus);
    let fake_term = g.mean(lf);
    g.add(real_term, fake_term)
}

/// Spectral classification objective `E_real[log C] + E_fake[log(1 - C)]`.
/// The classifier is trained to increase it; its maximum is `0`.
pub fn spectral_bce_loss<T: Scalar>(
    c: &SpectralClassifier<T>,
    real: &[SpectralVector],
    fake: &[SpectralVector],
) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::invalid(
            "spectral loss needs nonempty real and fake batches",
        ));
    }
    let mut g = Graph::new();
    let b = c.store.bind(&mut g, false);
    let xr = g.input(stack(real, c.input_dim)?);
    let xf = g.input(stack(fake, c.input_dim)?);
    let pr = c.forward(&mut g, &b, xr)?;
    let pf = c.forward(&mut g, &b, xf)?;
    let obj = spectral_objective(&mut g, pr, pf)?;
    Ok(g.value(obj).data()[0].to_f64_lossy())
}

/// Spatial and spectral realness blended with weight `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealnessScore {
    pub spatial: f64,
    pub spectral: f64,
    pub lambda: f64,
    pub overall: f64,
}

pub fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// `overall = lambda * spatial + (1 - lambda) * spectral`.
pub fn overall_realness(spatial: f64, spectral: f64, lambda: f64) -> Result<RealnessScore> {
    check_lambda(lambda)?;
    for (name, p) in [("spatial", spatial), ("spectral", spectral)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!(
                "{name} probability {p} outside [0, 1]"
            )));
        }
    }
    Ok(RealnessScore {
        spatial,
        spectral,
        lambda,
        overall: lambda * spatial + (1.0 - lambda) * spectral,
    })
}

/// Affine map sending `[min(real), max(real)]` onto `[REG_DELTA, 1 - REG_DELTA]`.
fn reg_rescale(real_mean: &[f64]) -> (f64, f64) {
    let lo = real_mean.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = real_mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let scale = (1.0 - 2.0 * REG_DELTA) / range;
    (scale, REG_DELTA - scale * lo)
}

/// Binary cross-entropy between the batch-mean fake profile (a `[B, D]` node
/// of `phi` vectors) and the fixed batch-mean real profile, both rescaled
/// with the min-max map of the real profile. Differentiable in the fake side.
pub fn spectral_reg_graph<T: Scalar>(
    g: &mut Graph<T>,
    fake_phis: Var,
    real_mean: &[f64],
) -> Result<Var> {
    let fake_mean = g.mean_rows(fake_phis)?;
    let d = real_mean.len();
    if g.value(fake_mean).len() != d {
        return Err(Error::shape(
            "fake and real spectral profiles differ in length",
        ));
    }
    let (scale, shift) = reg_rescale(real_mean);
    let target: Vec<f64> = real_mean
        .iter()
        .map(|&v| (scale * v + shift).clamp(REG_DELTA, 1.0 - REG_DELTA))
        .collect();
    let p = g.affine(
        fake_mean,
        T::from_f64_lossy(scale),
        T::from_f64_lossy(shift),
    );
    let delta = T::from_f64_lossy(REG_DELTA);
    let p = g.clamp(p, delta, T::one() - delta);
    let logp = g.log(p);
    let q = g.affine(p, -T::one(), T::one());
    let logq = g.log(q);
    let t = Tensor::from_f64(&[1, d], &target)?;
    let one_minus_t =
        Tensor::from_f64(&[1, d], &target.iter().map(|v| 1.0 - v).collect::<Vec<_>>())?;
    let a = g.mul_const(logp, &t)?;
    let a = g.mean(a);
    let b = g.mul_const(logq, &one_minus_t)?;
    let b = g.mean(b);
    let s = g.add(a, b)?;
    Ok(g.affine(s, -T::one(), T::zero()))
}

/// Mean of a set of spectral vectors.
pub fn mean_profile(vs: &[SpectralVector]) -> Result<Vec<f64>> {
    let first = vs
        .first()
        .ok_or_else(|| Error::invalid("empty profile set"))?;
    let mut acc = vec![0.0; first.len()];
    for v in vs {
        if v.len() != acc.len() {
            return Err(Error::shape("spectral vectors differ in length"));
        }
        for (a, x) in acc.iter_mut().zip(&v.values) {
            *a += x;
        }
    }
    let n = vs.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Spectral regularization loss between two image batches.
pub fn spectral_reg_loss(real_batch: &[Image], fake_batch: &[Image]) -> Result<f64> {
    if real_batch.is_empty() || fake_batch.is_empty() {
        return Err(Error::invalid("regularization needs nonempty batches"));
    }
    let first = &real_batch[0];
    if real_batch
        .iter()
        .chain(fake_batch)
        .any(|i| !i.same_size(first))
    {
        return Err(Error::shape(
            "regularization batches must share one image size",
        ));
    }
    let real: Vec<SpectralVector> = real_batch
        .iter()
        .map(spectral::phi)
        .collect::<Result<_>>()?;
    let fake: Vec<SpectralVector> = fake_batch
        .iter()
        .map(spectral::phi)
        .collect::<Result<_>>()?;
    let real_mean = mean_profile(&real)?;
    let mut g = Graph::<f64>::new();
    let x = g.input(stack(&fake, real_mean.len())?);
    let loss = spectral_reg_graph(&mut g, x, &real_mean)?;
    Ok(g.value(loss).data()[0])
}
