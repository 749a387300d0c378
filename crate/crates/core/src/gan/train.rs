//! Alternating classifier / discriminator / generator updates.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::realness::{self, SpectralClassifier};
use crate::rng::{SeededRng, Stream};
use crate::spectral::{self, SpectralVector};
use crate::tensor_nn::layers::Mode;
use crate::tensor_nn::{AdamState, Graph, ParamStore, Scalar, Tensor};

use super::config::{GanConfig, GanMode};
use super::losses::{classifier_probs, discriminator_loss, generator_loss};
use super::nets::{Discriminator, Generator, IMAGE_SIZE};

/// `[batch, latent_dim]` standard normal draws.
pub fn sample_latent<T: Scalar>(batch: usize, latent_dim: usize, rng: &mut SeededRng) -> Tensor<T> {
    let data = (0..batch * latent_dim)
        .map(|_| T::from_f64_lossy(rng.normal()))
        .collect();
    Tensor::new(&[batch, latent_dim], data).expect("nonzero latent shape")
}

/// `phi` of each sample of a `[B, 1, H, W]` tensor after mapping `[-1, 1]`
/// to `[0, 1]`.
pub fn phi_of_batch<T: Scalar>(images: &Tensor<T>) -> Result<Vec<SpectralVector>> {
    let (_, c, h, w) = images.dims4()?;
    if c != 1 {
        return Err(Error::shape("phi_of_batch expects single-channel images"));
    }
    Ok(images
        .data()
        .chunks(h * w)
        .map(|plane| {
            let unit: Vec<f64> = plane
                .iter()
                .map(|v| (v.to_f64_lossy() + 1.0) / 2.0)
                .collect();
            SpectralVector {
                values: spectral::phi_with_saved(&unit, h, w).0,
                normalized: true,
            }
        })
        .collect())
}

/// `sum_r |mean phi_fake(r) - mean phi_real(r)|`.
pub fn spectral_discrepancy(real: &[SpectralVector], fake: &[SpectralVector]) -> Result<f64> {
    let r = realness::mean_profile(real)?;
    let f = realness::mean_profile(fake)?;
    if r.len() != f.len() {
        return Err(Error::shape("spectral profiles differ in length"));
    }
    Ok(r.iter().zip(&f).map(|(a, b)| (a - b).abs()).sum())
}

/// Losses of one training step, as seen by each update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub c_loss: Option<f64>,
    pub d_loss: f64,
    pub g_loss: f64,
}

/// One row of the metrics history. `c_loss` is the classifier's negated
/// objective and is absent when the classifier is not in use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub iteration: u64,
    pub d_loss: f32,
    pub g_loss: f32,
    pub c_loss: Option<f32>,
    pub mean_d_real: f32,
    pub mean_d_fake: f32,
    pub spectral_discrepancy: f32,
}

pub const METRICS_HEADER: &str =
    "iteration,d_loss,g_loss,c_loss,mean_D_real,mean_D_fake,spectral_discrepancy";

impl StepMetrics {
    /// CSV row matching [`METRICS_HEADER`]. Floats use the shortest
    /// representation that round-trips.
    pub fn csv_row(&self) -> String {
        let c = self.c_loss.map(|v| format!("{v:?}")).unwrap_or_default();
        format!(
            "{},{:?},{:?},{},{:?},{:?},{:?}",
            self.iteration,
            self.d_loss,
            self.g_loss,
            c,
            self.mean_d_real,
            self.mean_d_fake,
            self.spectral_discrepancy
        )
    }

    fn to_row(self) -> [f32; 7] {
        [
            self.iteration as f32,
            self.d_loss,
            self.g_loss,
            self.c_loss.unwrap_or(f32::NAN),
            self.mean_d_real,
            self.mean_d_fake,
            self.spectral_discrepancy,
        ]
    }

    fn from_row(iteration: u64, row: &[f32]) -> Self {
        StepMetrics {
            iteration,
            d_loss: row[1],
            g_loss: row[2],
            c_loss: (!row[3].is_nan()).then_some(row[3]),
            mean_d_real: row[4],
            mean_d_fake: row[5],
            spectral_discrepancy: row[6],
        }
    }
}

/// Metrics history as CSV text.
pub fn metrics_csv(history: &[StepMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in history {
        out.push_str(&m.csv_row());
        out.push('\n');
    }
    out
}

/// Snapshot taken every `log_every` steps on the fixed evaluation latents.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: StepMetrics,
    pub samples: Tensor<f32>,
}

/// Models, optimizers, random streams and history of one training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: GanConfig,
    pub generator: Generator<f32>,
    pub discriminator: Discriminator<f32>,
    pub classifier: SpectralClassifier<f32>,
    g_adam: AdamState<f32>,
    d_adam: AdamState<f32>,
    c_adam: AdamState<f32>,
    latent_rng: SeededRng,
    data_rng: SeededRng,
    eval_latent: Tensor<f32>,
    targets: Vec<Image>,
    iteration: u64,
    history: Vec<StepMetrics>,
}

fn check_finite(what: &str, iteration: u64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!(
            "{what} is {v} at iteration {iteration}"
        )))
    }
}

impl Trainer {
    /// Fresh models for `targets`, which must be 16x16 grayscale images.
    pub fn new(config: GanConfig, targets: Vec<Image>) -> Result<Self> {
        config.validate()?;
        if targets.is_empty() {
            return Err(Error::invalid("training needs at least one target image"));
        }
        for t in &targets {
            if t.height() != IMAGE_SIZE || t.width() != IMAGE_SIZE || t.channels() != 1 {
                return Err(Error::shape(format!(
                    "target images must be {IMAGE_SIZE}x{IMAGE_SIZE} grayscale, got {}x{}x{}",
                    t.height(),
                    t.width(),
                    t.channels()
                )));
            }
        }
        let seed = config.seed;
        let generator = Generator::new(
            config.arch,
            config.latent_dim,
            config.widths,
            &mut SeededRng::new(seed, Stream::GeneratorInit),
        );
        let discriminator = Discriminator::new(
            config.arch,
            config.widths,
            &mut SeededRng::new(seed, Stream::DiscriminatorInit),
        );
        let classifier = SpectralClassifier::for_image_size(
            IMAGE_SIZE,
            IMAGE_SIZE,
            &mut SeededRng::new(seed, Stream::ClassifierInit),
        );
        let eval_latent = sample_latent(
            config.eval_batch,
            config.latent_dim,
            &mut SeededRng::new(seed, Stream::Evaluation),
        );
        Ok(Trainer {
            g_adam: AdamState::new(config.adam, &generator.store),
            d_adam: AdamState::new(config.adam, &discriminator.store),
            c_adam: AdamState::new(config.adam, &classifier.store),
            generator,
            discriminator,
            classifier,
            latent_rng: SeededRng::new(seed, Stream::Latent),
            data_rng: SeededRng::new(seed, Stream::Data),
            eval_latent,
            targets,
            iteration: 0,
            history: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &GanConfig {
        &self.config
    }

    /// Number of completed training steps.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn history(&self) -> &[StepMetrics] {
        &self.history
    }

    pub fn targets(&self) -> &[Image] {
        &self.targets
    }

    /// Lets a resumed run continue to a different iteration count.
    pub fn set_iterations(&mut self, iterations: u64) {
        self.config.iterations = iterations;
    }

    /// The single target replicated is equivalent to one copy, so a one-image
    /// target set yields a batch of one.
    fn real_batch(&mut self) -> Result<Tensor<f32>> {
        if self.targets.len() == 1 {
            return Ok(self.targets[0].to_tensor());
        }
        let n = self.targets.len() as u64;
        let picks: Vec<Image> = (0..self.config.batch_size)
            .map(|_| self.targets[(self.data_rng.next_u64() % n) as usize].clone())
            .collect();
        Image::batch_tensor(&picks)
    }

    /// One classifier, discriminator and generator update, in that order.
    pub fn step(&mut self) -> Result<StepLosses> {
        self.step_inner(false)
    }

    /// Like [`Trainer::step`] but also trains the classifier and feeds it
    /// into the blend when the configuration would skip it (`lambda = 1`).
    pub fn step_forcing_classifier(&mut self) -> Result<StepLosses> {
        self.step_inner(true)
    }

    fn step_inner(&mut self, force_classifier: bool) -> Result<StepLosses> {
        let cfg = self.config.clone();
        let it = self.iteration;
        let use_c = force_classifier || cfg.uses_classifier();
        let lambda = cfg.effective_lambda();
        let z = sample_latent::<f32>(cfg.batch_size, cfg.latent_dim, &mut self.latent_rng);
        let real = self.real_batch()?;
        let n_real = real.shape()[0];

        // generator forward, reused by the generator update below
        let mut gg = Graph::new();
        let gb = self.generator.store.bind(&mut gg, true);
        let zv = gg.input(z);
        let fake = self.generator.forward(&mut gg, &gb, zv, Mode::Train)?;
        let fake_value = gg.value(fake).clone();

        let mut real_phi = None;
        let c_loss = if use_c {
            let rp = phi_of_batch(&real)?;
            let fp = phi_of_batch(&fake_value)?;
            let objective = self.classifier.train_step(&mut self.c_adam, &rp, &fp)?;
            real_phi = Some(rp);
            Some(-check_finite("classifier objective", it, objective)?)
        } else {
            None
        };

        // discriminator on real and detached fake samples in one batch
        let mut gd = Graph::new();
        let db = self.discriminator.store.bind(&mut gd, true);
        let mut both = real.clone().into_data();
        both.extend_from_slice(fake_value.data());
        let x = gd.input(Tensor::new(
            &[n_real + cfg.batch_size, 1, IMAGE_SIZE, IMAGE_SIZE],
            both,
        )?);
        let logits = self.discriminator.forward(&mut gd, &db, x, Mode::Train)?;
        let lr = gd.slice0(logits, 0, n_real)?;
        let lf = gd.slice0(logits, n_real, cfg.batch_size)?;
        let (mut cr, mut cf) = (None, None);
        if use_c {
            let cb = self.classifier.store.bind(&mut gd, false);
            let xr = gd.slice0(x, 0, n_real)?;
            let xf = gd.slice0(x, n_real, cfg.batch_size)?;
            cr = Some(classifier_probs(&mut gd, &cb, &self.classifier, xr)?);
            cf = Some(classifier_probs(&mut gd, &cb, &self.classifier, xf)?);
        }
        let d_loss_var = discriminator_loss(&mut gd, lr, lf, cr, cf, lambda)?;
        let d_loss = check_finite(
            "discriminator loss",
            it,
            gd.value(d_loss_var).data()[0] as f64,
        )?;
        let grads = gd.backward(d_loss_var)?;
        self.discriminator.store.zero_grad();
        self.discriminator.store.accumulate_grads(&grads, &db);
        self.d_adam.step(&mut self.discriminator.store);

        // generator through the updated, frozen discriminator
        let db = self.discriminator.store.bind(&mut gg, false);
        let lf = self
            .discriminator
            .forward(&mut gg, &db, fake, Mode::Train)?;
        let mut cf = None;
        if use_c {
            let cb = self.classifier.store.bind(&mut gg, false);
            cf = Some(classifier_probs(&mut gg, &cb, &self.classifier, fake)?);
        }
        let mut g_loss_var = generator_loss(&mut gg, lf, cf, lambda)?;
        if cfg.mode == GanMode::SsdReg {
            let target = match real_phi {
                Some(rp) => realness::mean_profile(&rp)?,
                None => realness::mean_profile(&phi_of_batch(&real)?)?,
            };
            let unit = gg.affine(fake, 0.5, 0.5);
            let phis = gg.phi(unit)?;
            let reg = realness::spectral_reg_graph(&mut gg, phis, &target)?;
            let reg = gg.affine(reg, cfg.w_reg as f32, 0.0);
            g_loss_var = gg.add(g_loss_var, reg)?;
        }
        let g_loss = check_finite("generator loss", it, gg.value(g_loss_var).data()[0] as f64)?;
        let grads = gg.backward(g_loss_var)?;
        self.generator.store.zero_grad();
        self.generator.store.accumulate_grads(&grads, &gb);
        self.g_adam.step(&mut self.generator.store);

        self.iteration += 1;
        Ok(StepLosses {
            c_loss,
            d_loss,
            g_loss,
        })
    }

    /// Real images used for evaluation: every target, capped at the
    /// evaluation batch size.
    fn eval_reals(&self) -> Result<Tensor<f32>> {
        let n = self.targets.len().min(self.config.eval_batch);
        Image::batch_tensor(&self.targets[..n])
    }

    /// Metrics on the fixed evaluation latents with running statistics and
    /// frozen power-iteration state; changes nothing.
    pub fn evaluate(&mut self) -> Result<Evaluation> {
        let cfg = &self.config;
        let use_c = cfg.uses_classifier();
        let lambda = cfg.effective_lambda();
        let samples = self.generator.generate(&self.eval_latent, Mode::Eval)?;
        let real = self.eval_reals()?;

        let mut g = Graph::new();
        let db = self.discriminator.store.bind(&mut g, false);
        let xr = g.input(real.clone());
        let xf = g.input(samples.clone());
        let lr = self.discriminator.forward(&mut g, &db, xr, Mode::Eval)?;
        let lf = self.discriminator.forward(&mut g, &db, xf, Mode::Eval)?;
        let (dr, df) = (g.sigmoid(lr), g.sigmoid(lf));
        let mean = |g: &Graph<f32>, v| {
            let d = g.value(v).data();
            d.iter().map(|&x| x as f64).sum::<f64>() / d.len() as f64
        };
        let (mean_d_real, mean_d_fake) = (mean(&g, dr), mean(&g, df));
        let real_phi = phi_of_batch(&real)?;
        let fake_phi = phi_of_batch(&samples)?;
        let (mut c_loss, mut cr, mut cf) = (None, None, None);
        if use_c {
            let cb = self.classifier.store.bind(&mut g, false);
            let r = classifier_probs(&mut g, &cb, &self.classifier, xr)?;
            let f = classifier_probs(&mut g, &cb, &self.classifier, xf)?;
            let objective = realness::spectral_objective(&mut g, r, f)?;
            c_loss = Some(-(g.value(objective).data()[0] as f64));
            (cr, cf) = (Some(r), Some(f));
        }
        let d_loss = discriminator_loss(&mut g, lr, lf, cr, cf, lambda)?;
        let mut g_loss = generator_loss(&mut g, lf, cf, lambda)?;
        if cfg.mode == GanMode::SsdReg {
            let unit = g.affine(xf, 0.5, 0.5);
            let phis = g.phi(unit)?;
            let reg =
                realness::spectral_reg_graph(&mut g, phis, &realness::mean_profile(&real_phi)?)?;
            let reg = g.affine(reg, cfg.w_reg as f32, 0.0);
            g_loss = g.add(g_loss, reg)?;
        }
        let metrics = StepMetrics {
            iteration: self.iteration,
            d_loss: g.value(d_loss).data()[0],
            g_loss: g.value(g_loss).data()[0],
            c_loss: c_loss.map(|v| v as f32),
            mean_d_real: mean_d_real as f32,
            mean_d_fake: mean_d_fake as f32,
            spectral_discrepancy: spectral_discrepancy(&real_phi, &fake_phi)? as f32,
        };
        Ok(Evaluation { metrics, samples })
    }

    /// Trains until `config.iterations`, recording metrics at every multiple
    /// of `log_every` (including step 0) and handing each snapshot to
    /// `on_log`.
    pub fn run(&mut self, mut on_log: impl FnMut(&Evaluation) -> Result<()>) -> Result<()> {
        loop {
            let logged = self.history.last().map(|m| m.iteration) == Some(self.iteration);
            if self.iteration.is_multiple_of(self.config.log_every) && !logged {
                let eval = self.evaluate()?;
                self.history.push(eval.metrics);
                on_log(&eval)?;
            }
            if self.iteration >= self.config.iterations {
                return Ok(());
            }
            self.step()?;
        }
    }

    /// Smallest per-sample mean absolute deviation from the first target
    /// over the evaluation batch.
    pub fn reconstruction_error(&mut self) -> Result<f64> {
        let samples = self.generator.generate(&self.eval_latent, Mode::Eval)?;
        let target = self.targets[0].data();
        Ok(samples
            .data()
            .chunks(target.len())
            .map(|s| {
                s.iter()
                    .zip(target)
                    .map(|(&a, &b)| (a as f64 - b as f64).abs())
                    .sum::<f64>()
                    / target.len() as f64
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Every piece of state needed to resume, as named tensors.
    pub fn state(&self) -> Vec<(String, Tensor<f32>)> {
        let mut out = Vec::new();
        for store in [
            &self.generator.store,
            &self.discriminator.store,
            &self.classifier.store,
        ] {
            out.extend(
                store
                    .named_tensors()
                    .into_iter()
                    .map(|(n, t)| (n.to_string(), t.clone())),
            );
        }
        for (tag, adam, store) in self.optimizers() {
            out.push((format!("adam.{tag}.step"), u64_tensor(adam.step)));
            for ((p, m), s) in store.params().iter().zip(&adam.m).zip(&adam.s) {
                out.push((format!("adam.{tag}.m.{}", p.name), m.clone()));
                out.push((format!("adam.{tag}.s.{}", p.name), s.clone()));
            }
        }
        out.push((
            "rng.latent".into(),
            bytes_tensor(&self.latent_rng.state_bytes()),
        ));
        out.push((
            "rng.data".into(),
            bytes_tensor(&self.data_rng.state_bytes()),
        ));
        out.push(("trainer.iteration".into(), u64_tensor(self.iteration)));
        out.push((
            "trainer.identity".into(),
            bytes_tensor(self.identity().as_bytes()),
        ));
        if !self.history.is_empty() {
            let iters: Vec<u8> = self
                .history
                .iter()
                .flat_map(|m| m.iteration.to_le_bytes())
                .collect();
            out.push(("trainer.history.iterations".into(), bytes_tensor(&iters)));
            let rows: Vec<f32> = self.history.iter().flat_map(|m| m.to_row()).collect();
            out.push((
                "trainer.history".into(),
                Tensor::new(&[self.history.len(), 7], rows).expect("history shape"),
            ));
        }
        out
    }

    fn optimizers(&self) -> [(&'static str, &AdamState<f32>, &ParamStore<f32>); 3] {
        [
            ("g", &self.g_adam, &self.generator.store),
            ("d", &self.d_adam, &self.discriminator.store),
            ("c", &self.c_adam, &self.classifier.store),
        ]
    }

    /// Settings that must agree between a checkpoint and the run resuming it.
    fn identity(&self) -> String {
        let c = &self.config;
        format!(
            "mode={};lambda={:?};arch={};g_width={};d_width={};batch_size={};latent_dim={};seed={};w_reg={:?};lr={:?};beta1={:?};beta2={:?};log_every={};eval_batch={}",
            c.mode,
            c.lambda,
            c.arch,
            c.widths.generator,
            c.widths.discriminator,
            c.batch_size,
            c.latent_dim,
            c.seed,
            c.w_reg,
            c.adam.lr,
            c.adam.beta1,
            c.adam.beta2,
            c.log_every,
            c.eval_batch
        )
    }

    /// `key=value` settings recorded in a state written by [`Trainer::state`];
    /// keys match the run configuration file.
    pub fn state_settings(state: &[(String, Tensor<f32>)]) -> Result<Vec<(String, String)>> {
        let identity = state
            .iter()
            .find(|(n, _)| n == "trainer.identity")
            .ok_or_else(|| {
                Error::Checkpoint("checkpoint lacks tensor 'trainer.identity'".into())
            })?;
        let text = String::from_utf8(tensor_bytes(&identity.1)?)
            .map_err(|_| Error::Checkpoint("trainer identity is not UTF-8".into()))?;
        text.split(';')
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Checkpoint(format!("malformed identity entry '{kv}'")))
            })
            .collect()
    }

    /// Restores state written by [`Trainer::state`]. Every tensor of this
    /// run must be present with a matching shape.
    pub fn restore(&mut self, state: &[(String, Tensor<f32>)]) -> Result<()> {
        let find = |name: &str| -> Result<&Tensor<f32>> {
            state
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::Checkpoint(format!("checkpoint lacks tensor '{name}'")))
        };
        let identity = tensor_bytes(find("trainer.identity")?)?;
        if identity != self.identity().as_bytes() {
            return Err(Error::Checkpoint(format!(
                "checkpoint was written by a different configuration: {}",
                String::from_utf8_lossy(&identity)
            )));
        }
        for store in [
            &mut self.generator.store,
            &mut self.discriminator.store,
            &mut self.classifier.store,
        ] {
            let names: Vec<String> = store
                .named_tensors()
                .iter()
                .map(|(n, _)| n.to_string())
                .collect();
            for name in names {
                store.assign(&name, find(&name)?)?;
            }
        }
        let stores = [
            &self.generator.store,
            &self.discriminator.store,
            &self.classifier.store,
        ];
        for ((tag, adam), store) in [
            ("g", &mut self.g_adam),
            ("d", &mut self.d_adam),
            ("c", &mut self.c_adam),
        ]
        .into_iter()
        .zip(stores)
        {
            adam.step = tensor_u64(find(&format!("adam.{tag}.step"))?)?;
            for ((p, m), s) in store.params().iter().zip(&mut adam.m).zip(&mut adam.s) {
                for (slot, kind) in [(m, "m"), (s, "s")] {
                    let name = format!("adam.{tag}.{kind}.{}", p.name);
                    let t = find(&name)?;
                    if t.shape() != slot.shape() {
                        return Err(Error::Checkpoint(format!(
                            "tensor '{name}' has shape {:?}, expected {:?}",
                            t.shape(),
                            slot.shape()
                        )));
                    }
                    *slot = t.clone();
                }
            }
        }
        self.latent_rng = SeededRng::from_state_bytes(&tensor_bytes(find("rng.latent")?)?)?;
        self.data_rng = SeededRng::from_state_bytes(&tensor_bytes(find("rng.data")?)?)?;
        self.iteration = tensor_u64(find("trainer.iteration")?)?;
        self.history = match state.iter().find(|(n, _)| n == "trainer.history") {
            None => Vec::new(),
            Some((_, rows)) => {
                let iters = tensor_bytes(find("trainer.history.iterations")?)?;
                let (n, cols) = rows.dims2()?;
                if cols != 7 || iters.len() != n * 8 {
                    return Err(Error::Checkpoint("malformed metrics history".into()));
                }
                rows.data()
                    .chunks(7)
                    .zip(iters.chunks(8))
                    .map(|(row, it)| {
                        StepMetrics::from_row(
                            u64::from_le_bytes(it.try_into().expect("8 bytes")),
                            row,
                        )
                    })
                    .collect()
            }
        };
        Ok(())
    }
}

/// Bytes stored one per element as exact small floats.
fn bytes_tensor(bytes: &[u8]) -> Tensor<f32> {
    let data: Vec<f32> = if bytes.is_empty() {
        vec![-1.0]
    } else {
        bytes.iter().map(|&b| b as f32).collect()
    };
    let len = data.len();
    Tensor::new(&[len], data).expect("nonempty")
}

fn tensor_bytes(t: &Tensor<f32>) -> Result<Vec<u8>> {
    if t.data() == [-1.0] {
        return Ok(Vec::new());
    }
    t.data()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
                Ok(v as u8)
            } else {
                Err(Error::Checkpoint(format!(
                    "byte tensor holds non-byte value {v}"
                )))
            }
        })
        .collect()
}

fn u64_tensor(v: u64) -> Tensor<f32> {
    bytes_tensor(&v.to_le_bytes())
}

fn tensor_u64(t: &Tensor<f32>) -> Result<u64> {
    let b = tensor_bytes(t)?;
    let arr: [u8; 8] = b
        .try_into()
        .map_err(|_| Error::Checkpoint("counter tensor must hold 8 bytes".into()))?;
    Ok(u64::from_le_bytes(arr))
}

/// Builds a trainer and runs it to completion.
pub fn train(config: GanConfig, targets: Vec<Image>) -> Result<Trainer> {
    let mut t = Trainer::new(config, targets)?;
    t.run(|_| Ok(()))?;
    Ok(t)
}
