//! WGAN-GP training loop coupling the patch quantum generator to the MLP
//! critic.
//!
//! One generator iteration runs `n_critic` critic updates followed by a
//! single generator update. The critic minimizes
//! `D(x̃) - D(x) + λ(‖∇_x̂ D(x̂)‖ - 1)²` averaged over the batch, with
//! `x̂ = ε·x + (1-ε)·x̃` per sample; the generator minimizes `-D(x̃)`. Both
//! use Adam. All randomness flows from a single seeded ChaCha8 stream, and
//! per-sample draws happen in a fixed order before any parallel work so
//! runs with the same seed are bit-identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::critic::Mlp;
use crate::data::{LabeledDataset, RangeConvention};
use crate::error::{Error, Result};
use crate::generator::{self, GeneratorConfig, GeneratorParams, ImageTensor, PriorKind};

/// Hyperparameters of the optimization loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Gradient-penalty coefficient λ.
    pub lambda_gp: f64,
    /// Critic updates per generator update.
    pub n_critic: usize,
    /// Samples per update step.
    pub batch_size: usize,
    /// Number of generator iterations.
    pub generator_iterations: usize,
    pub lr_generator: f64,
    pub lr_critic: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Seed for the single RNG stream driving the whole run.
    pub seed: u64,
    /// Emit a checkpoint every this many generator iterations (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_gp: 10.0,
            n_critic: 5,
            batch_size: 25,
            generator_iterations: 600,
            lr_generator: 0.01,
            lr_critic: 0.0002,
            beta1: 0.0,
            beta2: 0.9,
            adam_epsilon: 1e-8,
            seed: 0,
            checkpoint_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.n_critic == 0 {
            return Err(Error::Config("n_critic must be positive".into()));
        }
        // Each check also rejects NaN.
        let not_positive = |x: f64| x.is_nan() || x <= 0.0;
        if not_positive(self.lr_generator) || not_positive(self.lr_critic) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if not_positive(self.adam_epsilon) {
            return Err(Error::Config("adam_epsilon must be positive".into()));
        }
        if self.lambda_gp.is_nan() || self.lambda_gp < 0.0 {
            return Err(Error::Config("lambda_gp must be non-negative".into()));
        }
        Ok(())
    }
}

/// First and second moment accumulators for one parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    /// One bias-corrected Adam update applied in place.
    pub fn update(
        &mut self,
        params: &mut [f64],
        grad: &[f64],
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Which optimizer produced a log record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Critic,
    Generator,
}

/// One logged update step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub kind: RecordKind,
    /// Generator iteration this step belongs to (1-based).
    pub iteration: usize,
    /// Loss the step minimized (critic loss incl. penalty, or `-D(x̃)`).
    pub loss: f64,
    /// Mean gradient penalty of a critic step.
    pub penalty: Option<f64>,
    /// Wasserstein estimate `mean D(x) - mean D(x̃)`.
    pub wasserstein: Option<f64>,
}

/// Chronological sequence of update records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn last_wasserstein(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.wasserstein)
    }
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub log: TrainingLog,
    pub generator: GeneratorParams,
    pub critic: Mlp,
}

/// Checkpoint context handed to the callback.
pub struct Checkpoint<'a> {
    pub iteration: usize,
    pub generator: &'a GeneratorParams,
    pub critic: &'a Mlp,
    pub log: &'a TrainingLog,
}

/// Draw one latent vector from the configured prior.
pub fn sample_prior(kind: PriorKind, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    match kind {
        PriorKind::Uniform01 => (0..dim).map(|_| rng.random::<f64>()).collect(),
        PriorKind::StandardNormal => (0..dim).map(|_| rng.sample(StandardNormal)).collect(),
    }
}

struct CriticDraw {
    real_idx: usize,
    z: Vec<f64>,
    epsilon: f64,
}

/// One critic update. Returns the log record it appended.
#[allow(clippy::too_many_arguments)]
pub fn critic_step(
    gen_params: &GeneratorParams,
    gen_cfg: &GeneratorConfig,
    critic: &mut Mlp,
    adam: &mut AdamState,
    tcfg: &TrainConfig,
    dataset: &LabeledDataset,
    rng: &mut impl Rng,
    iteration: usize,
    log: &mut TrainingLog,
) -> Result<()> {
    let m = tcfg.batch_size;
    let n_latent = gen_cfg.n_qubits();
    // All stochastic choices happen here, in a fixed per-sample order.
    let draws: Vec<CriticDraw> = (0..m)
        .map(|_| CriticDraw {
            real_idx: rng.random_range(0..dataset.images.len()),
            z: sample_prior(gen_cfg.prior, n_latent, rng),
            epsilon: rng.random::<f64>(),
        })
        .collect();

    let fakes: Vec<ImageTensor> = draws
        .par_iter()
        .map(|d| generator::generate(gen_params, &d.z, gen_cfg))
        .collect::<Result<_>>()?;

    let mut loss = 0.0;
    let mut mean_real = 0.0;
    let mut mean_fake = 0.0;
    let mut mean_penalty = 0.0;
    let mut grad = vec![0.0; critic.n_params()];
    let scale = 1.0 / m as f64;

    for (d, fake) in draws.iter().zip(&fakes) {
        let real = &dataset.images[d.real_idx].pixels;
        let s_real = critic.score(real)?;
        let s_fake = critic.score(&fake.pixels)?;
        let (pen, pen_grad) =
            critic.gradient_penalty(real, &fake.pixels, d.epsilon, tcfg.lambda_gp)?;
        loss += (s_fake - s_real + pen) * scale;
        mean_real += s_real * scale;
        mean_fake += s_fake * scale;
        mean_penalty += pen * scale;
        for (g, pg) in grad.iter_mut().zip(&pen_grad) {
            *g += pg * scale;
        }
    }

    let fake_refs: Vec<&[f64]> = fakes.iter().map(|f| f.pixels.as_slice()).collect();
    let real_refs: Vec<&[f64]> = draws
        .iter()
        .map(|d| dataset.images[d.real_idx].pixels.as_slice())
        .collect();
    let ones = vec![1.0; m];
    let neg_ones = vec![-1.0; m];
    let g_fake = critic.batch_score_grad(&fake_refs, &ones)?;
    let g_real = critic.batch_score_grad(&real_refs, &neg_ones)?;
    for i in 0..grad.len() {
        grad[i] += g_fake[i] + g_real[i];
    }

    adam.update(
        critic.params_mut(),
        &grad,
        tcfg.lr_critic,
        tcfg.beta1,
        tcfg.beta2,
        tcfg.adam_epsilon,
    );

    log.records.push(LogRecord {
        kind: RecordKind::Critic,
        iteration,
        loss,
        penalty: Some(mean_penalty),
        wasserstein: Some(mean_real - mean_fake),
    });
    Ok(())
}

/// One generator update. `wasserstein` is carried over from the most recent
/// critic record, which is the latest estimate available at this point.
#[allow(clippy::too_many_arguments)]
pub fn generator_step(
    gen_params: &mut GeneratorParams,
    gen_cfg: &GeneratorConfig,
    critic: &Mlp,
    adam: &mut AdamState,
    tcfg: &TrainConfig,
    rng: &mut impl Rng,
    iteration: usize,
    log: &mut TrainingLog,
) -> Result<()> {
    let m = tcfg.batch_size;
    let n_latent = gen_cfg.n_qubits();
    let zs: Vec<Vec<f64>> = (0..m)
        .map(|_| sample_prior(gen_cfg.prior, n_latent, rng))
        .collect();

    let per_sample: Vec<(f64, Vec<f64>)> = zs
        .par_iter()
        .map(|z| -> Result<(f64, Vec<f64>)> {
            let fake = generator::generate(gen_params, z, gen_cfg)?;
            let score = critic.score(&fake.pixels)?;
            let d_input = critic.input_grad(&fake.pixels)?;
            // Loss is -D(x̃), so the upstream image gradient is -∇D.
            let mut upstream = ImageTensor::zeros(gen_cfg.image_height, gen_cfg.image_width);
            for (u, g) in upstream.pixels.iter_mut().zip(&d_input) {
                *u = -g;
            }
            let g = generator::generator_backward(gen_params, z, gen_cfg, &upstream)?;
            Ok((-score, g))
        })
        .collect::<Result<_>>()?;

    let scale = 1.0 / m as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; gen_params.angles.len()];
    for (l, g) in &per_sample {
        loss += l * scale;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi * scale;
        }
    }

    adam.update(
        &mut gen_params.angles,
        &grad,
        tcfg.lr_generator,
        tcfg.beta1,
        tcfg.beta2,
        tcfg.adam_epsilon,
    );

    log.records.push(LogRecord {
        kind: RecordKind::Generator,
        iteration,
        loss,
        penalty: None,
        wasserstein: log.last_wasserstein(),
    });
    Ok(())
}

/// Run the full adversarial loop.
///
/// The dataset must use the unit range convention and match the generator's
/// image shape. `checkpoint` fires after every `checkpoint_every`-th
/// generator iteration, and once more (best effort) when a step fails, so
/// callers can persist the partial log before the error surfaces.
pub fn train(
    tcfg: &TrainConfig,
    gen_cfg: &GeneratorConfig,
    dataset: &LabeledDataset,
    mut checkpoint: impl FnMut(&Checkpoint) -> Result<()>,
) -> Result<TrainOutput> {
    tcfg.validate()?;
    gen_cfg.validate()?;
    if dataset.images.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    if dataset.range != RangeConvention::Unit {
        return Err(Error::Config(
            "training expects unit-range images (pixels in [0, 1])".into(),
        ));
    }
    let n_pixels = gen_cfg.image_height * gen_cfg.image_width;
    for (i, img) in dataset.images.iter().enumerate() {
        if img.height != gen_cfg.image_height || img.width != gen_cfg.image_width {
            return Err(Error::Shape(format!(
                "dataset image {i} is {}x{}, generator produces {}x{}",
                img.height, img.width, gen_cfg.image_height, gen_cfg.image_width
            )));
        }
        debug_assert_eq!(img.pixels.len(), n_pixels);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut gen_params = GeneratorParams::init_uniform(gen_cfg, &mut rng);
    let mut critic = Mlp::critic(n_pixels)?;
    critic.init_glorot(&mut rng);

    let mut gen_adam = AdamState::new(gen_params.angles.len());
    let mut critic_adam = AdamState::new(critic.n_params());
    let mut log = TrainingLog::default();

    for iteration in 1..=tcfg.generator_iterations {
        let step_result = (|| -> Result<()> {
            for _ in 0..tcfg.n_critic {
                critic_step(
                    &gen_params,
                    gen_cfg,
                    &mut critic,
                    &mut critic_adam,
                    tcfg,
                    dataset,
                    &mut rng,
                    iteration,
                    &mut log,
                )?;
            }
            generator_step(
                &mut gen_params,
                gen_cfg,
                &critic,
                &mut gen_adam,
                tcfg,
                &mut rng,
                iteration,
                &mut log,
            )
        })();
        if let Err(e) = step_result {
            let _ = checkpoint(&Checkpoint {
                iteration,
                generator: &gen_params,
                critic: &critic,
                log: &log,
            });
            return Err(e.in_training(iteration, tcfg.seed));
        }

        if tcfg.checkpoint_every > 0 && iteration % tcfg.checkpoint_every == 0 {
            checkpoint(&Checkpoint {
                iteration,
                generator: &gen_params,
                critic: &critic,
                log: &log,
            })?;
        }
    }

    Ok(TrainOutput {
        log,
        generator: gen_params,
        critic,
    })
}

/// Linear interpolation path from `z_a` to `z_b` with `segments + 1` points.
///
/// The endpoints are returned as exact copies of the inputs, so frame 0 and
/// frame `segments` are bit-identical to `z_a` and `z_b`.
pub fn interpolate_latents(z_a: &[f64], z_b: &[f64], segments: usize) -> Result<Vec<Vec<f64>>> {
    if z_a.len() != z_b.len() {
        return Err(Error::Shape(format!(
            "latent endpoints differ in length: {} vs {}",
            z_a.len(),
            z_b.len()
        )));
    }
    if segments == 0 {
        return Err(Error::Config("segments must be positive".into()));
    }
    let mut frames = Vec::with_capacity(segments + 1);
    for t in 0..=segments {
        if t == 0 {
            frames.push(z_a.to_vec());
        } else if t == segments {
            frames.push(z_b.to_vec());
        } else {
            let alpha = t as f64 / segments as f64;
            frames.push(
                z_a.iter()
                    .zip(z_b)
                    .map(|(a, b)| a + alpha * (b - a))
                    .collect(),
            );
        }
    }
    Ok(frames)
}
