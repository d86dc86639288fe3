//! Small diffusion model conditioned on GMM latent codes.
//!
//! Every training point is paired once with a latent code built from its
//! binary attribute vector: active features carry draws from a fixed
//! three-component mixture, inactive features carry zeros. The denoiser is an
//! [`Mlp`] that sees `[x_t, time embedding, latent]` and predicts the noise.
//! Sampling predicts `x₀` at every step and re-noises it to `t − 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::losses::{self, LossName, DEFAULT_LAMBDA_FLOOR};
use crate::net::{self, Activation, BatchSampler, Gradients, Mlp};

pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_BETA_START: f64 = 0.001;
pub const DEFAULT_BETA_END: f64 = 0.2;

/// Length of the time embedding `[t/T, sin(πt/T), cos(πt/T)]`.
pub const TIME_EMBED_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleDoc", into = "ScheduleDoc")]
pub struct DiffusionSchedule {
    beta_start: f64,
    beta_end: f64,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    t_max: usize,
    beta_start: f64,
    beta_end: f64,
}

impl TryFrom<ScheduleDoc> for DiffusionSchedule {
    type Error = Error;

    fn try_from(d: ScheduleDoc) -> Result<Self> {
        build_schedule(d.t_max, d.beta_start, d.beta_end)
    }
}

impl From<DiffusionSchedule> for ScheduleDoc {
    fn from(s: DiffusionSchedule) -> Self {
        ScheduleDoc {
            t_max: s.t_max(),
            beta_start: s.beta_start,
            beta_end: s.beta_end,
        }
    }
}

/// Linear β from `beta_start` to `beta_end` over `t_max` steps.
pub fn build_schedule(t_max: usize, beta_start: f64, beta_end: f64) -> Result<DiffusionSchedule> {
    if t_max == 0 {
        return Err(Error::invalid("diffusion needs at least one step"));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )));
    }
    let beta: Vec<f64> = (0..t_max)
        .map(|i| {
            if t_max == 1 {
                beta_start
            } else {
                beta_start + (beta_end - beta_start) * i as f64 / (t_max - 1) as f64
            }
        })
        .collect();
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let mut alpha_bar = Vec::with_capacity(t_max);
    let mut acc = 1.0;
    for a in &alpha {
        acc *= a;
        alpha_bar.push(acc);
    }
    let s = DiffusionSchedule {
        beta_start,
        beta_end,
        beta,
        alpha,
        alpha_bar,
    };
    s.check_invariants()?;
    Ok(s)
}

impl Default for DiffusionSchedule {
    fn default() -> Self {
        build_schedule(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END).unwrap()
    }
}

impl DiffusionSchedule {
    pub fn t_max(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_bar(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// `ᾱ_t` for `t` in `0..=T`, with `ᾱ_0 = 1`.
    pub fn alpha_bar_at(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.t_max() {
            return Err(Error::invalid(format!(
                "step {t} outside 1..={}",
                self.t_max()
            )));
        }
        Ok(())
    }

    pub fn check_invariants(&self) -> Result<()> {
        for t in 0..self.t_max() {
            if self.alpha[t] != 1.0 - self.beta[t] {
                return Err(Error::invariant("alpha must equal 1 - beta"));
            }
            for v in [self.beta[t], self.alpha[t], self.alpha_bar[t]] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::invariant(format!("schedule value {v} outside (0, 1)")));
                }
            }
        }
        if self.alpha_bar[0] != self.alpha[0] {
            return Err(Error::invariant("alpha_bar_1 must equal alpha_1"));
        }
        if self.alpha_bar.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invariant("alpha_bar must be strictly decreasing"));
        }
        Ok(())
    }
}

/// `x_t = √ᾱ_t·x₀ + √(1−ᾱ_t)·ε`.
pub fn forward_noise(schedule: &DiffusionSchedule, x0: &[f64], t: usize, eps: &[f64]) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len(x0.len(), eps.len())?;
    let ab = schedule.alpha_bar_at(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// `x₀* = (x_t − √(1−ᾱ_t)·ε̂) / √ᾱ_t`.
pub fn predict_x0(schedule: &DiffusionSchedule, x_t: &[f64], eps_hat: &[f64], t: usize) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    check_len(x_t.len(), eps_hat.len())?;
    let ab = schedule.alpha_bar_at(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x_t.iter().zip(eps_hat).map(|(x, e)| (x - b * e) / a).collect())
}

pub fn time_embedding(t: usize, t_max: usize) -> [f64; TIME_EMBED_DIM] {
    let s = t as f64 / t_max as f64;
    [s, (PI * s).sin(), (PI * s).cos()]
}

/// Shape of the feature-conditioned latent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentSpec {
    pub n_features: usize,
    pub code_len: usize,
    pub component_means: [f64; 3],
    pub component_scale: f64,
    pub component_weights: [f64; 3],
}

impl LatentSpec {
    pub fn new(n_features: usize, code_len: usize) -> Self {
        Self {
            n_features,
            code_len,
            component_means: [-2.0, 0.0, 2.0],
            component_scale: 0.5,
            component_weights: [1.0 / 3.0; 3],
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.n_features * self.code_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.code_len == 0 {
            return Err(Error::invalid("latent needs at least one feature and code entry"));
        }
        if !(self.component_scale.is_finite() && self.component_scale > 0.0) {
            return Err(Error::invalid("latent component scale must be > 0"));
        }
        if self.component_weights.iter().any(|&w| (w - 1.0 / 3.0).abs() > 1e-12) {
            return Err(Error::invariant("latent mixture weights must be uniform"));
        }
        let m = &self.component_means;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if (m[i] - m[j]).abs() <= self.component_scale {
                return Err(Error::invariant(
                    "latent component means must be further apart than the component scale",
                ));
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.random();
        let k = if u < 1.0 / 3.0 {
            0
        } else if u < 2.0 / 3.0 {
            1
        } else {
            2
        };
        let z: f64 = StandardNormal.sample(rng);
        self.component_means[k] + self.component_scale * z
    }
}

/// Per-feature blocks `Z_k·A_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentCode {
    pub blocks: Vec<Vec<f64>>,
    pub attributes: Vec<u8>,
}

impl LatentCode {
    /// Concatenated blocks.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }
}

pub fn sample_latent(spec: &LatentSpec, attributes: &[u8], rng: &mut impl Rng) -> Result<LatentCode> {
    spec.validate()?;
    check_len(spec.n_features, attributes.len())?;
    if attributes.iter().any(|&a| a > 1) {
        return Err(Error::invalid("attributes must be 0 or 1"));
    }
    let blocks = attributes
        .iter()
        .map(|&a| {
            if a == 1 {
                (0..spec.code_len).map(|_| spec.draw(rng)).collect()
            } else {
                vec![0.0; spec.code_len]
            }
        })
        .collect();
    Ok(LatentCode {
        blocks,
        attributes: attributes.to_vec(),
    })
}

/// Anything that predicts the noise in `x_t`.
pub trait NoisePredictor {
    fn predict_noise(&self, x_t: &[f64], t: usize, latent: &[f64]) -> Result<Vec<f64>>;
}

/// Small head mapping a denoiser hidden layer to attribute probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierHead {
    /// Index into the denoiser's activations (1 = first hidden layer).
    pub tap: usize,
    pub mlp: Mlp,
}

impl ClassifierHead {
    /// Random hidden layer, zero final layer so the untrained head outputs 0.5.
    pub fn new(bottleneck_dim: usize, hidden: usize, n_attributes: usize, tap: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut mlp = Mlp::new(
            &[bottleneck_dim, hidden, n_attributes],
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        )?;
        let last = mlp.layers_mut().last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w = 0.0);
        last.biases.iter_mut().for_each(|b| *b = 0.0);
        Ok(Self { tap, mlp })
    }

    pub fn predict(&self, bottleneck: &[f64]) -> Result<Vec<f64>> {
        self.mlp.forward(bottleneck)
    }
}

/// Noise-prediction network plus optional classifier head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Denoiser {
    pub data_dim: usize,
    pub latent_dim: usize,
    pub mlp: Mlp,
    pub classifier: Option<ClassifierHead>,
}

impl Denoiser {
    pub fn new(data_dim: usize, latent_dim: usize, hidden: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut sizes = vec![data_dim + TIME_EMBED_DIM + latent_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(data_dim);
        Ok(Self {
            data_dim,
            latent_dim,
            mlp: Mlp::new(&sizes, Activation::Relu, Activation::Identity, rng)?,
            classifier: None,
        })
    }

    /// Attaches a head reading the middle hidden layer.
    pub fn with_classifier(mut self, head_hidden: usize, n_attributes: usize, rng: &mut impl Rng) -> Result<Self> {
        let sizes = self.mlp.layer_sizes();
        let tap = (sizes.len() - 1) / 2;
        if tap == 0 {
            return Err(Error::invalid("classifier head needs a hidden layer to read"));
        }
        self.classifier = Some(ClassifierHead::new(sizes[tap], head_hidden, n_attributes, tap, rng)?);
        Ok(self)
    }

    pub fn input(&self, x_t: &[f64], t: usize, t_max: usize, latent: &[f64]) -> Result<Vec<f64>> {
        check_len(self.data_dim, x_t.len())?;
        check_len(self.latent_dim, latent.len())?;
        let mut input = Vec::with_capacity(self.mlp.input_dim());
        input.extend_from_slice(x_t);
        input.extend_from_slice(&time_embedding(t, t_max));
        input.extend_from_slice(latent);
        Ok(input)
    }

    /// Attribute probabilities from the classifier head at `(x_t, t, latent)`.
    pub fn classify(&self, x_t: &[f64], t: usize, t_max: usize, latent: &[f64]) -> Result<Vec<f64>> {
        let head = self
            .classifier
            .as_ref()
            .ok_or_else(|| Error::invalid("denoiser has no classifier head"))?;
        let cache = self.mlp.forward_cache(&self.input(x_t, t, t_max, latent)?)?;
        head.predict(&cache.activations[head.tap])
    }
}

/// A denoiser bound to the schedule length it was trained with.
pub struct ScheduledDenoiser<'a> {
    pub denoiser: &'a Denoiser,
    pub t_max: usize,
}

impl NoisePredictor for ScheduledDenoiser<'_> {
    fn predict_noise(&self, x_t: &[f64], t: usize, latent: &[f64]) -> Result<Vec<f64>> {
        let out = self
            .denoiser
            .mlp
            .forward(&self.denoiser.input(x_t, t, self.t_max, latent)?)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("denoiser output at step {t}")));
        }
        Ok(out)
    }
}

/// Attribute probabilities for a bottleneck vector.
pub fn classifier_head(head: &ClassifierHead, bottleneck: &[f64]) -> Result<Vec<f64>> {
    head.predict(bottleneck)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionTrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Weight of the classifier loss; ignored without a head.
    pub lambda_cls: f64,
    pub classifier_loss: LossName,
    pub kernel_scale: f64,
    pub lambda_floor: f64,
    /// Experimental: draw a fresh latent for every visit instead of the fixed
    /// per-sample code.
    pub resample_latents: bool,
}

impl Default for DiffusionTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 64,
            iterations: 5000,
            seed: 0,
            lambda_cls: 0.1,
            classifier_loss: LossName::Bce,
            kernel_scale: 2.0,
            lambda_floor: DEFAULT_LAMBDA_FLOOR,
            resample_latents: false,
        }
    }
}

/// One training point with its fixed latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSample {
    pub x0: Vec<f64>,
    pub latent: LatentCode,
}

/// Pairs every point with a latent code drawn once.
pub fn assign_latents(
    spec: &LatentSpec,
    points: &[Vec<f64>],
    attributes: &[Vec<u8>],
    rng: &mut impl Rng,
) -> Result<Vec<DiffusionSample>> {
    check_len(points.len(), attributes.len())?;
    points
        .iter()
        .zip(attributes)
        .map(|(x, a)| {
            Ok(DiffusionSample {
                x0: x.clone(),
                latent: sample_latent(spec, a, rng)?,
            })
        })
        .collect()
}

/// Output of [`train_denoiser`].
#[derive(Debug, Clone)]
pub struct DenoiserTraining {
    pub model: Denoiser,
    /// Mean batch `‖ε − ε̂‖²` per iteration.
    pub loss_curve: Vec<f64>,
    /// Mean batch classifier loss per iteration (empty without a head).
    pub classifier_curve: Vec<f64>,
}

/// Minimizes `‖ε − ε_θ(x_t, t, 𝒵)‖²` with minibatch SGD.
pub fn train_denoiser(
    model: &Denoiser,
    schedule: &DiffusionSchedule,
    dataset: &[DiffusionSample],
    spec: Option<&LatentSpec>,
    config: &DiffusionTrainConfig,
) -> Result<DenoiserTraining> {
    if dataset.is_empty() {
        return Err(Error::invalid("diffusion training set is empty"));
    }
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::invalid("batch size and learning rate must be positive"));
    }
    if config.resample_latents && spec.is_none() {
        return Err(Error::invalid("resampling latents needs the latent spec"));
    }
    for s in dataset {
        check_len(model.data_dim, s.x0.len())?;
        check_len(model.latent_dim, s.latent.blocks.iter().map(Vec::len).sum())?;
    }
    let t_max = schedule.t_max();
    let kernel = match (&model.classifier, config.classifier_loss) {
        (Some(head), LossName::NgmgLiteral | LossName::NgmgTwoSided) => {
            Some(net::output_kernel(head.mlp.output_dim(), config.kernel_scale)?)
        }
        _ => None,
    };

    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = BatchSampler::new(dataset.len(), &mut rng);
    let mut loss_curve = Vec::with_capacity(config.iterations);
    let mut classifier_curve = Vec::new();
    let scale = 1.0 / config.batch_size as f64;

    for iter in 0..config.iterations {
        let batch = sampler.next_batch(config.batch_size, &mut rng);
        let mut grads = Gradients::zeros_like(&model.mlp);
        let mut head_grads = model.classifier.as_ref().map(|h| Gradients::zeros_like(&h.mlp));
        let (mut total, mut total_cls) = (0.0, 0.0);
        for &i in &batch {
            let sample = &dataset[i];
            let latent = if config.resample_latents {
                sample_latent(spec.unwrap(), &sample.latent.attributes, &mut rng)?.flatten()
            } else {
                sample.latent.flatten()
            };
            let t = rng.random_range(1..=t_max);
            let eps: Vec<f64> = (0..model.data_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x_t = forward_noise(schedule, &sample.x0, t, &eps)?;
            let cache = model.mlp.forward_cache(&model.input(&x_t, t, t_max, &latent)?)?;
            let upstream: Vec<f64> = cache.output().iter().zip(&eps).map(|(p, e)| 2.0 * (p - e)).collect();
            total += cache.output().iter().zip(&eps).map(|(p, e)| (p - e) * (p - e)).sum::<f64>();

            let sample_grads = match (&model.classifier, head_grads.as_mut()) {
                (Some(head), Some(hg)) => {
                    let targets: Vec<f64> = sample.latent.attributes.iter().map(|&a| a as f64).collect();
                    let bottleneck = &cache.activations[head.tap];
                    let head_cache = head.mlp.forward_cache(bottleneck)?;
                    let cls = losses::evaluate(
                        config.classifier_loss,
                        &targets,
                        head_cache.output(),
                        kernel.as_ref(),
                        config.lambda_floor,
                    )?;
                    total_cls += cls.value;
                    let up: Vec<f64> = cls.gradient.iter().map(|g| config.lambda_cls * g).collect();
                    let (g_head, g_bottleneck) = head.mlp.backward_with_input(&head_cache, &up, &[])?;
                    hg.add_scaled(&g_head, scale);
                    model
                        .mlp
                        .backward_with_taps(&cache, &upstream, &[(head.tap, g_bottleneck.as_slice())])?
                }
                _ => model.mlp.backward(&cache, &upstream)?,
            };
            grads.add_scaled(&sample_grads, scale);
        }
        let mean = total * scale;
        let mean_cls = total_cls * scale;
        if !mean.is_finite() || !mean_cls.is_finite() {
            return Err(Error::NonFinite(format!("denoiser loss at iteration {iter}")));
        }
        model.mlp.apply_gradients(&grads, config.learning_rate);
        if let (Some(head), Some(hg)) = (model.classifier.as_mut(), head_grads) {
            loss_curve.push(mean + config.lambda_cls * mean_cls);
            classifier_curve.push(mean_cls);
            head.mlp.apply_gradients(&hg, config.learning_rate);
        } else {
            loss_curve.push(mean);
        }
    }
    Ok(DenoiserTraining {
        model,
        loss_curve,
        classifier_curve,
    })
}

/// Monte Carlo estimate of `E‖ε − ε_θ(x_t, t, 𝒵)‖²` with `t` uniform on
/// `1..=T`, `draws` noise draws per sample.
pub fn l_simple(
    model: &impl NoisePredictor,
    schedule: &DiffusionSchedule,
    dataset: &[DiffusionSample],
    draws: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if dataset.is_empty() || draws == 0 {
        return Err(Error::invalid("l_simple needs samples and draws"));
    }
    let mut total = 0.0;
    for sample in dataset {
        let latent = sample.latent.flatten();
        for _ in 0..draws {
            let t = rng.random_range(1..=schedule.t_max());
            let eps: Vec<f64> = (0..sample.x0.len()).map(|_| StandardNormal.sample(rng)).collect();
            let x_t = forward_noise(schedule, &sample.x0, t, &eps)?;
            let eps_hat = model.predict_noise(&x_t, t, &latent)?;
            check_len(eps.len(), eps_hat.len())?;
            total += eps.iter().zip(&eps_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    Ok(total / (dataset.len() * draws) as f64)
}

/// Mean `‖predict_x0(x_t, ε_θ) − x₀‖²` over the dataset at a fixed step `t`.
pub fn reconstruction_error(
    model: &impl NoisePredictor,
    schedule: &DiffusionSchedule,
    dataset: &[DiffusionSample],
    t: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid("reconstruction error needs samples"));
    }
    let mut total = 0.0;
    for sample in dataset {
        let eps: Vec<f64> = (0..sample.x0.len()).map(|_| StandardNormal.sample(rng)).collect();
        let x_t = forward_noise(schedule, &sample.x0, t, &eps)?;
        let eps_hat = model.predict_noise(&x_t, t, &sample.latent.flatten())?;
        let x0 = predict_x0(schedule, &x_t, &eps_hat, t)?;
        total += x0.iter().zip(&sample.x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / dataset.len() as f64)
}

/// Reverse process that returns to `x₀` at every step:
/// `x₀* = predict_x0(x_t, ε_θ(x_t, t, 𝒵), t)`, then
/// `x_{t−1} = √ᾱ_{t−1}·x₀* + √(1−ᾱ_{t−1})·ε` with fresh `ε`.
pub fn sample(
    model: &impl NoisePredictor,
    schedule: &DiffusionSchedule,
    data_dim: usize,
    latent: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let x: Vec<f64> = (0..data_dim).map(|_| StandardNormal.sample(rng)).collect();
    sample_from(model, schedule, x, latent, rng)
}

/// [`sample`] starting from a given `x_T`.
pub fn sample_from(
    model: &impl NoisePredictor,
    schedule: &DiffusionSchedule,
    x_start: Vec<f64>,
    latent: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let mut x = x_start;
    let mut x0 = Vec::new();
    for t in (1..=schedule.t_max()).rev() {
        let eps_hat = model.predict_noise(&x, t, latent)?;
        check_len(x.len(), eps_hat.len())?;
        x0 = predict_x0(schedule, &x, &eps_hat, t)?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("x0 estimate at step {t}")));
        }
        if t > 1 {
            let ab = schedule.alpha_bar_at(t - 1);
            let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
            x = x0
                .iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(rng);
                    a * v + b * e
                })
                .collect();
        }
    }
    Ok(x0)
}

/// Trained denoiser with everything needed to sample from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionCheckpoint {
    pub schedule: DiffusionSchedule,
    pub latent_spec: LatentSpec,
    /// Column names of the data coordinates, e.g. `["x", "y"]`.
    pub data_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub denoiser: Denoiser,
}

impl DiffusionCheckpoint {
    pub fn predictor(&self) -> ScheduledDenoiser<'_> {
        ScheduledDenoiser {
            denoiser: &self.denoiser,
            t_max: self.schedule.t_max(),
        }
    }
}
