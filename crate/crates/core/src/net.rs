//! Small fully connected network with hand-written backpropagation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::losses::{self, LossName, DEFAULT_LAMBDA_FLOOR};
use crate::ngmg::{self, KernelMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Affine layer, weights row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpDoc", into = "MlpDoc")]
pub struct Mlp {
    layers: Vec<Layer>,
    hidden_activation: Activation,
    output_activation: Activation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDoc {
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    layers: Vec<Layer>,
}

impl TryFrom<MlpDoc> for Mlp {
    type Error = Error;

    fn try_from(doc: MlpDoc) -> Result<Self> {
        let mlp = Mlp {
            layers: doc.layers,
            hidden_activation: doc.hidden_activation,
            output_activation: doc.output_activation,
        };
        if mlp.layer_sizes() != doc.layer_sizes {
            return Err(Error::Parse("layer_sizes disagree with layer shapes".into()));
        }
        mlp.validate()?;
        Ok(mlp)
    }
}

impl From<Mlp> for MlpDoc {
    fn from(m: Mlp) -> Self {
        MlpDoc {
            layer_sizes: m.layer_sizes(),
            hidden_activation: m.hidden_activation,
            output_activation: m.output_activation,
            layers: m.layers,
        }
    }
}

/// Values recorded by a forward pass for use in [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Parameter gradients, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(m: &Mlp) -> Self {
        Self {
            weights: m.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: m.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|&v| v == 0.0)
    }
}

impl Mlp {
    /// Random initialization, uniform in `±1/√fan_in`.
    pub fn new(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut m = Self::zeros(layer_sizes, hidden_activation, output_activation)?;
        for layer in &mut m.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = rng.random_range(-bound..=bound);
            }
        }
        Ok(m)
    }

    pub fn zeros(layer_sizes: &[usize], hidden_activation: Activation, output_activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid(format!(
                "need at least two positive layer sizes, got {layer_sizes:?}"
            )));
        }
        let layers = layer_sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self {
            layers,
            hidden_activation,
            output_activation,
        })
    }

    /// Builds a network from explicit layers.
    pub fn from_layers(layers: Vec<Layer>, hidden_activation: Activation, output_activation: Activation) -> Result<Self> {
        let m = Self {
            layers,
            hidden_activation,
            output_activation,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("network has no layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            check_len(l.inputs * l.outputs, l.weights.len())?;
            check_len(l.outputs, l.biases.len())?;
            if i > 0 {
                check_len(self.layers[i - 1].outputs, l.inputs)?;
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameters of layer {i}")));
            }
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(i);
            a = layer.affine(&a).into_iter().map(|z| act.apply(z)).collect();
        }
        Ok(a)
    }

    pub fn forward_cache(&self, x: &[f64]) -> Result<ForwardCache> {
        check_len(self.input_dim(), x.len())?;
        let mut activations = vec![x.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.activation_of(i);
            let z = layer.affine(activations.last().unwrap());
            activations.push(z.iter().map(|&v| act.apply(v)).collect());
            pre_activations.push(z);
        }
        Ok(ForwardCache {
            activations,
            pre_activations,
        })
    }

    /// Reverse-mode gradients of `upstream · output` with respect to every
    /// parameter.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Gradients> {
        self.backward_with_taps(cache, upstream, &[])
    }

    /// Like [`Mlp::backward`], with extra gradients injected at hidden
    /// activations. A tap `(a, g)` adds `g` to `∂/∂activations[a]`.
    pub fn backward_with_taps(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        taps: &[(usize, &[f64])],
    ) -> Result<Gradients> {
        Ok(self.backward_with_input(cache, upstream, taps)?.0)
    }

    /// Parameter gradients plus the gradient with respect to the input.
    pub fn backward_with_input(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        taps: &[(usize, &[f64])],
    ) -> Result<(Gradients, Vec<f64>)> {
        check_len(self.output_dim(), upstream.len())?;
        check_len(self.layers.len() + 1, cache.activations.len())?;
        for &(a, g) in taps {
            if a == 0 || a >= self.layers.len() {
                return Err(Error::invalid(format!("tap index {a} is not a hidden activation")));
            }
            check_len(cache.activations[a].len(), g.len())?;
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta_a = upstream.to_vec();
        for l in (0..self.layers.len()).rev() {
            for &(a, g) in taps {
                if a == l + 1 {
                    delta_a.iter_mut().zip(g).for_each(|(d, t)| *d += t);
                }
            }
            let layer = &self.layers[l];
            let act = self.activation_of(l);
            let z = &cache.pre_activations[l];
            let out = &cache.activations[l + 1];
            let delta_z: Vec<f64> = delta_a
                .iter()
                .zip(z.iter().zip(out))
                .map(|(d, (&z, &a))| d * act.derivative(z, a))
                .collect();
            let input = &cache.activations[l];
            let gw = &mut grads.weights[l];
            for (o, dz) in delta_z.iter().enumerate() {
                if *dz == 0.0 {
                    continue;
                }
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += dz * x);
            }
            grads.biases[l].copy_from_slice(&delta_z);
            let mut next = vec![0.0; layer.inputs];
            for (o, dz) in delta_z.iter().enumerate() {
                if *dz == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                next.iter_mut().zip(row).for_each(|(n, w)| *n += dz * w);
            }
            delta_a = next;
        }
        Ok((grads, delta_a))
    }

    /// `θ ← θ − lr · g`.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grads.weights).zip(&grads.biases) {
            layer.weights.iter_mut().zip(gw).for_each(|(w, g)| *w -= learning_rate * g);
            layer.biases.iter_mut().zip(gb).for_each(|(b, g)| *b -= learning_rate * g);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub loss_name: LossName,
    /// Kernel scale for the NGMG losses, in units of output spacing.
    pub kernel_scale: f64,
    pub lambda_floor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            batch_size: 32,
            iterations: 1500,
            seed: 0,
            loss_name: LossName::Bce,
            kernel_scale: 2.0,
            lambda_floor: DEFAULT_LAMBDA_FLOOR,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be > 0"));
        }
        if !(self.kernel_scale.is_finite() && self.kernel_scale > 0.0) {
            return Err(Error::invalid("kernel scale must be > 0"));
        }
        if !(self.lambda_floor.is_finite() && self.lambda_floor >= 0.0) {
            return Err(Error::invalid("lambda_floor must be >= 0"));
        }
        Ok(())
    }
}

/// Cycles through a dataset in seeded shuffled order, reshuffling per epoch.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub fn new(len: usize, rng: &mut impl Rng) -> Self {
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(rng);
        Self { order, cursor: 0 }
    }

    pub fn next_batch(&mut self, batch_size: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut batch = Vec::with_capacity(batch_size);
        while batch.len() < batch_size {
            if self.cursor == self.order.len() {
                self.order.shuffle(rng);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }
}

/// Kernel over output positions `0..k` for the NGMG losses.
pub fn output_kernel(k: usize, kernel_scale: f64) -> Result<KernelMatrix> {
    let positions: Vec<f64> = (0..k).map(|i| i as f64).collect();
    ngmg::kernel_from_positions(&positions, kernel_scale)
}

/// Plain minibatch SGD. Returns the trained network and the mean batch loss
/// at every iteration.
pub fn train(model: &Mlp, dataset: &[Sample], config: &TrainConfig) -> Result<(Mlp, Vec<f64>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    for s in dataset {
        check_len(model.input_dim(), s.input.len())?;
        check_len(model.output_dim(), s.target.len())?;
    }
    let kernel = match config.loss_name {
        LossName::NgmgLiteral | LossName::NgmgTwoSided => {
            Some(output_kernel(model.output_dim(), config.kernel_scale)?)
        }
        _ => None,
    };

    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = BatchSampler::new(dataset.len(), &mut rng);
    let mut curve = Vec::with_capacity(config.iterations);
    let scale = 1.0 / config.batch_size as f64;
    for iter in 0..config.iterations {
        let batch = sampler.next_batch(config.batch_size, &mut rng);
        let mut grads = Gradients::zeros_like(&model);
        let mut total = 0.0;
        for &i in &batch {
            let sample = &dataset[i];
            let cache = model.forward_cache(&sample.input)?;
            let loss = losses::evaluate(
                config.loss_name,
                &sample.target,
                cache.output(),
                kernel.as_ref(),
                config.lambda_floor,
            )?;
            total += loss.value;
            grads.add_scaled(&model.backward(&cache, &loss.gradient)?, scale);
        }
        let mean = total * scale;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!(
                "training loss at iteration {iter} ({})",
                config.loss_name
            )));
        }
        curve.push(mean);
        model.apply_gradients(&grads, config.learning_rate);
    }
    Ok((model, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_sigmoid_is_half() {
        let m = Mlp::zeros(&[3, 4, 2], Activation::Relu, Activation::Sigmoid).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let layer = Layer {
            inputs: 3,
            outputs: 3,
            weights: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            biases: vec![0.0; 3],
        };
        let m = Mlp::from_layers(vec![layer], Activation::Relu, Activation::Identity).unwrap();
        assert_eq!(m.forward(&[0.3, -1.5, 2.0]).unwrap(), vec![0.3, -1.5, 2.0]);
    }

    #[test]
    fn single_layer_gradient_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mlp::new(&[3, 2], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        let x = [0.5, -1.0, 2.0];
        let up = [0.7, -0.2];
        let g = m.backward(&m.forward_cache(&x).unwrap(), &up).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(g.weights[0][o * 3 + i], up[o] * x[i]);
            }
        }
        assert_eq!(g.biases[0], up.to_vec());
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::new(&[2, 5, 3], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
        let g = m.backward(&m.forward_cache(&[0.1, 0.2]).unwrap(), &[0.0; 3]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn dimension_checks() {
        let m = Mlp::zeros(&[2, 3], Activation::Relu, Activation::Identity).unwrap();
        assert!(m.forward(&[1.0]).is_err());
        let c = m.forward_cache(&[1.0, 2.0]).unwrap();
        assert!(m.backward(&c, &[1.0]).is_err());
        assert!(Mlp::zeros(&[2], Activation::Relu, Activation::Identity).is_err());
        assert!(Mlp::zeros(&[2, 0, 1], Activation::Relu, Activation::Identity).is_err());
    }

    #[test]
    fn zero_iterations_leave_model_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = Mlp::new(&[1, 4, 2], Activation::Relu, Activation::Sigmoid, &mut rng).unwrap();
        let data = vec![Sample {
            input: vec![0.2],
            target: vec![1.0, 0.0],
        }];
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        let (trained, curve) = train(&m, &data, &cfg).unwrap();
        assert_eq!(trained, m);
        assert!(curve.is_empty());
    }

    #[test]
    fn checkpoint_shape_mismatch_rejected() {
        let m = Mlp::zeros(&[2, 3, 1], Activation::Relu, Activation::Identity).unwrap();
        let json = m.to_json().unwrap().replace("\"layer_sizes\": [\n    2,", "\"layer_sizes\": [\n    5,");
        assert!(Mlp::from_json(&json).is_err());
    }
}
