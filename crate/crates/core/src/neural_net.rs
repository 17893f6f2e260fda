//! Dense feedforward network used as the action-value approximator.
//!
//! Supports per-sample backpropagation of the log-cosh loss, gradients of
//! the output with respect to the input, a batched value/gradient pass for
//! the action-ascent inner loop, Adam updates and JSON checkpoints.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DqsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            // 1 − 2/(e^{2z} + 1): same value to ~1 ulp absolute, about
            // twice as fast as libm tanh, which dominates action search.
            Activation::Tanh => 1.0 - 2.0 / ((2.0 * z).exp() + 1.0),
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// The relu subgradient at exactly 0 is 0.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    layers: Vec<Dense>,
}

/// Hidden architecture of the Q-network: 150 tanh, 40 relu, 1 sigmoid.
pub const Q_NETWORK_LAYERS: [(usize, Activation); 3] = [
    (150, Activation::Tanh),
    (40, Activation::Relu),
    (1, Activation::Sigmoid),
];

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        layers: &[(usize, Activation)],
        rng: &mut R,
    ) -> Result<Self> {
        let mut fan_in = input_dim;
        let mut built = Vec::with_capacity(layers.len());
        for &(size, activation) in layers {
            let limit = (6.0 / (fan_in + size) as f64).sqrt();
            let weights = DMatrix::from_fn(size, fan_in, |_, _| rng.gen_range(-limit..=limit));
            built.push(Dense {
                weights,
                bias: DVector::zeros(size),
                activation,
            });
            fan_in = size;
        }
        Self::from_layers(input_dim, built)
    }

    pub fn q_network<R: Rng + ?Sized>(input_dim: usize, rng: &mut R) -> Result<Self> {
        Self::new(input_dim, &Q_NETWORK_LAYERS, rng)
    }

    pub fn from_layers(input_dim: usize, layers: Vec<Dense>) -> Result<Self> {
        if input_dim == 0 {
            return Err(DqsError::InvalidParameter("input dimension must be > 0".into()));
        }
        let mut prev = input_dim;
        for layer in &layers {
            if layer.input_dim() != prev {
                return Err(DqsError::DimensionMismatch {
                    expected: prev,
                    actual: layer.input_dim(),
                });
            }
            if layer.bias.len() != layer.output_dim() {
                return Err(DqsError::DimensionMismatch {
                    expected: layer.output_dim(),
                    actual: layer.bias.len(),
                });
            }
            prev = layer.output_dim();
        }
        match layers.last() {
            Some(last) if last.output_dim() == 1 && last.activation == Activation::Sigmoid => {}
            _ => {
                return Err(DqsError::InvalidParameter(
                    "network must end in a single sigmoid unit".into(),
                ))
            }
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(DqsError::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut h = DVector::from_column_slice(x);
        for layer in &self.layers {
            let mut z = &layer.weights * &h + &layer.bias;
            z.apply(|v| *v = layer.activation.apply(*v));
            h = z;
        }
        Ok(h[0])
    }

    /// Keeps pre-activations and outputs of every layer.
    fn trace(&self, x: &[f64]) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(DVector::from_column_slice(x));
        for layer in &self.layers {
            let z = &layer.weights * post.last().unwrap() + &layer.bias;
            let a = z.map(|v| layer.activation.apply(v));
            pre.push(z);
            post.push(a);
        }
        (pre, post)
    }

    /// Backpropagates `seed = ∂L/∂output` through the traced pass.
    fn backprop(
        &self,
        pre: &[DVector<f64>],
        post: &[DVector<f64>],
        seed: f64,
    ) -> (Gradients, Vec<f64>) {
        let mut delta = DVector::from_element(1, seed);
        let mut layers = vec![LayerGrad::default(); self.layers.len()];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &pre[l];
            let a = &post[l + 1];
            for i in 0..delta.len() {
                delta[i] *= layer.activation.derivative(z[i], a[i]);
            }
            layers[l] = LayerGrad {
                weights: &delta * post[l].transpose(),
                bias: delta.clone(),
            };
            delta = layer.weights.tr_mul(&delta);
        }
        (Gradients { layers }, delta.as_slice().to_vec())
    }

    /// Gradients of log cosh(ŷ − target) with respect to all parameters and the input.
    pub fn backward(&self, x: &[f64], target: f64) -> Result<Backprop> {
        self.check_input(x)?;
        let (pre, post) = self.trace(x);
        let output = post.last().unwrap()[0];
        let residual = output - target;
        let (gradients, input_grad) = self.backprop(&pre, &post, residual.tanh());
        Ok(Backprop {
            gradients,
            input_grad,
            loss: log_cosh(residual),
            output,
        })
    }

    /// Network output and ∂output/∂x.
    pub fn output_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let (pre, post) = self.trace(x);
        let (_, grad) = self.backprop(&pre, &post, 1.0);
        Ok((post.last().unwrap()[0], grad))
    }

    /// Evaluates the network on inputs `[prefix; column]` for every column of
    /// `suffixes` and returns the outputs together with ∂output/∂suffix
    /// (one column per candidate).
    pub fn suffix_value_and_grad(
        &self,
        prefix: &[f64],
        suffixes: &DMatrix<f64>,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let p = prefix.len();
        if p + suffixes.nrows() != self.input_dim {
            return Err(DqsError::DimensionMismatch {
                expected: self.input_dim,
                actual: p + suffixes.nrows(),
            });
        }
        let batch = suffixes.ncols();
        let first = &self.layers[0];
        let fixed = first.weights.columns(0, p) * DVector::from_column_slice(prefix) + &first.bias;

        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<DMatrix<f64>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let z = if l == 0 {
                let mut z = first.weights.columns(p, suffixes.nrows()) * suffixes;
                for mut col in z.column_iter_mut() {
                    col += &fixed;
                }
                z
            } else {
                let mut z = &layer.weights * post.last().unwrap();
                for mut col in z.column_iter_mut() {
                    col += &layer.bias;
                }
                z
            };
            let a = z.map(|v| layer.activation.apply(v));
            pre.push(z);
            post.push(a);
        }
        let values: Vec<f64> = post.last().unwrap().row(0).iter().copied().collect();

        let mut delta = DMatrix::from_element(1, batch, 1.0);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            delta.zip_zip_apply(&pre[l], &post[l], |d, z, a| {
                *d *= layer.activation.derivative(z, a)
            });
            // An explicit transpose routes the product through gemm; tr_mul
            // falls back to column dot products, several times slower here.
            delta = if l == 0 {
                first.weights.columns(p, suffixes.nrows()).transpose() * &delta
            } else {
                layer.weights.transpose() * &delta
            };
        }
        Ok((values, delta))
    }
}

/// log cosh(x), stable for large |x|.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerGrad {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                    bias: DVector::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    fn matches(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.shape() == l.weights.shape() && g.bias.len() == l.bias.len()
            })
    }
}

#[derive(Debug, Clone)]
pub struct Backprop {
    pub gradients: Gradients,
    pub input_grad: Vec<f64>,
    pub loss: f64,
    pub output: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Gradients,
    pub second: Gradients,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
        }
    }
}

/// One bias-corrected Adam update of `net` in place.
pub fn adam_step(net: &mut Mlp, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    if !grads.matches(net) || !state.first.matches(net) || !state.second.matches(net) {
        return Err(DqsError::InvalidParameter(
            "gradient or optimizer shapes do not match the network".into(),
        ));
    }
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    };
    for (l, layer) in net.layers.iter_mut().enumerate() {
        let g = &grads.layers[l];
        let (m, v) = (&mut state.first.layers[l], &mut state.second.layers[l]);
        for i in 0..layer.weights.len() {
            update(
                &mut layer.weights.as_mut_slice()[i],
                &mut m.weights.as_mut_slice()[i],
                &mut v.weights.as_mut_slice()[i],
                g.weights.as_slice()[i],
            );
        }
        for i in 0..layer.bias.len() {
            update(
                &mut layer.bias[i],
                &mut m.bias[i],
                &mut v.bias[i],
                g.bias[i],
            );
        }
    }
    Ok(())
}

/// Serialized network, optimizer and (optionally) RNG state.
/// Matrices are stored row-major, one flat array per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub adam: AdamSnapshot,
    pub rng_state: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamSnapshot {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_weights: Vec<Vec<f64>>,
    pub first_biases: Vec<Vec<f64>>,
    pub second_weights: Vec<Vec<f64>>,
    pub second_biases: Vec<Vec<f64>>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn split(grads: &Gradients) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    grads
        .layers
        .iter()
        .map(|g| (row_major(&g.weights), g.bias.as_slice().to_vec()))
        .unzip()
}

impl Checkpoint {
    pub fn capture(net: &Mlp, adam: &AdamState, rng_state: Option<serde_json::Value>) -> Self {
        let mut dims = vec![net.input_dim];
        dims.extend(net.layers.iter().map(Dense::output_dim));
        let (first_weights, first_biases) = split(&adam.first);
        let (second_weights, second_biases) = split(&adam.second);
        Self {
            dims,
            activations: net.layers.iter().map(|l| l.activation).collect(),
            weights: net.layers.iter().map(|l| row_major(&l.weights)).collect(),
            biases: net.layers.iter().map(|l| l.bias.as_slice().to_vec()).collect(),
            adam: AdamSnapshot {
                learning_rate: adam.config.learning_rate,
                beta1: adam.config.beta1,
                beta2: adam.config.beta2,
                epsilon: adam.config.epsilon,
                step: adam.step,
                first_weights,
                first_biases,
                second_weights,
                second_biases,
            },
            rng_state,
        }
    }

    pub fn restore(&self) -> Result<(Mlp, AdamState)> {
        let n_layers = self.activations.len();
        let shape_err = || DqsError::Checkpoint("inconsistent layer shapes".into());
        if self.dims.len() != n_layers + 1
            || self.weights.len() != n_layers
            || self.biases.len() != n_layers
        {
            return Err(shape_err());
        }
        let matrices = |flat: &[Vec<f64>], bias: &[Vec<f64>]| -> Result<Gradients> {
            if flat.len() != n_layers || bias.len() != n_layers {
                return Err(shape_err());
            }
            let mut layers = Vec::with_capacity(n_layers);
            for l in 0..n_layers {
                let (rows, cols) = (self.dims[l + 1], self.dims[l]);
                if flat[l].len() != rows * cols || bias[l].len() != rows {
                    return Err(shape_err());
                }
                layers.push(LayerGrad {
                    weights: DMatrix::from_row_slice(rows, cols, &flat[l]),
                    bias: DVector::from_column_slice(&bias[l]),
                });
            }
            Ok(Gradients { layers })
        };
        let params = matrices(&self.weights, &self.biases)?;
        let layers = params
            .layers
            .into_iter()
            .zip(&self.activations)
            .map(|(g, &activation)| Dense {
                weights: g.weights,
                bias: g.bias,
                activation,
            })
            .collect();
        let net = Mlp::from_layers(self.dims[0], layers)?;
        let a = &self.adam;
        let adam = AdamState {
            config: AdamConfig {
                learning_rate: a.learning_rate,
                beta1: a.beta1,
                beta2: a.beta2,
                epsilon: a.epsilon,
            },
            step: a.step,
            first: matrices(&a.first_weights, &a.first_biases)?,
            second: matrices(&a.second_weights, &a.second_biases)?,
        };
        Ok((net, adam))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json_atomic(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| DqsError::Checkpoint(e.to_string()))
    }
}
