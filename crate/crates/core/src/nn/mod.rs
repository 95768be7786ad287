//! Minimal dense-network substrate.
//!
//! A [`DenseNet`] is a stack of [`Dense`] layers. Each layer computes
//!
//! - `z = x Wᵀ + b`
//! - optional batch normalisation of `z`
//! - an element-wise activation
//! - optional inverted dropout (train mode only)
//!
//! Gradients are obtained by reverse-mode accumulation through the cached
//! intermediates of the last [`DenseNet::forward`] call. Batches are row-major
//! `B × width` matrices.

mod optim;

pub use optim::{OptimKind, Optimizer, ScalarAdam};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    #[inline]
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Train,
    Eval,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BatchNorm {
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        Self {
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            momentum: 0.1,
            eps: 1e-8,
        }
    }
}

/// Construction recipe for one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
    pub batchnorm: bool,
    pub dropout: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub batchnorm: Option<BatchNorm>,
    pub dropout: f64,
}

impl Dense {
    /// Fan-in scaled uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Result<Self> {
        if spec.input == 0 || spec.output == 0 {
            return Err(Error::Config("layer widths must be > 0".into()));
        }
        if !(0.0..1.0).contains(&spec.dropout) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                spec.dropout
            )));
        }
        let limit = (1.0 / spec.input as f64).sqrt();
        let weight = Array2::from_shape_fn((spec.output, spec.input), |_| {
            rng.random_range(-limit..limit)
        });
        Ok(Self {
            weight,
            bias: Array1::zeros(spec.output),
            activation: spec.activation,
            batchnorm: spec.batchnorm.then(|| BatchNorm::new(spec.output)),
            dropout: spec.dropout,
        })
    }

    pub fn input_width(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.weight.nrows()
    }

    fn param_count(&self) -> usize {
        let bn = self.batchnorm.as_ref().map_or(0, |b| 2 * b.gamma.len());
        self.weight.len() + self.bias.len() + bn
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    /// Normalised pre-activation (only with batchnorm).
    x_hat: Option<Array2<f64>>,
    /// Per-feature `1/sqrt(var + eps)` that was used to normalise.
    inv_std: Option<Array1<f64>>,
    /// Whether the batchnorm statistics came from the batch itself.
    batch_stats: bool,
    pre_activation: Array2<f64>,
    /// Activation output before dropout.
    activated: Array2<f64>,
    mask: Option<Array2<f64>>,
}

/// Per-layer gradients, same shapes as the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerGrads {
                weight: Array2::zeros(l.weight.raw_dim()),
                bias: Array1::zeros(l.bias.len()),
                gamma: l.batchnorm.as_ref().map(|b| Array1::zeros(b.gamma.len())),
                beta: l.batchnorm.as_ref().map(|b| Array1::zeros(b.beta.len())),
            })
            .collect();
        Self { layers }
    }

    /// Flat views in the same order as [`DenseNet::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 4);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
            if let (Some(g), Some(b)) = (&l.gamma, &l.beta) {
                out.push(g.as_slice().expect("standard layout"));
                out.push(b.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 4);
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
            if let (Some(g), Some(b)) = (&mut l.gamma, &mut l.beta) {
                out.push(g.as_slice_mut().expect("standard layout"));
                out.push(b.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().into_iter().flatten().copied().collect()
    }

    pub fn global_norm(&self) -> f64 {
        self.slices()
            .into_iter()
            .flatten()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().into_iter().flatten().all(|g| g.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Adds `factor * weight` to every weight gradient (not biases or
    /// batchnorm parameters). Used for an L2 penalty on the weights.
    pub fn add_weight_decay(&mut self, net: &DenseNet, factor: f64) {
        for (g, l) in self.layers.iter_mut().zip(&net.layers) {
            g.weight.scaled_add(factor, &l.weight);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<Dense>,
    pub mode: Mode,
    #[serde(skip)]
    cache: Option<Vec<LayerCache>>,
}

impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.mode == other.mode
    }
}

impl DenseNet {
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for w in specs.windows(2) {
            if w[0].output != w[1].input {
                return Err(Error::Config(format!(
                    "layer widths do not chain: {} -> {}",
                    w[0].output, w[1].input
                )));
            }
        }
        let layers = specs
            .iter()
            .map(|s| Dense::new(*s, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            mode: Mode::Train,
            cache: None,
        })
    }

    /// A multi-layer perceptron: every hidden layer shares `activation`,
    /// `batchnorm` and `dropout`; the output layer is a plain affine map.
    pub fn mlp<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        output: usize,
        activation: Activation,
        batchnorm: bool,
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut specs = Vec::with_capacity(hidden.len() + 1);
        let mut width = input;
        for &h in hidden {
            specs.push(LayerSpec {
                input: width,
                output: h,
                activation,
                batchnorm,
                dropout,
            });
            width = h;
        }
        specs.push(LayerSpec {
            input: width,
            output,
            activation: Activation::Identity,
            batchnorm: false,
            dropout: 0.0,
        });
        Self::new(&specs, rng)
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").output_width()
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Sum of squared weights (biases and batchnorm parameters excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weight.iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    /// Trainable parameters as flat slices: per layer weight, bias, then
    /// gamma and beta when the layer is batch-normalised.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 4);
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
            if let Some(bn) = &mut l.batchnorm {
                out.push(bn.gamma.as_slice_mut().expect("standard layout"));
                out.push(bn.beta.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 4);
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
            if let Some(bn) = &l.batchnorm {
                out.push(bn.gamma.as_slice().expect("standard layout"));
                out.push(bn.beta.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.param_slices().into_iter().flatten().copied().collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(shape_err(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&values[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    /// Order-sensitive FNV-1a digest of every parameter bit pattern and the
    /// batchnorm running statistics.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        for l in &self.layers {
            l.weight.iter().chain(l.bias.iter()).for_each(|&x| feed(x));
            if let Some(bn) = &l.batchnorm {
                bn.gamma
                    .iter()
                    .chain(bn.beta.iter())
                    .chain(bn.running_mean.iter())
                    .chain(bn.running_var.iter())
                    .for_each(|&x| feed(x));
            }
        }
        h
    }

    /// Copies parameters and running statistics from `source`, which must
    /// have the same architecture.
    pub fn copy_from(&mut self, source: &DenseNet) {
        self.polyak_from(source, 1.0);
    }

    /// `self ← (1 − tau)·self + tau·source` over all parameters.
    pub fn polyak_from(&mut self, source: &DenseNet, tau: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            let mix = |d: &mut f64, s: &f64| {
                *d = if tau == 1.0 {
                    *s
                } else {
                    (1.0 - tau) * *d + tau * *s
                }
            };
            dst.weight.zip_mut_with(&src.weight, mix);
            dst.bias.zip_mut_with(&src.bias, mix);
            if let (Some(d), Some(s)) = (&mut dst.batchnorm, &src.batchnorm) {
                d.gamma.zip_mut_with(&s.gamma, mix);
                d.beta.zip_mut_with(&s.beta, mix);
                d.running_mean.zip_mut_with(&s.running_mean, mix);
                d.running_var.zip_mut_with(&s.running_var, mix);
            }
        }
    }

    fn check_input(&self, batch: &ArrayView2<f64>) -> Result<()> {
        if batch.nrows() == 0 {
            return Err(shape_err("empty batch"));
        }
        if batch.ncols() != self.input_width() {
            return Err(shape_err(format!(
                "batch width {} does not match network input {}",
                batch.ncols(),
                self.input_width()
            )));
        }
        if batch.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("non-finite value in batch".into()));
        }
        Ok(())
    }

    /// Inference with fixed statistics and no dropout, regardless of mode.
    /// Does not touch the gradient cache.
    pub fn infer(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&batch)?;
        let mut x = batch.to_owned();
        for layer in &self.layers {
            let mut z = x.dot(&layer.weight.t());
            z += &layer.bias;
            if let Some(bn) = &layer.batchnorm {
                for (mut col, j) in z.columns_mut().into_iter().zip(0..) {
                    let inv = 1.0 / (bn.running_var[j] + bn.eps).sqrt();
                    let (m, g, b) = (bn.running_mean[j], bn.gamma[j], bn.beta[j]);
                    col.mapv_inplace(|v| g * (v - m) * inv + b);
                }
            }
            let act = layer.activation;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        Ok(x)
    }

    /// Forward pass honouring [`Mode`], caching intermediates for
    /// [`DenseNet::backward`]. In train mode batchnorm uses batch statistics
    /// (and updates running statistics) and dropout draws from `rng`.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        batch: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        self.check_input(&batch)?;
        let train = self.mode == Mode::Train;
        let rows = batch.nrows();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = batch.to_owned();
        for layer in &mut self.layers {
            let mut z = x.dot(&layer.weight.t());
            z += &layer.bias;
            let (x_hat, inv_std, batch_stats) = match &mut layer.batchnorm {
                Some(bn) => {
                    let (mean, var, batch_stats) = if train {
                        let mean = z.mean_axis(Axis(0)).expect("rows > 0");
                        let var = z.var_axis(Axis(0), 0.0);
                        let unbiased = if rows > 1 {
                            &var * (rows as f64 / (rows as f64 - 1.0))
                        } else {
                            var.clone()
                        };
                        let m = bn.momentum;
                        bn.running_mean
                            .zip_mut_with(&mean, |r, &b| *r = (1.0 - m) * *r + m * b);
                        bn.running_var
                            .zip_mut_with(&unbiased, |r, &b| *r = (1.0 - m) * *r + m * b);
                        (mean, var, true)
                    } else {
                        (bn.running_mean.clone(), bn.running_var.clone(), false)
                    };
                    let inv_std = var.mapv(|v| 1.0 / (v + bn.eps).sqrt());
                    let mut x_hat = z;
                    x_hat -= &mean;
                    x_hat *= &inv_std;
                    let mut y = &x_hat * &bn.gamma;
                    y += &bn.beta;
                    z = y;
                    (Some(x_hat), Some(inv_std), batch_stats)
                }
                None => (None, None, false),
            };
            let act = layer.activation;
            let activated = z.mapv(|v| act.apply(v));
            let mut out = activated.clone();
            let mask = if train && layer.dropout > 0.0 {
                let keep = 1.0 - layer.dropout;
                let mask = Array2::from_shape_fn(out.raw_dim(), |_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                out *= &mask;
                Some(mask)
            } else {
                None
            };
            caches.push(LayerCache {
                input: x,
                x_hat,
                inv_std,
                batch_stats,
                pre_activation: z,
                activated,
                mask,
            });
            x = out;
        }
        self.cache = Some(caches);
        Ok(x)
    }

    /// Back-propagates `loss_grad` (dL/d output, `B × out`) through the
    /// cached forward pass. Returns parameter gradients and dL/d input.
    pub fn backward(&mut self, loss_grad: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>)> {
        let caches = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward called without a cached forward pass".into()))?;
        let last = caches.last().expect("non-empty");
        if loss_grad.raw_dim() != last.activated.raw_dim() {
            return Err(shape_err(format!(
                "loss gradient shape {:?} does not match output {:?}",
                loss_grad.shape(),
                last.activated.shape()
            )));
        }
        let rows = loss_grad.nrows() as f64;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = loss_grad.to_owned();
        for (layer, cache) in self.layers.iter().zip(caches).rev() {
            let mut dh = upstream;
            if let Some(mask) = &cache.mask {
                dh *= mask;
            }
            let act = layer.activation;
            let mut dy = dh;
            ndarray::Zip::from(&mut dy)
                .and(&cache.pre_activation)
                .and(&cache.activated)
                .for_each(|d, &z, &y| *d *= act.derivative(z, y));
            let (dz, gamma, beta) = match (&layer.batchnorm, &cache.x_hat, &cache.inv_std) {
                (Some(bn), Some(x_hat), Some(inv_std)) => {
                    let dgamma = (&dy * x_hat).sum_axis(Axis(0));
                    let dbeta = dy.sum_axis(Axis(0));
                    let dx_hat = &dy * &bn.gamma;
                    let dz = if cache.batch_stats {
                        let sum_dx = dx_hat.sum_axis(Axis(0));
                        let sum_dx_xhat = (&dx_hat * x_hat).sum_axis(Axis(0));
                        let mut dz = &dx_hat * rows;
                        dz -= &sum_dx;
                        dz -= &(x_hat * &sum_dx_xhat);
                        dz *= &(inv_std / rows);
                        dz
                    } else {
                        dx_hat * inv_std
                    };
                    (dz, Some(dgamma), Some(dbeta))
                }
                _ => (dy, None, None),
            };
            let weight = dz.t().dot(&cache.input).as_standard_layout().into_owned();
            let bias = dz.sum_axis(Axis(0));
            upstream = dz.dot(&layer.weight);
            grads.push(LayerGrads {
                weight,
                bias,
                gamma,
                beta,
            });
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, upstream))
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
