//! First-order optimisers over [`DenseNet`] parameters.

use serde::{Deserialize, Serialize};

use super::{DenseNet, Gradients};
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimKind {
    #[default]
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimKind {
    pub fn adam() -> Self {
        OptimKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimiser state: learning rate, step counter, and per-parameter moment
/// accumulators (Adam only) shaped like the network's parameter slices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Optimizer {
    pub kind: OptimKind,
    pub learning_rate: f64,
    /// Global-norm clipping threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimKind, learning_rate: f64, clip_norm: Option<f64>) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "invalid learning rate {learning_rate}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            clip_norm,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimKind::Sgd, learning_rate, None)
    }

    /// Applies one update. Non-finite gradients reject the step and leave
    /// both the network and the optimiser untouched.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Numeric("non-finite gradient, step rejected".into()));
        }
        let scale = match self.clip_norm {
            Some(max) => {
                let norm = grads.global_norm();
                if norm > max {
                    max / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let grad_slices = grads.slices();
        let mut params = net.param_slices_mut();
        if params.len() != grad_slices.len()
            || params
                .iter()
                .zip(&grad_slices)
                .any(|(p, g)| p.len() != g.len())
        {
            return Err(shape_err("gradients do not match network parameters"));
        }
        self.step += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimKind::Sgd => {
                for (p, g) in params.iter_mut().zip(&grad_slices) {
                    for (w, dw) in p.iter_mut().zip(g.iter()) {
                        *w -= lr * (scale * dw);
                    }
                }
            }
            OptimKind::Adam { beta1, beta2, eps } => {
                if self.first.is_empty() {
                    self.first = grad_slices.iter().map(|g| vec![0.0; g.len()]).collect();
                    self.second = self.first.clone();
                }
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(&grad_slices)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for i in 0..p.len() {
                        let dw = scale * g[i];
                        m[i] = beta1 * m[i] + (1.0 - beta1) * dw;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * dw * dw;
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Adam on a single scalar, used for the entropy temperature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ScalarAdam {
    pub learning_rate: f64,
    step: u64,
    m: f64,
    v: f64,
}

impl ScalarAdam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            step: 0,
            m: 0.0,
            v: 0.0,
        }
    }

    pub fn update(&mut self, value: &mut f64, grad: f64) {
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        self.step += 1;
        self.m = b1 * self.m + (1.0 - b1) * grad;
        self.v = b2 * self.v + (1.0 - b2) * grad * grad;
        let t = self.step as i32;
        let mh = self.m / (1.0 - b1.powi(t));
        let vh = self.v / (1.0 - b2.powi(t));
        *value -= self.learning_rate * mh / (vh.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w: f64) -> DenseNet {
        let mut net = DenseNet::new(
            &[LayerSpec {
                input: 1,
                output: 1,
                activation: Activation::Identity,
                batchnorm: false,
                dropout: 0.0,
            }],
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        net.layers[0].weight[[0, 0]] = w;
        net
    }

    fn grads_for(net: &DenseNet, gw: f64, gb: f64) -> Gradients {
        let mut g = Gradients::zeros_like(net);
        g.layers[0].weight[[0, 0]] = gw;
        g.layers[0].bias[0] = gb;
        g
    }

    #[test]
    fn sgd_definition() {
        let mut net = scalar_net(1.0);
        let mut opt = Optimizer::sgd(0.1).unwrap();
        {
            let g = grads_for(&net, 1.0, 0.0);
            opt.step(&mut net, &g)
        }
        .unwrap();
        assert_eq!(net.layers[0].weight[[0, 0]], 0.9);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn zero_grads_are_a_fixed_point() {
        for kind in [OptimKind::Sgd, OptimKind::adam()] {
            let mut net = scalar_net(0.37);
            let before = net.flat_params();
            let mut opt = Optimizer::new(kind, 0.5, Some(10.0)).unwrap();
            let g = grads_for(&net, 0.0, 0.0);
            for _ in 0..3 {
                opt.step(&mut net, &g).unwrap();
            }
            assert_eq!(net.flat_params(), before);
        }
    }

    #[test]
    fn non_finite_gradients_are_rejected() {
        let mut net = scalar_net(1.0);
        let mut opt = Optimizer::sgd(0.1).unwrap();
        let err = {
            let g = grads_for(&net, f64::NAN, 0.0);
            opt.step(&mut net, &g)
        };
        assert!(matches!(err, Err(Error::Numeric(_))));
        assert_eq!(opt.step, 0);
        assert_eq!(net.layers[0].weight[[0, 0]], 1.0);
    }

    #[test]
    fn quadratic_converges() {
        // L(w) = (w - 3)^2 with w the single weight of f(x) = w·x at x = 1.
        for kind in [OptimKind::Sgd, OptimKind::adam()] {
            let mut net = scalar_net(0.0);
            let mut opt = Optimizer::new(kind, 0.1, Some(10.0)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for _ in 0..200 {
                let out = net.forward(array![[1.0]].view(), &mut rng).unwrap();
                // dL/dout with the bias pinned at zero.
                let dl = 2.0 * (out[[0, 0]] - 3.0);
                let (mut g, _) = net.backward(array![[dl]].view()).unwrap();
                g.layers[0].bias[0] = 0.0;
                opt.step(&mut net, &g).unwrap();
            }
            let w = net.layers[0].weight[[0, 0]];
            assert!((w - 3.0).abs() < 1e-3, "{kind:?}: w = {w}");
        }
    }

    #[test]
    fn clipping_bounds_the_update() {
        let mut net = scalar_net(0.0);
        let mut opt = Optimizer::new(OptimKind::Sgd, 1.0, Some(10.0)).unwrap();
        {
            let g = grads_for(&net, 300.0, 400.0);
            opt.step(&mut net, &g)
        }
        .unwrap();
        assert!((net.layers[0].weight[[0, 0]] + 6.0).abs() < 1e-12);
        assert!((net.layers[0].bias[0] + 8.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_adam_descends() {
        let mut x = 5.0;
        let mut opt = ScalarAdam::new(0.1);
        for _ in 0..500 {
            let g = 2.0 * (x - 1.0);
            opt.update(&mut x, g);
        }
        assert!((x - 1.0).abs() < 1e-2);
    }
}
