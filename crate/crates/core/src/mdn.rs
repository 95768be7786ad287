//! Mixture density network over `(state, action)` producing a diagonal
//! Gaussian mixture over goal space.
//!
//! Output layout of the trunk: `K` logits, then `K·N` means, then `K·N` log
//! variances. Weights come from a softmax; variances are `exp` of the raw
//! value clamped to `[1e-6, 1e4]`.
//!
//! Loss: `λ1·NLL + λ2·‖W‖² + λ3·KL`, where the KL term compares a
//! moment-matched Gaussian of the batch targets against each predicted
//! mixture through the bound `min_j [KL(q̂‖c_j) − ln φ_j]`.

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::gmm::{log_sum_exp, MixtureParams, VARIANCE_FLOOR};
use crate::nn::{Activation, DenseNet, Gradients, Mode, OptimKind, Optimizer};

pub const VARIANCE_CEILING: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdnConfig {
    pub components: usize,
    pub hidden_layers: Vec<usize>,
    pub lambda_nll: f64,
    pub lambda_l2: f64,
    pub lambda_kl: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Environment steps between updates.
    pub train_frequency: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default)]
    pub batchnorm: bool,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimKind,
    #[serde(default)]
    pub clip_norm: Option<f64>,
}

fn default_optimizer() -> OptimKind {
    OptimKind::adam()
}

impl Default for MdnConfig {
    fn default() -> Self {
        Self {
            components: 6,
            hidden_layers: vec![64, 64, 64],
            lambda_nll: 1.0,
            lambda_l2: 1e-5,
            lambda_kl: 0.1,
            learning_rate: 1e-3,
            batch_size: 128,
            train_frequency: 1,
            dropout: 0.0,
            batchnorm: false,
            activation: Activation::Relu,
            optimizer: OptimKind::adam(),
            clip_norm: Some(10.0),
        }
    }
}

impl MdnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::Config("mdn needs at least one component".into()));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::Config("mdn hidden widths must be > 0".into()));
        }
        for (name, v) in [
            ("lambda_nll", self.lambda_nll),
            ("lambda_l2", self.lambda_l2),
            ("lambda_kl", self.lambda_kl),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and ≥ 0")));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("mdn learning rate must be ≥ 0".into()));
        }
        if self.batch_size == 0 || self.train_frequency == 0 {
            return Err(Error::Config(
                "mdn batch size and train frequency must be ≥ 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("mdn dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdnHead {
    pub config: MdnConfig,
    pub state_dim: usize,
    pub action_dim: usize,
    pub goal_dim: usize,
    pub trunk: DenseNet,
}

/// Per-row derivatives of the loss with respect to the raw head outputs,
/// laid out like the trunk output.
struct HeadGrad {
    raw: Array2<f64>,
}

impl MdnHead {
    pub fn new<R: Rng + ?Sized>(
        config: MdnConfig,
        state_dim: usize,
        action_dim: usize,
        goal_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if state_dim + action_dim == 0 || goal_dim == 0 {
            return Err(Error::Config(
                "mdn input and goal widths must be ≥ 1".into(),
            ));
        }
        let k = config.components;
        let trunk = DenseNet::mlp(
            state_dim + action_dim,
            &config.hidden_layers,
            k + 2 * k * goal_dim,
            config.activation,
            config.batchnorm,
            config.dropout,
            rng,
        )?;
        Ok(Self {
            config,
            state_dim,
            action_dim,
            goal_dim,
            trunk,
        })
    }

    pub fn components(&self) -> usize {
        self.config.components
    }

    pub fn new_optimizer(&self) -> Result<Optimizer> {
        Optimizer::new(
            self.config.optimizer,
            self.config.learning_rate,
            self.config.clip_norm,
        )
    }

    fn concat(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array2<f64>> {
        if states.ncols() != self.state_dim || actions.ncols() != self.action_dim {
            return Err(shape_err(format!(
                "mdn expects state/action widths {}/{}, got {}/{}",
                self.state_dim,
                self.action_dim,
                states.ncols(),
                actions.ncols()
            )));
        }
        if states.nrows() != actions.nrows() || states.nrows() == 0 {
            return Err(shape_err(
                "state and action batches must be non-empty and equal length",
            ));
        }
        ndarray::concatenate(Axis(1), &[states, actions]).map_err(|e| shape_err(e.to_string()))
    }

    /// Maps one raw output row to mixture parameters.
    pub fn decode(&self, raw: &[f64]) -> Result<MixtureParams> {
        let k = self.components();
        let n = self.goal_dim;
        if raw.len() != k + 2 * k * n {
            return Err(shape_err("raw head row has the wrong width"));
        }
        let weights = softmax(&raw[..k]);
        let means = raw[k..k + k * n].to_vec();
        let variances: Vec<f64> = raw[k + k * n..].iter().map(|&r| variance_of(r)).collect();
        MixtureParams::from_slices(&weights, &means, &variances)
            .map_err(|e| Error::Numeric(format!("mdn head produced invalid mixture: {e}")))
    }

    fn decode_all(&self, raw: &Array2<f64>) -> Result<Vec<MixtureParams>> {
        raw.rows()
            .into_iter()
            .map(|r| self.decode(&r.to_vec()))
            .collect()
    }

    /// Raw trunk outputs with inference semantics (no dropout, running
    /// batchnorm statistics). Does not mutate the model.
    pub fn raw_outputs(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        let x = self.concat(states, actions)?;
        self.trunk.infer(x.view())
    }

    /// One mixture per input row, inference semantics.
    pub fn predict(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
    ) -> Result<Vec<MixtureParams>> {
        self.decode_all(&self.raw_outputs(states, actions)?)
    }

    pub fn predict_one(&self, state: &[f64], action: &[f64]) -> Result<MixtureParams> {
        let s = ArrayView2::from_shape((1, state.len()), state)
            .map_err(|e| shape_err(e.to_string()))?;
        let a = ArrayView2::from_shape((1, action.len()), action)
            .map_err(|e| shape_err(e.to_string()))?;
        Ok(self.predict(s, a)?.remove(0))
    }

    /// Composite loss on a batch with inference semantics.
    pub fn loss(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> Result<f64> {
        let batch = self.predict(states, actions)?;
        composite_loss(&batch, targets, self.trunk.weight_sq_norm(), &self.config)
    }

    /// Gradient of the composite loss with respect to every trunk parameter.
    /// Uses the trunk's current mode; returns the loss alongside.
    pub fn loss_gradients<R: Rng + ?Sized>(
        &mut self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        targets: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<(f64, Gradients)> {
        if targets.ncols() != self.goal_dim || targets.nrows() != states.nrows() {
            return Err(shape_err("targets must be one goal-width row per input"));
        }
        let x = self.concat(states, actions)?;
        let raw = self.trunk.forward(x.view(), rng)?;
        let batch = match self.decode_all(&raw) {
            Ok(b) => b,
            Err(e) => {
                self.trunk.clear_cache();
                return Err(e);
            }
        };
        let loss = match composite_loss(&batch, targets, self.trunk.weight_sq_norm(), &self.config)
        {
            Ok(l) => l,
            Err(e) => {
                self.trunk.clear_cache();
                return Err(e);
            }
        };
        let head = self.head_gradient(&raw, &batch, targets);
        let (mut grads, _) = self.trunk.backward(head.raw.view())?;
        if self.config.lambda_l2 > 0.0 {
            grads.add_weight_decay(&self.trunk, 2.0 * self.config.lambda_l2);
        }
        Ok((loss, grads))
    }

    fn head_gradient(
        &self,
        raw: &Array2<f64>,
        batch: &[MixtureParams],
        targets: ArrayView2<f64>,
    ) -> HeadGrad {
        let k = self.components();
        let n = self.goal_dim;
        let b = batch.len() as f64;
        let cfg = &self.config;
        let mut out = Array2::zeros(raw.raw_dim());
        let q = (cfg.lambda_kl > 0.0 && batch.len() >= 2).then(|| moment_match(targets));
        for (row, (params, x)) in batch.iter().zip(targets.rows()).enumerate() {
            let x = x.to_vec();
            let mut g = out.row_mut(row);
            let raw_row = raw.row(row);
            let var_live = |j: usize, i: usize| is_unclamped(raw_row[k + k * n + j * n + i]);
            if cfg.lambda_nll > 0.0 {
                let resp = responsibilities(params, &x);
                let scale = cfg.lambda_nll / b;
                for j in 0..k {
                    g[j] += scale * (params.weights()[j] - resp[j]);
                    for i in 0..n {
                        let var = params.variances()[[j, i]];
                        let d = x[i] - params.means()[[j, i]];
                        g[k + j * n + i] -= scale * resp[j] * d / var;
                        if var_live(j, i) {
                            g[k + k * n + j * n + i] += scale * 0.5 * resp[j] * (1.0 - d * d / var);
                        }
                    }
                }
            }
            if let Some((m, s2)) = &q {
                let (star, _) = kl_bound_row(params, m, s2);
                let scale = cfg.lambda_kl / b;
                for j in 0..k {
                    let delta = if j == star { 1.0 } else { 0.0 };
                    g[j] += scale * (params.weights()[j] - delta);
                }
                for i in 0..n {
                    let var = params.variances()[[star, i]];
                    let d = params.means()[[star, i]] - m[i];
                    g[k + star * n + i] += scale * d / var;
                    if var_live(star, i) {
                        g[k + k * n + star * n + i] += scale * 0.5 * (1.0 - (s2[i] + d * d) / var);
                    }
                }
            }
        }
        HeadGrad { raw: out }
    }

    /// One optimiser step on the composite loss in train mode. Returns the
    /// loss evaluated before the step. A non-finite loss or gradient skips the
    /// step with a numeric error and leaves the parameters untouched.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        opt: &mut Optimizer,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        targets: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<f64> {
        let prev = self.trunk.mode;
        self.trunk.set_mode(Mode::Train);
        let result = self
            .loss_gradients(states, actions, targets, rng)
            .and_then(|(loss, grads)| opt.step(&mut self.trunk, &grads).map(|_| loss));
        self.trunk.set_mode(prev);
        self.trunk.clear_cache();
        result
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let head: Self = serde_json::from_str(text)?;
        head.config.validate()?;
        let k = head.components();
        if head.trunk.input_width() != head.state_dim + head.action_dim
            || head.trunk.output_width() != k + 2 * k * head.goal_dim
        {
            return Err(shape_err(
                "checkpointed trunk does not match mdn dimensions",
            ));
        }
        Ok(head)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn variance_of(raw: f64) -> f64 {
    raw.clamp(VARIANCE_FLOOR.ln(), VARIANCE_CEILING.ln()).exp()
}

fn is_unclamped(raw: f64) -> bool {
    raw > VARIANCE_FLOOR.ln() && raw < VARIANCE_CEILING.ln()
}

fn responsibilities(params: &MixtureParams, x: &[f64]) -> Vec<f64> {
    let terms: Vec<f64> = (0..params.components())
        .map(|j| params.weights()[j].ln() + params.component_log_density(j, x))
        .collect();
    let total = log_sum_exp(&terms);
    terms.iter().map(|t| (t - total).exp()).collect()
}

/// Batch mean and population variance of the targets, variance floored.
pub fn moment_match(targets: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>) {
    let b = targets.nrows() as f64;
    let mean: Vec<f64> = targets.columns().into_iter().map(|c| c.sum() / b).collect();
    let var = targets
        .columns()
        .into_iter()
        .zip(&mean)
        .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / b).max(VARIANCE_FLOOR))
        .collect();
    (mean, var)
}

/// `KL(N(m, s²) ‖ N(μ, σ²))` for diagonal Gaussians.
pub fn diagonal_gaussian_kl(m: &[f64], s2: &[f64], mu: &[f64], var: &[f64]) -> f64 {
    (0..m.len())
        .map(|i| {
            let d = m[i] - mu[i];
            0.5 * ((var[i] / s2[i]).ln() + (s2[i] + d * d) / var[i] - 1.0)
        })
        .sum()
}

/// Best component and value of `min_j [KL(q̂‖c_j) − ln φ_j]`.
fn kl_bound_row(params: &MixtureParams, m: &[f64], s2: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..params.components() {
        let mu = params.means().row(j).to_vec();
        let var = params.variances().row(j).to_vec();
        let v = diagonal_gaussian_kl(m, s2, &mu, &var) - params.weights()[j].ln();
        if v < best.1 {
            best = (j, v);
        }
    }
    best
}

/// Batch-averaged variational upper bound on `KL(q̂ ‖ mixture)`.
pub fn kl_term(batch: &[MixtureParams], targets: ArrayView2<f64>) -> Result<f64> {
    check_batch(batch, targets)?;
    if batch.len() < 2 {
        return Err(Error::Input(
            "kl term needs a batch of at least 2 targets".into(),
        ));
    }
    let (m, s2) = moment_match(targets);
    let total: f64 = batch.iter().map(|p| kl_bound_row(p, &m, &s2).1).sum();
    Ok((total / batch.len() as f64).max(0.0))
}

fn check_batch(batch: &[MixtureParams], targets: ArrayView2<f64>) -> Result<()> {
    if batch.is_empty() || batch.len() != targets.nrows() {
        return Err(shape_err("need one target row per mixture"));
    }
    if batch.iter().any(|p| p.dim() != targets.ncols()) {
        return Err(shape_err("target width differs from mixture dimension"));
    }
    Ok(())
}

/// `λ1·NLL + λ2·weight_sq_norm + λ3·KL`. The KL term is skipped for a batch
/// of one (no spread to match).
pub fn composite_loss(
    batch: &[MixtureParams],
    targets: ArrayView2<f64>,
    weight_sq_norm: f64,
    cfg: &MdnConfig,
) -> Result<f64> {
    check_batch(batch, targets)?;
    let mut loss = 0.0;
    if cfg.lambda_nll > 0.0 {
        loss += cfg.lambda_nll * crate::gmm::negative_log_likelihood(batch, targets)?;
    }
    loss += cfg.lambda_l2 * weight_sq_norm;
    if cfg.lambda_kl > 0.0 && batch.len() >= 2 {
        loss += cfg.lambda_kl * kl_term(batch, targets)?;
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("mdn loss is {loss}")));
    }
    Ok(loss)
}

/// Slice of the trunk output holding the logits, for tests and diagnostics.
pub fn logits_of(raw: &Array2<f64>, k: usize) -> ArrayView2<'_, f64> {
    raw.slice(s![.., ..k])
}
