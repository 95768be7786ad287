//! Soft actor-critic: twin critics with target copies, a tanh-squashed
//! Gaussian actor, and an optionally auto-tuned entropy coefficient.
//!
//! Actor and critics take the goal concatenated to the state.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Agent, Transition};
use crate::error::{shape_err, Error, Result};
use crate::nn::{Activation, DenseNet, Gradients, OptimKind, Optimizer, ScalarAdam};

const LOG_STD_MIN: f64 = -20.0;
const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EntropyMode {
    Fixed {
        alpha: f64,
    },
    /// Target entropy defaults to `-dim(A)`.
    Auto {
        initial_alpha: f64,
        #[serde(default)]
        target: Option<f64>,
    },
}

impl Default for EntropyMode {
    fn default() -> Self {
        EntropyMode::Auto {
            initial_alpha: 1.0,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub gamma: f64,
    /// Polyak coefficient for the target critics.
    pub tau: f64,
    /// Actor widths; also the critic widths unless overridden.
    pub hidden_layers: Vec<usize>,
    pub critic_hidden_layers: Option<Vec<usize>>,
    pub learning_rate: f64,
    /// Entropy-coefficient learning rate; defaults to `learning_rate`.
    pub alpha_learning_rate: Option<f64>,
    pub batch_size: usize,
    pub train_frequency: usize,
    pub gradient_steps: usize,
    pub entropy: EntropyMode,
    pub clip_norm: Option<f64>,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            hidden_layers: vec![64, 64],
            critic_hidden_layers: None,
            learning_rate: 3e-4,
            alpha_learning_rate: None,
            batch_size: 256,
            train_frequency: 1,
            gradient_steps: 1,
            entropy: EntropyMode::default(),
            clip_norm: None,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("sac gamma must lie in (0, 1)".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config("sac tau must lie in (0, 1]".into()));
        }
        let critic = self
            .critic_hidden_layers
            .as_ref()
            .unwrap_or(&self.hidden_layers);
        if self.hidden_layers.iter().chain(critic).any(|&w| w == 0) {
            return Err(Error::Config("sac layer widths must be > 0".into()));
        }
        let alpha_lr = self.alpha_learning_rate.unwrap_or(self.learning_rate);
        if !(self.learning_rate > 0.0 && alpha_lr > 0.0) {
            return Err(Error::Config("sac learning rates must be > 0".into()));
        }
        if self.batch_size == 0 || self.train_frequency == 0 || self.gradient_steps == 0 {
            return Err(Error::Config(
                "sac batch size, train frequency and gradient steps must be ≥ 1".into(),
            ));
        }
        match self.entropy {
            EntropyMode::Fixed { alpha } if !(alpha >= 0.0 && alpha.is_finite()) => Err(
                Error::Config("fixed entropy coefficient must be ≥ 0".into()),
            ),
            EntropyMode::Auto { initial_alpha, .. } if !(initial_alpha > 0.0) => Err(
                Error::Config("initial entropy coefficient must be > 0".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Soft Bellman target `r + γ(1−done)(min(q1′, q2′) − α·logπ′)`.
pub fn critic_target(
    gamma: f64,
    reward: f64,
    done: bool,
    q1: f64,
    q2: f64,
    log_prob: f64,
    alpha: f64,
) -> f64 {
    let q_min = q1.min(q2);
    debug_assert!(q_min <= q1 && q_min <= q2);
    if done {
        reward
    } else {
        reward + gamma * (q_min - alpha * log_prob)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SacStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

/// Reparameterised draw from the squashed Gaussian.
struct PolicySample {
    actions: Array2<f64>,
    log_prob: Array1<f64>,
    pre_tanh: Array2<f64>,
    std: Array2<f64>,
    noise: Array2<f64>,
    /// 1 where log-std was inside its clamp, else 0.
    log_std_live: Array2<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 − tanh²u)` without cancellation.
fn log_tanh_jacobian(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

fn squash(raw: &Array2<f64>, noise: Array2<f64>) -> PolicySample {
    let a = noise.ncols();
    let mean = raw.slice(s![.., ..a]);
    let raw_ls = raw.slice(s![.., a..]);
    let log_std = raw_ls.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
    let log_std_live = raw_ls.mapv(|v| f64::from(u8::from(v > LOG_STD_MIN && v < LOG_STD_MAX)));
    let std = log_std.mapv(f64::exp);
    let pre_tanh = &mean + &(&std * &noise);
    let actions = pre_tanh.mapv(f64::tanh);
    let mut log_prob = Array1::zeros(raw.nrows());
    for b in 0..raw.nrows() {
        let mut lp = 0.0;
        for i in 0..a {
            let e = noise[[b, i]];
            lp +=
                -0.5 * e * e - log_std[[b, i]] - HALF_LN_2PI - log_tanh_jacobian(pre_tanh[[b, i]]);
        }
        log_prob[b] = lp;
    }
    PolicySample {
        actions,
        log_prob,
        pre_tanh,
        std,
        noise,
        log_std_live,
    }
}

/// Gradient of `mean_b[α·logπ_b − Q(a_b)]` with respect to the actor's raw
/// outputs `(mean, log_std)`, given `dQ/da` per row.
fn actor_head_grad(sample: &PolicySample, dq_da: &Array2<f64>, alpha: f64) -> Array2<f64> {
    let (rows, a) = sample.actions.dim();
    let scale = 1.0 / rows as f64;
    let mut g = Array2::zeros((rows, 2 * a));
    for b in 0..rows {
        for i in 0..a {
            let t = sample.actions[[b, i]];
            let jac = 1.0 - t * t;
            let se = sample.std[[b, i]] * sample.noise[[b, i]];
            let dlogp_du = 2.0 * sample.pre_tanh[[b, i]].tanh();
            let dq_du = dq_da[[b, i]] * jac;
            g[[b, i]] = scale * (alpha * dlogp_du - dq_du);
            g[[b, a + i]] =
                scale * (alpha * (-1.0 + dlogp_du * se) - dq_du * se) * sample.log_std_live[[b, i]];
        }
    }
    g
}

fn noise<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

fn concat(parts: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
    ndarray::concatenate(Axis(1), parts).map_err(|e| shape_err(e.to_string()))
}

/// MSE loss of a critic against fixed targets and its parameter gradients.
fn critic_loss_grads<R: Rng + ?Sized>(
    critic: &mut DenseNet,
    inputs: ArrayView2<f64>,
    targets: &Array1<f64>,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    let q = critic.forward(inputs, rng)?;
    let rows = targets.len() as f64;
    let diff = &q.column(0) - targets;
    let loss = diff.mapv(|d| d * d).sum() / rows;
    let grad = (diff * (2.0 / rows)).insert_axis(Axis(1));
    let (grads, _) = critic.backward(grad.view())?;
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sac {
    pub config: SacConfig,
    pub state_dim: usize,
    pub goal_dim: usize,
    action_dim: usize,
    pub actor: DenseNet,
    pub q1: DenseNet,
    pub q2: DenseNet,
    pub q1_target: DenseNet,
    pub q2_target: DenseNet,
    pub log_alpha: f64,
    target_entropy: f64,
    actor_opt: Optimizer,
    q1_opt: Optimizer,
    q2_opt: Optimizer,
    alpha_opt: ScalarAdam,
    pub updates: u64,
}

impl Sac {
    pub fn new<R: Rng + ?Sized>(
        config: SacConfig,
        state_dim: usize,
        goal_dim: usize,
        action_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if action_dim == 0 || state_dim + goal_dim == 0 {
            return Err(Error::Config(
                "sac needs non-empty inputs and actions".into(),
            ));
        }
        let obs = state_dim + goal_dim;
        let critic_hidden = config
            .critic_hidden_layers
            .clone()
            .unwrap_or_else(|| config.hidden_layers.clone());
        let actor = DenseNet::mlp(
            obs,
            &config.hidden_layers,
            2 * action_dim,
            Activation::Relu,
            false,
            0.0,
            rng,
        )?;
        let q1 = DenseNet::mlp(
            obs + action_dim,
            &critic_hidden,
            1,
            Activation::Relu,
            false,
            0.0,
            rng,
        )?;
        let q2 = DenseNet::mlp(
            obs + action_dim,
            &critic_hidden,
            1,
            Activation::Relu,
            false,
            0.0,
            rng,
        )?;
        let (log_alpha, target_entropy) = match config.entropy {
            EntropyMode::Fixed { alpha } => (alpha.ln(), 0.0),
            EntropyMode::Auto {
                initial_alpha,
                target,
            } => (initial_alpha.ln(), target.unwrap_or(-(action_dim as f64))),
        };
        let opt = || Optimizer::new(OptimKind::adam(), config.learning_rate, config.clip_norm);
        let alpha_lr = config.alpha_learning_rate.unwrap_or(config.learning_rate);
        Ok(Self {
            state_dim,
            goal_dim,
            action_dim,
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            log_alpha,
            target_entropy,
            actor_opt: opt()?,
            q1_opt: opt()?,
            q2_opt: opt()?,
            alpha_opt: ScalarAdam::new(alpha_lr),
            updates: 0,
            config,
        })
    }

    pub fn alpha(&self) -> f64 {
        match self.config.entropy {
            EntropyMode::Fixed { alpha } => alpha,
            EntropyMode::Auto { .. } => self.log_alpha.exp(),
        }
    }

    fn check_dims(&self, states: &ArrayView2<f64>, goals: &ArrayView2<f64>) -> Result<()> {
        if states.ncols() != self.state_dim
            || goals.ncols() != self.goal_dim
            || states.nrows() != goals.nrows()
        {
            return Err(shape_err(format!(
                "sac expects state/goal widths {}/{}, got {}/{}",
                self.state_dim,
                self.goal_dim,
                states.ncols(),
                goals.ncols()
            )));
        }
        Ok(())
    }

    /// Deterministic actions `tanh(mean)`.
    pub fn mean_actions(
        &self,
        states: ArrayView2<f64>,
        goals: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        self.check_dims(&states, &goals)?;
        let raw = self.actor.infer(concat(&[states, goals])?.view())?;
        Ok(raw.slice(s![.., ..self.action_dim]).mapv(f64::tanh))
    }

    /// Min of the two online critics.
    pub fn q_value(&self, state: &[f64], goal: &[f64], action: &[f64]) -> Result<f64> {
        let x: Vec<f64> = state.iter().chain(goal).chain(action).copied().collect();
        let x = ArrayView2::from_shape((1, x.len()), &x).map_err(|e| shape_err(e.to_string()))?;
        let q1 = self.q1.infer(x)?[[0, 0]];
        let q2 = self.q2.infer(x)?[[0, 0]];
        Ok(q1.min(q2))
    }

    /// One critic step, one actor step, one entropy-coefficient step and a
    /// polyak update of the target critics.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<SacStats> {
        if batch.is_empty() {
            return Err(Error::Input("empty sac batch".into()));
        }
        let rows = batch.len();
        let stack = |f: &dyn Fn(&Transition) -> &[f64], width: usize| -> Result<Array2<f64>> {
            let mut m = Array2::zeros((rows, width));
            for (i, t) in batch.iter().enumerate() {
                let v = f(t);
                if v.len() != width {
                    return Err(shape_err("transition field has the wrong width"));
                }
                m.row_mut(i).assign(&ndarray::ArrayView1::from(v));
            }
            Ok(m)
        };
        let s = stack(&|t| &t.state, self.state_dim)?;
        let g = stack(&|t| &t.goal, self.goal_dim)?;
        let a = stack(&|t| &t.action, self.action_dim)?;
        let s2 = stack(&|t| &t.next_state, self.state_dim)?;
        let alpha = self.alpha();

        // Soft targets from the current actor and the target critics.
        let obs2 = concat(&[s2.view(), g.view()])?;
        let next = squash(
            &self.actor.infer(obs2.view())?,
            noise(rng, rows, self.action_dim),
        );
        let sa2 = concat(&[obs2.view(), next.actions.view()])?;
        let q1n = self.q1_target.infer(sa2.view())?;
        let q2n = self.q2_target.infer(sa2.view())?;
        let targets: Array1<f64> = (0..rows)
            .map(|i| {
                let t = &batch[i];
                critic_target(
                    self.config.gamma,
                    t.reward,
                    t.done,
                    q1n[[i, 0]],
                    q2n[[i, 0]],
                    next.log_prob[i],
                    alpha,
                )
            })
            .collect();

        let obs = concat(&[s.view(), g.view()])?;
        let sa = concat(&[obs.view(), a.view()])?;
        let (l1, g1) = critic_loss_grads(&mut self.q1, sa.view(), &targets, rng)?;
        let (l2, g2) = critic_loss_grads(&mut self.q2, sa.view(), &targets, rng)?;
        let critic_loss = 0.5 * (l1 + l2);
        if !critic_loss.is_finite() {
            return Err(Error::Numeric(format!("critic loss is {critic_loss}")));
        }
        self.q1_opt.step(&mut self.q1, &g1)?;
        self.q2_opt.step(&mut self.q2, &g2)?;

        // Actor through the updated critics.
        let raw = self.actor.forward(obs.view(), rng)?;
        let sample = squash(&raw, noise(rng, rows, self.action_dim));
        let sa_pi = concat(&[obs.view(), sample.actions.view()])?;
        let q1p = self.q1.forward(sa_pi.view(), rng)?;
        let q2p = self.q2.forward(sa_pi.view(), rng)?;
        let pick1: Array2<f64> = Array2::from_shape_fn((rows, 1), |(i, _)| {
            f64::from(u8::from(q1p[[i, 0]] <= q2p[[i, 0]]))
        });
        let pick2 = pick1.mapv(|p| 1.0 - p);
        let (_, dx1) = self.q1.backward(pick1.view())?;
        let (_, dx2) = self.q2.backward(pick2.view())?;
        self.q1.clear_cache();
        self.q2.clear_cache();
        let obs_w = obs.ncols();
        let dq_da = &dx1.slice(s![.., obs_w..]) + &dx2.slice(s![.., obs_w..]);
        let q_min: Array1<f64> = (0..rows).map(|i| q1p[[i, 0]].min(q2p[[i, 0]])).collect();
        let actor_loss = (alpha * &sample.log_prob - &q_min).mean().unwrap_or(0.0);
        if !actor_loss.is_finite() {
            self.actor.clear_cache();
            return Err(Error::Numeric(format!("actor loss is {actor_loss}")));
        }
        let head = actor_head_grad(&sample, &dq_da, alpha);
        let (ga, _) = self.actor.backward(head.view())?;
        self.actor.clear_cache();
        self.actor_opt.step(&mut self.actor, &ga)?;

        let mean_log_prob = sample.log_prob.mean().unwrap_or(0.0);
        if let EntropyMode::Auto { .. } = self.config.entropy {
            // d/d(log α) of −log α·(logπ + H_target), averaged.
            let grad = -(mean_log_prob + self.target_entropy);
            self.alpha_opt.update(&mut self.log_alpha, grad);
        }

        let tau = self.config.tau;
        self.q1_target.polyak_from(&self.q1, tau);
        self.q2_target.polyak_from(&self.q2, tau);
        self.updates += 1;
        Ok(SacStats {
            critic_loss,
            actor_loss,
            alpha: self.alpha(),
            entropy: -mean_log_prob,
        })
    }
}

impl Agent for Sac {
    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn act<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        goal: &[f64],
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let s = ArrayView2::from_shape((1, state.len()), state)
            .map_err(|e| shape_err(e.to_string()))?;
        let g =
            ArrayView2::from_shape((1, goal.len()), goal).map_err(|e| shape_err(e.to_string()))?;
        Ok(self.act_batch(s, g, deterministic, rng)?.row(0).to_vec())
    }

    fn act_batch<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<f64>,
        goals: ArrayView2<f64>,
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        if deterministic {
            return self.mean_actions(states, goals);
        }
        self.check_dims(&states, &goals)?;
        let raw = self.actor.infer(concat(&[states, goals])?.view())?;
        Ok(squash(&raw, noise(rng, states.nrows(), self.action_dim)).actions)
    }

    fn observe<R: Rng + ?Sized>(
        &mut self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<Option<SacStats>> {
        self.update(batch, rng).map(Some)
    }

    fn batch_size(&self) -> Option<usize> {
        Some(self.config.batch_size)
    }

    fn train_frequency(&self) -> usize {
        self.config.train_frequency
    }

    fn gradient_steps(&self) -> usize {
        self.config.gradient_steps
    }

    fn checksum(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for part in [
            self.actor.checksum(),
            self.q1.checksum(),
            self.q2.checksum(),
            self.q1_target.checksum(),
            self.q2_target.checksum(),
            self.log_alpha.to_bits(),
        ] {
            h = (h ^ part).wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn agent(seed: u64) -> Sac {
        let cfg = SacConfig {
            hidden_layers: vec![16, 16],
            batch_size: 32,
            ..SacConfig::default()
        };
        Sac::new(cfg, 2, 1, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<Transition> {
        (0..n)
            .map(|i| Transition {
                state: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                action: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                reward: f64::from(u8::from(i % 3 == 0)),
                next_state: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                goal: vec![rng.random_range(-1.0..1.0)],
                done: i % 5 == 0,
            })
            .collect()
    }

    #[test]
    fn target_arithmetic() {
        assert!((critic_target(0.99, 1.0, false, 2.0, 1.5, -1.0, 0.2) - 2.683).abs() < 1e-12);
        assert_eq!(critic_target(0.99, 0.5, true, 9.0, 9.0, 3.0, 0.2), 0.5);
        assert_eq!(
            critic_target(0.9, 1.0, false, 3.0, 2.0, 5.0, 0.0),
            1.0 + 0.9 * 2.0
        );
    }

    #[test]
    fn stochastic_actions_stay_in_bounds_and_vary() {
        let a = agent(0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Array2::from_elem((10_000, 2), 0.3);
        let g = Array2::from_elem((10_000, 1), -0.2);
        let acts = a.act_batch(s.view(), g.view(), false, &mut rng).unwrap();
        assert!(acts.iter().all(|v| (-1.0..=1.0).contains(v)));
        for col in acts.columns() {
            let m = col.mean().unwrap();
            let var = col.mapv(|v| (v - m).powi(2)).mean().unwrap();
            assert!(var > 1e-3, "variance {var}");
        }
    }

    #[test]
    fn deterministic_act_is_pure() {
        let a = agent(3);
        let x = a
            .act(&[0.1, 0.2], &[0.3], true, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let y = a
            .act(
                &[0.1, 0.2],
                &[0.3],
                true,
                &mut ChaCha8Rng::seed_from_u64(99),
            )
            .unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn polyak_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = batch(&mut rng, 32);
        let mut full = agent(5);
        full.config.tau = 1.0;
        full.update(&data, &mut rng).unwrap();
        assert_eq!(full.q1_target.flat_params(), full.q1.flat_params());
        assert_eq!(full.q2_target.flat_params(), full.q2.flat_params());

        let mut frozen = agent(5);
        frozen.config.tau = 0.0;
        let before = frozen.q1_target.flat_params();
        frozen.update(&data, &mut rng).unwrap();
        assert_eq!(frozen.q1_target.flat_params(), before);
        assert_ne!(frozen.q1.flat_params(), before);
    }

    #[test]
    fn polyak_stays_between_old_and_online() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = agent(6);
        a.config.tau = 0.3;
        let data = batch(&mut rng, 32);
        for _ in 0..3 {
            a.update(&data, &mut rng).unwrap();
        }
        let old = a.q1_target.flat_params();
        a.update(&data, &mut rng).unwrap();
        let online = a.q1.flat_params();
        for ((o, t), n) in old.iter().zip(a.q1_target.flat_params()).zip(online) {
            assert!(t >= o.min(n) - 1e-15 && t <= o.max(n) + 1e-15);
        }
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = agent(9);
        let x = Array2::from_shape_fn((12, 5), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grads) = critic_loss_grads(&mut a.q1, x.view(), &y, &mut rng).unwrap();
        let analytic = grads.flatten();
        let base = a.q1.flat_params();
        let loss = |net: &DenseNet| {
            let q = net.infer(x.view()).unwrap();
            (&q.column(0) - &y).mapv(|d| d * d).mean().unwrap()
        };
        let h = 1e-6;
        for i in rand::seq::index::sample(&mut rng, base.len(), 20) {
            let mut p = base.clone();
            p[i] += h;
            a.q1.set_flat_params(&p).unwrap();
            let up = loss(&a.q1);
            p[i] -= 2.0 * h;
            a.q1.set_flat_params(&p).unwrap();
            let down = loss(&a.q1);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
            assert!(rel < 1e-3, "param {i}: fd {fd} vs {}", analytic[i]);
        }
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        // Fixed noise and a fixed critic: L(θ) = mean(α logπ − min Q).
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut a = agent(11);
        let obs = Array2::from_shape_fn((6, 3), |_| rng.random_range(-1.0..1.0));
        let eps = noise(&mut rng, 6, 2);
        let alpha = 0.3;
        let loss = |a: &Sac| {
            let smp = squash(&a.actor.infer(obs.view()).unwrap(), eps.clone());
            let sa = concat(&[obs.view(), smp.actions.view()]).unwrap();
            let q1 = a.q1.infer(sa.view()).unwrap();
            let q2 = a.q2.infer(sa.view()).unwrap();
            (0..6)
                .map(|i| alpha * smp.log_prob[i] - q1[[i, 0]].min(q2[[i, 0]]))
                .sum::<f64>()
                / 6.0
        };
        let raw = a.actor.forward(obs.view(), &mut rng).unwrap();
        let smp = squash(&raw, eps.clone());
        let sa = concat(&[obs.view(), smp.actions.view()]).unwrap();
        let q1 = a.q1.forward(sa.view(), &mut rng).unwrap();
        let q2 = a.q2.forward(sa.view(), &mut rng).unwrap();
        let p1 = Array2::from_shape_fn((6, 1), |(i, _)| {
            f64::from(u8::from(q1[[i, 0]] <= q2[[i, 0]]))
        });
        let (_, d1) = a.q1.backward(p1.view()).unwrap();
        let (_, d2) = a.q2.backward(p1.mapv(|p| 1.0 - p).view()).unwrap();
        let dq = &d1.slice(s![.., 3..]) + &d2.slice(s![.., 3..]);
        let head = actor_head_grad(&smp, &dq, alpha);
        let (g, _) = a.actor.backward(head.view()).unwrap();
        let analytic = g.flatten();
        let base = a.actor.flat_params();
        let h = 1e-6;
        for i in rand::seq::index::sample(&mut rng, base.len(), 20) {
            let mut p = base.clone();
            p[i] += h;
            a.actor.set_flat_params(&p).unwrap();
            let up = loss(&a);
            p[i] -= 2.0 * h;
            a.actor.set_flat_params(&p).unwrap();
            let down = loss(&a);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
            assert!(rel < 1e-3, "param {i}: fd {fd} vs {}", analytic[i]);
        }
    }

    #[test]
    fn log_prob_matches_change_of_variables() {
        // One dimension: density of a = tanh(u), u ~ N(m, s²).
        let raw = ndarray::array![[0.3, -0.5]];
        let eps = ndarray::array![[0.7]];
        let smp = squash(&raw, eps);
        let s = (-0.5f64).exp();
        let u = 0.3 + s * 0.7;
        let normal = (-(0.7f64 * 0.7) / 2.0).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let expect = (normal / (1.0 - u.tanh().powi(2))).ln();
        assert!((smp.log_prob[0] - expect).abs() < 1e-10);
    }

    #[test]
    fn bandit_converges_to_the_best_action() {
        // Single state, reward 1 − (a − 0.5)², every step terminal.
        let cfg = SacConfig {
            hidden_layers: vec![32, 32],
            learning_rate: 3e-3,
            batch_size: 64,
            ..SacConfig::default()
        };
        let mut a = Sac::new(cfg, 1, 1, 1, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut buffer: Vec<Transition> = Vec::new();
        for step in 0..5_000 {
            let act = a.act(&[0.0], &[0.0], false, &mut rng).unwrap();
            buffer.push(Transition {
                state: vec![0.0],
                action: act.clone(),
                reward: 1.0 - (act[0] - 0.5).powi(2),
                next_state: vec![0.0],
                goal: vec![0.0],
                done: true,
            });
            if buffer.len() > 2_000 {
                buffer.remove(0);
            }
            if step >= 64 {
                let idx = rand::seq::index::sample(&mut rng, buffer.len(), 64);
                let b: Vec<Transition> = idx.iter().map(|i| buffer[i].clone()).collect();
                a.update(&b, &mut rng).unwrap();
            }
        }
        let det = a.act(&[0.0], &[0.0], true, &mut rng).unwrap()[0];
        assert!((det - 0.5).abs() < 0.1, "deterministic action {det}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut a = agent(15);
        a.update(&batch(&mut rng, 32), &mut rng).unwrap();
        let text = serde_json::to_string(&a).unwrap();
        let back: Sac = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checksum(), a.checksum());
        assert_eq!(back, a);
    }
}
