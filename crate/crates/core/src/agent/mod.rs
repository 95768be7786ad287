//! Goal-conditioned agents: the common interface, a soft actor-critic, and a
//! scripted controller used as a test double.

pub mod sac;
pub mod scripted;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use sac::{critic_target, EntropyMode, Sac, SacConfig, SacStats};
pub use scripted::ScriptedOracle;

use crate::env::EnvConfig;
use crate::error::{shape_err, Result};

/// One environment step as stored in the replay buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub goal: Vec<f64>,
    /// True only for terminal transitions (goal reached), not time limits.
    pub done: bool,
}

pub trait Agent {
    fn action_dim(&self) -> usize;

    /// An action inside `[-1, 1]^A`. Deterministic mode never touches `rng`.
    fn act<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        goal: &[f64],
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>>;

    fn act_batch<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<f64>,
        goals: ArrayView2<f64>,
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        if states.nrows() != goals.nrows() {
            return Err(shape_err("state and goal batches differ in length"));
        }
        let mut out = Array2::zeros((states.nrows(), self.action_dim()));
        for (i, (s, g)) in states.rows().into_iter().zip(goals.rows()).enumerate() {
            let a = self.act(&s.to_vec(), &g.to_vec(), deterministic, rng)?;
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&a));
        }
        Ok(out)
    }

    /// One learning step on a sampled batch. Agents that do not learn return
    /// `Ok(None)`.
    fn observe<R: Rng + ?Sized>(
        &mut self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<Option<SacStats>>;

    /// Batch size requested from the replay buffer, if the agent learns.
    fn batch_size(&self) -> Option<usize>;

    /// Environment steps between learning phases.
    fn train_frequency(&self) -> usize;

    /// Learning steps per learning phase.
    fn gradient_steps(&self) -> usize;

    /// Hash over every learnable parameter.
    fn checksum(&self) -> u64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentConfig {
    Sac(SacConfig),
    Scripted,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::Sac(SacConfig::default())
    }
}

impl AgentConfig {
    pub fn validate(&self, env: &EnvConfig) -> Result<()> {
        match self {
            AgentConfig::Sac(c) => c.validate(),
            AgentConfig::Scripted => ScriptedOracle::for_env(env).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnyAgent {
    Sac(Box<Sac>),
    Scripted(ScriptedOracle),
}

impl AnyAgent {
    pub fn build<R: Rng + ?Sized>(
        cfg: &AgentConfig,
        env: &EnvConfig,
        state_dim: usize,
        goal_dim: usize,
        action_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match cfg {
            AgentConfig::Sac(c) => AnyAgent::Sac(Box::new(Sac::new(
                c.clone(),
                state_dim,
                goal_dim,
                action_dim,
                rng,
            )?)),
            AgentConfig::Scripted => AnyAgent::Scripted(ScriptedOracle::for_env(env)?),
        })
    }
}

impl Agent for AnyAgent {
    fn action_dim(&self) -> usize {
        match self {
            AnyAgent::Sac(a) => a.action_dim(),
            AnyAgent::Scripted(a) => a.action_dim(),
        }
    }

    fn act<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        goal: &[f64],
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        match self {
            AnyAgent::Sac(a) => a.act(state, goal, deterministic, rng),
            AnyAgent::Scripted(a) => a.act(state, goal, deterministic, rng),
        }
    }

    fn act_batch<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<f64>,
        goals: ArrayView2<f64>,
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        match self {
            AnyAgent::Sac(a) => a.act_batch(states, goals, deterministic, rng),
            AnyAgent::Scripted(a) => a.act_batch(states, goals, deterministic, rng),
        }
    }

    fn observe<R: Rng + ?Sized>(
        &mut self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<Option<SacStats>> {
        match self {
            AnyAgent::Sac(a) => a.observe(batch, rng),
            AnyAgent::Scripted(a) => a.observe(batch, rng),
        }
    }

    fn batch_size(&self) -> Option<usize> {
        match self {
            AnyAgent::Sac(a) => a.batch_size(),
            AnyAgent::Scripted(a) => a.batch_size(),
        }
    }

    fn train_frequency(&self) -> usize {
        match self {
            AnyAgent::Sac(a) => a.train_frequency(),
            AnyAgent::Scripted(a) => a.train_frequency(),
        }
    }

    fn gradient_steps(&self) -> usize {
        match self {
            AnyAgent::Sac(a) => a.gradient_steps(),
            AnyAgent::Scripted(a) => a.gradient_steps(),
        }
    }

    fn checksum(&self) -> u64 {
        match self {
            AnyAgent::Sac(a) => a.checksum(),
            AnyAgent::Scripted(a) => a.checksum(),
        }
    }
}
