//! Goal/state linkage.
//!
//! Goals live in a subspace of the state: the projection `f(s)` picks a subset
//! of state coordinates (a row-reduced identity matrix). The sparse goal reward
//! is 1 when the projected next state is strictly within `ε` of the goal.
//! Completed episodes are relabelled into `(s_t, a_t, f(s_{t+k}))` pairs that
//! train the mixture density network on where the policy actually goes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Chebyshev,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Chebyshev => diffs.fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    /// Width `M` of the state vector.
    pub state_dim: usize,
    /// State index selected by each goal coordinate (rows of the projection).
    pub select: Vec<usize>,
    #[serde(default)]
    pub metric: Metric,
    pub epsilon: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl GoalSpec {
    pub fn new(
        state_dim: usize,
        select: Vec<usize>,
        metric: Metric,
        epsilon: f64,
        low: Vec<f64>,
        high: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self {
            state_dim,
            select,
            metric,
            epsilon,
            low,
            high,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds from an explicit `N × M` projection matrix, which must be a
    /// row-reduced identity.
    pub fn from_matrix(
        matrix: &[Vec<f64>],
        metric: Metric,
        epsilon: f64,
        low: Vec<f64>,
        high: Vec<f64>,
    ) -> Result<Self> {
        let state_dim = matrix.first().map_or(0, Vec::len);
        let mut select = Vec::with_capacity(matrix.len());
        for (r, row) in matrix.iter().enumerate() {
            if row.len() != state_dim {
                return Err(shape_err("projection rows differ in length"));
            }
            let ones: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1.0)
                .map(|(i, _)| i)
                .collect();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones.len() != 1 || zeros != state_dim - 1 {
                return Err(Error::Validation(format!(
                    "projection row {r} must contain exactly one 1 and zeros elsewhere"
                )));
            }
            select.push(ones[0]);
        }
        Self::new(state_dim, select, metric, epsilon, low, high)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.select.len();
        if n == 0 || n > self.state_dim {
            return Err(Error::Validation(format!(
                "goal dimension {n} must be in 1..={}",
                self.state_dim
            )));
        }
        let mut seen = vec![false; self.state_dim];
        for &i in &self.select {
            if i >= self.state_dim || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!(
                    "projection selects invalid or repeated state index {i}"
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Validation("epsilon must be > 0".into()));
        }
        if self.low.len() != n || self.high.len() != n {
            return Err(shape_err("goal bounds must match the goal dimension"));
        }
        if self.low.iter().zip(&self.high).any(|(l, h)| !(l < h)) {
            return Err(Error::Validation("goal bounds need low < high".into()));
        }
        Ok(())
    }

    pub fn goal_dim(&self) -> usize {
        self.select.len()
    }

    /// The `N × M` projection matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.select
            .iter()
            .map(|&i| {
                let mut row = vec![0.0; self.state_dim];
                row[i] = 1.0;
                row
            })
            .collect()
    }

    pub fn project(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.state_dim {
            return Err(shape_err(format!(
                "state has {} entries, expected {}",
                state.len(),
                self.state_dim
            )));
        }
        Ok(self.select.iter().map(|&i| state[i]).collect())
    }

    pub fn distance(&self, state: &[f64], goal: &[f64]) -> Result<f64> {
        Ok(self.metric.distance(&self.project(state)?, goal))
    }

    /// 1.0 when `D(f(s_next), g) < ε`, else 0.0.
    pub fn reward(&self, next_state: &[f64], goal: &[f64]) -> Result<f64> {
        if goal.len() != self.goal_dim() {
            return Err(shape_err("goal dimension mismatch"));
        }
        Ok(if self.distance(next_state, goal)? < self.epsilon {
            1.0
        } else {
            0.0
        })
    }

    pub fn contains(&self, goal: &[f64]) -> bool {
        goal.len() == self.goal_dim()
            && goal
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(g, (l, h))| *g >= *l && *g <= *h)
    }

    pub fn clip(&self, goal: &mut [f64]) {
        for (g, (l, h)) in goal.iter_mut().zip(self.low.iter().zip(&self.high)) {
            *g = g.clamp(*l, *h);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(l, h)| rng.random_range(*l..*h))
            .collect()
    }
}

/// States `s_0 … s_T` and actions `a_0 … a_{T−1}` of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub goal: Vec<f64>,
    pub reached: bool,
}

impl EpisodeTrace {
    pub fn new(initial_state: Vec<f64>, goal: Vec<f64>) -> Self {
        Self {
            states: vec![initial_state],
            actions: Vec::new(),
            goal,
            reached: false,
        }
    }

    pub fn push(&mut self, action: Vec<f64>, next_state: Vec<f64>) {
        self.actions.push(action);
        self.states.push(next_state);
    }

    /// Number of transitions `T`.
    pub fn transitions(&self) -> usize {
        self.actions.len()
    }
}

/// One MDN training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelledPair {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub target: Vec<f64>,
}

/// For every step `t`, draws an offset `k` uniformly from `1..=T−t` and
/// emits `(s_t, a_t, f(s_{t+k}))`.
pub fn relabel_future<R: Rng + ?Sized>(
    spec: &GoalSpec,
    trace: &EpisodeTrace,
    rng: &mut R,
) -> Result<Vec<RelabelledPair>> {
    let t_len = trace.transitions();
    if trace.states.len() != t_len + 1 || t_len == 0 {
        return Err(Error::Input(format!(
            "trace needs at least 2 states and states = actions + 1 (got {} / {})",
            trace.states.len(),
            t_len
        )));
    }
    (0..t_len)
        .map(|t| {
            let offset = relabel_offset(t, t_len, rng);
            Ok(RelabelledPair {
                state: trace.states[t].clone(),
                action: trace.actions[t].clone(),
                target: spec.project(&trace.states[t + offset])?,
            })
        })
        .collect()
}

/// Offset drawn uniformly from `1..=T−t`.
pub fn relabel_offset<R: Rng + ?Sized>(t: usize, t_len: usize, rng: &mut R) -> usize {
    rng.random_range(1..=t_len - t)
}
