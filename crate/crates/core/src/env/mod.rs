//! Goal-conditioned environments: DC-motor velocity control and point-maze
//! navigation. Both use actions in `[-1, 1]^A`.

pub mod dc_motor;
pub mod maze;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use dc_motor::{DcMotor, DcMotorConfig, DcMotorState};
pub use maze::{Cell, MazeMap, PointMaze, PointMazeConfig, PointState};

use crate::error::Result;
use crate::gmm::BoxRegion;
use crate::goal_space::GoalSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub reward: f64,
    pub reached: bool,
    /// Reached or out of time.
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    DcMotor(DcMotorConfig),
    PointMaze(PointMazeConfig),
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::DcMotor(DcMotorConfig::default())
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvConfig::DcMotor(c) => c.validate(),
            EnvConfig::PointMaze(c) => {
                c.validate()?;
                c.load_map().map(|_| ())
            }
        }
    }

    pub fn build(&self) -> Result<Env> {
        Ok(match self {
            EnvConfig::DcMotor(c) => Env::DcMotor(DcMotor::new(c.clone())?),
            EnvConfig::PointMaze(c) => Env::PointMaze(PointMaze::new(c.clone())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Env {
    DcMotor(DcMotor),
    PointMaze(PointMaze),
}

impl Env {
    pub fn name(&self) -> &'static str {
        match self {
            Env::DcMotor(_) => "dc_motor",
            Env::PointMaze(_) => "point_maze",
        }
    }

    pub fn state_dim(&self) -> usize {
        self.goal_spec().state_dim
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Env::DcMotor(_) => 1,
            Env::PointMaze(_) => 2,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Env::DcMotor(m) => m.config.horizon,
            Env::PointMaze(m) => m.config.horizon,
        }
    }

    pub fn goal_spec(&self) -> &GoalSpec {
        match self {
            Env::DcMotor(m) => m.goal_spec(),
            Env::PointMaze(m) => m.goal_spec(),
        }
    }

    /// Start state for a training episode.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        match self {
            Env::DcMotor(m) => m.reset(),
            Env::PointMaze(m) => m.reset(rng),
        }
    }

    /// Fixed start state for evaluation attempt `attempt`.
    pub fn reset_eval(&mut self, attempt: usize) -> Vec<f64> {
        match self {
            Env::DcMotor(m) => m.reset(),
            Env::PointMaze(m) => m.reset_eval(attempt),
        }
    }

    pub fn step(&mut self, action: &[f64], goal: &[f64]) -> Result<StepOutcome> {
        match self {
            Env::DcMotor(m) => m.step(action, goal),
            Env::PointMaze(m) => m.step(action, goal),
        }
    }

    pub fn evaluation_goals(&self) -> Vec<Vec<f64>> {
        match self {
            Env::DcMotor(m) => m.evaluation_goals(),
            Env::PointMaze(m) => m.evaluation_goals(),
        }
    }

    /// Per-goal-cell boxes for the cell-mixture sampler; `None` when the
    /// environment has no goal cells.
    pub fn goal_cells(&self) -> Option<Vec<BoxRegion>> {
        match self {
            Env::DcMotor(_) => None,
            Env::PointMaze(m) => Some(m.goal_cell_bounds()),
        }
    }
}
