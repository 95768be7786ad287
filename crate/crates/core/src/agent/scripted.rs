//! Hand-written controllers for the DC motor and obstacle-free mazes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sac::SacStats, Agent, Transition};
use crate::env::{Cell, EnvConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedOracle {
    /// `u = clip(kp·(g − ω) + g/K_m)`.
    DcMotor { kp: f64, gain: f64 },
    /// `F = clip(kp·(g − p) − kd·v)`.
    PointMaze { kp: f64, kd: f64 },
}

impl ScriptedOracle {
    /// Chooses gains for `env`. The DC-motor gain is deadbeat: one
    /// unsaturated step lands exactly on the goal.
    pub fn for_env(env: &EnvConfig) -> Result<Self> {
        match env {
            EnvConfig::DcMotor(c) => Ok(ScriptedOracle::DcMotor {
                kp: (c.tau / c.dt - 1.0) / c.gain,
                gain: c.gain,
            }),
            EnvConfig::PointMaze(c) => {
                let map = c.load_map()?;
                for r in 1..map.rows() - 1 {
                    for col in 1..map.cols() - 1 {
                        if map.cell(r, col) == Cell::Wall {
                            return Err(Error::Contract(
                                "scripted oracle only drives mazes without interior walls".into(),
                            ));
                        }
                    }
                }
                Ok(ScriptedOracle::PointMaze { kp: 2.0, kd: 0.6 })
            }
        }
    }

    fn control(&self, state: &[f64], goal: &[f64]) -> Result<Vec<f64>> {
        match *self {
            ScriptedOracle::DcMotor { kp, gain } => {
                if state.is_empty() || goal.len() != 1 {
                    return Err(Error::Input(
                        "dc motor oracle needs ω and a scalar goal".into(),
                    ));
                }
                Ok(vec![
                    (kp * (goal[0] - state[0]) + goal[0] / gain).clamp(-1.0, 1.0)
                ])
            }
            ScriptedOracle::PointMaze { kp, kd } => {
                if state.len() < 4 || goal.len() != 2 {
                    return Err(Error::Input(
                        "maze oracle needs (x, y, vx, vy) and a 2-D goal".into(),
                    ));
                }
                Ok((0..2)
                    .map(|i| (kp * (goal[i] - state[i]) - kd * state[2 + i]).clamp(-1.0, 1.0))
                    .collect())
            }
        }
    }
}

impl Agent for ScriptedOracle {
    fn action_dim(&self) -> usize {
        match self {
            ScriptedOracle::DcMotor { .. } => 1,
            ScriptedOracle::PointMaze { .. } => 2,
        }
    }

    fn act<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        goal: &[f64],
        _deterministic: bool,
        _rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.control(state, goal)
    }

    fn observe<R: Rng + ?Sized>(
        &mut self,
        _batch: &[Transition],
        _rng: &mut R,
    ) -> Result<Option<SacStats>> {
        Ok(None)
    }

    fn batch_size(&self) -> Option<usize> {
        None
    }

    fn train_frequency(&self) -> usize {
        1
    }

    fn gradient_steps(&self) -> usize {
        0
    }

    fn checksum(&self) -> u64 {
        let (a, b) = match *self {
            ScriptedOracle::DcMotor { kp, gain } => (kp, gain),
            ScriptedOracle::PointMaze { kp, kd } => (kp, kd),
        };
        a.to_bits() ^ b.to_bits().rotate_left(17)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DcMotor, DcMotorConfig, DcMotorState, PointMazeConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dc_motor_oracle_reaches_every_grid_goal() {
        let cfg = DcMotorConfig::default();
        let oracle = ScriptedOracle::for_env(&EnvConfig::DcMotor(cfg.clone())).unwrap();
        let mut env = DcMotor::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for g in env.evaluation_goals() {
            let mut s = env.reset();
            let mut reached = false;
            loop {
                let a = oracle.act(&s, &g, true, &mut rng).unwrap();
                let out = env.step(&a, &g).unwrap();
                s = out.state;
                reached |= out.reached;
                if out.done {
                    break;
                }
            }
            assert!(reached, "goal {g:?}");
        }
    }

    #[test]
    fn equilibrium_action_holds_the_goal() {
        let cfg = DcMotorConfig::default();
        let oracle = ScriptedOracle::for_env(&EnvConfig::DcMotor(cfg.clone())).unwrap();
        let mut env = DcMotor::new(cfg).unwrap();
        let s = env.set_state(DcMotorState {
            omega: 0.37,
            hold_counter: 0,
        });
        let u = oracle
            .act(&s, &[0.37], true, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        // Holding ω = g needs u = g / K_m.
        assert!((u[0] - 0.37).abs() < 1e-12);
    }

    #[test]
    fn maze_oracle_reaches_the_centre_from_every_start() {
        let cfg = EnvConfig::PointMaze(PointMazeConfig {
            map: "builtin:open5".into(),
            ..PointMazeConfig::default()
        });
        let oracle = ScriptedOracle::for_env(&cfg).unwrap();
        let mut env = cfg.build().unwrap();
        let goal = env.evaluation_goals()[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for start in 0..40 {
            let mut s = if start < 4 {
                env.reset_eval(start)
            } else {
                env.reset(&mut rng)
            };
            let mut reached = false;
            for _ in 0..env.horizon() {
                let a = oracle.act(&s, &goal, true, &mut rng).unwrap();
                let out = env.step(&a, &goal).unwrap();
                s = out.state;
                if out.reached {
                    reached = true;
                    break;
                }
            }
            assert!(reached, "start {start}");
        }
    }

    #[test]
    fn walled_maze_is_unsupported() {
        let cfg = EnvConfig::PointMaze(PointMazeConfig {
            map: "builtin:bidirectional".into(),
            ..PointMazeConfig::default()
        });
        assert!(matches!(
            ScriptedOracle::for_env(&cfg),
            Err(Error::Contract(_))
        ));
    }
}
