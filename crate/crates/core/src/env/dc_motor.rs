//! Normalised DC-motor velocity control: a first-order lag from voltage to
//! angular velocity.

use serde::{Deserialize, Serialize};

use super::StepOutcome;
use crate::error::{Error, Result};
use crate::goal_space::{GoalSpec, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcMotorConfig {
    /// Static gain `K_m`.
    pub gain: f64,
    /// Time constant `τ`.
    pub tau: f64,
    pub dt: f64,
    pub tolerance: f64,
    /// Consecutive in-tolerance steps needed to count as reached.
    pub hold_steps: u32,
    pub horizon: usize,
    pub eval_goals: usize,
    pub start_omega: f64,
}

impl Default for DcMotorConfig {
    fn default() -> Self {
        Self {
            gain: 1.0,
            tau: 0.5,
            dt: 0.05,
            tolerance: 0.001,
            hold_steps: 10,
            horizon: 200,
            eval_goals: 21,
            start_omega: 0.0,
        }
    }
}

impl DcMotorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gain", self.gain),
            ("tau", self.tau),
            ("dt", self.dt),
            ("tolerance", self.tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("dc motor {name} must be > 0")));
            }
        }
        if self.dt > self.tau {
            return Err(Error::Config("dc motor dt must not exceed tau".into()));
        }
        if self.hold_steps == 0 || self.horizon == 0 || self.eval_goals < 2 {
            return Err(Error::Config(
                "dc motor needs hold_steps ≥ 1, horizon ≥ 1 and at least 2 evaluation goals".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.start_omega) {
            return Err(Error::Config(
                "dc motor start_omega must lie in [-1, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcMotorState {
    pub omega: f64,
    pub hold_counter: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcMotor {
    pub config: DcMotorConfig,
    pub state: DcMotorState,
    goal_spec: GoalSpec,
    steps: usize,
}

impl DcMotor {
    pub fn new(config: DcMotorConfig) -> Result<Self> {
        config.validate()?;
        let goal_spec = GoalSpec::new(
            2,
            vec![0],
            Metric::Euclidean,
            config.tolerance,
            vec![-1.0],
            vec![1.0],
        )?;
        let state = DcMotorState {
            omega: config.start_omega,
            hold_counter: 0,
        };
        Ok(Self {
            config,
            state,
            goal_spec,
            steps: 0,
        })
    }

    pub fn goal_spec(&self) -> &GoalSpec {
        &self.goal_spec
    }

    /// Observation `(ω, hold / hold_steps)`.
    pub fn observe(&self) -> Vec<f64> {
        vec![
            self.state.omega,
            f64::from(self.state.hold_counter) / f64::from(self.config.hold_steps),
        ]
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.set_state(DcMotorState {
            omega: self.config.start_omega,
            hold_counter: 0,
        })
    }

    pub fn set_state(&mut self, state: DcMotorState) -> Vec<f64> {
        self.state = DcMotorState {
            omega: state.omega.clamp(-1.0, 1.0),
            hold_counter: state.hold_counter.min(self.config.hold_steps),
        };
        self.steps = 0;
        self.observe()
    }

    /// Next angular velocity for voltage `u` (already clipped).
    pub fn dynamics(&self, omega: f64, u: f64) -> f64 {
        let c = &self.config;
        (omega + c.dt * (c.gain * u - omega) / c.tau).clamp(-1.0, 1.0)
    }

    pub fn step(&mut self, action: &[f64], goal: &[f64]) -> Result<StepOutcome> {
        if action.len() != 1 || !action[0].is_finite() {
            return Err(Error::Input(
                "dc motor action must be one finite value".into(),
            ));
        }
        let u = action[0].clamp(-1.0, 1.0);
        self.state.omega = self.dynamics(self.state.omega, u);
        let next = vec![self.state.omega, 0.0];
        let reward = self.goal_spec.reward(&next, goal)?;
        if reward > 0.0 {
            self.state.hold_counter = (self.state.hold_counter + 1).min(self.config.hold_steps);
        } else {
            self.state.hold_counter = 0;
        }
        self.steps += 1;
        let reached = self.state.hold_counter >= self.config.hold_steps;
        Ok(StepOutcome {
            state: self.observe(),
            reward,
            reached,
            done: reached || self.steps >= self.config.horizon,
        })
    }

    /// Evenly spaced goals over `[-1, 1]`, endpoints included.
    pub fn evaluation_goals(&self) -> Vec<Vec<f64>> {
        let n = self.config.eval_goals;
        (0..n)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn motor() -> DcMotor {
        DcMotor::new(DcMotorConfig::default()).unwrap()
    }

    #[test]
    fn zero_input_decays_toward_rest() {
        let mut m = motor();
        m.set_state(DcMotorState {
            omega: 1.0,
            hold_counter: 0,
        });
        let mut prev = 1.0;
        for _ in 0..50 {
            m.step(&[0.0], &[0.5]).unwrap();
            assert!(m.state.omega < prev && m.state.omega > 0.0);
            prev = m.state.omega;
        }
    }

    #[test]
    fn deviation_resets_the_hold_counter() {
        let mut m = motor();
        m.set_state(DcMotorState {
            omega: 0.3,
            hold_counter: 0,
        });
        for _ in 0..9 {
            assert!(!m.step(&[0.3], &[0.3]).unwrap().reached);
        }
        assert_eq!(m.state.hold_counter, 9);
        let out = m.step(&[1.0], &[0.3]).unwrap();
        assert_eq!(m.state.hold_counter, 0);
        assert!(!out.reached);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn fixed_point_is_reached_on_the_tenth_step() {
        let mut m = motor();
        m.set_state(DcMotorState {
            omega: -0.4,
            hold_counter: 0,
        });
        // Fixed point of ω' = ω + dt(K_m u − ω)/τ is ω* = K_m u.
        assert_eq!(m.dynamics(-0.4, -0.4), -0.4);
        for step in 1..=10 {
            let out = m.step(&[-0.4], &[-0.4]).unwrap();
            assert_eq!(out.reward, 1.0);
            assert_eq!(out.reached, step == 10);
            assert_eq!(out.done, step == 10);
        }
    }

    #[test]
    fn horizon_ends_the_episode() {
        let mut m = DcMotor::new(DcMotorConfig {
            horizon: 3,
            ..DcMotorConfig::default()
        })
        .unwrap();
        m.reset();
        let dones: Vec<bool> = (0..3)
            .map(|_| m.step(&[1.0], &[-1.0]).unwrap().done)
            .collect();
        assert_eq!(dones, vec![false, false, true]);
    }

    #[test]
    fn non_finite_action_is_an_input_error() {
        assert!(matches!(
            motor().step(&[f64::NAN], &[0.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn evaluation_grid() {
        let g = motor().evaluation_goals();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], vec![-1.0]);
        assert_eq!(g[10], vec![0.0]);
        assert_eq!(g[20], vec![1.0]);
    }

    proptest! {
        #[test]
        fn omega_stays_in_range(actions in proptest::collection::vec(-5.0f64..5.0, 1..200)) {
            let mut m = motor();
            for a in actions {
                m.step(&[a], &[0.0]).unwrap();
                prop_assert!((-1.0..=1.0).contains(&m.state.omega));
                prop_assert!(m.state.hold_counter <= 10);
            }
        }
    }
}
