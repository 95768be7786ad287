//! Coverage evaluation: every goal attempted a fixed number of times with
//! deterministic actions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::env::Env;
use crate::error::Result;
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalResult {
    pub goal: Vec<f64>,
    pub attempts: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub step: usize,
    pub goals: Vec<GoalResult>,
    pub coverage: f64,
}

impl CoverageReport {
    /// `Σ successes / Σ attempts`; 0 without goals.
    pub fn from_results(step: usize, goals: Vec<GoalResult>) -> Self {
        let attempts: usize = goals.iter().map(|g| g.attempts).sum();
        let successes: usize = goals.iter().map(|g| g.successes).sum();
        let coverage = if attempts == 0 {
            0.0
        } else {
            successes as f64 / attempts as f64
        };
        Self {
            step,
            goals,
            coverage,
        }
    }

    pub fn successes(&self) -> usize {
        self.goals.iter().map(|g| g.successes).sum()
    }
}

/// One deterministic episode from the `attempt`-th evaluation start.
pub fn attempt_goal<A: Agent>(agent: &A, env: &Env, goal: &[f64], attempt: usize) -> Result<bool> {
    let mut env = env.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut state = env.reset_eval(attempt);
    for _ in 0..env.horizon() {
        let action = agent.act(&state, goal, true, &mut rng)?;
        let out = env.step(&action, goal)?;
        if out.reached {
            return Ok(true);
        }
        if out.done {
            break;
        }
        state = out.state;
    }
    Ok(false)
}

/// Attempts run independently on cloned environments and may fan out.
/// The agent is only read.
pub fn evaluate<A: Agent + Sync>(
    agent: &A,
    env: &Env,
    goals: &[Vec<f64>],
    attempts: usize,
    step: usize,
    exec: Execution,
) -> Result<CoverageReport> {
    let outcomes: Vec<Result<bool>> = par::map_indexed(goals.len() * attempts, exec, |k| {
        attempt_goal(agent, env, &goals[k / attempts], k % attempts)
    });
    let mut results: Vec<GoalResult> = goals
        .iter()
        .map(|g| GoalResult {
            goal: g.clone(),
            attempts,
            successes: 0,
        })
        .collect();
    for (k, out) in outcomes.into_iter().enumerate() {
        if out? {
            results[k / attempts].successes += 1;
        }
    }
    Ok(CoverageReport::from_results(step, results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{AnyAgent, Sac, SacConfig, ScriptedOracle};
    use crate::env::{DcMotorConfig, EnvConfig, PointMazeConfig};

    #[test]
    fn coverage_arithmetic() {
        let goals = (0..8)
            .map(|i| GoalResult {
                goal: vec![i as f64],
                attempts: 4,
                successes: if i < 4 { 4 } else { 0 },
            })
            .collect();
        let r = CoverageReport::from_results(0, goals);
        assert_eq!(r.successes(), 16);
        assert_eq!(r.coverage, 0.5);
        assert_eq!(CoverageReport::from_results(0, vec![]).coverage, 0.0);
    }

    #[test]
    fn scripted_oracle_covers_the_motor_grid() {
        let cfg = EnvConfig::DcMotor(DcMotorConfig::default());
        let env = cfg.build().unwrap();
        let oracle = ScriptedOracle::for_env(&cfg).unwrap();
        let goals = env.evaluation_goals();
        assert_eq!(goals.len(), 21);
        for exec in [Execution::Sequential, Execution::Parallel] {
            let r = evaluate(&oracle, &env, &goals, 4, 0, exec).unwrap();
            assert_eq!(r.coverage, 1.0);
        }
    }

    #[test]
    fn untrained_agent_barely_covers_the_bidirectional_maze() {
        let cfg = EnvConfig::PointMaze(PointMazeConfig {
            map: "builtin:bidirectional".into(),
            ..PointMazeConfig::default()
        });
        let env = cfg.build().unwrap();
        let goals = env.evaluation_goals();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sac = Sac::new(SacConfig::default(), 4, 2, 2, &mut rng).unwrap();
            let r = evaluate(&sac, &env, &goals, 4, 0, Execution::Parallel).unwrap();
            assert!(r.coverage <= 0.1, "seed {seed}: {}", r.coverage);
        }
    }

    #[test]
    fn goal_supersets_never_raise_per_goal_success() {
        let cfg = EnvConfig::DcMotor(DcMotorConfig::default());
        let env = cfg.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let agent = AnyAgent::Sac(Box::new(
            Sac::new(SacConfig::default(), 2, 1, 1, &mut rng).unwrap(),
        ));
        let small: Vec<Vec<f64>> = vec![vec![0.0], vec![0.5]];
        let mut large = small.clone();
        large.extend([vec![-0.5], vec![0.9]]);
        let a = evaluate(&agent, &env, &small, 4, 0, Execution::Parallel).unwrap();
        let b = evaluate(&agent, &env, &large, 4, 0, Execution::Parallel).unwrap();
        assert_eq!(a.goals[..], b.goals[..2]);
        assert!(b.successes() >= a.successes());
    }

    #[test]
    fn evaluation_leaves_the_agent_untouched() {
        let cfg = EnvConfig::DcMotor(DcMotorConfig::default());
        let env = cfg.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sac = Sac::new(SacConfig::default(), 2, 1, 1, &mut rng).unwrap();
        let before = sac.checksum();
        evaluate(
            &sac,
            &env,
            &env.evaluation_goals(),
            2,
            0,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(before, sac.checksum());
    }
}
