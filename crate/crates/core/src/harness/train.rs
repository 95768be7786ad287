//! The training loop: curriculum goal per episode, agent and model updates
//! per step, periodic coverage evaluation, JSONL logging and a final
//! checkpoint.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::eval::{evaluate, CoverageReport};
use super::log::{LogEvent, LogWriter};
use super::replay::ReplayBuffer;
use crate::agent::{Agent, AnyAgent, SacStats, Transition};
use crate::curriculum::CurriculumEngine;
use crate::error::{Error, Result};
use crate::goal_space::{relabel_future, EpisodeTrace, RelabelledPair};
use crate::mdn::MdnHead;

pub const LOG_FILE: &str = "log.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Fraction of stored transitions whose reward is recomputed and checked.
pub const AUDIT_FRACTION: f64 = 0.01;
const AUDIT_STREAM: u64 = 0xa0d1_7000_0000_0001;

/// Everything needed to re-evaluate a trained run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub episodes: usize,
    pub config: RunConfig,
    pub agent: AnyAgent,
    pub mdn: Option<MdnHead>,
    pub coverage: Option<CoverageReport>,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps: usize,
    pub episodes: usize,
    pub evaluations: Vec<CoverageReport>,
    pub audited: usize,
    pub out_dir: PathBuf,
}

impl TrainReport {
    pub fn final_coverage(&self) -> Option<&CoverageReport> {
        self.evaluations.last()
    }

    /// Step of the first evaluation with non-zero coverage.
    pub fn first_nonzero_step(&self) -> Option<usize> {
        self.evaluations
            .iter()
            .find(|r| r.coverage > 0.0)
            .map(|r| r.step)
    }
}

fn stack(rows: impl Iterator<Item = Vec<f64>>, width: usize) -> Result<Array2<f64>> {
    let flat: Vec<f64> = rows.flatten().collect();
    let n = flat.len() / width.max(1);
    Array2::from_shape_vec((n, width), flat).map_err(|e| Error::Shape(e.to_string()))
}

fn mdn_batch(pairs: &[&RelabelledPair]) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    let s = stack(pairs.iter().map(|p| p.state.clone()), pairs[0].state.len())?;
    let a = stack(
        pairs.iter().map(|p| p.action.clone()),
        pairs[0].action.len(),
    )?;
    let g = stack(
        pairs.iter().map(|p| p.target.clone()),
        pairs[0].target.len(),
    )?;
    Ok((s, a, g))
}

/// Runs one configuration to completion, writing `log.jsonl`,
/// `checkpoint.json` and `config.toml` into `out_dir`.
pub fn train(cfg: &RunConfig, out_dir: impl AsRef<Path>) -> Result<TrainReport> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref().to_path_buf();
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join(CONFIG_FILE), cfg.to_toml_string()?)?;
    let mut log = LogWriter::create(out_dir.join(LOG_FILE))?;

    let exec = cfg.execution();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut audit_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ AUDIT_STREAM);
    let mut env = cfg.env.build()?;
    let spec = env.goal_spec().clone();
    let (state_dim, goal_dim, action_dim) = (env.state_dim(), spec.goal_dim(), env.action_dim());
    let mut agent = AnyAgent::build(
        &cfg.agent, &cfg.env, state_dim, goal_dim, action_dim, &mut rng,
    )?;
    let mut mdn = match &cfg.mdn {
        Some(m) => Some(MdnHead::new(
            m.clone(),
            state_dim,
            action_dim,
            goal_dim,
            &mut rng,
        )?),
        None => None,
    };
    let mut mdn_opt = mdn.as_ref().map(MdnHead::new_optimizer).transpose()?;
    let mut engine = CurriculumEngine::new(cfg.curriculum.clone(), spec.clone(), env.goal_cells())?
        .with_execution(exec);
    let mut replay: ReplayBuffer<Transition> = ReplayBuffer::new(cfg.buffer_capacity());
    let mut targets: ReplayBuffer<RelabelledPair> = ReplayBuffer::new(cfg.buffer_capacity());
    let eval_goals = env.evaluation_goals();

    log.write(&LogEvent::Start {
        seed: cfg.seed,
        env: env.name().to_string(),
        max_steps: cfg.max_steps,
        goal_low: spec.low.clone(),
        goal_high: spec.high.clone(),
    })?;

    let mut step = 0usize;
    let mut episodes = 0usize;
    let mut audited = 0usize;
    let mut evaluations = Vec::new();

    while step < cfg.max_steps {
        let s0 = env.reset(&mut rng);
        let record = engine.next_goal(episodes, &s0, &agent, mdn.as_ref(), &mut rng)?;
        let goal = record.goal.clone();
        let mut trace = EpisodeTrace::new(s0.clone(), goal.clone());
        let mut state = s0;
        let mut reached = false;
        let mut episode_return = 0.0;
        let mut last_stats: Option<SacStats> = None;
        let mut last_mdn_loss: Option<f64> = None;

        loop {
            let action = agent.act(&state, &goal, false, &mut rng)?;
            let out = env.step(&action, &goal)?;
            if audit_rng.random_bool(AUDIT_FRACTION) {
                audited += 1;
                let expect = spec.reward(&out.state, &goal)?;
                if expect != out.reward {
                    return Err(Error::Contract(format!(
                        "stored reward {} differs from goal reward {expect} at step {step}",
                        out.reward
                    )));
                }
            }
            episode_return += out.reward;
            replay.push(Transition {
                state: state.clone(),
                action: action.clone(),
                reward: out.reward,
                next_state: out.state.clone(),
                goal: goal.clone(),
                done: out.reached,
            });
            trace.push(action, out.state.clone());
            step += 1;

            if step.is_multiple_of(agent.train_frequency()) {
                if let Some(batch_size) = agent.batch_size() {
                    for _ in 0..agent.gradient_steps() {
                        let Some(batch) = replay.sample(batch_size, &mut rng) else {
                            break;
                        };
                        let batch: Vec<Transition> = batch.into_iter().cloned().collect();
                        match agent.observe(&batch, &mut rng) {
                            Ok(stats) => last_stats = stats.or(last_stats),
                            Err(Error::Numeric(message)) => {
                                log::warn!("agent update skipped at step {step}: {message}");
                                log.write(&LogEvent::Warning { step, message })?;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
            }

            if let (Some(model), Some(opt)) = (mdn.as_mut(), mdn_opt.as_mut()) {
                if step.is_multiple_of(model.config.train_frequency) {
                    if let Some(batch) = targets.sample(model.config.batch_size, &mut rng) {
                        let (s, a, g) = mdn_batch(&batch)?;
                        match model.update(opt, s.view(), a.view(), g.view(), &mut rng) {
                            Ok(loss) => last_mdn_loss = Some(loss),
                            Err(Error::Numeric(message)) => {
                                log::warn!("model update skipped at step {step}: {message}");
                                log.write(&LogEvent::Warning { step, message })?;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
            }

            if step.is_multiple_of(cfg.eval_every) {
                let report = evaluate(&agent, &env, &eval_goals, cfg.eval_attempts, step, exec)?;
                log.write(&LogEvent::Evaluation(report.clone()))?;
                evaluations.push(report);
            }

            state = out.state;
            reached |= out.reached;
            if out.done || step >= cfg.max_steps {
                break;
            }
        }

        for pair in relabel_future(&spec, &trace, &mut rng)? {
            targets.push(pair);
        }
        let record = engine
            .report_outcome(reached)
            .ok_or_else(|| Error::State("curriculum lost the pending goal".into()))?;
        log.write(&LogEvent::Episode {
            step,
            length: trace.transitions(),
            episode_return,
            curriculum: record,
        })?;
        if last_stats.is_some() || last_mdn_loss.is_some() {
            log.write(&LogEvent::Update {
                step,
                critic_loss: last_stats.map(|s| s.critic_loss),
                actor_loss: last_stats.map(|s| s.actor_loss),
                alpha: last_stats.map(|s| s.alpha),
                mdn_loss: last_mdn_loss,
            })?;
        }
        episodes += 1;
    }

    if step > 0 && evaluations.last().is_none_or(|r| r.step != step) {
        let report = evaluate(&agent, &env, &eval_goals, cfg.eval_attempts, step, exec)?;
        log.write(&LogEvent::Evaluation(report.clone()))?;
        evaluations.push(report);
    }

    log.write(&LogEvent::Finish {
        step,
        episodes,
        coverage: evaluations.last().map(|r| r.coverage),
        audited,
    })?;
    log.finish()?;

    Checkpoint {
        step,
        episodes,
        config: cfg.clone(),
        agent,
        mdn,
        coverage: evaluations.last().cloned(),
    }
    .save(out_dir.join(CHECKPOINT_FILE))?;

    Ok(TrainReport {
        steps: step,
        episodes,
        evaluations,
        audited,
        out_dir,
    })
}

/// Re-runs the coverage evaluation of a checkpoint under `cfg`'s
/// environment and protocol.
pub fn evaluate_checkpoint(checkpoint: &Checkpoint, cfg: &RunConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    if env.state_dim() != checkpoint.config.env.build()?.state_dim() {
        return Err(Error::Config(
            "checkpoint and config use different environments".into(),
        ));
    }
    evaluate(
        &checkpoint.agent,
        &env,
        &env.evaluation_goals(),
        cfg.eval_attempts,
        checkpoint.step,
        cfg.execution(),
    )
}
