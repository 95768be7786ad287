//! Goal proposal: candidate sampling, density scoring, quantile-band
//! filtering and selection, with an optional success-driven band.
//!
//! Each post-warmup episode draws `M` candidates, scores every candidate by
//! the mixture density of reaching it from `s0` under the action the policy
//! would take towards it, keeps the candidates inside the density band, and
//! selects one with the configured strategy. Without a model all candidates
//! score 1, which makes the engine a plain uniform curriculum.

pub mod adaptive;
pub mod select;

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adaptive::{correction_factor, AdaptiveConfig, QuantileState};
pub use select::{
    band_indices, learning_progress, max_normalise, multiweighted_scores, novelty, quantile_filter,
    select_uniform, select_weighted, uncertainty,
};

use crate::agent::Agent;
use crate::error::{Error, Result};
use crate::gmm::{BoxRegion, MixtureParams};
use crate::goal_space::GoalSpec;
use crate::mdn::MdnHead;
use crate::par::{self, Execution};

/// Grid spacing of the previous-density cache, in goal units.
pub const DENSITY_CACHE_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    PclModel,
    UniformBox,
    UniformCells,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Uniform,
    Weighted,
    Multiweighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    pub sampler: Sampler,
    pub num_samples: usize,
    pub q_lower: f64,
    pub q_upper: f64,
    pub strategy: Strategy,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub warmup_episodes: usize,
    pub adaptive: Option<AdaptiveConfig>,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            sampler: Sampler::PclModel,
            num_samples: 1000,
            q_lower: 0.2,
            q_upper: 0.8,
            strategy: Strategy::Uniform,
            beta1: 1.0,
            beta2: 1.0,
            beta3: 1.0,
            warmup_episodes: 10,
            adaptive: None,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::Config("curriculum num_samples must be ≥ 2".into()));
        }
        if !(0.0 <= self.q_lower && self.q_lower < self.q_upper && self.q_upper <= 1.0) {
            return Err(Error::Config(format!(
                "quantiles must satisfy 0 ≤ q_lower < q_upper ≤ 1, got {} and {}",
                self.q_lower, self.q_upper
            )));
        }
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("{name} must be ≥ 0")));
            }
        }
        if let Some(a) = &self.adaptive {
            a.validate()?;
        }
        Ok(())
    }

    pub fn betas(&self) -> [f64; 3] {
        [self.beta1, self.beta2, self.beta3]
    }
}

/// `M` candidate goals with their densities.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalCandidateSet {
    pub goals: Vec<Vec<f64>>,
    pub densities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSource {
    Warmup,
    Candidates,
    /// The model produced an invalid mixture; candidates came from the box.
    Fallback,
}

/// One curriculum decision, later completed with the episode outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub episode: usize,
    pub goal: Vec<f64>,
    pub density: Option<f64>,
    pub band: [f64; 2],
    pub strategy: Strategy,
    pub source: GoalSource,
    pub kept: usize,
    pub uniform_fallback: bool,
    pub outcome: Option<bool>,
}

/// Candidate goals drawn uniformly from the goal box.
pub fn sample_uniform_box<R: Rng + ?Sized>(
    spec: &GoalSpec,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..count).map(|_| spec.sample_uniform(rng)).collect()
}

/// Equal-weight mixture of uniform boxes, one per goal cell.
pub fn sample_uniform_cells<R: Rng + ?Sized>(
    cells: &[BoxRegion],
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let cell = &cells[rng.random_range(0..cells.len())];
            cell.lower()
                .iter()
                .zip(cell.upper())
                .map(|(l, h)| rng.random_range(*l..*h))
                .collect()
        })
        .collect()
}

fn rows(data: &[Vec<f64>], width: usize) -> Result<Array2<f64>> {
    let flat: Vec<f64> = data.iter().flat_map(|r| r.iter().copied()).collect();
    Array2::from_shape_vec((data.len(), width), flat).map_err(|e| Error::Shape(e.to_string()))
}

fn replicate(row: &[f64], count: usize) -> Result<Array2<f64>> {
    rows(&vec![row.to_vec(); count], row.len())
}

fn cache_key(goal: &[f64]) -> Vec<i64> {
    goal.iter()
        .map(|g| (g / DENSITY_CACHE_RESOLUTION).round() as i64)
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurriculumEngine {
    config: CurriculumConfig,
    spec: GoalSpec,
    cells: Option<Vec<BoxRegion>>,
    quantiles: QuantileState,
    known_goals: Vec<Vec<f64>>,
    #[serde(skip)]
    density_cache: BTreeMap<Vec<i64>, f64>,
    pending: Option<GoalRecord>,
    #[serde(skip)]
    execution: Execution,
}

impl CurriculumEngine {
    /// `cells` is required by the `uniform_cells` sampler.
    pub fn new(
        config: CurriculumConfig,
        spec: GoalSpec,
        cells: Option<Vec<BoxRegion>>,
    ) -> Result<Self> {
        config.validate()?;
        spec.validate()?;
        if config.sampler == Sampler::UniformCells && cells.as_ref().is_none_or(|c| c.is_empty()) {
            return Err(Error::Config(
                "uniform_cells sampler needs an environment with goal cells".into(),
            ));
        }
        let capacity = config.adaptive.as_ref().map_or(1, |a| a.memory_size);
        Ok(Self {
            quantiles: QuantileState::new(config.q_lower, config.q_upper, capacity),
            config,
            spec,
            cells,
            known_goals: Vec::new(),
            density_cache: BTreeMap::new(),
            pending: None,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn config(&self) -> &CurriculumConfig {
        &self.config
    }

    pub fn quantiles(&self) -> &QuantileState {
        &self.quantiles
    }

    pub fn known_goals(&self) -> &[Vec<f64>] {
        &self.known_goals
    }

    fn draw_base<R: Rng + ?Sized>(&self, sampler: Sampler, rng: &mut R) -> Vec<Vec<f64>> {
        let m = self.config.num_samples;
        match (sampler, &self.cells) {
            (Sampler::UniformCells, Some(cells)) => sample_uniform_cells(cells, m, rng),
            _ => sample_uniform_box(&self.spec, m, rng),
        }
    }

    /// Densities of `goals` under the model conditioned on `(s0, a_i)` with
    /// `a_i ~ π(s0, goal_i)`.
    fn score<A: Agent, R: Rng + ?Sized>(
        &self,
        s0: &[f64],
        goals: &[Vec<f64>],
        agent: &A,
        mdn: &MdnHead,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let states = replicate(s0, goals.len())?;
        let g = rows(goals, self.spec.goal_dim())?;
        let actions = agent.act_batch(states.view(), g.view(), false, rng)?;
        let mixtures = mdn.predict(states.view(), actions.view())?;
        let densities: Vec<Result<f64>> =
            par::map_indexed(goals.len(), self.execution, |i| mixtures[i].pdf(&goals[i]));
        let densities = densities.into_iter().collect::<Result<Vec<f64>>>()?;
        if densities.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Numeric("candidate density is not finite".into()));
        }
        Ok(densities)
    }

    /// Model samples from `MDN(s0, a_k)` where `a_k ~ π(s0, g̃_k)` for
    /// provisional uniform goals `g̃_k`.
    fn model_candidates<A: Agent, R: Rng + ?Sized>(
        &self,
        s0: &[f64],
        agent: &A,
        mdn: &MdnHead,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let provisional = self.draw_base(Sampler::UniformBox, rng);
        let states = replicate(s0, provisional.len())?;
        let g = rows(&provisional, self.spec.goal_dim())?;
        let actions = agent.act_batch(states.view(), g.view(), false, rng)?;
        let mixtures: Vec<MixtureParams> = mdn.predict(states.view(), actions.view())?;
        Ok(mixtures
            .iter()
            .map(|mix| {
                let mut goal = mix.sample(rng, 1).row(0).to_vec();
                self.spec.clip(&mut goal);
                goal
            })
            .collect())
    }

    /// Draws and scores `M` candidates. Returns the candidate set and whether
    /// the model path had to fall back to the uniform box.
    pub fn propose_candidates<A: Agent, R: Rng + ?Sized>(
        &self,
        s0: &[f64],
        agent: &A,
        mdn: Option<&MdnHead>,
        rng: &mut R,
    ) -> Result<(GoalCandidateSet, bool)> {
        let m = self.config.num_samples;
        let Some(mdn) = mdn else {
            if self.config.sampler == Sampler::PclModel {
                return Err(Error::Contract(
                    "pcl_model sampler needs a mixture density network".into(),
                ));
            }
            let goals = self.draw_base(self.config.sampler, rng);
            return Ok((
                GoalCandidateSet {
                    goals,
                    densities: vec![1.0; m],
                },
                false,
            ));
        };
        let attempt = (|| {
            let goals = match self.config.sampler {
                Sampler::PclModel => self.model_candidates(s0, agent, mdn, rng)?,
                other => self.draw_base(other, rng),
            };
            let densities = self.score(s0, &goals, agent, mdn, rng)?;
            Ok::<_, Error>(GoalCandidateSet { goals, densities })
        })();
        match attempt {
            Ok(set) => Ok((set, false)),
            Err(Error::Numeric(msg)) => {
                log::warn!("model snapshot unusable ({msg}); proposing uniform goals");
                let goals = sample_uniform_box(&self.spec, m, rng);
                Ok((
                    GoalCandidateSet {
                        goals,
                        densities: vec![1.0; m],
                    },
                    true,
                ))
            }
            Err(e) => Err(e),
        }
    }

    fn previous_density(&self, goal: &[f64], fallback: f64) -> f64 {
        if self.density_cache.is_empty() {
            return fallback;
        }
        let key = cache_key(goal);
        if let Some(p) = self.density_cache.get(&key) {
            return *p;
        }
        let mut best = (f64::INFINITY, fallback);
        for (k, p) in &self.density_cache {
            let d: f64 = k
                .iter()
                .zip(&key)
                .map(|(a, b)| ((a - b) as f64).powi(2))
                .sum();
            if d < best.0 {
                best = (d, *p);
            }
        }
        best.1
    }

    /// Picks the episode goal and remembers it until
    /// [`report_outcome`](Self::report_outcome).
    pub fn next_goal<A: Agent, R: Rng + ?Sized>(
        &mut self,
        episode: usize,
        s0: &[f64],
        agent: &A,
        mdn: Option<&MdnHead>,
        rng: &mut R,
    ) -> Result<GoalRecord> {
        let band = [self.quantiles.lower, self.quantiles.upper];
        if episode < self.config.warmup_episodes {
            let goal = self.spec.sample_uniform(rng);
            return Ok(self.remember(GoalRecord {
                episode,
                goal,
                density: None,
                band,
                strategy: self.config.strategy,
                source: GoalSource::Warmup,
                kept: 0,
                uniform_fallback: false,
                outcome: None,
            }));
        }
        let (set, fell_back) = self.propose_candidates(s0, agent, mdn, rng)?;
        let kept = quantile_filter(&set.densities, band[0], band[1]);
        let normalised = max_normalise(&set.densities);
        let (pick, uniform_fallback) = match self.config.strategy {
            Strategy::Uniform => (select_uniform(kept.len(), rng), false),
            Strategy::Weighted => {
                let w: Vec<f64> = kept.iter().map(|&i| set.densities[i]).collect();
                select_weighted(&w, rng)
            }
            Strategy::Multiweighted => {
                let p: Vec<f64> = kept.iter().map(|&i| normalised[i]).collect();
                let old: Vec<f64> = par::map_indexed(kept.len(), self.execution, |j| {
                    self.previous_density(&set.goals[kept[j]], p[j])
                });
                let goals: Vec<Vec<f64>> = kept.iter().map(|&i| set.goals[i].clone()).collect();
                let scores =
                    multiweighted_scores(&p, &old, &goals, &self.known_goals, self.config.betas());
                select_weighted(&scores, rng)
            }
        };
        if self.config.strategy == Strategy::Multiweighted {
            self.density_cache = set
                .goals
                .iter()
                .zip(&normalised)
                .map(|(g, p)| (cache_key(g), *p))
                .collect();
        }
        let index = kept[pick];
        let mut goal = set.goals[index].clone();
        self.spec.clip(&mut goal);
        let record = GoalRecord {
            episode,
            goal,
            density: Some(set.densities[index]),
            band,
            strategy: self.config.strategy,
            source: if fell_back {
                GoalSource::Fallback
            } else {
                GoalSource::Candidates
            },
            kept: kept.len(),
            uniform_fallback,
            outcome: None,
        };
        Ok(self.remember(record))
    }

    fn remember(&mut self, record: GoalRecord) -> GoalRecord {
        self.known_goals.push(record.goal.clone());
        self.pending = Some(record.clone());
        record
    }

    /// Completes the pending record with the episode outcome and, when
    /// enabled, moves the quantile band.
    pub fn report_outcome(&mut self, reached: bool) -> Option<GoalRecord> {
        let mut record = self.pending.take()?;
        record.outcome = Some(reached);
        if let Some(cfg) = &self.config.adaptive {
            self.quantiles.update(cfg, reached);
        }
        Some(record)
    }
}
