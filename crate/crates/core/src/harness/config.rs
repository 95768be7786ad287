//! Run configuration: TOML loading, validation, and the optional check
//! against the hyperparameter search bounds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::curriculum::{CurriculumConfig, Sampler, Strategy};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::mdn::MdnConfig;
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Zero is a null run: no episodes, no updates, an empty report.
    pub max_steps: usize,
    pub eval_every: usize,
    #[serde(default = "default_attempts")]
    pub eval_attempts: usize,
    /// Defaults to `max_steps`.
    #[serde(default)]
    pub buffer_capacity: Option<usize>,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    pub env: EnvConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    /// Absent for the uniform baseline.
    #[serde(default)]
    pub mdn: Option<MdnConfig>,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
}

fn default_attempts() -> usize {
    4
}

fn default_parallel() -> bool {
    true
}

/// Maps a byte offset into 1-based line and column numbers.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub fn buffer_capacity(&self) -> usize {
        self.buffer_capacity.unwrap_or(self.max_steps).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be ≥ 1".into()));
        }
        if self.eval_attempts == 0 {
            return Err(Error::Config("eval_attempts must be ≥ 1".into()));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::Config("buffer_capacity must be ≥ 1".into()));
        }
        self.env.validate()?;
        self.agent.validate(&self.env)?;
        if let Some(m) = &self.mdn {
            m.validate()?;
        }
        self.curriculum.validate()?;
        if self.curriculum.sampler == Sampler::PclModel && self.mdn.is_none() {
            return Err(Error::Config(
                "the pcl_model sampler needs an [mdn] section".into(),
            ));
        }
        if self.curriculum.sampler == Sampler::UniformCells
            && matches!(self.env, EnvConfig::DcMotor(_))
        {
            return Err(Error::Config(
                "uniform_cells needs a maze environment".into(),
            ));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the hyperparameter search bounds.
    /// Returns every violation at once.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        let mut bad = Vec::new();
        let mut range = |name: &str, v: f64, lo: f64, hi: f64| {
            if !(v >= lo && v <= hi) {
                bad.push(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        };
        if let Some(m) = &self.mdn {
            range("mdn.train_frequency", m.train_frequency as f64, 2.0, 10.0);
            range("mdn.components", m.components as f64, 6.0, 12.0);
            range(
                "mdn.hidden_layers count",
                m.hidden_layers.len() as f64,
                3.0,
                4.0,
            );
            for w in &m.hidden_layers {
                range("mdn.hidden_layers width", *w as f64, 64.0, 1024.0);
            }
            range("mdn.learning_rate", m.learning_rate, 1e-4, 1.0);
            range("mdn.lambda_nll", m.lambda_nll, 0.85, 2.0);
            range("mdn.lambda_l2", m.lambda_l2, 0.1, 0.5);
            range("mdn.lambda_kl", m.lambda_kl, 0.85, 2.0);
            range("mdn.batch_size", m.batch_size as f64, 128.0, 1024.0);
            let c = &self.curriculum;
            range(
                "curriculum.num_samples",
                c.num_samples as f64,
                800.0,
                1200.0,
            );
            range("curriculum.q_lower", c.q_lower, 0.01, 0.6);
            range("curriculum.q_upper", c.q_upper, 0.61, 1.0);
            if c.strategy == Strategy::Multiweighted {
                for (name, b) in [("beta1", c.beta1), ("beta2", c.beta2), ("beta3", c.beta3)] {
                    range(&format!("curriculum.{name}"), b, 0.0, 2.0);
                }
            }
        }
        if let AgentConfig::Sac(s) = &self.agent {
            range("agent.train_frequency", s.train_frequency as f64, 6.0, 16.0);
            range("agent.batch_size", s.batch_size as f64, 700.0, 1000.0);
            range(
                "agent.hidden_layers count",
                s.hidden_layers.len() as f64,
                3.0,
                4.0,
            );
            for w in &s.hidden_layers {
                range("agent.hidden_layers width", *w as f64, 100.0, 800.0);
            }
            range("agent.learning_rate", s.learning_rate, 4e-6, 1e-3);
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad.join("; ")))
        }
    }
}
