//! JSONL run log. Events carry step indices only, never wall-clock time, so
//! equal runs produce equal bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::CoverageReport;
use crate::curriculum::GoalRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Start {
        seed: u64,
        env: String,
        max_steps: usize,
        goal_low: Vec<f64>,
        goal_high: Vec<f64>,
    },
    Episode {
        step: usize,
        length: usize,
        episode_return: f64,
        curriculum: GoalRecord,
    },
    Update {
        step: usize,
        critic_loss: Option<f64>,
        actor_loss: Option<f64>,
        alpha: Option<f64>,
        mdn_loss: Option<f64>,
    },
    Evaluation(CoverageReport),
    Warning {
        step: usize,
        message: String,
    },
    Finish {
        step: usize,
        episodes: usize,
        coverage: Option<f64>,
        audited: usize,
    },
}

pub struct LogWriter {
    out: BufWriter<File>,
}

impl LogWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write(&mut self, event: &LogEvent) -> Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<LogEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?);
    }
    Ok(events)
}
