//! Experiment plumbing: replay storage, run configuration, the training
//! loop, coverage evaluation, JSONL logs, exports and bundled presets.

pub mod config;
pub mod eval;
pub mod export;
pub mod log;
pub mod presets;
pub mod replay;
pub mod train;

pub use config::RunConfig;
pub use eval::{attempt_goal, evaluate, CoverageReport, GoalResult};
pub use export::{export_run, ExportFormat, RunSeries};
pub use log::{read_log, LogEvent, LogWriter};
pub use presets::{load_preset, preset_names, preset_text, PRESETS};
pub use replay::ReplayBuffer;
pub use train::{evaluate_checkpoint, train, Checkpoint, TrainReport, CHECKPOINT_FILE, LOG_FILE};

/// Environment variable naming the default output root for runs.
pub const OUT_DIR_ENV: &str = "PCL_OUT_DIR";
