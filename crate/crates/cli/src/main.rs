use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcl::harness::{
    evaluate_checkpoint, export_run, load_preset, preset_names, train, Checkpoint, ExportFormat,
    RunConfig, OUT_DIR_ENV,
};
use pcl::Error;

/// Probabilistic curriculum learning runs: train, evaluate, export, lint.
#[derive(Debug, Parser)]
#[command(name = "pcl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a bundled preset (see `pcl presets`).
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<(RunConfig, String), Error> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                let stem = path
                    .file_stem()
                    .map_or("run".into(), |s| s.to_string_lossy().into_owned());
                Ok((RunConfig::load(path)?, stem))
            }
            (None, Some(name)) => Ok((load_preset(name)?, name.clone())),
            (None, None) => Err(Error::Config(
                "one of --config or --preset is required".into(),
            )),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an agent and write log.jsonl, checkpoint.json and config.toml.
    Train {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory; defaults to $PCL_OUT_DIR/<name> or runs/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Also enforce the hyperparameter search bounds.
        #[arg(long)]
        strict: bool,
    },
    /// Re-evaluate a checkpoint and print its coverage report as JSON.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Evaluation settings; defaults to the configuration stored in the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write coverage and goal-distribution exports next to a run's log.
    Export {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_parser = ["csv", "svg"])]
        format: String,
    },
    /// Check a configuration without running it.
    Validate {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        strict: bool,
    },
    /// List bundled presets.
    Presets,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Parse { .. } => 1,
        _ => 2,
    }
}

fn default_out(name: &str) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("runs").to_path_buf())
        .join(name)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train {
            source,
            out,
            seed,
            max_steps,
            strict,
        } => {
            let (mut cfg, name) = source.load()?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(steps) = max_steps {
                cfg.max_steps = steps;
            }
            if strict {
                cfg.validate_strict()?;
            }
            let out = out.unwrap_or_else(|| default_out(&name));
            let report = train(&cfg, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "out": report.out_dir,
                    "steps": report.steps,
                    "episodes": report.episodes,
                    "coverage": report.final_coverage().map(|r| r.coverage),
                    "first_nonzero_step": report.first_nonzero_step(),
                })
            );
        }
        Command::Eval { checkpoint, config } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let cfg = match config {
                Some(path) => RunConfig::load(path)?,
                None => ckpt.config.clone(),
            };
            let report = evaluate_checkpoint(&ckpt, &cfg)?;
            let matches = ckpt
                .coverage
                .as_ref()
                .map(|c| c.coverage == report.coverage);
            println!(
                "{}",
                serde_json::json!({
                    "step": report.step,
                    "coverage": report.coverage,
                    "stored_coverage": ckpt.coverage.as_ref().map(|c| c.coverage),
                    "matches_stored": matches,
                })
            );
        }
        Command::Export { run, format } => {
            let format: ExportFormat = format.parse()?;
            for path in export_run(&run, format)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { source, strict } => {
            let (cfg, name) = source.load()?;
            if strict {
                cfg.validate_strict()?;
            } else {
                cfg.validate()?;
            }
            println!("{name}: ok");
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
