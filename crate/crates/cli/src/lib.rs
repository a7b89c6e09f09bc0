//! Experiment drivers behind the `strobespin` command.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod plotdata;

use std::path::{Path, PathBuf};
use std::time::Instant;

use strobespin::Violation;
use thiserror::Error;

pub use config::{Experiment, RunConfig};
pub use manifest::RunManifest;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<Violation>),
    #[error("numerical failure in {module}: {message}")]
    Numerical { module: &'static str, message: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("{0}")]
    Io(String),
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    pub fn from_core(e: strobespin::Error) -> Self {
        use strobespin::Error as E;
        let module = match &e {
            E::Config { path, message } => {
                return CliError::Invalid(vec![Violation::new(path.clone(), message.clone())])
            }
            E::Spectrum(_) | E::GridMismatch(_) => "polarimeter",
            E::Optimization(_) => "qnd-protocol",
            E::Domain(_) => "spin-model",
        };
        CliError::Numerical {
            module,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid(_) | CliError::Schema(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trajectories: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(n) = self.trajectories {
            cfg.trajectories = n;
        }
    }
}

/// Validate, run the experiment, and write `config.toml` plus
/// `manifest.json` next to the CSVs.
pub fn run(cfg: &RunConfig, threads: usize) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let dir: &Path = &cfg.output_dir;
    let mut files = experiments::run(cfg, dir)?;
    let effective = cfg.to_toml();
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, &effective)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", config_path.display())))?;
    files.push(config_path);
    let manifest = RunManifest {
        tool: "strobespin".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.as_str().into(),
        config_sha256: manifest::sha256_hex(effective.as_bytes()),
        seed: cfg.seed,
        trajectories: cfg.trajectories,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: manifest::describe_outputs(dir, &files)?,
    };
    manifest.write(dir)?;
    Ok(manifest)
}
