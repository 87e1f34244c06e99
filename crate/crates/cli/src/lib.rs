//! Configuration, orchestration and persistence for the `phi4` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

use std::path::PathBuf;
use std::time::Instant;

use config::ExperimentConfig;
use error::CliError;
use record::ExperimentRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Constants,
    Sample,
    IdentityCheck,
    FreeEnergy,
    Oracle,
    Convergence,
    Laplace,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Sample => "sample",
            Command::IdentityCheck => "identity-check",
            Command::FreeEnergy => "free-energy",
            Command::Oracle => "oracle",
            Command::Convergence => "convergence",
            Command::Laplace => "laplace",
            Command::Report => "report",
        }
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn load_config(o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &o.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(w) = o.workers {
        cfg.workers = w;
    }
    if let Some(out) = &o.out {
        cfg.out = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and writes its record; returns the record.
pub fn run(cmd: Command, o: &Overrides) -> Result<ExperimentRecord, CliError> {
    let cfg = load_config(o)?;
    let out = PathBuf::from(&cfg.out);
    let start = Instant::now();
    let outputs = match cmd {
        Command::Constants => commands::constants(&cfg, &out)?,
        Command::Sample => commands::sample(&cfg, &out)?,
        Command::IdentityCheck => commands::identity_check(&cfg)?,
        Command::FreeEnergy => commands::free_energy(&cfg, &out)?,
        Command::Oracle => commands::oracle(&cfg)?,
        Command::Convergence => commands::convergence(&cfg, &out)?,
        Command::Laplace => commands::laplace(&cfg)?,
        Command::Report => commands::report(&out)?,
    };
    let rec = ExperimentRecord::new(cmd.name(), &cfg, start.elapsed().as_secs_f64(), outputs);
    rec.write(&out)?;
    Ok(rec)
}
