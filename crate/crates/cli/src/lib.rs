//! Experiment drivers for the `noiselab` command line.

pub mod config;
pub mod experiments;
pub mod record;

use std::fmt;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use record::ResultRecord;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(ConfigError),
    Run(noiselab::error::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Run(e) => write!(f, "run failed: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<noiselab::error::Error> for CliError {
    fn from(e: noiselab::error::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Runs `experiment` with its section of `config`, or its defaults.
pub fn run(experiment: Experiment, config: &ExperimentConfig, seed: u64) -> Result<ResultRecord, CliError> {
    config.check_experiment(experiment)?;
    let c = config.clone();
    match experiment {
        Experiment::BtVerify => experiments::cmd_bt_verify(&c.bt_verify.unwrap_or_default(), seed),
        Experiment::NoiseLocalization => {
            experiments::cmd_noise_localization(&c.noise_localization.unwrap_or_default(), seed)
        }
        Experiment::SpinOverlap => experiments::cmd_spin_overlap(&c.spin_overlap.unwrap_or_default(), seed),
        Experiment::Errorbar => experiments::cmd_errorbar(&c.errorbar.unwrap_or_default(), seed),
        Experiment::CoverBuild => experiments::cmd_cover_build(&c.cover_build.unwrap_or_default(), seed),
        Experiment::Pb4Quad => experiments::cmd_pb4_quad(&c.pb4_quad.unwrap_or_default(), seed),
    }
}
