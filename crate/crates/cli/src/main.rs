use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noiselab_cli::config::DEFAULT_SEED;
use noiselab_cli::{run, CliError, ConfigError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "noiselab", version, about = "Inherent quantum noise experiments on the sphere")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for record.json and the CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the numerical kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Berezin–Toeplitz axiom defects.
    BtVerify,
    /// Noise bracket of a band registration as m grows.
    NoiseLocalization,
    /// Overlap pb₄ bounds for two spin components.
    SpinOverlap,
    /// Error bar width of a registration against T_m(F).
    Errorbar,
    /// Greedy cover, nerve and distance colorings.
    CoverBuild,
    /// pb₄ of a band quadrilateral.
    Pb4Quad,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::BtVerify => Experiment::BtVerify,
            Command::NoiseLocalization => Experiment::NoiseLocalization,
            Command::SpinOverlap => Experiment::SpinOverlap,
            Command::Errorbar => Experiment::Errorbar,
            Command::CoverBuild => Experiment::CoverBuild,
            Command::Pb4Quad => Experiment::Pb4Quad,
        }
    }
}

fn execute(args: &Args) -> Result<bool, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    }
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let record = run(args.command.into(), &config, seed)?;
    print!("{}", record.summary());
    if let Some(dir) = args.out.as_ref().or(config.out.as_ref()) {
        record.write(dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(record.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
